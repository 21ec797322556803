#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace loadsim {

// Classical 4th-order one-step update, in place. The derivative callable has
// signature f(std::span<const double> y, double t, std::span<double> dy).
// A non-finite derivative component aborts with the offending index.
template <class Deriv>
void rk4_step(Deriv&& f, std::span<double> y, double t, double dt) {
  constexpr std::size_t kMax = 8;
  const std::size_t n = y.size();
  if (n > kMax) throw std::invalid_argument("rk4_step: state larger than " + std::to_string(kMax));

  std::array<double, kMax> k1{}, k2{}, k3{}, k4{}, w{};
  auto eval = [&](std::span<const double> yy, double tt, std::span<double> dy) {
    f(yy, tt, dy);
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(dy[i]))
        throw std::runtime_error("rk4_step: non-finite derivative at index " + std::to_string(i));
  };

  eval(y, t, std::span<double>(k1.data(), n));
  for (std::size_t i = 0; i < n; ++i) w[i] = y[i] + 0.5 * dt * k1[i];
  eval(std::span<const double>(w.data(), n), t + 0.5 * dt, std::span<double>(k2.data(), n));
  for (std::size_t i = 0; i < n; ++i) w[i] = y[i] + 0.5 * dt * k2[i];
  eval(std::span<const double>(w.data(), n), t + 0.5 * dt, std::span<double>(k3.data(), n));
  for (std::size_t i = 0; i < n; ++i) w[i] = y[i] + dt * k3[i];
  eval(std::span<const double>(w.data(), n), t + dt, std::span<double>(k4.data(), n));

  for (std::size_t i = 0; i < n; ++i)
    y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace loadsim
