#include <doctest.h>

#include <cmath>
#include <span>

#include "loadsim/integrate.hpp"

using loadsim::rk4_step;

TEST_CASE("zero derivative keeps the state") {
  double y[1] = {5.0};
  rk4_step([](std::span<const double>, double, std::span<double> dy) { dy[0] = 0.0; },
           std::span<double>(y, 1), 0.0, 0.1);
  CHECK(y[0] == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("unit derivative advances by dt") {
  double y[1] = {0.0};
  rk4_step([](std::span<const double>, double, std::span<double> dy) { dy[0] = 1.0; },
           std::span<double>(y, 1), 0.0, 0.001);
  CHECK(y[0] == doctest::Approx(0.001).epsilon(1e-15));
}

TEST_CASE("exponential decay matches the closed form") {
  // dx/dt = -x, one step of 0.1 from x=1: e^-0.1 to 4th order.
  double y[1] = {1.0};
  rk4_step([](std::span<const double> yy, double, std::span<double> dy) { dy[0] = -yy[0]; },
           std::span<double>(y, 1), 0.0, 0.1);
  CHECK(y[0] == doctest::Approx(std::exp(-0.1)).epsilon(1e-7));
}

TEST_CASE("non-finite derivative reports the offending index") {
  double y[2] = {1.0, 1.0};
  try {
    rk4_step(
        [](std::span<const double>, double, std::span<double> dy) {
          dy[0] = 0.0;
          dy[1] = std::nan("");
        },
        std::span<double>(y, 2), 0.0, 0.1);
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("index 1") != std::string::npos);
  }
}

TEST_CASE("fourth-order convergence on a smooth problem") {
  // Error scales like dt^5 per step (dt^4 globally) on dx/dt = -x.
  auto err_for = [](double dt) {
    double y[1] = {1.0};
    int n = static_cast<int>(1.0 / dt + 0.5);
    for (int i = 0; i < n; ++i)
      rk4_step([](std::span<const double> yy, double, std::span<double> dy) { dy[0] = -yy[0]; },
               std::span<double>(y, 1), i * dt, dt);
    return std::abs(y[0] - std::exp(-1.0));
  };
  double e1 = err_for(0.1);
  double e2 = err_for(0.05);
  CHECK(e1 / e2 > 12.0);  // ~16x for a 4th-order method
}
