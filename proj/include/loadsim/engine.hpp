#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "loadsim/integrate.hpp"
#include "loadsim/table.hpp"

namespace loadsim {

// Mean-value turbocharged diesel: static torque map, first-order boost lag,
// smoke-limiter cap at low boost, rotational inertia, all-speed governor.
struct EngineSpec {
  LinearTable static_torque;  // rad/s -> N*m
  double inertia_j = 0.0;     // kg*m^2, engine + flywheel + converter pump wheel
  double turbo_tau = 0.0;     // s
  LinearTable smoke_limit;    // boost fraction -> torque fraction
  double low_idle = 0.0;      // rad/s
  double high_idle = 0.0;     // rad/s
  double governor_gain = 0.0; // throttle per rad/s of speed error
  double stall_fraction = 0.8;

  void validate() const {
    if (static_torque.empty()) throw SpecError("engine.torque_curve", "missing");
    if (static_torque.min_y() < 0.0) throw SpecError("engine.torque_curve", "negative torque entry");
    if (smoke_limit.empty()) throw SpecError("engine.smoke_limit", "missing");
    if (!smoke_limit.non_decreasing_y()) throw SpecError("engine.smoke_limit", "must be non-decreasing");
    if (std::abs(smoke_limit(1.0) - 1.0) > 1e-9)
      throw SpecError("engine.smoke_limit", "must reach 1.0 at full boost");
    if (!(inertia_j > 0.0)) throw SpecError("engine.inertia", "must be > 0");
    if (!(turbo_tau > 0.0)) throw SpecError("engine.turbo_tau", "must be > 0");
    if (!(low_idle > 0.0)) throw SpecError("engine.low_idle", "must be > 0");
    if (!(high_idle > low_idle)) throw SpecError("engine.high_idle", "must exceed low_idle");
    if (!(governor_gain > 0.0)) throw SpecError("engine.governor_gain", "must be > 0");
    if (!(stall_fraction > 0.0 && stall_fraction < 1.0))
      throw SpecError("engine.stall_fraction", "must be in (0,1)");
  }

  double stall_threshold() const { return stall_fraction * low_idle; }
  double omega_max_torque() const { return static_torque.argmax_x(); }
};

struct EngineState {
  double omega = 0.0;  // rad/s
  double boost = 0.0;  // [0,1]
};

inline double available_torque(const EngineSpec& spec, double omega, double boost) {
  boost = std::clamp(boost, 0.0, 1.0);
  omega = std::max(omega, 0.0);
  return spec.static_torque(omega) * spec.smoke_limit(boost);
}

inline double governor_throttle(const EngineSpec& spec, double omega_target, double omega) {
  return std::clamp(spec.governor_gain * (omega_target - omega), 0.0, 1.0);
}

// Throttle actually applied after low-idle protection.
inline double effective_throttle(const EngineSpec& spec, double omega, double throttle) {
  if (omega < spec.low_idle)
    throttle = std::max(throttle, governor_throttle(spec, spec.low_idle, omega));
  return std::clamp(throttle, 0.0, 1.0);
}

struct EngineDerivatives {
  double domega_dt = 0.0;
  double dboost_dt = 0.0;
};

// Instantaneous state derivatives for a given applied throttle and load.
inline EngineDerivatives engine_derivatives(const EngineSpec& spec, const EngineState& s,
                                            double throttle, double load_torque) {
  EngineDerivatives d;
  d.domega_dt = (throttle * available_torque(spec, s.omega, s.boost) - load_torque) / spec.inertia_j;
  d.dboost_dt = spec.turbo_tau > 1e-12 ? (throttle - s.boost) / spec.turbo_tau : 0.0;
  return d;
}

inline EngineState engine_step(const EngineSpec& spec, EngineState state, double throttle,
                               double load_torque, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("engine_step: dt must be > 0");
  if (!std::isfinite(load_torque)) throw std::runtime_error("engine_step: non-finite load torque");

  const double eff = effective_throttle(spec, state.omega, throttle);

  if (spec.turbo_tau <= 1e-12) {
    // Degenerate lag: boost tracks throttle instantly.
    state.boost = eff;
    double y[1] = {state.omega};
    rk4_step(
        [&](std::span<const double> yy, double, std::span<double> dy) {
          dy[0] = (eff * available_torque(spec, yy[0], state.boost) - load_torque) / spec.inertia_j;
        },
        std::span<double>(y, 1), 0.0, dt);
    state.omega = std::max(y[0], 0.0);
  } else {
    double y[2] = {state.omega, state.boost};
    rk4_step(
        [&](std::span<const double> yy, double, std::span<double> dy) {
          dy[0] = (eff * available_torque(spec, yy[0], yy[1]) - load_torque) / spec.inertia_j;
          dy[1] = (eff - yy[1]) / spec.turbo_tau;
        },
        std::span<double>(y, 2), 0.0, dt);
    state.omega = std::max(y[0], 0.0);
    state.boost = std::clamp(y[1], 0.0, 1.0);
  }

  if (!std::isfinite(state.omega) || !std::isfinite(state.boost))
    throw std::runtime_error("engine_step: non-finite state");
  return state;
}

}  // namespace loadsim
