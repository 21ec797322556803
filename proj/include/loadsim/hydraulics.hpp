#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>

#include "loadsim/integrate.hpp"
#include "loadsim/error.hpp"
#include "loadsim/units.hpp"

namespace loadsim {

// Load-sensing variable-displacement pump driven off the engine crankshaft.
struct PumpSpec {
  double d_max = 0.0;       // m^3/rev
  double tau_pump = 0.0;    // s, displacement response
  double ls_margin = 0.0;   // Pa above load pressure
  double p_relief = 0.0;    // Pa
  double mech_eff = 0.0;    // (0,1]
  double drive_ratio = 1.0; // engine-to-pump speed ratio

  void validate() const {
    if (!(d_max > 0.0)) throw SpecError("pump.d_max", "must be > 0");
    if (!(tau_pump > 0.0)) throw SpecError("pump.tau_pump", "must be > 0");
    if (!(ls_margin > 0.0)) throw SpecError("pump.ls_margin", "must be > 0");
    if (!(p_relief > 0.0)) throw SpecError("pump.p_relief", "must be > 0");
    if (!(p_relief > ls_margin)) throw SpecError("pump.p_relief", "must exceed ls_margin");
    if (!(mech_eff > 0.0 && mech_eff <= 1.0)) throw SpecError("pump.mech_eff", "must be in (0,1]");
    if (!(drive_ratio > 0.0)) throw SpecError("pump.drive_ratio", "must be > 0");
  }
};

struct CylinderSpec {
  double area_head = 0.0;  // m^2
  double area_rod = 0.0;   // m^2
  double stroke = 0.0;     // m

  void validate(const char* which) const {
    std::string base = which;
    if (!(area_head > 0.0)) throw SpecError(base + ".area_head", "must be > 0");
    if (!(area_rod > 0.0 && area_rod < area_head))
      throw SpecError(base + ".area_rod", "must be in (0, area_head)");
    if (!(stroke > 0.0)) throw SpecError(base + ".stroke", "must be > 0");
  }
};

struct HydraulicsState {
  double eps = 0.0;    // displacement fraction [0,1]
  double p_sys = 0.0;  // Pa
  double x_lift = 0.0; // m
  double x_tilt = 0.0; // m
};

// Torque the pump demands of the engine shaft.
inline double pump_torque(const PumpSpec& spec, double eps, double p_sys) {
  return eps * spec.d_max * p_sys / (2.0 * units::kPi * spec.mech_eff) * spec.drive_ratio;
}

// Pump shaft speed in rev/s for a given engine speed.
inline double pump_rev_rate(const PumpSpec& spec, double omega_engine) {
  return omega_engine * spec.drive_ratio / (2.0 * units::kPi);
}

struct LsControlResult {
  double eps = 0.0;             // lagged displacement fraction
  double delivered_flow = 0.0;  // m^3/s
};

// LS displacement control: match demanded flow at the current shaft speed,
// saturating at full displacement when the shaft is slow and demand is high.
inline LsControlResult ls_control_step(const PumpSpec& spec, double eps, double flow_demand,
                                       double omega_engine, double dt) {
  const double n = pump_rev_rate(spec, std::max(omega_engine, 0.0));
  double eps_target;
  if (n < 1.0)
    eps_target = flow_demand > 0.0 ? 1.0 : 0.0;
  else
    eps_target = std::clamp(flow_demand / (spec.d_max * n), 0.0, 1.0);

  double y[1] = {eps};
  rk4_step(
      [&](std::span<const double> yy, double, std::span<double> dy) {
        dy[0] = (eps_target - yy[0]) / spec.tau_pump;
      },
      std::span<double>(y, 1), 0.0, dt);

  LsControlResult r;
  r.eps = std::clamp(y[0], 0.0, 1.0);
  r.delivered_flow = r.eps * spec.d_max * n;
  return r;
}

struct CylinderStepResult {
  double extension = 0.0;  // m
  double pressure = 0.0;   // Pa
};

// Quasi-static circuit pressure from the load, relief-clamped; motion stops
// when the circuit is on relief (flow dumps over the valve).
inline CylinderStepResult cylinder_step(const PumpSpec& pump, const CylinderSpec& cyl, double x,
                                        double delivered_flow, double load_force, double dt) {
  CylinderStepResult r;
  load_force = std::max(load_force, 0.0);
  r.pressure = std::min(load_force / cyl.area_head + pump.ls_margin, pump.p_relief);
  double rate = 0.0;
  if (r.pressure < pump.p_relief) rate = delivered_flow / cyl.area_head;
  r.extension = std::clamp(x + rate * dt, 0.0, cyl.stroke);
  return r;
}

}  // namespace loadsim
