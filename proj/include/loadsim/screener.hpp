#pragma once

#include <algorithm>
#include <string>

#include "loadsim/bench.hpp"
#include "loadsim/layout.hpp"
#include "loadsim/units.hpp"

namespace loadsim {

enum class Verdict { Feasible = 0, Marginal = 1, Infeasible = 2 };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Feasible: return "feasible";
    case Verdict::Marginal: return "marginal";
    case Verdict::Infeasible: return "infeasible";
  }
  return "?";
}

struct TorqueBudgetReport {
  double t_tc_demand = 0.0;
  double t_hyd_demand = 0.0;
  double t_static_avail = 0.0;
  double t_dynamic_avail = 0.0;
  double margin_static = 0.0;
  double margin_dynamic = 0.0;
  Verdict verdict = Verdict::Marginal;
};

// Converter torque demand at the moment forward is engaged against rollback.
// Reuses the simulation converter formula so screener and simulation cannot
// drift apart. Lowest forward gear: highest multiplication, worst demand.
inline double reversal_tc_demand(const MachineLayout& layout, const ReversalScenario& sc) {
  sc.validate(layout.engine);
  const double ratio = layout.transmission.gear_ratios.front();
  const double omega_turbine = sc.v_back * ratio / layout.vehicle.wheel_radius;
  return converter_torques(layout.converter, sc.omega_engine, omega_turbine).pump_demand;
}

// Hydraulic torque demand with displacement at maximum. With the worst-case
// flag, pressure is taken at relief; otherwise at the highest pressure a full
// bucket actually produces in the lift circuit (relief-clamped).
inline double worst_case_hydraulic_demand(const MachineLayout& layout,
                                          const ReversalScenario& sc) {
  double p = layout.pump.p_relief;
  if (!sc.assume_max_hydraulics) {
    double worst_ratio = layout.linkage.max_lift_ratio();
    double load = (layout.linkage.max_payload + layout.linkage.arm_equiv_mass) *
                  units::kGravity * worst_ratio;
    p = std::min(load / layout.lift_cylinder.area_head + layout.pump.ls_margin,
                 layout.pump.p_relief);
  }
  return pump_torque(layout.pump, 1.0, p);
}

// The three-way feasibility call: over static torque is near-certain trouble;
// comfortably under the dynamic curve should work; in between only a full
// simulation can tell.
inline TorqueBudgetReport torque_budget_verdict(const MachineLayout& layout,
                                                const ReversalScenario& sc,
                                                const DynamicCurve& dynamic_curve) {
  TorqueBudgetReport r;
  r.t_tc_demand = reversal_tc_demand(layout, sc);
  r.t_hyd_demand = worst_case_hydraulic_demand(layout, sc);

  if (sc.omega_engine < dynamic_curve.torque.front_x() - 1e-9 ||
      sc.omega_engine > dynamic_curve.torque.back_x() + 1e-9)
    throw SpecError("screen.dynamic_curve",
                    "curve does not cover omega_engine; run a matching bench first");

  r.t_static_avail = layout.engine.static_torque(sc.omega_engine);
  r.t_dynamic_avail = dynamic_curve.torque(sc.omega_engine);

  const double demand = r.t_tc_demand + r.t_hyd_demand;
  r.margin_static = r.t_static_avail - demand;
  r.margin_dynamic = r.t_dynamic_avail - demand;

  if (demand > r.t_static_avail)
    r.verdict = Verdict::Infeasible;
  else if (demand <= (1.0 - sc.marginal_band) * r.t_dynamic_avail)
    r.verdict = Verdict::Feasible;
  else
    r.verdict = Verdict::Marginal;
  return r;
}

struct BalanceTargets {
  double traction = 0.0;    // N
  double lift_force = 0.0;  // N
  double lift_time = 0.0;   // s (pass when at or under target)
};

struct BalanceReport {
  double max_traction = 0.0;
  double max_lift_force = 0.0;
  double lift_time = 0.0;
  bool traction_ok = false;
  bool lift_force_ok = false;
  bool lift_time_ok = false;
};

// Initial balance numbers: stall traction at the max-torque speed, lift force
// against relief, and a full-stroke lift time at rated pump speed.
inline BalanceReport static_balance_report(const MachineLayout& layout,
                                           const BalanceTargets& targets) {
  BalanceReport r;
  const auto& e = layout.engine;
  const auto& c = layout.converter;
  const double w = e.omega_max_torque();
  double traction = c.mu(0.0) * c.c(0.0) * w * w * layout.transmission.gear_ratios.front() *
                    layout.transmission.efficiency / layout.vehicle.wheel_radius;
  const double adhesion = layout.vehicle.mu_traction * layout.vehicle.mass * units::kGravity;
  r.max_traction = std::min(traction, adhesion);

  r.max_lift_force = (layout.pump.p_relief - layout.pump.ls_margin) *
                     layout.lift_cylinder.area_head / layout.linkage.min_lift_ratio();

  const double n_rated = pump_rev_rate(layout.pump, e.high_idle);
  r.lift_time =
      layout.lift_cylinder.stroke * layout.lift_cylinder.area_head / (layout.pump.d_max * n_rated);

  r.traction_ok = r.max_traction >= targets.traction;
  r.lift_force_ok = r.max_lift_force >= targets.lift_force;
  r.lift_time_ok = r.lift_time <= targets.lift_time || targets.lift_time <= 0.0;
  return r;
}

}  // namespace loadsim
