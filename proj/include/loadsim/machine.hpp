#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "loadsim/layout.hpp"
#include "loadsim/operator.hpp"
#include "loadsim/sim.hpp"

namespace loadsim {

// A complete run description: solver settings, operator behaviour, the pile,
// and the reversal worst case used by the screener.
struct Scenario {
  SimConfig sim;
  OperatorParams op;
  PileSpec pile;
  ReversalScenario reversal;

  void validate(const MachineLayout& layout) const {
    sim.validate();
    op.validate();
    pile.validate();
    reversal.validate(layout.engine);
    // Cross-checks against the layout: targets the machine can never meet
    // would leave the operator waiting forever.
    if (op.fill_payload > layout.linkage.max_payload)
      throw SpecError("operator.fill_payload", "exceeds linkage.max_payload");
    if (op.dump_height > layout.lift_cylinder.stroke)
      throw SpecError("operator.dump_height", "exceeds lift_cylinder.stroke");
    if (op.throttle_drop_speed >= layout.engine.high_idle)
      throw SpecError("operator.throttle_drop", "must be below engine.high_idle");
  }

  // Fill operator speed targets from the engine when the scenario leaves
  // them unset.
  Scenario resolved(const MachineLayout& layout) const {
    Scenario s = *this;
    if (s.op.throttle_high_speed <= 0.0) s.op.throttle_high_speed = layout.engine.high_idle;
    if (s.op.throttle_idle_speed <= 0.0) s.op.throttle_idle_speed = layout.engine.low_idle;
    return s;
  }
};

namespace detail {

inline Direction decode_direction(double v) {
  if (v > 0.5) return Direction::Forward;
  if (v < -0.5) return Direction::Reverse;
  return Direction::Neutral;
}

class OperatorModule final : public Module {
 public:
  OperatorModule(OperatorParams params, double initial_omega)
      : params_(std::move(params)), initial_omega_(initial_omega) {}

  const char* name() const override { return "operator"; }

  std::vector<PortDecl> input_ports() const override {
    return {{"v", "m/s", 0.0},       {"payload", "kg", 0.0}, {"depth", "m", 0.0},
            {"x_lift", "m", 0.0},    {"position", "m", 0.0}, {"omega", "rad/s", initial_omega_}};
  }

  std::vector<PortDecl> output_ports() const override {
    return {{"throttle_target", "rad/s", 0.0}, {"direction_request", "-", 0.0},
            {"lift_lever", "-", 0.0},          {"tilt_lever", "-", 0.0},
            {"brake", "-", 0.0},               {"op_phase", "-", 0.0}};
  }

  void bind(PortBus& bus) override {
    in_v_ = bus.lookup("v");
    in_payload_ = bus.lookup("payload");
    in_depth_ = bus.lookup("depth");
    in_x_lift_ = bus.lookup("x_lift");
    in_position_ = bus.lookup("position");
    in_omega_ = bus.lookup("omega");
    out_target_ = bus.lookup("throttle_target");
    out_dir_ = bus.lookup("direction_request");
    out_lift_ = bus.lookup("lift_lever");
    out_tilt_ = bus.lookup("tilt_lever");
    out_brake_ = bus.lookup("brake");
    out_phase_ = bus.lookup("op_phase");
  }

  void step(PortBus& bus, double, double dt) override {
    Observations obs;
    obs.v = bus.get(in_v_);
    obs.payload = bus.get(in_payload_);
    obs.depth = bus.get(in_depth_);
    obs.lift_height = bus.get(in_x_lift_);
    obs.position = bus.get(in_position_);
    obs.omega = bus.get(in_omega_);

    auto [next, controls] = operator_step(params_, state_, obs, dt);
    state_ = next;

    bus.set(out_target_, controls.throttle_target);
    bus.set(out_dir_, static_cast<double>(dir_sign(controls.direction_request)));
    bus.set(out_lift_, controls.lift_lever);
    bus.set(out_tilt_, controls.tilt_lever);
    bus.set(out_brake_, controls.brake);
    bus.set(out_phase_, static_cast<double>(state_.phase));
  }

  const OperatorState& state() const { return state_; }

 private:
  OperatorParams params_;
  double initial_omega_;
  OperatorState state_;
  int in_v_ = -1, in_payload_ = -1, in_depth_ = -1, in_x_lift_ = -1, in_position_ = -1,
      in_omega_ = -1;
  int out_target_ = -1, out_dir_ = -1, out_lift_ = -1, out_tilt_ = -1, out_brake_ = -1,
      out_phase_ = -1;
};

// Publishes the start-of-step snapshot (speed, boost, indicated torque, the
// load torques it consumed and the instantaneous acceleration they produce),
// then advances its own state. Keeping all recorded channels from the same
// instant makes the trace power bookkeeping close exactly.
class EngineModule final : public Module {
 public:
  EngineModule(EngineSpec spec, EngineState initial) : spec_(std::move(spec)), state_(initial) {}

  const char* name() const override { return "engine"; }

  std::vector<PortDecl> input_ports() const override {
    return {{"throttle_target", "rad/s", 0.0},
            {"conv_pump_torque", "N.m", 0.0},
            {"hyd_pump_torque", "N.m", 0.0}};
  }

  std::vector<PortDecl> output_ports() const override {
    return {{"omega", "rad/s", state_.omega},   {"boost", "-", state_.boost},
            {"throttle", "-", 0.0},             {"engine_torque", "N.m", 0.0},
            {"engine_domega_dt", "rad/s2", 0.0}, {"engine_load_conv", "N.m", 0.0},
            {"engine_load_hyd", "N.m", 0.0},    {"stalled", "-", 0.0}};
  }

  void bind(PortBus& bus) override {
    in_target_ = bus.lookup("throttle_target");
    in_conv_ = bus.lookup("conv_pump_torque");
    in_hyd_ = bus.lookup("hyd_pump_torque");
    out_omega_ = bus.lookup("omega");
    out_boost_ = bus.lookup("boost");
    out_throttle_ = bus.lookup("throttle");
    out_torque_ = bus.lookup("engine_torque");
    out_domega_ = bus.lookup("engine_domega_dt");
    out_load_conv_ = bus.lookup("engine_load_conv");
    out_load_hyd_ = bus.lookup("engine_load_hyd");
    out_stalled_ = bus.lookup("stalled");
  }

  void step(PortBus& bus, double, double dt) override {
    const double target = bus.get(in_target_);
    const double load_conv = bus.get(in_conv_);
    const double load_hyd = bus.get(in_hyd_);
    const double load = load_conv + load_hyd;

    const double commanded = governor_throttle(spec_, target, state_.omega);
    const double eff = effective_throttle(spec_, state_.omega, commanded);
    const double indicated = eff * available_torque(spec_, state_.omega, state_.boost);
    const EngineDerivatives d = engine_derivatives(spec_, state_, eff, load);

    bus.set(out_omega_, state_.omega);
    bus.set(out_boost_, state_.boost);
    bus.set(out_throttle_, eff);
    bus.set(out_torque_, indicated);
    bus.set(out_domega_, d.domega_dt);
    bus.set(out_load_conv_, load_conv);
    bus.set(out_load_hyd_, load_hyd);
    bus.set(out_stalled_, state_.omega < spec_.stall_threshold() ? 1.0 : 0.0);

    state_ = engine_step(spec_, state_, commanded, load, dt);
  }

  const EngineState& state() const { return state_; }

 private:
  EngineSpec spec_;
  EngineState state_;
  int in_target_ = -1, in_conv_ = -1, in_hyd_ = -1;
  int out_omega_ = -1, out_boost_ = -1, out_throttle_ = -1, out_torque_ = -1, out_domega_ = -1,
      out_load_conv_ = -1, out_load_hyd_ = -1, out_stalled_ = -1;
};

class DrivelineModule final : public Module {
 public:
  DrivelineModule(ConverterSpec cspec, TransmissionSpec tspec, VehicleSpec vspec)
      : cspec_(std::move(cspec)), tspec_(std::move(tspec)), vspec_(vspec) {}

  const char* name() const override { return "driveline"; }

  std::vector<PortDecl> input_ports() const override {
    return {{"omega", "rad/s", 0.0},
            {"direction_request", "-", 0.0},
            {"brake", "-", 0.0},
            {"pile_fx", "N", 0.0}};
  }

  std::vector<PortDecl> output_ports() const override {
    return {{"conv_pump_torque", "N.m", 0.0}, {"conv_turbine_torque", "N.m", 0.0},
            {"nu", "-", 0.0},                 {"omega_turbine", "rad/s", 0.0},
            {"v", "m/s", 0.0},                {"traction_force", "N", 0.0},
            {"shift_timer", "s", 0.0}};
  }

  void bind(PortBus& bus) override {
    in_omega_ = bus.lookup("omega");
    in_dir_ = bus.lookup("direction_request");
    in_brake_ = bus.lookup("brake");
    in_pile_fx_ = bus.lookup("pile_fx");
    out_pump_ = bus.lookup("conv_pump_torque");
    out_turbine_ = bus.lookup("conv_turbine_torque");
    out_nu_ = bus.lookup("nu");
    out_omega_t_ = bus.lookup("omega_turbine");
    out_v_ = bus.lookup("v");
    out_traction_ = bus.lookup("traction_force");
    out_shift_ = bus.lookup("shift_timer");
  }

  void step(PortBus& bus, double, double dt) override {
    const Direction req = decode_direction(bus.get(in_dir_));
    if (req != state_.direction) state_ = request_shift(tspec_, state_, req);

    const double omega_pump = bus.get(in_omega_);
    const bool engaged = state_.direction != Direction::Neutral && state_.shift_timer <= 0.0;

    // Disengaged, the turbine freewheels near the coupling point and the
    // converter only churns; engaged, it follows the wheels.
    double omega_t = engaged ? turbine_speed(vspec_, tspec_, state_)
                             : cspec_.nu_max() * omega_pump;
    const ConverterTorques ct = converter_torques(cspec_, omega_pump, omega_t);
    const double turbine_to_wheels = engaged ? ct.turbine_out : 0.0;

    // Service brake: resists motion, never creates it.
    double ext = bus.get(in_pile_fx_);
    const double brake = bus.get(in_brake_);
    if (std::abs(state_.v) > 0.01) {
      const double f_brake =
          brake * 0.5 * vspec_.mu_traction * vspec_.mass * units::kGravity;
      ext += (state_.v > 0.0 ? 1.0 : -1.0) * f_brake;
    }

    double traction = 0.0;
    if (engaged) {
      traction = turbine_to_wheels * tspec_.gear_ratios[static_cast<std::size_t>(state_.gear)] *
                 tspec_.efficiency * dir_sign(state_.direction) / vspec_.wheel_radius;
      const double cap = vspec_.mu_traction * vspec_.mass * units::kGravity;
      traction = std::clamp(traction, -cap, cap);
    }

    bus.set(out_pump_, ct.pump_demand);
    bus.set(out_turbine_, turbine_to_wheels);
    bus.set(out_nu_, converter_speed_ratio(cspec_, omega_pump, omega_t));
    bus.set(out_omega_t_, omega_t);
    bus.set(out_v_, state_.v);
    bus.set(out_traction_, traction);
    bus.set(out_shift_, state_.shift_timer);

    state_ = vehicle_step(vspec_, tspec_, state_, turbine_to_wheels, ext, dt);
  }

  const DrivelineState& state() const { return state_; }

 private:
  ConverterSpec cspec_;
  TransmissionSpec tspec_;
  VehicleSpec vspec_;
  DrivelineState state_;
  int in_omega_ = -1, in_dir_ = -1, in_brake_ = -1, in_pile_fx_ = -1;
  int out_pump_ = -1, out_turbine_ = -1, out_nu_ = -1, out_omega_t_ = -1, out_v_ = -1,
      out_traction_ = -1, out_shift_ = -1;
};

class HydraulicsModule final : public Module {
 public:
  HydraulicsModule(PumpSpec pump, CylinderSpec lift, CylinderSpec tilt, double rated_engine_speed,
                   HydraulicsState initial)
      : pump_(pump), lift_(lift), tilt_(tilt), state_(initial) {
    q_ref_ = pump_.d_max * pump_rev_rate(pump_, rated_engine_speed);
  }

  const char* name() const override { return "hydraulics"; }

  std::vector<PortDecl> input_ports() const override {
    return {{"omega", "rad/s", 0.0},
            {"lift_lever", "-", 0.0},
            {"tilt_lever", "-", 0.0},
            {"lift_load", "N", 0.0},
            {"tilt_load", "N", 0.0}};
  }

  std::vector<PortDecl> output_ports() const override {
    return {{"hyd_pump_torque", "N.m", 0.0}, {"eps", "-", state_.eps},
            {"p_sys", "Pa", 0.0},            {"q_delivered", "m3/s", 0.0},
            {"x_lift", "m", state_.x_lift},  {"x_tilt", "m", state_.x_tilt}};
  }

  void bind(PortBus& bus) override {
    in_omega_ = bus.lookup("omega");
    in_lift_lever_ = bus.lookup("lift_lever");
    in_tilt_lever_ = bus.lookup("tilt_lever");
    in_lift_load_ = bus.lookup("lift_load");
    in_tilt_load_ = bus.lookup("tilt_load");
    out_torque_ = bus.lookup("hyd_pump_torque");
    out_eps_ = bus.lookup("eps");
    out_p_ = bus.lookup("p_sys");
    out_q_ = bus.lookup("q_delivered");
    out_x_lift_ = bus.lookup("x_lift");
    out_x_tilt_ = bus.lookup("x_tilt");
  }

  void step(PortBus& bus, double, double dt) override {
    const double omega = bus.get(in_omega_);
    const double lift_lever = std::clamp(bus.get(in_lift_lever_), 0.0, 1.0);
    const double tilt_lever = std::clamp(bus.get(in_tilt_lever_), -1.0, 1.0);
    const double lift_load = bus.get(in_lift_load_);
    const double tilt_load = bus.get(in_tilt_load_);

    const double q_lift_dem = lift_lever * q_ref_;
    const double q_tilt_dem = std::abs(tilt_lever) * kTiltFlowShare * q_ref_;
    const double q_dem = q_lift_dem + q_tilt_dem;

    // Start-of-step displacement sets this step's delivered flow and torque.
    const double n = pump_rev_rate(pump_, std::max(omega, 0.0));
    const double q_avail = state_.eps * pump_.d_max * n;
    const double q_lift = q_dem > 0.0 ? q_avail * q_lift_dem / q_dem : 0.0;
    const double q_tilt = q_dem > 0.0 ? q_avail * q_tilt_dem / q_dem : 0.0;

    const CylinderStepResult lift_r = cylinder_step(pump_, lift_, state_.x_lift, q_lift,
                                                    lift_load, dt);
    CylinderStepResult tilt_r;
    if (tilt_lever >= 0.0) {
      tilt_r = cylinder_step(pump_, tilt_, state_.x_tilt, q_tilt, tilt_load, dt);
    } else {
      // Dump direction: retract; the load helps, pressure stays at margin.
      tilt_r.pressure = pump_.ls_margin;
      tilt_r.extension =
          std::clamp(state_.x_tilt - q_tilt / tilt_.area_head * dt, 0.0, tilt_.stroke);
    }

    double p_sys = pump_.ls_margin;  // standby
    if (q_lift_dem > 0.0) p_sys = std::max(p_sys, lift_r.pressure);
    if (q_tilt_dem > 0.0) p_sys = std::max(p_sys, tilt_r.pressure);

    bus.set(out_torque_, pump_torque(pump_, state_.eps, p_sys));
    bus.set(out_eps_, state_.eps);
    bus.set(out_p_, p_sys);
    bus.set(out_q_, q_avail);
    bus.set(out_x_lift_, state_.x_lift);
    bus.set(out_x_tilt_, state_.x_tilt);

    const LsControlResult ls = ls_control_step(pump_, state_.eps, q_dem, omega, dt);
    state_.eps = ls.eps;
    state_.p_sys = p_sys;
    state_.x_lift = lift_r.extension;
    state_.x_tilt = tilt_r.extension;
  }

  const HydraulicsState& state() const { return state_; }

  static constexpr double kTiltFlowShare = 0.5;

 private:
  PumpSpec pump_;
  CylinderSpec lift_;
  CylinderSpec tilt_;
  HydraulicsState state_;
  double q_ref_ = 0.0;
  int in_omega_ = -1, in_lift_lever_ = -1, in_tilt_lever_ = -1, in_lift_load_ = -1,
      in_tilt_load_ = -1;
  int out_torque_ = -1, out_eps_ = -1, out_p_ = -1, out_q_ = -1, out_x_lift_ = -1,
      out_x_tilt_ = -1;
};

class LoadingUnitModule final : public Module {
 public:
  explicit LoadingUnitModule(LinkageSpec linkage) : linkage_(std::move(linkage)) {}

  const char* name() const override { return "loading_unit"; }

  std::vector<PortDecl> input_ports() const override {
    return {{"x_lift", "m", 0.0}, {"x_tilt", "m", 0.0}, {"payload", "kg", 0.0},
            {"pile_fv", "N", 0.0}};
  }

  std::vector<PortDecl> output_ports() const override {
    return {{"lift_load", "N", 0.0}, {"tilt_load", "N", 0.0}};
  }

  void bind(PortBus& bus) override {
    in_x_lift_ = bus.lookup("x_lift");
    in_x_tilt_ = bus.lookup("x_tilt");
    in_payload_ = bus.lookup("payload");
    in_pile_fv_ = bus.lookup("pile_fv");
    out_lift_ = bus.lookup("lift_load");
    out_tilt_ = bus.lookup("tilt_load");
  }

  void step(PortBus& bus, double, double) override {
    const double x_lift = bus.get(in_x_lift_);
    const double x_tilt = bus.get(in_x_tilt_);
    const double payload = bus.get(in_payload_);
    const double pile_fv = bus.get(in_pile_fv_);

    const double lift = lift_load_force(linkage_, x_lift, payload) +
                        pile_fv * linkage_.lift_ratio(x_lift);
    const double tilt = (kTiltPayloadShare * payload + kTiltArmShare * linkage_.arm_equiv_mass) *
                            units::kGravity * linkage_.tilt_ratio(x_tilt) +
                        kTiltPileShare * pile_fv * linkage_.tilt_ratio(x_tilt);

    bus.set(out_lift_, lift);
    bus.set(out_tilt_, tilt);
  }

  static constexpr double kTiltPayloadShare = 0.6;
  static constexpr double kTiltArmShare = 0.2;
  static constexpr double kTiltPileShare = 0.5;

 private:
  LinkageSpec linkage_;
  int in_x_lift_ = -1, in_x_tilt_ = -1, in_payload_ = -1, in_pile_fv_ = -1;
  int out_lift_ = -1, out_tilt_ = -1;
};

class EnvironmentModule final : public Module {
 public:
  EnvironmentModule(PileSpec pile, LinkageSpec linkage)
      : pile_(pile), linkage_(std::move(linkage)) {}

  const char* name() const override { return "environment"; }

  std::vector<PortDecl> input_ports() const override {
    return {{"v", "m/s", 0.0},
            {"op_phase", "-", 0.0},
            {"tilt_lever", "-", 0.0},
            {"traction_force", "N", 0.0}};
  }

  std::vector<PortDecl> output_ports() const override {
    return {{"position", "m", 0.0}, {"depth", "m", 0.0},   {"payload", "kg", 0.0},
            {"pile_fx", "N", 0.0},  {"pile_fv", "N", 0.0}};
  }

  void bind(PortBus& bus) override {
    in_v_ = bus.lookup("v");
    in_phase_ = bus.lookup("op_phase");
    in_tilt_ = bus.lookup("tilt_lever");
    in_traction_ = bus.lookup("traction_force");
    out_position_ = bus.lookup("position");
    out_depth_ = bus.lookup("depth");
    out_payload_ = bus.lookup("payload");
    out_fx_ = bus.lookup("pile_fx");
    out_fv_ = bus.lookup("pile_fv");
  }

  void step(PortBus& bus, double, double dt) override {
    const double v = bus.get(in_v_);
    const auto phase = static_cast<Phase>(static_cast<int>(bus.get(in_phase_) + 0.5));
    const double tilt_lever = bus.get(in_tilt_);
    const double traction = bus.get(in_traction_);

    const bool pile_active = phase == Phase::ApproachPile || phase == Phase::Fill ||
                             phase == Phase::RetreatReverse;
    PileForces f;
    if (pile_active) f = pile_resistance(pile_, bucket_.depth);

    // Unilateral contact: the pile resists penetration but never pushes the
    // machine back out.
    double fx = 0.0;
    if (pile_active) {
      if (v > 0.01)
        fx = f.horizontal;
      else if (v >= -0.01)
        fx = std::min(f.horizontal, std::max(traction, 0.0));
    }

    bus.set(out_position_, position_);
    bus.set(out_depth_, bucket_.depth);
    bus.set(out_payload_, bucket_.payload);
    bus.set(out_fx_, fx);
    bus.set(out_fv_, pile_active ? f.vertical : 0.0);

    const double advance = bucket_.depth > 0.0 ? std::max(0.0, v * dt) : 0.0;
    position_ += v * dt;
    if (pile_active) {
      bucket_ = bucket_fill_step(pile_, linkage_, bucket_, position_, advance,
                                 tilt_lever > 0.5, dt);
    } else {
      bucket_.depth = 0.0;
    }
    if (phase == Phase::Dump && tilt_lever < -0.5)
      bucket_.payload = std::max(0.0, bucket_.payload - kDumpRate * linkage_.max_payload * dt);
  }

  const BucketState& bucket() const { return bucket_; }
  double position() const { return position_; }

  static constexpr double kDumpRate = 0.67;  // fraction of max payload per second

 private:
  PileSpec pile_;
  LinkageSpec linkage_;
  BucketState bucket_;
  double position_ = 0.0;
  int in_v_ = -1, in_phase_ = -1, in_tilt_ = -1, in_traction_ = -1;
  int out_position_ = -1, out_depth_ = -1, out_payload_ = -1, out_fx_ = -1, out_fv_ = -1;
};

}  // namespace detail

inline std::vector<std::string> standard_trace_columns() {
  return {"omega",       "boost",         "throttle",        "engine_torque",
          "engine_domega_dt", "engine_load_conv", "engine_load_hyd", "stalled",
          "throttle_target",  "direction_request", "lift_lever",     "tilt_lever",
          "brake",       "op_phase",      "conv_pump_torque", "conv_turbine_torque",
          "nu",          "omega_turbine", "v",               "traction_force",
          "shift_timer", "eps",           "p_sys",           "q_delivered",
          "x_lift",      "x_tilt",        "hyd_pump_torque", "lift_load",
          "tilt_load",   "position",      "depth",           "payload",
          "pile_fx",     "pile_fv"};
}

// Standard assembly: the six loader modules in their fixed execution order.
inline Simulation build_simulation(const MachineLayout& layout, const Scenario& scenario_in) {
  layout.validate();
  const Scenario scenario = scenario_in.resolved(layout);
  scenario.validate(layout);

  Simulation sim(scenario.sim);
  EngineState engine0{layout.engine.low_idle, 0.0};
  sim.register_module(
      std::make_unique<detail::OperatorModule>(scenario.op, engine0.omega));
  sim.register_module(std::make_unique<detail::EngineModule>(layout.engine, engine0));
  sim.register_module(std::make_unique<detail::DrivelineModule>(
      layout.converter, layout.transmission, layout.vehicle));
  sim.register_module(std::make_unique<detail::HydraulicsModule>(
      layout.pump, layout.lift_cylinder, layout.tilt_cylinder, layout.engine.high_idle,
      HydraulicsState{}));
  sim.register_module(std::make_unique<detail::LoadingUnitModule>(layout.linkage));
  sim.register_module(std::make_unique<detail::EnvironmentModule>(scenario.pile, layout.linkage));
  sim.bind_all();
  return sim;
}

inline Trace run_cycle(const MachineLayout& layout, const Scenario& scenario) {
  Simulation sim = build_simulation(layout, scenario);
  return sim.run(standard_trace_columns());
}

}  // namespace loadsim
