#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "loadsim/driveline.hpp"
#include "loadsim/error.hpp"

namespace loadsim {

// Short-loading-cycle phases, visited strictly in this order.
enum class Phase {
  ApproachPile = 0,
  Fill = 1,
  RetreatReverse = 2,
  DirectionChange = 3,
  ApproachReceiver = 4,
  Dump = 5,
  ReturnReverse = 6,
  Done = 7,
};

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::ApproachPile: return "approach_pile";
    case Phase::Fill: return "fill";
    case Phase::RetreatReverse: return "retreat_reverse";
    case Phase::DirectionChange: return "direction_change";
    case Phase::ApproachReceiver: return "approach_receiver";
    case Phase::Dump: return "dump";
    case Phase::ReturnReverse: return "return_reverse";
    case Phase::Done: return "done";
  }
  return "?";
}

struct OperatorParams {
  double reversal_time = 2.0;        // s, nominal direction-change duration
  bool lift_during_reverse = true;
  double throttle_drop_speed = 0.0;  // rad/s engine target during reversal
  double throttle_high_speed = 0.0;  // rad/s working target (engine high idle)
  double throttle_idle_speed = 0.0;  // rad/s target when done

  // Phase thresholds.
  double contact_depth = 0.05;      // m, pile contact
  double fill_payload = 0.0;        // kg, bucket-full threshold
  double dump_height = 0.0;         // m of lift extension at the receiver
  double approach_distance = 0.0;   // m, receiver leg length
  double reverse_distance = 0.0;    // m, retreat before changing direction

  // Fill-phase burst timers.
  double tilt_burst = 0.6;  // s
  double lift_burst = 0.6;  // s

  void validate() const {
    if (!(reversal_time > 0.0)) throw SpecError("operator.reversal_time", "must be > 0");
    if (!(throttle_drop_speed > 0.0)) throw SpecError("operator.throttle_drop", "must be > 0");
    if (!(throttle_high_speed > throttle_drop_speed))
      throw SpecError("operator.throttle_drop", "must be below the working speed target");
    if (!(contact_depth > 0.0)) throw SpecError("operator.contact_depth", "must be > 0");
    if (!(fill_payload > 0.0)) throw SpecError("operator.fill_payload", "must be > 0");
    if (!(dump_height > 0.0)) throw SpecError("operator.dump_height", "must be > 0");
    if (!(approach_distance > 0.0)) throw SpecError("operator.approach_distance", "must be > 0");
    if (!(reverse_distance > 0.0)) throw SpecError("operator.reverse_distance", "must be > 0");
    if (!(tilt_burst > 0.0)) throw SpecError("operator.tilt_burst", "must be > 0");
    if (!(lift_burst > 0.0)) throw SpecError("operator.lift_burst", "must be > 0");
  }
};

struct OperatorState {
  Phase phase = Phase::ApproachPile;
  double phase_timer = 0.0;  // s in current phase
  double burst_timer = 0.0;  // fill-phase burst countdown
  bool burst_tilt = true;    // current fill burst kind
  double mark_pos = 0.0;     // position captured at phase entry
  bool forward_requested = false;  // direction-change sub-step latch
};

struct Controls {
  double throttle_target = 0.0;  // rad/s engine speed target
  Direction direction_request = Direction::Neutral;
  double lift_lever = 0.0;  // [0,1]
  double tilt_lever = 0.0;  // [-1,1]
  double brake = 0.0;       // [0,1]
};

struct Observations {
  double v = 0.0;
  double payload = 0.0;
  double depth = 0.0;
  double lift_height = 0.0;  // lift cylinder extension, m
  double position = 0.0;
  double omega = 0.0;  // engine speed, rad/s
};

// Shift lead factor on the drop-speed target; covers the speed lost to the
// engine load during the shift lag.
inline constexpr double kShiftLead = 1.35;

// Rule-based operator: IF/STEP statements and timers over machine
// observations. Deterministic by construction.
inline std::pair<OperatorState, Controls> operator_step(const OperatorParams& p, OperatorState s,
                                                        const Observations& obs, double dt) {
  if (!(std::isfinite(obs.v) && std::isfinite(obs.payload) && std::isfinite(obs.depth) &&
        std::isfinite(obs.lift_height) && std::isfinite(obs.position) && std::isfinite(obs.omega)))
    throw std::runtime_error("operator_step: non-finite observation");

  Controls c;
  s.phase_timer += dt;

  auto enter = [&](Phase next) {
    s.phase = next;
    s.phase_timer = 0.0;
    s.burst_timer = 0.0;
    s.burst_tilt = false;  // first fill burst is a tilt burst
    s.mark_pos = obs.position;
    s.forward_requested = false;
  };

  switch (s.phase) {
    case Phase::ApproachPile:
      c.throttle_target = p.throttle_high_speed;
      c.direction_request = Direction::Forward;
      if (obs.depth > p.contact_depth) enter(Phase::Fill);
      break;

    case Phase::Fill:
      c.throttle_target = p.throttle_high_speed;
      c.direction_request = Direction::Forward;
      s.burst_timer -= dt;
      if (s.burst_timer <= 0.0) {
        s.burst_tilt = !s.burst_tilt;
        s.burst_timer = s.burst_tilt ? p.tilt_burst : p.lift_burst;
      }
      if (s.burst_tilt) {
        c.tilt_lever = 1.0;
      } else {
        c.lift_lever = 1.0;
      }
      if (obs.payload >= p.fill_payload) enter(Phase::RetreatReverse);
      break;

    case Phase::RetreatReverse:
      c.throttle_target = p.throttle_high_speed;
      c.direction_request = Direction::Reverse;
      c.lift_lever = p.lift_during_reverse ? 1.0 : 0.0;
      if (s.mark_pos - obs.position >= p.reverse_distance) enter(Phase::DirectionChange);
      break;

    case Phase::DirectionChange:
      // Lower the engine speed for the shift, then engage forward while the
      // machine still rolls backwards. The shift is requested ahead of the
      // target so that, after the shift lag, engagement lands near it; the
      // operator allots at most reversal_time to waiting.
      c.throttle_target = p.throttle_drop_speed;
      c.lift_lever = p.lift_during_reverse ? 1.0 : 0.0;
      if (!s.forward_requested && (obs.omega <= kShiftLead * p.throttle_drop_speed ||
                                   s.phase_timer >= p.reversal_time))
        s.forward_requested = true;
      c.direction_request = s.forward_requested ? Direction::Forward : Direction::Reverse;
      if (s.forward_requested && obs.v >= 0.05) enter(Phase::ApproachReceiver);
      break;

    case Phase::ApproachReceiver:
      c.throttle_target = p.throttle_high_speed;
      c.direction_request = Direction::Forward;
      c.lift_lever = 1.0;
      if (obs.position - s.mark_pos >= p.approach_distance) {
        c.brake = 1.0;  // hold at the receiver while the bucket finishes rising
        if (obs.lift_height >= p.dump_height) enter(Phase::Dump);
      }
      break;

    case Phase::Dump:
      c.throttle_target = p.throttle_high_speed;
      c.direction_request = Direction::Neutral;
      c.brake = 1.0;
      c.tilt_lever = -1.0;
      if (obs.payload <= 1.0) enter(Phase::ReturnReverse);
      break;

    case Phase::ReturnReverse:
      c.throttle_target = p.throttle_high_speed;
      c.direction_request = Direction::Reverse;
      if (s.mark_pos - obs.position >= p.approach_distance) enter(Phase::Done);
      break;

    case Phase::Done:
      c.throttle_target = p.throttle_idle_speed;
      c.direction_request = Direction::Neutral;
      c.brake = 1.0;
      break;

    default:
      throw std::runtime_error("operator_step: unknown phase (corrupted state)");
  }

  return {s, c};
}

}  // namespace loadsim
