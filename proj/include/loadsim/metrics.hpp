#pragma once

#include <cmath>
#include <cstddef>

#include "loadsim/error.hpp"
#include "loadsim/operator.hpp"
#include "loadsim/sim.hpp"

namespace loadsim {

struct CycleMetrics {
  bool complete = false;
  double cycle_time = 0.0;        // s, first time the operator reports Done
  double fuel_proxy = 0.0;        // J, integral of indicated torque * speed
  double payload_delivered = 0.0; // kg
  int stall_events = 0;
  double min_omega = 0.0;         // rad/s over the run
};

// Summarise a finished trace. Fuel proxy integrates over the recorded rows
// (trapezoid); stall events are rising edges of the stall flag.
inline CycleMetrics cycle_metrics(const Trace& trace) {
  if (trace.rows.empty()) throw SpecError("metrics", "incomplete: empty trace");

  const int c_phase = trace.column_index("op_phase");
  const int c_torque = trace.column_index("engine_torque");
  const int c_omega = trace.column_index("omega");
  const int c_stalled = trace.column_index("stalled");
  const int c_payload = trace.column_index("payload");

  CycleMetrics m;
  m.min_omega = trace.value(0, c_omega);

  double prev_power = trace.value(0, c_torque) * trace.value(0, c_omega);
  double prev_t = trace.rows[0].t;
  double prev_stalled = trace.value(0, c_stalled);

  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const double t = trace.rows[i].t;
    const double power = trace.value(i, c_torque) * trace.value(i, c_omega);
    m.fuel_proxy += 0.5 * (power + prev_power) * (t - prev_t);
    prev_power = power;
    prev_t = t;

    const double stalled = trace.value(i, c_stalled);
    if (stalled > 0.5 && prev_stalled <= 0.5) ++m.stall_events;
    prev_stalled = stalled;

    m.min_omega = std::min(m.min_omega, trace.value(i, c_omega));
    m.payload_delivered = std::max(m.payload_delivered, trace.value(i, c_payload));

    if (!m.complete && static_cast<int>(trace.value(i, c_phase) + 0.5) ==
                           static_cast<int>(Phase::Done)) {
      m.complete = true;
      m.cycle_time = t;
    }
  }
  return m;
}

}  // namespace loadsim
