#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "loadsim/integrate.hpp"
#include "loadsim/table.hpp"
#include "loadsim/units.hpp"

namespace loadsim {

// Hydrodynamic torque converter characterised over signed speed ratio
// nu = omega_turbine / omega_pump. The grid must reach into nu < 0 so the
// reversal case (turbine driven backwards by a rolling machine) is covered.
struct ConverterSpec {
  LinearTable capacity;      // nu -> c(nu), N*m/(rad/s)^2
  LinearTable torque_ratio;  // nu -> mu(nu)
  double scale = 1.0;        // multiplies c(nu); design sweep knob

  void validate() const {
    if (capacity.empty()) throw SpecError("converter.capacity", "missing");
    if (torque_ratio.empty()) throw SpecError("converter.torque_ratio", "missing");
    if (capacity.size() != torque_ratio.size())
      throw SpecError("converter.table", "capacity/torque_ratio grids differ");
    for (std::size_t i = 0; i < capacity.size(); ++i) {
      if (std::abs(capacity.x(i) - torque_ratio.x(i)) > 1e-12)
        throw SpecError("converter.table", "capacity/torque_ratio grids differ");
      if (!(capacity.y(i) > 0.0)) throw SpecError("converter.capacity", "c must be > 0 on the grid");
      if (capacity.y(i) * scale <= 0.0) throw SpecError("converter.scale", "must be > 0");
      if (torque_ratio.y(i) < 0.0) throw SpecError("converter.torque_ratio", "mu must be >= 0");
      // Never a power source: T_p*w_p - T_t*w_t = c*w_p^3*(1 - mu*nu) >= 0.
      if (torque_ratio.y(i) * capacity.x(i) > 1.0 + 1e-9)
        throw SpecError("converter.table", "dissipation violated (mu*nu > 1) at nu=" +
                                               std::to_string(capacity.x(i)));
    }
    // mu(nu)*nu is quadratic on each interpolation segment and can peak
    // between grid points; check the interior maximum analytically.
    for (std::size_t i = 0; i + 1 < torque_ratio.size(); ++i) {
      const double n0 = torque_ratio.x(i), n1 = torque_ratio.x(i + 1);
      if (n1 <= 0.0) continue;  // mu*nu <= 0 for nu <= 0
      const double m0 = torque_ratio.y(i), m1 = torque_ratio.y(i + 1);
      const double a = (m1 - m0) / (n1 - n0);
      if (a == 0.0) continue;  // extremes at the (already checked) endpoints
      const double vertex = (a * n0 - m0) / (2.0 * a);
      if (vertex > n0 && vertex < n1) {
        const double peak = vertex * (m0 + a * (vertex - n0));
        if (peak > 1.0 + 1e-9)
          throw SpecError("converter.table",
                          "dissipation violated between grid points near nu=" +
                              std::to_string(vertex));
      }
    }
    if (!torque_ratio.non_increasing_y())
      throw SpecError("converter.torque_ratio", "mu must be non-increasing in nu");
    if (capacity.front_x() > -1.0 + 1e-9 || capacity.back_x() < 0.97 - 1e-9)
      throw SpecError("converter.table", "nu grid must span at least [-1, 0.97]");
    if (!(scale > 0.0)) throw SpecError("converter.scale", "must be > 0");
  }

  double c(double nu) const { return scale * capacity(nu); }
  double mu(double nu) const { return torque_ratio(nu); }
  double nu_min() const { return capacity.front_x(); }
  double nu_max() const { return capacity.back_x(); }
};

struct TransmissionSpec {
  std::vector<double> gear_ratios;  // overall turbine -> wheel, per gear
  double efficiency = 0.0;          // (0,1]
  double shift_lag = 0.0;           // s

  void validate() const {
    if (gear_ratios.empty()) throw SpecError("transmission.gear_ratios", "missing");
    for (double r : gear_ratios)
      if (!(r > 0.0)) throw SpecError("transmission.gear_ratios", "ratios must be > 0");
    if (!(efficiency > 0.0 && efficiency <= 1.0))
      throw SpecError("transmission.efficiency", "must be in (0,1]");
    if (shift_lag < 0.0) throw SpecError("transmission.shift_lag", "must be >= 0");
  }
};

struct VehicleSpec {
  double mass = 0.0;           // kg
  double wheel_radius = 0.0;   // m
  double rolling_coeff = 0.0;
  double mu_traction = 0.0;    // peak adhesion

  void validate() const {
    if (!(mass > 0.0)) throw SpecError("vehicle.mass", "must be > 0");
    if (!(wheel_radius > 0.0)) throw SpecError("vehicle.wheel_radius", "must be > 0");
    if (!(rolling_coeff > 0.0)) throw SpecError("vehicle.rolling_coeff", "must be > 0");
    if (!(mu_traction > 0.0)) throw SpecError("vehicle.mu_traction", "must be > 0");
    if (!(rolling_coeff < mu_traction))
      throw SpecError("vehicle.rolling_coeff", "must be < mu_traction");
  }
};

enum class Direction { Reverse = -1, Neutral = 0, Forward = 1 };

constexpr int dir_sign(Direction d) { return static_cast<int>(d); }

struct DrivelineState {
  double v = 0.0;  // m/s, + forward
  Direction direction = Direction::Neutral;
  int gear = 0;             // index into gear_ratios
  double shift_timer = 0.0; // s remaining; torque path open while > 0
};

struct ConverterTorques {
  double pump_demand = 0.0;  // load on the engine shaft
  double turbine_out = 0.0;  // torque delivered to the transmission input
};

// Speed ratio used by the converter maps; zero below the pump-speed epsilon.
inline double converter_speed_ratio(const ConverterSpec& spec, double omega_pump,
                                    double omega_turbine) {
  constexpr double kOmegaEps = 1.0;  // rad/s
  double nu = omega_pump < kOmegaEps ? 0.0 : omega_turbine / omega_pump;
  return std::clamp(nu, spec.nu_min(), spec.nu_max());
}

inline ConverterTorques converter_torques(const ConverterSpec& spec, double omega_pump,
                                          double omega_turbine) {
  constexpr double kOmegaEps = 1.0;  // rad/s
  double nu = converter_speed_ratio(spec, omega_pump, omega_turbine);
  ConverterTorques t;
  t.pump_demand = spec.c(nu) * omega_pump * omega_pump;
  t.turbine_out = spec.mu(nu) * t.pump_demand;
  // Past the coupling point the turbine overruns the pump; the stator
  // freewheels and no torque reaches the transmission. The pump keeps
  // churning at the clamped capacity.
  if (omega_pump >= kOmegaEps && omega_turbine / omega_pump > spec.nu_max()) t.turbine_out = 0.0;
  return t;
}

// Turbine speed back-calculated from vehicle speed; negative when the machine
// rolls against the engaged direction. Neutral leaves the converter unloaded.
inline double turbine_speed(const VehicleSpec& vspec, const TransmissionSpec& tspec,
                            const DrivelineState& s) {
  if (s.direction == Direction::Neutral) return 0.0;
  return s.v * dir_sign(s.direction) * tspec.gear_ratios[static_cast<std::size_t>(s.gear)] /
         vspec.wheel_radius;
}

inline DrivelineState request_shift(const TransmissionSpec& tspec, DrivelineState s,
                                    Direction new_direction) {
  if (new_direction == s.direction) return s;  // no timer restart
  s.direction = new_direction;
  s.shift_timer = tspec.shift_lag;
  return s;
}

inline DrivelineState vehicle_step(const VehicleSpec& vspec, const TransmissionSpec& tspec,
                                   DrivelineState s, double turbine_torque,
                                   double external_long_force, double dt) {
  constexpr double kSpeedDeadband = 0.01;  // m/s

  double wheel_force = 0.0;
  if (s.shift_timer > 0.0) {
    s.shift_timer = std::max(0.0, s.shift_timer - dt);
  } else if (s.direction != Direction::Neutral) {
    wheel_force = turbine_torque * tspec.gear_ratios[static_cast<std::size_t>(s.gear)] *
                  tspec.efficiency * dir_sign(s.direction) / vspec.wheel_radius;
    double cap = vspec.mu_traction * vspec.mass * units::kGravity;
    wheel_force = std::clamp(wheel_force, -cap, cap);
  }

  double rolling = 0.0;
  if (std::abs(s.v) > kSpeedDeadband)
    rolling = vspec.rolling_coeff * vspec.mass * units::kGravity * (s.v > 0.0 ? 1.0 : -1.0);

  const double net = wheel_force - external_long_force - rolling;
  // Hold still in the deadband unless driven: rolling resistance must not
  // create motion on its own.
  if (std::abs(s.v) <= kSpeedDeadband && wheel_force == 0.0 && external_long_force == 0.0) return s;

  double y[1] = {s.v};
  rk4_step([&](std::span<const double>, double, std::span<double> dy) { dy[0] = net / vspec.mass; },
           std::span<double>(y, 1), 0.0, dt);
  s.v = y[0];
  return s;
}

}  // namespace loadsim
