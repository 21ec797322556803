#pragma once

namespace loadsim::units {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.81;  // m/s^2

constexpr double rpm_to_rad_s(double rpm) { return rpm * kPi / 30.0; }
constexpr double rad_s_to_rpm(double w) { return w * 30.0 / kPi; }


}  // namespace loadsim::units
