#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "loadsim/csv.hpp"
#include "loadsim/engine.hpp"
#include "loadsim/integrate.hpp"
#include "loadsim/units.hpp"

namespace loadsim {

// Forced-acceleration run-up against an emulated electro-magnetic brake.
struct BenchRun {
  double accel = 0.0;        // rad/s^2, > 0
  double omega_start = 0.0;  // rad/s
  double omega_end = 0.0;    // rad/s
  int samples = 100;

  void validate() const {
    if (!(accel > 0.0)) throw SpecError("bench.accel", "must be > 0");
    if (!(omega_start >= 0.0)) throw SpecError("bench.omega_start", "must be >= 0");
    if (!(omega_end > omega_start)) throw SpecError("bench.omega_end", "must exceed omega_start");
    if (samples < 10) throw SpecError("bench.samples", "must be >= 10");
  }
};

struct DynamicCurve {
  LinearTable torque;  // rad/s -> available N*m at the run's acceleration
  double accel = 0.0;
};

// Run aborted: the engine cannot follow the forced ramp.
class BenchAbort : public std::runtime_error {
 public:
  explicit BenchAbort(double omega)
      : std::runtime_error("acceleration not achievable above omega = " +
                           std::to_string(omega) + " rad/s"),
        omega_(omega) {}
  double omega() const { return omega_; }

 private:
  double omega_;
};

// Worst-case reversal ramp: max-torque speed down to low idle over a typical
// reversal duration.
inline double reversal_accel_rate(const EngineSpec& spec, double reversal_time) {
  if (!(reversal_time > 0.0)) throw SpecError("reversal.reversal_time", "must be > 0");
  return (spec.omega_max_torque() - spec.low_idle) / reversal_time;
}

// Full-throttle run with speed forced along omega(t) = omega_start + accel*t.
// Boost starts from the released-to-idle steady state (zero-load governor,
// i.e. no boost). Samples are taken as the ramp passes each speed, the first
// one grid-spacing above omega_start. The brake absorbs everything beyond
// the inertia share, so recorded torque = available - J*accel.
inline DynamicCurve dynamic_torque_curve(const EngineSpec& spec, const BenchRun& run) {
  run.validate();
  const int n = run.samples;
  const double dw = (run.omega_end - run.omega_start) / n;
  const double inertia_share = spec.inertia_j * run.accel;

  std::vector<double> ws, ts;
  ws.reserve(static_cast<std::size_t>(n));
  ts.reserve(static_cast<std::size_t>(n));

  double boost = 0.0;
  double t = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double w = run.omega_start + k * dw;
    const double t_next = k * dw / run.accel;
    if (spec.turbo_tau <= 1e-12) {
      boost = 1.0;
    } else {
      // March boost over [t, t_next] with steps no longer than tau/10.
      double span = t_next - t;
      int sub = std::max(1, static_cast<int>(span / (spec.turbo_tau / 10.0)) + 1);
      double h = span / sub;
      for (int i = 0; i < sub; ++i) {
        double y[1] = {boost};
        rk4_step(
            [&](std::span<const double> yy, double, std::span<double> dy) {
              dy[0] = (1.0 - yy[0]) / spec.turbo_tau;
            },
            std::span<double>(y, 1), 0.0, h);
        boost = std::min(y[0], 1.0);
      }
    }
    t = t_next;
    const double torque = available_torque(spec, w, boost) - inertia_share;
    if (torque < 0.0) throw BenchAbort(ws.empty() ? run.omega_start : ws.back());
    ws.push_back(w);
    ts.push_back(torque);
  }

  DynamicCurve curve;
  curve.torque = LinearTable(std::move(ws), std::move(ts), "dynamic_curve");
  curve.accel = run.accel;
  return curve;
}

// FNV-1a over a canonical engine serialization; ties a curve file to the
// engine it was measured on.
inline std::uint64_t engine_spec_hash(const EngineSpec& spec) {
  std::string s;
  auto add = [&](double v) {
    s += csv::format_double(v);
    s += ';';
  };
  for (std::size_t i = 0; i < spec.static_torque.size(); ++i) {
    add(spec.static_torque.x(i));
    add(spec.static_torque.y(i));
  }
  for (std::size_t i = 0; i < spec.smoke_limit.size(); ++i) {
    add(spec.smoke_limit.x(i));
    add(spec.smoke_limit.y(i));
  }
  add(spec.inertia_j);
  add(spec.turbo_tau);
  add(spec.low_idle);
  add(spec.high_idle);
  add(spec.governor_gain);

  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Curve file: two-column CSV (rpm, N*m); sidecar "<path>.meta" carries the
// acceleration and the engine hash for provenance checks.
inline void write_curve_files(const std::string& path, const DynamicCurve& curve,
                              std::uint64_t engine_hash) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw SpecError(path, "cannot open for writing");
  os << "rpm,torque_nm\n";
  for (std::size_t i = 0; i < curve.torque.size(); ++i)
    os << csv::format_double(units::rad_s_to_rpm(curve.torque.x(i))) << ','
       << csv::format_double(curve.torque.y(i)) << '\n';

  std::ofstream meta(path + ".meta", std::ios::binary);
  if (!meta) throw SpecError(path + ".meta", "cannot open for writing");
  meta << "accel_rad_s2=" << csv::format_double(curve.accel) << " engine_hash=" << std::hex
       << engine_hash << std::dec << "\n";
}

struct LoadedCurve {
  DynamicCurve curve;
  std::uint64_t engine_hash = 0;
};

inline LoadedCurve read_curve_files(const std::string& path) {
  auto data = csv::read_numeric_csv_file(path, 2);
  std::vector<double> ws, ts;
  for (const auto& row : data.rows) {
    ws.push_back(units::rpm_to_rad_s(row[0]));
    ts.push_back(row[1]);
  }
  LoadedCurve lc;

  std::ifstream meta(path + ".meta", std::ios::binary);
  if (!meta) throw SpecError(path + ".meta", "missing sidecar metadata");
  std::string line;
  std::getline(meta, line);
  double accel = 0.0;
  auto apos = line.find("accel_rad_s2=");
  auto hpos = line.find("engine_hash=");
  if (apos == std::string::npos || hpos == std::string::npos)
    throw SpecError(path + ".meta", "malformed sidecar metadata");
  accel = std::stod(line.substr(apos + 13));
  lc.engine_hash = std::stoull(line.substr(hpos + 12), nullptr, 16);

  lc.curve.torque = LinearTable(std::move(ws), std::move(ts), "dynamic_curve");
  lc.curve.accel = accel;
  return lc;
}

}  // namespace loadsim
