#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "loadsim/csv.hpp"
#include "loadsim/error.hpp"
#include "loadsim/layout.hpp"
#include "loadsim/machine.hpp"
#include "loadsim/units.hpp"

namespace loadsim::config {

// Structured text, one entry per line, nested named sections in braces:
//
//   engine {
//     low_idle  800 rpm        # values carry unit suffixes
//     torque_curve {           # table blocks hold numeric rows
//       700   820
//       2300  950
//     }
//   }
//
// Every dimensioned value must carry a unit the key accepts; everything is
// converted to SI at parse time.
struct ConfigNode {
  struct Scalar {
    double value = 0.0;
    std::string unit;
  };

  std::map<std::string, Scalar> scalars;
  std::map<std::string, bool> bools;
  std::map<std::string, std::vector<double>> lists;
  std::map<std::string, std::string> strings;
  std::map<std::string, std::unique_ptr<ConfigNode>> sections;
  std::vector<std::vector<double>> rows;  // table blocks only
};

namespace detail {

inline bool parse_number(const std::string& tok, double& out) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

inline std::vector<std::string> tokenize_line(std::string line) {
  auto hash = line.find('#');
  if (hash != std::string::npos) line.erase(hash);
  std::vector<std::string> toks;
  std::string cur;
  bool in_string = false;
  for (char ch : line) {
    if (in_string) {
      cur += ch;
      if (ch == '"') {
        toks.push_back(cur);
        cur.clear();
        in_string = false;
      }
      continue;
    }
    if (ch == '"') {
      if (!cur.empty()) {
        toks.push_back(cur);
        cur.clear();
      }
      cur += ch;
      in_string = true;
    } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == ',') {
      if (!cur.empty()) {
        toks.push_back(cur);
        cur.clear();
      }
    } else if (ch == '{' || ch == '}' || ch == '[' || ch == ']') {
      if (!cur.empty()) {
        toks.push_back(cur);
        cur.clear();
      }
      toks.emplace_back(1, ch);
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) toks.push_back(cur);
  return toks;
}

inline void parse_block(std::istream& is, ConfigNode& node, const std::string& path, int& lineno) {
  std::string line;
  while (std::getline(is, line)) {
    ++lineno;
    auto toks = tokenize_line(line);
    if (toks.empty()) continue;
    const std::string where = path.empty() ? "config" : path;

    if (toks[0] == "}") {
      if (toks.size() != 1) throw SpecError(where, "trailing tokens after '}' at line " +
                                                       std::to_string(lineno));
      return;
    }

    double num = 0.0;
    if (parse_number(toks[0], num)) {
      // Numeric row of a table block.
      std::vector<double> row;
      for (const auto& t : toks) {
        double v = 0.0;
        if (!parse_number(t, v))
          throw SpecError(where, "bad table row at line " + std::to_string(lineno));
        row.push_back(v);
      }
      if (!node.rows.empty() && node.rows.back().size() != row.size())
        throw SpecError(where, "ragged table row at line " + std::to_string(lineno));
      node.rows.push_back(std::move(row));
      continue;
    }

    const std::string key = toks[0];
    const std::string keypath = path.empty() ? key : path + "." + key;
    if (toks.size() < 2) throw SpecError(keypath, "missing value at line " + std::to_string(lineno));
    if (node.scalars.count(key) || node.bools.count(key) || node.lists.count(key) ||
        node.strings.count(key) || node.sections.count(key))
      throw SpecError(keypath, "duplicate entry at line " + std::to_string(lineno));

    if (toks[1] == "{") {
      if (toks.size() != 2)
        throw SpecError(keypath, "section body must start on its own line (line " +
                                     std::to_string(lineno) + ")");
      auto sub = std::make_unique<ConfigNode>();
      parse_block(is, *sub, keypath, lineno);
      node.sections[key] = std::move(sub);
    } else if (toks[1] == "[") {
      std::vector<double> vals;
      for (std::size_t i = 2; i < toks.size(); ++i) {
        if (toks[i] == "]") break;
        double v = 0.0;
        if (!parse_number(toks[i], v))
          throw SpecError(keypath, "bad list entry at line " + std::to_string(lineno));
        vals.push_back(v);
      }
      node.lists[key] = std::move(vals);
    } else if (toks[1] == "true" || toks[1] == "false") {
      node.bools[key] = toks[1] == "true";
    } else if (toks[1].front() == '"') {
      if (toks[1].size() < 2 || toks[1].back() != '"')
        throw SpecError(keypath, "unterminated string at line " + std::to_string(lineno));
      node.strings[key] = toks[1].substr(1, toks[1].size() - 2);
    } else {
      double v = 0.0;
      if (!parse_number(toks[1], v))
        throw SpecError(keypath, "bad value '" + toks[1] + "' at line " + std::to_string(lineno));
      ConfigNode::Scalar s;
      s.value = v;
      if (toks.size() >= 3) s.unit = toks[2];
      node.scalars[key] = s;
    }
  }
  if (!path.empty()) throw SpecError(path, "unterminated section (missing '}')");
}

}  // namespace detail

inline ConfigNode parse_config(std::istream& is) {
  ConfigNode root;
  int lineno = 0;
  detail::parse_block(is, root, "", lineno);
  return root;
}

inline ConfigNode parse_config_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SpecError(path, "cannot open");
  return parse_config(is);
}

// Accepted unit spellings per physical dimension, with factors to SI.
enum class Dim {
  Dimensionless,
  AngularSpeed,   // rad/s
  Time,           // s
  Mass,           // kg
  Inertia,        // kg.m2
  Pressure,       // Pa
  Length,         // m
  Area,           // m2
  Displacement,   // m3/rev
  Velocity,       // m/s
  Force,          // N
  ForcePerLen,    // N/m
  ForcePerLen2,   // N/m2
  MassPerLen,     // kg/m
  GovernorGain,   // s/rad (throttle per rad/s)
};

inline double convert_unit(const std::string& keypath, Dim dim, double v,
                           const std::string& unit) {
  using namespace units;
  struct U {
    const char* name;
    double factor;
  };
  auto match = [&](std::initializer_list<U> list) -> double {
    for (const U& u : list)
      if (unit == u.name) return v * u.factor;
    std::string allowed;
    for (const U& u : list) {
      if (!allowed.empty()) allowed += ", ";
      allowed += u.name;
    }
    throw SpecError(keypath, unit.empty() ? "missing unit (expected one of: " + allowed + ")"
                                          : "unknown unit '" + unit + "' (expected one of: " +
                                                allowed + ")");
  };

  switch (dim) {
    case Dim::Dimensionless:
      if (!unit.empty() && unit != "-")
        throw SpecError(keypath, "unexpected unit '" + unit + "' on dimensionless value");
      return v;
    case Dim::AngularSpeed:
      return match({{"rpm", kPi / 30.0}, {"rad/s", 1.0}});
    case Dim::Time:
      return match({{"s", 1.0}, {"ms", 1.0e-3}});
    case Dim::Mass:
      return match({{"kg", 1.0}, {"t", 1.0e3}});
    case Dim::Inertia:
      return match({{"kg.m2", 1.0}});
    case Dim::Pressure:
      return match({{"Pa", 1.0}, {"kPa", 1.0e3}, {"MPa", 1.0e6}, {"bar", 1.0e5}});
    case Dim::Length:
      return match({{"m", 1.0}, {"mm", 1.0e-3}});
    case Dim::Area:
      return match({{"m2", 1.0}, {"cm2", 1.0e-4}});
    case Dim::Displacement:
      return match({{"m3/rev", 1.0}, {"cm3/rev", 1.0e-6}, {"l/rev", 1.0e-3}});
    case Dim::Velocity:
      return match({{"m/s", 1.0}, {"km/h", 1.0 / 3.6}});
    case Dim::Force:
      return match({{"N", 1.0}, {"kN", 1.0e3}});
    case Dim::ForcePerLen:
      return match({{"N/m", 1.0}, {"kN/m", 1.0e3}});
    case Dim::ForcePerLen2:
      return match({{"N/m2", 1.0}, {"kN/m2", 1.0e3}});
    case Dim::MassPerLen:
      return match({{"kg/m", 1.0}});
    case Dim::GovernorGain:
      return match({{"s/rad", 1.0}});
  }
  throw SpecError(keypath, "unhandled dimension");
}

// Typed, unit-checked access into a parsed tree.
class View {
 public:
  View(const ConfigNode& node, std::string path, std::string basedir)
      : node_(&node), path_(std::move(path)), basedir_(std::move(basedir)) {}

  View section(const std::string& name) const {
    auto it = node_->sections.find(name);
    if (it == node_->sections.end()) throw SpecError(join(name), "missing section");
    return View(*it->second, join(name), basedir_);
  }

  bool has_section(const std::string& name) const { return node_->sections.count(name) != 0; }
  bool has_scalar(const std::string& name) const { return node_->scalars.count(name) != 0; }

  double get(const std::string& name, Dim dim) const {
    auto it = node_->scalars.find(name);
    if (it == node_->scalars.end()) throw SpecError(join(name), "missing value");
    return convert_unit(join(name), dim, it->second.value, it->second.unit);
  }

  double get_or(const std::string& name, Dim dim, double fallback) const {
    auto it = node_->scalars.find(name);
    if (it == node_->scalars.end()) return fallback;
    return convert_unit(join(name), dim, it->second.value, it->second.unit);
  }

  bool get_bool(const std::string& name, bool fallback) const {
    auto it = node_->bools.find(name);
    return it == node_->bools.end() ? fallback : it->second;
  }

  int get_int(const std::string& name, int fallback) const {
    auto it = node_->scalars.find(name);
    if (it == node_->scalars.end()) return fallback;
    double v = convert_unit(join(name), Dim::Dimensionless, it->second.value, it->second.unit);
    return static_cast<int>(v + (v >= 0 ? 0.5 : -0.5));
  }

  std::vector<double> get_list(const std::string& name) const {
    auto it = node_->lists.find(name);
    if (it == node_->lists.end()) throw SpecError(join(name), "missing list");
    return it->second;
  }

  // Table rows either inline or via `file "relative/path.csv"`.
  std::vector<std::vector<double>> table(const std::string& name, std::size_t ncols) const {
    auto it = node_->sections.find(name);
    if (it == node_->sections.end()) throw SpecError(join(name), "missing table");
    const ConfigNode& t = *it->second;
    std::vector<std::vector<double>> rows = t.rows;
    auto fit = t.strings.find("file");
    if (fit != t.strings.end()) {
      std::string p = fit->second;
      if (!p.empty() && p[0] != '/' && !basedir_.empty()) p = basedir_ + "/" + p;
      auto data = csv::read_numeric_csv_file(p, ncols);
      rows = data.rows;
    }
    if (rows.empty()) throw SpecError(join(name), "empty table");
    for (const auto& r : rows)
      if (r.size() != ncols)
        throw SpecError(join(name), "expected " + std::to_string(ncols) + " columns");
    return rows;
  }

 private:
  std::string join(const std::string& name) const {
    return path_.empty() ? name : path_ + "." + name;
  }

  const ConfigNode* node_;
  std::string path_;
  std::string basedir_;
};

inline std::string dirname_of(const std::string& path) {
  auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

inline MachineLayout layout_from_view(const View& root) {
  MachineLayout L;

  View e = root.section("engine");
  {
    auto rows = e.table("torque_curve", 2);  // rpm, N*m
    std::vector<double> w, tq;
    for (auto& r : rows) {
      w.push_back(units::rpm_to_rad_s(r[0]));
      tq.push_back(r[1]);
    }
    L.engine.static_torque = LinearTable(std::move(w), std::move(tq), "engine.torque_curve");
    auto srows = e.table("smoke_limit", 2);  // boost fraction, torque fraction
    std::vector<double> b, f;
    for (auto& r : srows) {
      b.push_back(r[0]);
      f.push_back(r[1]);
    }
    L.engine.smoke_limit = LinearTable(std::move(b), std::move(f), "engine.smoke_limit");
    L.engine.inertia_j = e.get("inertia", Dim::Inertia);
    L.engine.turbo_tau = e.get("turbo_tau", Dim::Time);
    L.engine.low_idle = e.get("low_idle", Dim::AngularSpeed);
    L.engine.high_idle = e.get("high_idle", Dim::AngularSpeed);
    L.engine.governor_gain = e.get("governor_gain", Dim::GovernorGain);
    L.engine.stall_fraction = e.get_or("stall_fraction", Dim::Dimensionless, 0.8);
  }

  View c = root.section("converter");
  {
    auto rows = c.table("table", 3);  // nu, c, mu
    std::vector<double> nu, cap, mu;
    for (auto& r : rows) {
      nu.push_back(r[0]);
      cap.push_back(r[1]);
      mu.push_back(r[2]);
    }
    std::vector<double> nu2 = nu;
    L.converter.capacity = LinearTable(std::move(nu), std::move(cap), "converter.capacity");
    L.converter.torque_ratio = LinearTable(std::move(nu2), std::move(mu), "converter.torque_ratio");
    L.converter.scale = c.get_or("scale", Dim::Dimensionless, 1.0);
  }

  View t = root.section("transmission");
  L.transmission.gear_ratios = t.get_list("gear_ratios");
  L.transmission.efficiency = t.get("efficiency", Dim::Dimensionless);
  L.transmission.shift_lag = t.get("shift_lag", Dim::Time);

  View v = root.section("vehicle");
  L.vehicle.mass = v.get("mass", Dim::Mass);
  L.vehicle.wheel_radius = v.get("wheel_radius", Dim::Length);
  L.vehicle.rolling_coeff = v.get("rolling_coeff", Dim::Dimensionless);
  L.vehicle.mu_traction = v.get("mu_traction", Dim::Dimensionless);

  View p = root.section("pump");
  L.pump.d_max = p.get("d_max", Dim::Displacement);
  L.pump.tau_pump = p.get("tau", Dim::Time);
  L.pump.ls_margin = p.get("ls_margin", Dim::Pressure);
  L.pump.p_relief = p.get("p_relief", Dim::Pressure);
  L.pump.mech_eff = p.get("mech_eff", Dim::Dimensionless);
  L.pump.drive_ratio = p.get_or("drive_ratio", Dim::Dimensionless, 1.0);

  auto cylinder = [&](const char* name) {
    View cy = root.section(name);
    CylinderSpec s;
    s.area_head = cy.get("area_head", Dim::Area);
    s.area_rod = cy.get("area_rod", Dim::Area);
    s.stroke = cy.get("stroke", Dim::Length);
    return s;
  };
  L.lift_cylinder = cylinder("lift_cylinder");
  L.tilt_cylinder = cylinder("tilt_cylinder");

  View lk = root.section("linkage");
  {
    auto lrows = lk.table("lift_ratio", 2);
    std::vector<double> x, r;
    for (auto& row : lrows) {
      x.push_back(row[0]);
      r.push_back(row[1]);
    }
    L.linkage.lift_ratio = LinearTable(std::move(x), std::move(r), "linkage.lift_ratio");
    auto trows = lk.table("tilt_ratio", 2);
    std::vector<double> x2, r2;
    for (auto& row : trows) {
      x2.push_back(row[0]);
      r2.push_back(row[1]);
    }
    L.linkage.tilt_ratio = LinearTable(std::move(x2), std::move(r2), "linkage.tilt_ratio");
    L.linkage.arm_equiv_mass = lk.get("arm_equiv_mass", Dim::Mass);
    L.linkage.max_payload = lk.get("max_payload", Dim::Mass);
  }

  L.validate();
  return L;
}

inline MachineLayout load_layout(const std::string& path) {
  ConfigNode root = parse_config_file(path);
  return layout_from_view(View(root, "", dirname_of(path)));
}

inline Scenario scenario_from_view(const View& root) {
  Scenario s;

  View sim = root.section("sim");
  s.sim.dt = sim.get("dt", Dim::Time);
  s.sim.t_end = sim.get("t_end", Dim::Time);
  s.sim.record_stride = sim.get_int("record_stride", 1);

  View op = root.section("operator");
  s.op.reversal_time = op.get_or("reversal_time", Dim::Time, 2.0);
  s.op.lift_during_reverse = op.get_bool("lift_during_reverse", true);
  s.op.throttle_drop_speed = op.get("throttle_drop", Dim::AngularSpeed);
  s.op.throttle_high_speed = op.get_or("throttle_high", Dim::AngularSpeed, 0.0);
  s.op.throttle_idle_speed = op.get_or("throttle_idle", Dim::AngularSpeed, 0.0);
  s.op.contact_depth = op.get("contact_depth", Dim::Length);
  s.op.fill_payload = op.get("fill_payload", Dim::Mass);
  s.op.dump_height = op.get("dump_height", Dim::Length);
  s.op.approach_distance = op.get("approach_distance", Dim::Length);
  s.op.reverse_distance = op.get("reverse_distance", Dim::Length);
  s.op.tilt_burst = op.get_or("tilt_burst", Dim::Time, 0.6);
  s.op.lift_burst = op.get_or("lift_burst", Dim::Time, 0.6);

  View pile = root.section("pile");
  s.pile.k0 = pile.get("k0", Dim::Force);
  s.pile.k1 = pile.get("k1", Dim::ForcePerLen);
  s.pile.k2 = pile.get("k2", Dim::ForcePerLen2);
  s.pile.vert_frac = pile.get("vert_frac", Dim::Dimensionless);
  s.pile.fill_rate = pile.get("fill_rate", Dim::MassPerLen);
  s.pile.pile_face_x = pile.get("face_x", Dim::Length);

  View rev = root.section("reversal");
  s.reversal.v_back = rev.get("v_back", Dim::Velocity);
  s.reversal.omega_engine = rev.get("omega_engine", Dim::AngularSpeed);
  s.reversal.assume_max_hydraulics = rev.get_bool("assume_max_hydraulics", true);
  s.reversal.reversal_time = rev.get_or("reversal_time", Dim::Time, s.op.reversal_time);
  s.reversal.marginal_band = rev.get_or("marginal_band", Dim::Dimensionless, 0.15);

  return s;
}

inline Scenario load_scenario(const std::string& path) {
  ConfigNode root = parse_config_file(path);
  return scenario_from_view(View(root, "", dirname_of(path)));
}

}  // namespace loadsim::config
