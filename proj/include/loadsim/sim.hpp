#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "loadsim/error.hpp"

namespace loadsim {

struct SimConfig {
  double dt = 1.0e-3;      // s
  double t_end = 0.0;      // s
  int record_stride = 1;   // trace every Nth step

  void validate() const {
    if (!(dt > 0.0)) throw SpecError("sim.dt", "must be > 0");
    if (!(t_end >= dt)) throw SpecError("sim.t_end", "must be >= dt");
    if (record_stride < 1) throw SpecError("sim.record_stride", "must be >= 1");
  }
};

// A named scalar transfer variable with exactly one producing module.
struct Port {
  std::string name;
  double value = 0.0;
  std::string unit;
  int producer = -1;  // module id
};

// Single-buffer port registry: a module reading a port gets the value written
// earlier in the same step, or the previous step's value if its producer has
// not run yet this step (one-step-delayed coupling).
class PortBus {
 public:
  int register_port(const std::string& name, const std::string& unit, int producer,
                    double initial) {
    auto it = index_.find(name);
    if (it != index_.end()) {
      if (ports_[it->second].producer >= 0 && producer >= 0)
        throw SpecError("port." + name, "duplicate producer: " + name);
      if (producer >= 0) {
        ports_[it->second].producer = producer;
        ports_[it->second].unit = unit;
        ports_[it->second].value = initial;
      }
      return static_cast<int>(it->second);
    }
    Port p{name, initial, unit, producer};
    ports_.push_back(std::move(p));
    std::size_t id = ports_.size() - 1;
    index_.emplace(name, id);
    return static_cast<int>(id);
  }

  int lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw SpecError("port." + name, "unknown port");
    return static_cast<int>(it->second);
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  double get(int id) const { return ports_[static_cast<std::size_t>(id)].value; }
  void set(int id, double v) { ports_[static_cast<std::size_t>(id)].value = v; }

  const Port& port(int id) const { return ports_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return ports_.size(); }

 private:
  std::vector<Port> ports_;
  std::map<std::string, std::size_t> index_;
};

struct PortDecl {
  std::string name;
  std::string unit;
  double initial = 0.0;
};

// A simulation module: declares its ports, then advances one step at a time
// reading and writing only through the bus.
class Module {
 public:
  virtual ~Module() = default;
  virtual const char* name() const = 0;
  virtual std::vector<PortDecl> input_ports() const = 0;
  virtual std::vector<PortDecl> output_ports() const = 0;
  virtual void bind(PortBus& bus) = 0;  // resolve port ids once registered
  virtual void step(PortBus& bus, double t, double dt) = 0;
};

struct TraceRow {
  double t = 0.0;
  std::vector<double> values;
};

struct Trace {
  std::vector<std::string> columns;  // excludes the leading time column
  std::vector<TraceRow> rows;

  int column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    throw SpecError("trace." + name, "unknown trace column");
  }

  double value(std::size_t row, int col) const {
    return rows[row].values[static_cast<std::size_t>(col)];
  }
};

// Fixed-step sequential master: modules execute once per step in registration
// order; output finiteness is enforced after every module.
class Simulation {
 public:
  explicit Simulation(SimConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  int register_module(std::unique_ptr<Module> mod) {
    const int id = static_cast<int>(modules_.size());
    for (const PortDecl& d : mod->output_ports()) {
      if (produced_.count(d.name))
        throw SpecError("module." + std::string(mod->name()), "duplicate producer: " + d.name);
      produced_.insert(d.name);
      bus_.register_port(d.name, d.unit, id, d.initial);
    }
    for (const PortDecl& d : mod->input_ports())
      bus_.register_port(d.name, d.unit, -1, d.initial);
    modules_.push_back(std::move(mod));
    return id;
  }

  // Every consumed port must have exactly one producer before stepping.
  void check_wiring() const {
    for (const auto& m : modules_)
      for (const PortDecl& d : m->input_ports())
        if (!produced_.count(d.name))
          throw SpecError("module." + std::string(m->name()), "input port has no producer: " + d.name);
  }

  void bind_all() {
    check_wiring();
    out_ids_.clear();
    for (auto& m : modules_) {
      m->bind(bus_);
      std::vector<int> ids;
      for (const PortDecl& d : m->output_ports()) ids.push_back(bus_.lookup(d.name));
      out_ids_.push_back(std::move(ids));
    }
    bound_ = true;
  }

  void step_all(double t, double dt) {
    if (!bound_) bind_all();
    for (std::size_t i = 0; i < modules_.size(); ++i) {
      Module& m = *modules_[i];
      m.step(bus_, t, dt);
      for (int id : out_ids_[i]) {
        if (!std::isfinite(bus_.get(id)))
          throw SimHalt(m.name(), bus_.port(id).name, t, "non-finite port value");
      }
    }
  }

  // Run to t_end, recording the selected columns every record_stride steps.
  // Row k holds the start-of-step snapshot of step k*stride.
  Trace run(const std::vector<std::string>& trace_columns) {
    if (!bound_) bind_all();
    Trace trace;
    trace.columns = trace_columns;
    std::vector<int> ids;
    ids.reserve(trace_columns.size());

    const auto steps = static_cast<long long>(cfg_.t_end / cfg_.dt + 0.5);
    for (long long k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * cfg_.dt;
      step_all(t, cfg_.dt);
      if (k % cfg_.record_stride == 0) {
        if (ids.empty())
          for (const auto& c : trace_columns) ids.push_back(bus_.lookup(c));
        TraceRow row;
        row.t = t;
        row.values.reserve(ids.size());
        for (int id : ids) row.values.push_back(bus_.get(id));
        trace.rows.push_back(std::move(row));
      }
    }
    return trace;
  }

  PortBus& bus() { return bus_; }
  const PortBus& bus() const { return bus_; }
  std::size_t module_count() const { return modules_.size(); }
  const SimConfig& config() const { return cfg_; }

 private:
  SimConfig cfg_;
  PortBus bus_;
  std::vector<std::unique_ptr<Module>> modules_;
  std::vector<std::vector<int>> out_ids_;
  std::set<std::string> produced_;
  bool bound_ = false;
};

}  // namespace loadsim
