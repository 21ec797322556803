#pragma once

#include <stdexcept>
#include <string>

namespace loadsim {

// A layout/scenario/file value violates its declared contract. `field` names
// the offending entry (e.g. "pump.p_relief") so the CLI can report it.
class SpecError : public std::runtime_error {
 public:
  SpecError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// The running simulation must stop: a module produced a non-finite port
// value or an internal state became invalid.
class SimHalt : public std::runtime_error {
 public:
  SimHalt(std::string module, std::string port, double t, const std::string& what)
      : std::runtime_error("halt in module '" + module + "', port '" + port +
                           "' at t=" + std::to_string(t) + " s: " + what),
        module_(std::move(module)),
        port_(std::move(port)),
        t_(t) {}

  const std::string& module() const { return module_; }
  const std::string& port() const { return port_; }
  double time() const { return t_; }

 private:
  std::string module_;
  std::string port_;
  double t_;
};

}  // namespace loadsim
