#pragma once

#include "loadsim/driveline.hpp"
#include "loadsim/engine.hpp"
#include "loadsim/hydraulics.hpp"
#include "loadsim/loading_unit.hpp"

namespace loadsim {

// The full candidate design a screening run accepts or rejects.
struct MachineLayout {
  EngineSpec engine;
  ConverterSpec converter;
  TransmissionSpec transmission;
  VehicleSpec vehicle;
  PumpSpec pump;
  CylinderSpec lift_cylinder;
  CylinderSpec tilt_cylinder;
  LinkageSpec linkage;

  void validate() const {
    engine.validate();
    converter.validate();
    transmission.validate();
    vehicle.validate();
    pump.validate();
    lift_cylinder.validate("lift_cylinder");
    tilt_cylinder.validate("tilt_cylinder");
    linkage.validate();
  }
};

// Reversal-phase worst case: machine rolling backwards at v_back when the
// forward gear is engaged, engine at omega_engine.
struct ReversalScenario {
  double v_back = 0.0;        // m/s, < 0
  double omega_engine = 0.0;  // rad/s
  bool assume_max_hydraulics = true;
  double reversal_time = 2.0;   // s, sets the bench acceleration rate
  double marginal_band = 0.15;  // "considerably larger" margin on the dynamic curve

  void validate(const EngineSpec& engine) const {
    if (!(v_back < 0.0)) throw SpecError("reversal.v_back", "must be < 0");
    if (!(omega_engine >= engine.low_idle && omega_engine <= engine.high_idle))
      throw SpecError("reversal.omega_engine", "must lie in [low_idle, high_idle]");
    if (!(reversal_time > 0.0)) throw SpecError("reversal.reversal_time", "must be > 0");
    if (!(marginal_band > 0.0 && marginal_band < 1.0))
      throw SpecError("reversal.marginal_band", "must be in (0,1)");
  }
};

}  // namespace loadsim
