#include <doctest.h>

#include <cmath>

#include "loadsim/hydraulics.hpp"
#include "test_support.hpp"

using namespace loadsim;

namespace {

PumpSpec test_pump() {
  PumpSpec p;
  p.d_max = 2.0e-4;
  p.tau_pump = 0.1;
  p.ls_margin = 2.0e6;
  p.p_relief = 2.0e7;
  p.mech_eff = 0.9;
  p.drive_ratio = 1.0;
  return p;
}

}  // namespace

TEST_CASE("pump torque proportionality") {
  PumpSpec p = test_pump();
  CHECK(pump_torque(p, 0.0, 1.0e7) == doctest::Approx(0.0));
  double t1 = pump_torque(p, 0.7, 1.0e7);
  CHECK(pump_torque(p, 0.7, 2.0e7) == doctest::Approx(2.0 * t1).epsilon(1e-12));
}

TEST_CASE("pump torque by hand: 200 cm3 at 20 MPa") {
  // 1 * 2e-4 * 2e7 / (2*pi*0.9) = 4000 / 5.65487 = 707.355 N*m.
  PumpSpec p = test_pump();
  CHECK(pump_torque(p, 1.0, 2.0e7) == doctest::Approx(707.355).epsilon(1e-4));
}

TEST_CASE("zero flow demand lets the displacement decay") {
  PumpSpec p = test_pump();
  double eps = 0.8;
  for (int i = 0; i < 100; ++i) eps = ls_control_step(p, eps, 0.0, 150.0, 1e-3).eps;
  CHECK(eps < 0.8);
  for (int i = 0; i < 5000; ++i) eps = ls_control_step(p, eps, 0.0, 150.0, 1e-3).eps;
  CHECK(eps < 1e-6);
}

TEST_CASE("low shaft speed with high demand saturates the displacement") {
  PumpSpec p = test_pump();
  // 50 rad/s -> ~8 rev/s; demand far above d_max * n forces eps -> 1.
  double eps = 0.0;
  for (int i = 0; i < 2000; ++i) eps = ls_control_step(p, eps, 1.0, 50.0, 1e-3).eps;
  CHECK(eps > 0.99);
}

TEST_CASE("displacement lag follows the first-order response") {
  PumpSpec p = test_pump();  // tau 0.1 s
  double eps = 0.0;
  for (int i = 0; i < 100; ++i) eps = ls_control_step(p, eps, 1.0, 50.0, 1e-3).eps;
  CHECK(eps == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-4));
}

TEST_CASE("delivered flow matches displacement and shaft speed") {
  PumpSpec p = test_pump();
  auto r = ls_control_step(p, 1.0, 1.0, 150.0, 1e-3);
  double n = 150.0 / (2.0 * units::kPi);
  CHECK(r.delivered_flow == doctest::Approx(r.eps * p.d_max * n).epsilon(1e-12));
}

TEST_CASE("cylinder pressure from load, zero flow keeps it parked") {
  PumpSpec p = test_pump();
  CylinderSpec c{0.02, 0.01, 1.0};
  auto r = cylinder_step(p, c, 0.3, 0.0, 100000.0, 1e-3);
  CHECK(r.extension == doctest::Approx(0.3));
  CHECK(r.pressure == doctest::Approx(100000.0 / 0.02 + p.ls_margin));
}

TEST_CASE("relief clamp stops motion") {
  PumpSpec p = test_pump();
  CylinderSpec c{0.02, 0.01, 1.0};
  // load/area + margin > relief.
  double heavy = (p.p_relief - p.ls_margin) * c.area_head * 1.5;
  auto r = cylinder_step(p, c, 0.3, 0.01, heavy, 1e-3);
  CHECK(r.pressure == doctest::Approx(p.p_relief));
  CHECK(r.extension == doctest::Approx(0.3));
}

TEST_CASE("extension rate equals flow over area") {
  PumpSpec p = test_pump();
  CylinderSpec c{0.02, 0.01, 1.0};
  double x = 0.0;
  for (int i = 0; i < 1000; ++i) x = cylinder_step(p, c, x, 0.002, 1000.0, 1e-3).extension;
  CHECK(x == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("end stops ignore the flow") {
  PumpSpec p = test_pump();
  CylinderSpec c{0.02, 0.01, 0.5};
  auto r = cylinder_step(p, c, 0.4999, 1.0, 0.0, 1.0);
  CHECK(r.extension == doctest::Approx(0.5));
}

TEST_CASE("state stays inside its box under random inputs") {
  PumpSpec p = test_pump();
  CylinderSpec c{0.02, 0.01, 0.8};
  ts::Rng rng(11);
  double eps = 0.0, x = 0.1;
  for (int i = 0; i < 5000; ++i) {
    auto ls = ls_control_step(p, eps, rng.uniform(0.0, 0.02), rng.uniform(0.0, 250.0), 1e-3);
    eps = ls.eps;
    auto cy = cylinder_step(p, c, x, ls.delivered_flow, rng.uniform(0.0, 5.0e5), 1e-3);
    x = cy.extension;
    CHECK(eps >= 0.0);
    CHECK(eps <= 1.0);
    CHECK(cy.pressure <= p.p_relief + 1e-9);
    CHECK(x >= 0.0);
    CHECK(x <= c.stroke);
  }
}

TEST_CASE("pump torque is jointly monotone in displacement and pressure") {
  PumpSpec p = test_pump();
  ts::Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    double e1 = rng.uniform(0.0, 1.0), e2 = rng.uniform(e1, 1.0);
    double q1 = rng.uniform(0.0, p.p_relief), q2 = rng.uniform(q1, p.p_relief);
    CHECK(pump_torque(p, e1, q1) <= pump_torque(p, e2, q2) + 1e-12);
  }
}
