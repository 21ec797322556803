#include <doctest.h>

#include <cmath>

#include "loadsim/loading_unit.hpp"
#include "test_support.hpp"

using namespace loadsim;

namespace {

LinkageSpec test_linkage() {
  LinkageSpec l;
  l.lift_ratio = LinearTable({0.0, 0.8}, {2.0, 2.0}, "linkage.lift_ratio");
  l.tilt_ratio = LinearTable({0.0, 0.5}, {1.25, 1.25}, "linkage.tilt_ratio");
  l.arm_equiv_mass = 2000.0;
  l.max_payload = 6000.0;
  return l;
}

PileSpec test_pile() {
  PileSpec p;
  p.k0 = 5000.0;
  p.k1 = 40000.0;
  p.k2 = 100000.0;
  p.vert_frac = 0.25;
  p.fill_rate = 4000.0;
  p.pile_face_x = 10.0;
  return p;
}

}  // namespace

TEST_CASE("lift load force by hand") {
  // (0 + 2000) * 9.81 * 2.0 = 39240 N.
  LinkageSpec l = test_linkage();
  CHECK(lift_load_force(l, 0.4, 0.0) == doctest::Approx(39240.0).epsilon(1e-12));
}

TEST_CASE("lift load force is linear in carried mass") {
  LinkageSpec l = test_linkage();
  double f1 = lift_load_force(l, 0.2, 2000.0);  // payload + arm = 4000
  double f2 = lift_load_force(l, 0.2, 6000.0);  // payload + arm = 8000
  CHECK(f2 == doctest::Approx(2.0 * f1).epsilon(1e-12));
}

TEST_CASE("full bucket loads the lift circuit harder than an empty one") {
  const LinkageSpec& l = ts::nominal_layout().linkage;
  for (double x : {0.0, 0.3, 0.8})
    CHECK(lift_load_force(l, x, l.max_payload) > lift_load_force(l, x, 0.0));
}

TEST_CASE("pile resistance") {
  PileSpec p = test_pile();
  auto none = pile_resistance(p, 0.0);
  CHECK(none.horizontal == doctest::Approx(0.0));
  CHECK(none.vertical == doctest::Approx(0.0));

  // 5000 + 40000*0.5 + 100000*0.25 = 50000 N.
  auto f = pile_resistance(p, 0.5);
  CHECK(f.horizontal == doctest::Approx(50000.0).epsilon(1e-12));
  CHECK(f.vertical == doctest::Approx(0.25 * 50000.0).epsilon(1e-12));
}

TEST_CASE("pile resistance strictly increases with depth") {
  PileSpec p = test_pile();
  double prev = 0.0;
  for (double d = 0.1; d <= 1.5; d += 0.1) {
    double f = pile_resistance(p, d).horizontal;
    CHECK(f > prev);
    prev = f;
  }
}

TEST_CASE("bucket fill accumulates only while tilting during advance") {
  PileSpec p = test_pile();
  LinkageSpec l = test_linkage();
  BucketState b;
  b.depth = 0.3;

  BucketState same = bucket_fill_step(p, l, b, 10.3, 0.0, true, 1e-3);
  CHECK(same.payload == doctest::Approx(0.0));

  BucketState idle = bucket_fill_step(p, l, b, 10.3, 0.5, false, 1e-3);
  CHECK(idle.payload == doctest::Approx(0.0));

  // fill_rate 4000 kg/m * 0.5 m = 2000 kg.
  BucketState fed = bucket_fill_step(p, l, b, 10.3, 0.5, true, 1e-3);
  CHECK(fed.payload == doctest::Approx(2000.0).epsilon(1e-12));

  // Clamp at max payload.
  BucketState full = fed;
  for (int i = 0; i < 10; ++i) full = bucket_fill_step(p, l, full, 10.3, 0.5, true, 1e-3);
  CHECK(full.payload == doctest::Approx(l.max_payload));
}

TEST_CASE("depth follows position against the pile face") {
  PileSpec p = test_pile();
  LinkageSpec l = test_linkage();
  BucketState b;
  b = bucket_fill_step(p, l, b, 10.6, 0.0, false, 1e-3);
  CHECK(b.depth == doctest::Approx(0.6));
  b = bucket_fill_step(p, l, b, 9.0, 0.0, false, 1e-3);
  CHECK(b.depth == doctest::Approx(0.0));
}

TEST_CASE("lift load force is continuous in extension") {
  const LinkageSpec& l = ts::nominal_layout().linkage;
  // Slope bound from the table segments: mass * g * max |dr/dx| per metre.
  double payload = 4000.0;
  double max_slope = (payload + l.arm_equiv_mass) * units::kGravity * 0.125 * 1.01;
  for (double x = -0.1; x < 0.95; x += 0.001) {
    double f1 = lift_load_force(l, x, payload);
    double f2 = lift_load_force(l, x + 0.001, payload);
    CHECK(std::abs(f2 - f1) <= max_slope * 0.001 + 1e-9);
  }
}
