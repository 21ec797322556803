#include <doctest.h>

#include <vector>

#include "loadsim/operator.hpp"
#include "loadsim/units.hpp"
#include "test_support.hpp"

using namespace loadsim;
using units::rpm_to_rad_s;

namespace {

OperatorParams test_params() {
  OperatorParams p;
  p.reversal_time = 2.0;
  p.lift_during_reverse = true;
  p.throttle_drop_speed = rpm_to_rad_s(1000);
  p.throttle_high_speed = rpm_to_rad_s(2200);
  p.throttle_idle_speed = rpm_to_rad_s(800);
  p.contact_depth = 0.05;
  p.fill_payload = 5000.0;
  p.dump_height = 0.55;
  p.approach_distance = 8.0;
  p.reverse_distance = 2.5;
  return p;
}

Controls step_once(const OperatorParams& p, OperatorState& s, const Observations& obs) {
  auto [next, c] = operator_step(p, s, obs, 1e-3);
  s = next;
  return c;
}

}  // namespace

TEST_CASE("full bucket ends the fill phase with a reverse request") {
  OperatorParams p = test_params();
  OperatorState s;
  s.phase = Phase::Fill;
  Observations obs;
  obs.depth = 0.4;
  obs.payload = p.fill_payload;
  step_once(p, s, obs);
  CHECK(s.phase == Phase::RetreatReverse);
  Controls c = step_once(p, s, obs);
  CHECK(c.direction_request == Direction::Reverse);
}

TEST_CASE("operators who keep lifting hold the lever through the direction change") {
  OperatorParams p = test_params();
  OperatorState s;
  s.phase = Phase::DirectionChange;
  Observations obs;
  obs.v = -1.8;
  obs.omega = rpm_to_rad_s(1600);
  Controls c = step_once(p, s, obs);
  CHECK(c.lift_lever == doctest::Approx(1.0));

  OperatorParams p2 = test_params();
  p2.lift_during_reverse = false;
  OperatorState s2;
  s2.phase = Phase::DirectionChange;
  Controls c2 = step_once(p2, s2, obs);
  CHECK(c2.lift_lever == doctest::Approx(0.0));
}

TEST_CASE("direction change lowers the engine speed target") {
  OperatorParams p = test_params();
  OperatorState s;
  s.phase = Phase::DirectionChange;
  Observations obs;
  obs.v = -1.8;
  obs.omega = rpm_to_rad_s(2100);
  Controls c = step_once(p, s, obs);
  CHECK(c.throttle_target == doctest::Approx(p.throttle_drop_speed));
  CHECK(c.throttle_target < p.throttle_high_speed);
  // Still reversing until the engine has come down.
  CHECK(c.direction_request == Direction::Reverse);

  obs.omega = p.throttle_drop_speed;
  c = step_once(p, s, obs);
  CHECK(c.direction_request == Direction::Forward);  // engage while rolling back
  CHECK(obs.v < 0.0);
}

TEST_CASE("phases advance strictly in cycle order over a scripted cycle") {
  OperatorParams p = test_params();
  OperatorState s;
  Observations obs;
  obs.omega = rpm_to_rad_s(2200);

  std::vector<Phase> seen{s.phase};
  auto drive = [&](int max_steps, auto update) {
    for (int i = 0; i < max_steps; ++i) {
      Phase before = s.phase;
      update(obs, i);
      step_once(p, s, obs);
      if (s.phase != before) {
        CHECK(static_cast<int>(s.phase) == static_cast<int>(before) + 1);
        seen.push_back(s.phase);
        return;
      }
    }
    FAIL("phase never advanced");
  };

  // Approach: position closes on the pile.
  drive(20000, [&](Observations& o, int i) {
    o.position = 0.002 * i;
    o.depth = o.position > 10.0 ? o.position - 10.0 : 0.0;
  });
  CHECK(s.phase == Phase::Fill);

  drive(20000, [&](Observations& o, int i) { o.payload = 0.5 * i; o.v = 0.1; });
  CHECK(s.phase == Phase::RetreatReverse);

  drive(20000, [&](Observations& o, int i) { o.position = 10.0 - 0.001 * i; o.v = -1.0; });
  CHECK(s.phase == Phase::DirectionChange);

  drive(20000, [&](Observations& o, int i) {
    o.omega = rpm_to_rad_s(1000);
    o.v = -1.5 + 0.001 * i;
  });
  CHECK(s.phase == Phase::ApproachReceiver);

  drive(20000, [&](Observations& o, int i) {
    o.v = 1.0;
    o.position = 7.5 + 0.002 * i;
    o.lift_height = std::min(0.6, 0.001 * i);
  });
  CHECK(s.phase == Phase::Dump);

  drive(20000, [&](Observations& o, int i) { o.payload = std::max(0.0, 5000.0 - 3.0 * i); });
  CHECK(s.phase == Phase::ReturnReverse);

  drive(20000, [&](Observations& o, int i) { o.position = 23.5 - 0.002 * i; o.v = -1.0; });
  CHECK(s.phase == Phase::Done);

  CHECK(seen.size() == 8);
}

TEST_CASE("controls stay within their declared ranges") {
  OperatorParams p = test_params();
  ts::Rng rng(23);
  OperatorState s;
  for (int i = 0; i < 5000; ++i) {
    Observations obs;
    obs.v = rng.uniform(-3.0, 3.0);
    obs.payload = rng.uniform(0.0, 6000.0);
    obs.depth = rng.uniform(0.0, 1.0);
    obs.lift_height = rng.uniform(0.0, 0.8);
    obs.position = rng.uniform(-5.0, 25.0);
    obs.omega = rng.uniform(60.0, 240.0);
    Controls c = step_once(p, s, obs);
    CHECK(c.lift_lever >= 0.0);
    CHECK(c.lift_lever <= 1.0);
    CHECK(c.tilt_lever >= -1.0);
    CHECK(c.tilt_lever <= 1.0);
    CHECK(c.brake >= 0.0);
    CHECK(c.brake <= 1.0);
    CHECK(c.throttle_target >= 0.0);
  }
}

TEST_CASE("identical observation sequences give identical control sequences") {
  OperatorParams p = test_params();
  ts::Rng rng1(5), rng2(5);
  OperatorState s1, s2;
  for (int i = 0; i < 2000; ++i) {
    Observations o1, o2;
    o1.v = o2.v = rng1.uniform(-2.0, 2.0);
    (void)rng2.uniform(-2.0, 2.0);
    o1.payload = o2.payload = 100.0 * (i % 60);
    o1.depth = o2.depth = 0.3;
    o1.omega = o2.omega = 150.0;
    Controls c1 = step_once(p, s1, o1);
    Controls c2 = step_once(p, s2, o2);
    CHECK(c1.throttle_target == c2.throttle_target);
    CHECK(c1.lift_lever == c2.lift_lever);
    CHECK(c1.tilt_lever == c2.tilt_lever);
    CHECK(dir_sign(c1.direction_request) == dir_sign(c2.direction_request));
  }
}

TEST_CASE("corrupted phase is rejected") {
  OperatorParams p = test_params();
  OperatorState s;
  s.phase = static_cast<Phase>(99);
  Observations obs;
  CHECK_THROWS_AS(operator_step(p, s, obs, 1e-3), std::runtime_error);
}

TEST_CASE("non-finite observations are rejected") {
  OperatorParams p = test_params();
  OperatorState s;
  Observations obs;
  obs.v = std::nan("");
  CHECK_THROWS_AS(operator_step(p, s, obs, 1e-3), std::runtime_error);
}
