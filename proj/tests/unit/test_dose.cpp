#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support.hpp"
#include "uvcplan/dose.hpp"
#include "uvcplan/error.hpp"
#include "uvcplan/planner.hpp"

using namespace uvcplan;

namespace {

Trajectory hold(Vec2 p, double heading, double seconds) {
  Trajectory t;
  t.id = "static";
  t.poses = {Pose{p, heading, 0.0}, Pose{p, heading, seconds}};
  return t;
}

// Drive, turn in place and drive on: the shapes the planner emits.
Trajectory l_turn(Vec2 start, double leg) {
  MotionProfile m;
  return build_trajectory({start, start + Vec2{leg, 0.0}, start + Vec2{leg, leg}}, m, 0.0, std::nullopt, "L");
}

double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s > 0.0 ? std::abs(a - b) / s : 0.0;
}

}  // namespace

TEST_SUITE("dose") {

TEST_CASE("lamp_mask") {
  const SafetyPolicy policy;
  const Pose robot{{0.0, 0.0}, 0.0, 0.0};
  SUBCASE("no humans") { CHECK(lamp_mask(robot, {}, policy) == BankMask{true, true}); }
  SUBCASE("human on the left disables the left bank") {
    const std::vector<Vec2> h{{0.0, 0.5}};
    CHECK(lamp_mask(robot, h, policy) == BankMask{false, true});
  }
  SUBCASE("human on the right disables the right bank") {
    const std::vector<Vec2> h{{-1.0, -2.0}};
    CHECK(lamp_mask(robot, h, policy) == BankMask{true, false});
  }
  SUBCASE("human on the axis disables both") {
    const std::vector<Vec2> h{{1.0, 0.0}};
    CHECK(lamp_mask(robot, h, policy) == BankMask{false, false});
  }
  SUBCASE("humans beyond the radius are ignored") {
    const std::vector<Vec2> h{{0.0, 3.01}, {-3.5, 0.0}};
    CHECK(lamp_mask(robot, h, policy) == BankMask{true, true});
  }
  SUBCASE("sides follow the robot heading") {
    const Pose turned{{1.0, 1.0}, std::numbers::pi / 2, 0.0};
    const std::vector<Vec2> h{{0.0, 1.0}};  // facing +y, the left side is -x
    CHECK(lamp_mask(turned, h, policy) == BankMask{false, true});
  }
}

TEST_CASE("static 600 s at the 400 µW/cm² cell gives 240 mJ/cm²") {
  const Scene s = load_scene(test::data_path("static_room.scene"));
  const IrradianceModel m = test::default_model(s.robot);
  const DoseMap d = accumulate(s, hold(s.robot_pose->position, 0.0, 600.0), m);
  const auto cell = s.grid.world_to_cell({0.0, 1.2});
  REQUIRE(cell);
  CHECK(d.dose.at(cell->i, cell->j) == doctest::Approx(240.0).epsilon(1e-9));
  CHECK(d.duration == 600.0);
  CHECK(d.lamp_energy_wh == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(d.left_on_time == doctest::Approx(600.0));
  REQUIRE(d.mask_history.size() == 1);
  CHECK(d.mask_history[0].left_on);
}

TEST_CASE("zero-duration window gives an all-zero map") {
  const Scene s = Scene::empty_room(4.0, 4.0, 0.2);
  const IrradianceModel m = test::default_model(s.robot);
  DoseOptions o;
  o.t_begin = 3.0;
  o.t_end = 3.0;
  Trajectory t = straight_pass(0.14, 2.0, 2.0);
  for (auto& p : t.poses) p.position.x += 2.0;
  const DoseMap z = accumulate(s, t, m, o);
  CHECK(z.duration == 0.0);
  for (double v : z.dose.values()) CHECK(v == 0.0);
  CHECK(z.lamp_energy_wh == 0.0);
}

TEST_CASE("trajectory through an obstacle is refused") {
  const Scene s = load_scene(test::data_path("room_4x6_obstacle.scene"));
  const IrradianceModel m = test::default_model(s.robot);
  MotionProfile p;
  const Trajectory t = build_trajectory({{2.0, 1.0}, {2.0, 5.0}}, p);
  CHECK_THROWS_AS(accumulate(s, t, m), ValidationError);
}

TEST_CASE("survival") {
  GridSpec g;
  g.width = 3;
  ScalarField d(g, Unit::dose);
  d.at(0, 0) = 0.0;
  d.at(1, 0) = 16.0;
  d.at(2, 0) = 32.0;
  const ScalarField s = survival(d, 16.0);
  CHECK(s.unit() == Unit::survival);
  CHECK(s.at(0, 0) == 1.0);
  CHECK(s.at(1, 0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s.at(2, 0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK_THROWS_AS(survival(d, 0.0), ValidationError);
}

TEST_CASE("calibrate_d90") {
  const RobotModel robot;
  const IrradianceModel m = test::default_model(robot);
  const double lp = robot.lamp_plane_offset();
  const CalibrationSetup setup;

  SUBCASE("frozen values against the closed-form quadrature") {
    // Full window geometry integrated analytically over the lamp length and
    // adaptively over the pass; see the notes on the irradiance oracle.
    CHECK(calibrate_d90(D90Mode::static_exposure, m, robot) == doctest::Approx(32.905647).epsilon(1e-3));
    CHECK(calibrate_d90(D90Mode::multipass, m, robot) == doctest::Approx(16.148892).epsilon(1e-3));
  }
  SUBCASE("static: 600 s at 2.8 m leaves exactly one log") {
    const double d90 = calibrate_d90(D90Mode::static_exposure, m, robot);
    const double d = point_dose(robot, hold({0.0, 0.0}, 0.0, 600.0), m, {0.0, lp + 2.8});
    CHECK(std::pow(10.0, -d / d90) == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("multipass: two passes, forward and back, leave one log") {
    const double d90 = calibrate_d90(D90Mode::multipass, m, robot);
    const Trajectory fwd = straight_pass(setup.pass_speed, setup.pass_length);
    Trajectory back = fwd;
    for (auto& p : back.poses) {
      p.position.x = -p.position.x;
      p.heading = std::numbers::pi;
    }
    const Vec2 target{0.0, lp + setup.pass_distance};
    const double d = point_dose(robot, fwd, m, target) + point_dose(robot, back, m, target);
    CHECK(std::abs(std::pow(10.0, -d / d90) - 0.1) <= 1e-6);
  }
  SUBCASE("doubling lamp power halves the exposure time") {
    RobotModel strong = robot;
    for (auto& b : strong.banks) b.per_lamp_power_at_1m *= 2.0;
    const double d90 = calibrate_d90(D90Mode::static_exposure, m, robot);
    const double d = point_dose(strong, hold({0.0, 0.0}, 0.0, 300.0), m, {0.0, lp + 2.8});
    CHECK(d == doctest::Approx(d90).epsilon(1e-12));
  }
  SUBCASE("uncalibrated model") {
    CHECK_THROWS_AS(calibrate_d90(D90Mode::multipass, IrradianceModel{}, robot), ValidationError);
  }
}

TEST_CASE("additivity over an aligned split") {
  const Scene s = Scene::empty_room(6.0, 6.0, 0.2);
  const IrradianceModel m = test::default_model(s.robot);
  const Trajectory t = l_turn({2.0, 2.0}, 1.5);
  const double half = 0.1 * std::round(t.duration() / 0.2);
  DoseOptions all;
  DoseOptions first;
  first.t_end = half;
  DoseOptions second;
  second.t_begin = half;
  const DoseMap a = accumulate(s, t, m, all);
  const DoseMap b = accumulate(s, t, m, first);
  const DoseMap c = accumulate(s, t, m, second);
  CHECK(b.duration + c.duration == doctest::Approx(a.duration).epsilon(1e-12));
  CHECK(b.lamp_energy_wh + c.lamp_energy_wh == doctest::Approx(a.lamp_energy_wh).epsilon(1e-12));
  double worst = 0.0;
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    if (a.dose.excluded(k)) continue;
    const double whole = a.dose.values()[k];
    const double parts = b.dose.values()[k] + c.dose.values()[k];
    worst = std::max(worst, std::abs(whole - parts) / std::max(1.0, whole));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("halving dt changes cells by less than 0.05%") {
  const Scene s = Scene::empty_room(6.0, 6.0, 0.2);
  const IrradianceModel m = test::default_model(s.robot);
  for (const Trajectory& t : {l_turn({1.5, 1.5}, 2.0), [] {
         Trajectory p = straight_pass(0.14, 4.0, 3.0);
         for (auto& q : p.poses) q.position.x += 3.0;
         return p;
       }()}) {
    DoseOptions coarse;
    DoseOptions fine;
    fine.dt = 0.05;
    const DoseMap a = accumulate(s, t, m, coarse);
    const DoseMap b = accumulate(s, t, m, fine);
    double worst = 0.0;
    for (std::size_t k = 0; k < s.grid.size(); ++k)
      if (!a.dose.excluded(k)) worst = std::max(worst, rel_diff(a.dose.values()[k], b.dose.values()[k]));
    CAPTURE(t.id);
    CHECK(worst < 5e-4);
  }
}

TEST_CASE("per-bank maps add up and masking zeroes a side") {
  Scene s = Scene::empty_room(6.0, 6.0, 0.2);
  HumanTrack h;
  h.id = "left";
  h.samples = {{0.0, {3.0, 4.5}}};
  const IrradianceModel m = test::default_model(s.robot);
  Trajectory t = straight_pass(0.14, 2.8, 3.0);
  for (auto& p : t.poses) p.position.x += 3.0;
  DoseOptions o;
  o.per_bank = true;
  o.record_steps = true;
  const DoseMap free_run = accumulate(s, t, m, o);
  s.humans.push_back(h);
  const DoseMap masked = accumulate(s, t, m, o);
  REQUIRE(masked.left);
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    CHECK(masked.left->values()[k] == 0.0);
    CHECK(masked.dose.values()[k] <= free_run.dose.values()[k]);
    CHECK(masked.right->values()[k] == free_run.right->values()[k]);
    CHECK(free_run.left->values()[k] + free_run.right->values()[k] ==
          doctest::Approx(free_run.dose.values()[k]).epsilon(1e-14));
  }
  CHECK(masked.left_on_time == 0.0);
  CHECK(masked.lamp_energy_wh == doctest::Approx(0.5 * free_run.lamp_energy_wh));
  for (const auto& st : masked.steps) CHECK_FALSE(st.mask.left);
}

TEST_CASE("human track produces side-off intervals") {
  Scene s = load_scene(test::data_path("room_4x6.scene"));
  s.humans = load_human_tracks(test::data_path("human_left.csv"));  // p1 at (2, 4) until 20 s
  const IrradianceModel m = test::default_model(s.robot);
  MotionProfile p;
  const Trajectory t = build_trajectory({{0.4, 3.0}, {3.6, 3.0}}, p);  // heading +x, p1 on the left
  const DoseMap d = accumulate(s, t, m);
  REQUIRE(d.mask_history.size() == 2);
  CHECK(d.mask_history[0].t == 0.0);
  CHECK_FALSE(d.mask_history[0].left_on);
  CHECK(d.mask_history[0].right_on);
  CHECK(d.mask_history[1].t == doctest::Approx(20.0));
  CHECK(d.mask_history[1].left_on);
  CHECK(d.left_on_time == doctest::Approx(t.duration() - 20.0));
  CHECK(d.right_on_time == doctest::Approx(t.duration()));
  const std::string csv = format_mask_csv(d.mask_history);
  CHECK(csv == "t_s,left_on,right_on\n0,0,1\n20,1,1\n");
}

TEST_CASE("fan multiplier and worker count") {
  const Scene s = Scene::empty_room(4.0, 4.0, 0.2);
  const IrradianceModel m = test::default_model(s.robot);
  const Trajectory t = l_turn({1.0, 1.0}, 1.0);
  DoseOptions a;
  DoseOptions b;
  b.fan_multiplier = 1.5;
  b.workers = 3;
  const DoseMap da = accumulate(s, t, m, a);
  const DoseMap db = accumulate(s, t, m, b);
  for (std::size_t k = 0; k < s.grid.size(); ++k)
    CHECK(db.dose.values()[k] == doctest::Approx(1.5 * da.dose.values()[k]).epsilon(1e-14));
  DoseOptions c = a;
  c.workers = 4;
  const DoseMap dc = accumulate(s, t, m, c);
  for (std::size_t k = 0; k < s.grid.size(); ++k) CHECK(dc.dose.values()[k] == da.dose.values()[k]);
  DoseOptions bad;
  bad.dt = 0.0;
  CHECK_THROWS_AS(accumulate(s, t, m, bad), ValidationError);
}

TEST_CASE("body footprint is excluded") {
  const Scene s = Scene::empty_room(4.0, 4.0, 0.2);
  const IrradianceModel m = test::default_model(s.robot);
  const DoseMap d = accumulate(s, hold({2.0, 2.0}, 0.0, 5.0), m);
  std::size_t excluded = 0;
  for (std::size_t k = 0; k < s.grid.size(); ++k) excluded += d.dose.excluded(k) ? 1 : 0;
  CHECK(excluded == 4);
  CHECK_THROWS_AS(point_dose(s.robot, hold({2.0, 2.0}, 0.0, 5.0), m, {2.05, 2.05}), DomainError);
}

}
