#include <cmath>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "uvcplan/error.hpp"
#include "uvcplan/irradiance.hpp"

using namespace uvcplan;

namespace {

// On the lamp normal at lamp-centre height no ray touches the window edges,
// so each lamp is an unclipped line source whose integral is closed form.
// Values below come from that integral, calibrated the same way.
struct NormalCase {
  double distance;  // from the lamp plane
  double value;     // µW/cm²
};
const std::vector<NormalCase> kNormal = {
    {0.3, 2845.0857167}, {0.5, 1343.9337390}, {0.6, 994.5601158}, {0.9, 485.7860710},
    {1.0, 400.0},        {1.5, 185.5447780},  {2.0, 106.1805666}, {2.8, 54.8427443},
};

double on_normal(const IrradianceModel& m, const RobotModel& r, double d, BankMask mask = {}) {
  return fluence_at(m, r, RobotPoint{0.0, r.lamp_plane_offset() + d, r.bank(Side::left).center_height}, mask);
}

GridSpec centred_grid(double size, double cs) {
  GridSpec g;
  g.cell_size = cs;
  g.width = static_cast<int>(std::lround(size / cs));
  g.height = g.width;
  g.origin = {-0.5 * size, -0.5 * size};
  return g;
}

}  // namespace

TEST_SUITE("irradiance") {

TEST_CASE("calibration anchors") {
  const RobotModel robot;
  const IrradianceModel m = test::default_model(robot);
  CHECK(m.calibrated());
  CHECK(on_normal(m, robot, 1.0, {true, false}) == doctest::Approx(400.0).epsilon(1e-12));

  SUBCASE("each lamp is near 100 at 1 m") {
    const RobotPoint p = calibration_point(robot);
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double v = lamp_fluence(m, robot, Side::left, k, p);
      CHECK(std::abs(v - 100.0) <= 0.5);
      sum += v;
    }
    CHECK(sum == doctest::Approx(400.0).epsilon(1e-12));
  }
  SUBCASE("a one-lamp bank calibrates to 100") {
    RobotModel one;
    one.banks[0].lamp_count = 1;
    one.banks[1].lamp_count = 1;
    const IrradianceModel m1 = test::default_model(one);
    CHECK(on_normal(m1, one, 1.0, {true, false}) == doctest::Approx(100.0).epsilon(1e-12));
  }
  SUBCASE("uncalibrated models are refused") {
    CHECK_THROWS_AS(on_normal(IrradianceModel{}, robot, 1.0), ValidationError);
  }
}

TEST_CASE("lamp normal matches the closed-form line source") {
  const RobotModel robot;
  IrradianceModel fine;
  fine.segment_count = 4096;
  fine = calibrate(fine, robot);
  const IrradianceModel coarse = test::default_model(robot);
  for (const auto& c : kNormal) {
    CAPTURE(c.distance);
    CHECK(on_normal(fine, robot, c.distance, {true, false}) == doctest::Approx(c.value).epsilon(1e-6));
    CHECK(on_normal(coarse, robot, c.distance, {true, false}) == doctest::Approx(c.value).epsilon(1e-3));
  }
}

TEST_CASE("masks and occlusion") {
  const RobotModel robot;
  const IrradianceModel m = test::default_model(robot);
  const RobotPoint left{0.0, 1.2, 0.83};
  const RobotPoint right{0.0, -1.2, 0.83};
  CHECK(fluence_at(m, robot, left, {false, false}) == 0.0);
  CHECK(fluence_at(m, robot, right, {true, false}) == 0.0);
  CHECK(fluence_at(m, robot, left, {false, true}) == 0.0);
  CHECK(fluence_at(m, robot, right, {false, true}) > 0.0);
  CHECK(fluence_at(m, robot, RobotPoint{1.0, 0.0, 0.83}) == 0.0);  // ahead, in no bank's half-plane
  CHECK_THROWS_AS(fluence_at(m, robot, RobotPoint{0.1, 0.1, 0.83}), DomainError);

  RobotModel off = robot;
  off.banks[0].enabled = false;
  CHECK(fluence_at(m, off, left) == 0.0);
}

TEST_CASE("superposition over banks is exact") {
  const RobotModel robot;
  const IrradianceModel m = test::default_model(robot);
  for (double x : {-1.3, -0.4, 0.0, 0.27, 0.8})
    for (double y : {-2.1, -0.6, -0.27, 0.27, 0.5, 1.9}) {
      for (double z : {0.0, 0.48, 0.83}) {
        const RobotPoint p{x, y, z};
        if (robot.inside_body(x, y)) continue;
        const double both = fluence_at(m, robot, p);
        const double l = fluence_at(m, robot, p, {true, false});
        const double r = fluence_at(m, robot, p, {false, true});
        CHECK(both == l + r);
        CHECK(both >= 0.0);
      }
    }
}

TEST_CASE("field over a symmetric grid is mirror-symmetric") {
  const RobotModel robot;
  const IrradianceModel m = test::default_model(robot);
  const GridSpec g = centred_grid(4.0, 1.0);  // 4 x 4, symmetric about y = 0
  const ScalarField f = field(m, robot, g, Pose{}, 0.83, {});
  for (int j = 0; j < g.height; ++j)
    for (int i = 0; i < g.width; ++i) CHECK(std::abs(f.at(i, j) - f.at(i, g.height - 1 - j)) <= 1e-9);

  const GridSpec fine = centred_grid(6.0, 0.2);
  const ScalarField h = field(m, robot, fine, Pose{}, 0.6, {});
  for (int j = 0; j < fine.height; ++j)
    for (int i = 0; i < fine.width; ++i) {
      CHECK(h.excluded(i, j) == h.excluded(i, fine.height - 1 - j));
      CHECK(std::abs(h.at(i, j) - h.at(i, fine.height - 1 - j)) <= 1e-9);
    }
}

TEST_CASE("field is linear in lamp power and excludes the body") {
  RobotModel robot;
  const IrradianceModel m = test::default_model(robot);
  const GridSpec g = centred_grid(3.0, 0.2);
  const ScalarField a = field(m, robot, g, Pose{}, 0.83, {});
  for (auto& b : robot.banks) b.per_lamp_power_at_1m *= 2.0;
  const ScalarField b = field(m, robot, g, Pose{}, 0.83, {});
  std::size_t body = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(b.values()[k] == 2.0 * a.values()[k]);
    body += a.excluded(k) ? 1 : 0;
  }
  CHECK(body == 9);  // the 0.5 m body covers 3 x 3 centres of the odd grid
  CHECK(a.valid_count() == g.size() - 9);
}

TEST_CASE("parallel evaluation is deterministic") {
  const RobotModel robot;
  const IrradianceModel m = test::default_model(robot);
  const GridSpec g = centred_grid(6.0, 0.2);
  const Pose pose{{0.13, -0.2}, 0.7, 0.0};
  const ScalarField one = field(m, robot, g, pose, 0.83, {}, nullptr, 1);
  const ScalarField four = field(m, robot, g, pose, 0.83, {}, nullptr, 4);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(one.values()[k] == four.values()[k]);
}

TEST_CASE("monotone decay along the lamp normal beyond 0.3 m") {
  const RobotModel robot;
  IrradianceModel fine;
  fine.segment_count = 4096;
  fine = calibrate(fine, robot);
  const IrradianceModel m = test::default_model(robot);
  double prev_fine = on_normal(fine, robot, 0.3);
  double prev = on_normal(m, robot, 0.3);
  for (double d = 0.35; d <= 5.0 + 1e-9; d += 0.05) {
    const double vf = on_normal(fine, robot, d);
    const double v = on_normal(m, robot, d);
    CHECK(vf < prev_fine);
    CHECK(v < prev);
    prev_fine = vf;
    prev = v;
  }
}

TEST_CASE("doubling segment_count moves no far cell by more than 0.1%") {
  const RobotModel robot;
  const GridSpec g = centred_grid(6.0, 0.2);
  for (Receiver rec : {Receiver::spherical, Receiver::planar_up}) {
    for (double h : {0.0, 0.48, 0.83}) {
      IrradianceModel a;
      a.receiver = rec;
      IrradianceModel b = a;
      b.segment_count = 64;
      a = calibrate(a, robot);
      b = calibrate(b, robot);
      const ScalarField fa = field(a, robot, g, Pose{}, h, {});
      const ScalarField fb = field(b, robot, g, Pose{}, h, {});
      double worst = 0.0;
      for (int j = 0; j < g.height; ++j)
        for (int i = 0; i < g.width; ++i) {
          const Vec2 c = g.cell_center(i, j);
          const double dx = std::max(std::abs(c.x) - robot.body_halflength, 0.0);
          const double dy = std::max(std::abs(c.y) - robot.body_halfwidth, 0.0);
          if (std::hypot(dx, dy) < 0.3) continue;
          const double va = fa.at(i, j);
          const double vb = fb.at(i, j);
          if (vb > 0.0) worst = std::max(worst, std::abs(va - vb) / vb);
        }
      CAPTURE(h);
      CHECK(worst <= 1e-3);
    }
  }
}

TEST_CASE("obstacles cast hard shadows") {
  Scene s = parse_scene("cell_size 0.2\norigin -3 -3\nsize_m 6 6\nobstacle -0.5 1.0 0.5 1.2\n");
  const IrradianceModel m = test::default_model(s.robot);
  const ScalarField open = field(m, s.robot, s.grid, Pose{}, 0.83, {});
  const ScalarField shaded = field(m, s.robot, s.grid, Pose{}, 0.83, {}, &s);
  const auto behind = s.grid.world_to_cell({0.1, 2.1});
  const auto front = s.grid.world_to_cell({0.1, 0.7});
  const auto blocked = s.grid.world_to_cell({0.1, 1.1});
  REQUIRE(behind);
  CHECK(open.at(behind->i, behind->j) > 0.0);
  CHECK(shaded.at(behind->i, behind->j) == 0.0);
  CHECK(shaded.at(front->i, front->j) == open.at(front->i, front->j));
  CHECK(shaded.excluded(blocked->i, blocked->j));
  CHECK(line_of_sight(s, {0.1, 0.3}, {0.1, 0.7}));
  CHECK_FALSE(line_of_sight(s, {0.1, 0.3}, {0.1, 2.1}));
}

TEST_CASE("normalize_and_sum") {
  GridSpec g;
  g.width = 2;
  g.height = 2;
  ScalarField a(g, Unit::irradiance);
  ScalarField b(g, Unit::irradiance);
  const double base[4] = {0.5, 1.0, 1.5, 2.0};
  for (int k = 0; k < 4; ++k) {
    a.values()[k] = base[k];
    b.values()[k] = 2.0 * base[k];
  }
  SUBCASE("single field is rescaled to max 1") {
    const ScalarField n = normalize_and_sum(std::vector<ScalarField>{a});
    CHECK(n.unit() == Unit::normalized_luminosity);
    CHECK(n.max_value() == 1.0);
    CHECK(n.values()[0] == doctest::Approx(0.25));
  }
  SUBCASE("proportional fields sum to the normalized input") {
    const ScalarField n = normalize_and_sum(std::vector<ScalarField>{a, b});
    const double expect[4] = {0.25, 0.5, 0.75, 1.0};
    for (int k = 0; k < 4; ++k) CHECK(n.values()[k] == doctest::Approx(expect[k]).epsilon(1e-15));
  }
  SUBCASE("three identical fields equal one") {
    const ScalarField one = normalize_and_sum(std::vector<ScalarField>{a});
    const ScalarField three = normalize_and_sum(std::vector<ScalarField>{a, a, a});
    for (int k = 0; k < 4; ++k) CHECK(three.values()[k] == doctest::Approx(one.values()[k]).epsilon(1e-15));
  }
  SUBCASE("errors") {
    ScalarField zero(g, Unit::irradiance);
    CHECK_THROWS_AS(normalize_and_sum(std::vector<ScalarField>{a, zero}), ValidationError);
    GridSpec other = g;
    other.width = 3;
    CHECK_THROWS_AS(normalize_and_sum(std::vector<ScalarField>{a, ScalarField(other, Unit::irradiance, 1.0)}),
                    ValidationError);
    CHECK_THROWS_AS(normalize_and_sum(std::vector<ScalarField>{}), ValidationError);
  }
}

}
