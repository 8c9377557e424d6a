// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "uvcplan/dose.hpp"
#include "uvcplan/kinetics.hpp"
#include "uvcplan/planner.hpp"
#include "uvcplan/zones.hpp"

using namespace uvcplan;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

std::string data_file(const char* name) { return std::string(UVCPLAN_DATA_DIR) + "/" + name; }

// --- 1 ----------------------------------------------------------------------

void table_one() {
  const auto t0 = Clock::now();
  const auto rows = decrease_by_distance(load_samples(data_file("table1_tbc.csv")));
  const double dt = seconds_since(t0);
  const double want[3] = {100.00, 86.36, 84.65};
  bool ok = rows.size() == 3 && dt < 1.0;
  std::string got;
  for (std::size_t k = 0; k < rows.size() && k < 3; ++k) {
    ok = ok && std::abs(rows[k].decrease - want[k]) <= 0.01;
    got += fmt("%s%.2f", k ? " / " : "", rows[k].decrease);
  }
  report(1, ok, "swab-count decrease " + got + fmt(" %%, %.3f s", dt));
}

// --- 2 ----------------------------------------------------------------------

void kinetics_round_trip() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> lam(0.0, 3.0);
  std::uniform_real_distribution<double> logn0(0.0, 6.0);
  std::normal_distribution<double> noise(0.0, 0.1);
  double worst = 0.0;
  std::vector<double> err;
  for (int s = 0; s < 1000; ++s) {
    const double l = lam(rng);
    const double n0 = std::pow(10.0, logn0(rng));
    PassSeries clean;
    PassSeries noisy;
    for (int n = 0; n <= 4; ++n) {
      const double c = predict(n0, l, n);
      clean.observations.push_back({n, c});
      noisy.observations.push_back({n, c * std::exp(noise(rng))});
    }
    worst = std::max(worst, std::abs(fit(clean).lambda - l));
    err.push_back(std::abs(fit(noisy).lambda - l));
  }
  std::nth_element(err.begin(), err.begin() + 500, err.end());
  const double median = err[500];
  const double dt = seconds_since(t0);
  report(2, worst <= 1e-9 && median < 0.05 && dt < 5.0,
         fmt("noiseless max |dl| %.2e, noisy median |dl| %.4f, %.3f s", worst, median, dt));
}

// --- 3, 4 -------------------------------------------------------------------

void multipass_claim(const IrradianceModel& model, const RobotModel& robot, double d90_multi) {
  const auto t0 = Clock::now();
  const double lp = robot.lamp_plane_offset();
  // Out and back along x at 0.14 m/s, turning in place at the far end.
  const Trajectory two = build_trajectory({{-8.0, 0.0}, {8.0, 0.0}, {-8.0, 0.0}}, MotionProfile{}, 0.0, std::nullopt, "two");
  const double d = point_dose(robot, two, model, {0.0, lp + 0.6});
  const double s = std::pow(10.0, -d / d90_multi);

  const Scene room = load_scene(data_file("room_4x6.scene"));
  const CoveragePlan plan = plan_coverage(room, 0.1, 0.14, model, d90_multi);
  report(3, std::abs(s - 0.1) <= 1e-3 && plan.passes == 2 && plan.complete,
         fmt("two-pass survival at 0.6 m %.6f, planner passes %d (%s, coverage %.4f), %.1f s", s, plan.passes,
             plan.complete ? "complete" : "incomplete", plan.coverage_fraction, seconds_since(t0)));
}

void static_equivalence(const IrradianceModel& model, const RobotModel& robot, double d90_static, double d90_multi) {
  const double lp = robot.lamp_plane_offset();
  Trajectory hold;
  hold.id = "static";
  hold.poses = {Pose{{0.0, 0.0}, 0.0, 0.0}, Pose{{0.0, 0.0}, 0.0, 600.0}};
  const double d = point_dose(robot, hold, model, {0.0, lp + 0.4});
  const double s = std::pow(10.0, -d / d90_multi);
  report(4, s <= 0.1,
         fmt("600 s static at 0.4 m: %.4g mJ/cm^2, survival %.3g; D90 static %.4f, multipass %.4f, ratio %.3f", d, s,
             d90_static, d90_multi, d90_static / d90_multi));
}

// --- 5 ----------------------------------------------------------------------

void radiometry(const IrradianceModel& model, const RobotModel& robot) {
  const RobotPoint p{0.0, robot.lamp_plane_offset() + 1.0, robot.bank(Side::left).center_height};
  const double four = fluence_at(model, robot, p, BankMask{true, false});
  bool ok = std::abs(four - 400.0) <= 0.005 * 400.0;
  std::string lamps;
  for (int k = 0; k < robot.bank(Side::left).lamp_count; ++k) {
    const double one = lamp_fluence(model, robot, Side::left, k, p);
    ok = ok && std::abs(one - 100.0) <= 0.005 * 100.0;
    lamps += fmt("%s%.2f", k ? " " : "", one);
  }
  report(5, ok, fmt("bank at 1 m %.3f, single lamps %s uW/cm^2", four, lamps.c_str()));
}

// --- 6 ----------------------------------------------------------------------

double distance_to(const Contour& c, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pl : c.polylines) {
    const std::size_t n = pl.points.size();
    for (std::size_t k = 0; k + 1 < n + (pl.closed ? 1 : 0); ++k)
      best = std::min(best, point_segment_distance(p, pl.points[k], pl.points[(k + 1) % n]));
  }
  return best;
}

void zone_reconstruction(const IrradianceModel& model, const RobotModel& robot) {
  const LuminositySetup setup;
  const ScalarField lum = simulate_luminosity(model, robot, setup);
  const auto levels = default_levels(lum, robot);
  const DisinfectionZone z = zone_from_levels(lum, levels, 0.0);
  const double lp = robot.lamp_plane_offset();

  const auto hits = ray_crossings(z.levels.back(), {0.0, lp}, {0.0, 1.0});
  const double crossing = hits.empty() ? std::numeric_limits<double>::quiet_NaN() : hits.back();
  bool ok = levels.back().threshold == 0.54 && std::abs(crossing - 0.9) <= 0.2;

  bool nested = z.levels.size() == 3;
  for (std::size_t k = 0; nested && k + 1 < z.levels.size(); ++k) {
    nested = !z.levels[k].empty() && z.levels[k].area() < z.levels[k + 1].area();
    for (const auto& pl : z.levels[k].polylines)
      for (Vec2 v : pl.points) nested = nested && z.levels[k + 1].contains(v) && distance_to(z.levels[k + 1], v) > 0.0;
  }

  const double cs = lum.spec().cell_size;
  double asym = 0.0;
  for (const auto& c : z.butterfly)
    for (const auto& pl : c.polylines)
      for (Vec2 v : pl.points) asym = std::max(asym, distance_to(c, {v.x, 2.0 * z.axis_y - v.y}));
  ok = ok && nested && asym <= cs;
  report(6, ok, fmt("0.54 crosses the normal at %.3f m, nesting %s, butterfly asymmetry %.2e m (cell %.3g m)", crossing,
                    nested ? "strict" : "violated", asym, cs));
}

// --- 7 ----------------------------------------------------------------------

// Midpoint rule at dt/64 over every cell, with no adaptive refinement.
std::vector<double> brute_force(const Scene& s, const Trajectory& t, const IrradianceModel& m, const ScalarField& ref,
                                double dt) {
  const GridSpec& g = s.grid;
  std::vector<double> out(g.size(), 0.0);
  const int n = static_cast<int>(std::ceil(t.duration() / dt - 1e-9));
  for (int q = 0; q < n; ++q) {
    const double a = t.start_time() + q * dt;
    const double b = std::min(t.end_time(), a + dt);
    const Pose p = t.pose_at(0.5 * (a + b));
    for (int j = 0; j < g.height; ++j)
      for (int i = 0; i < g.width; ++i) {
        if (ref.excluded(i, j)) continue;
        const RobotPoint rp = to_robot_frame(p, g.cell_center(i, j), 0.83);
        if (s.robot.inside_body(rp.along, rp.lateral)) continue;
        out[g.index(i, j)] += (b - a) * 1e-3 * fluence_at(m, s.robot, rp);
      }
  }
  return out;
}

void dose_oracle(const IrradianceModel& model) {
  const Scene s = Scene::empty_room(10.0, 10.0, 0.2);
  std::vector<Trajectory> ts;
  Trajectory hold;
  hold.id = "static";
  hold.poses = {Pose{{5.0, 5.0}, 0.0, 0.0}, Pose{{5.0, 5.0}, 0.0, 2.0}};
  ts.push_back(hold);
  ts.push_back(build_trajectory({{4.5, 5.0}, {5.5, 5.0}}, MotionProfile{}, 0.0, std::nullopt, "straight"));
  ts.push_back(build_trajectory({{4.7, 4.7}, {5.3, 4.7}, {5.3, 5.3}}, MotionProfile{}, 0.0, std::nullopt, "L-turn"));

  double sim_time = 0.0;
  double worst = 0.0;
  std::string per;
  for (const auto& t : ts) {
    const auto t0 = Clock::now();
    const DoseMap d = accumulate(s, t, model);
    sim_time += seconds_since(t0);
    const auto oracle = brute_force(s, t, model, d.dose, 0.1 / 64.0);
    double w = 0.0;
    for (std::size_t k = 0; k < oracle.size(); ++k) {
      if (d.dose.excluded(k)) continue;
      const double v = d.dose.values()[k];
      const double r = oracle[k] > 0.0 ? std::abs(v - oracle[k]) / oracle[k] : (v > 0.0 ? 1.0 : 0.0);
      w = std::max(w, r);
    }
    worst = std::max(worst, w);
    per += fmt("%s %s %.2e", per.empty() ? "" : ",", t.id.c_str(), w);
  }
  report(7, worst <= 1e-3 && sim_time < 30.0,
         fmt("max relative deviation from dt/64 oracle:%s; simulated in %.2f s on 50 x 50", per.c_str(), sim_time));
}

// --- 8 ----------------------------------------------------------------------

void safety_suite(const IrradianceModel& model) {
  const auto t0 = Clock::now();
  Scene base = Scene::empty_room(3.0, 3.0, 0.25);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> pos(0.5, 2.5);
  std::uniform_real_distribution<double> anywhere(0.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 3);

  int counterexamples = 0;
  int masked_steps = 0;
  for (int sc = 0; sc < 500; ++sc) {
    Vec2 a{pos(rng), pos(rng)};
    Vec2 b{pos(rng), pos(rng)};
    while (distance(a, b) < 0.3) b = {pos(rng), pos(rng)};
    MotionProfile prof;
    prof.speed = 0.14 + 0.3 * unit(rng);
    const Trajectory tr = build_trajectory({a, b}, prof, 0.0, std::nullopt, "s");
    const double horizon = tr.end_time();

    Scene with = base;
    const int humans = count(rng);
    for (int h = 0; h < humans; ++h) {
      HumanTrack track;
      track.id = "h" + std::to_string(h);
      double t = horizon * unit(rng) * 0.8;
      const int samples = 1 + static_cast<int>(3 * unit(rng));
      for (int k = 0; k < samples; ++k) {
        track.samples.push_back({t, {anywhere(rng), anywhere(rng)}});
        t += 0.1 + horizon * 0.3 * unit(rng);
      }
      if (unit(rng) < 0.5) track.exit_time = t;
      with.humans.push_back(track);
    }
    SafetyPolicy policy;
    policy.danger_radius = 0.5 + 2.5 * unit(rng);

    DoseOptions o;
    o.per_bank = true;
    o.record_steps = true;
    const DoseMap on = accumulate(with, tr, model, o, policy);
    const DoseMap off = accumulate(base, tr, model, o, policy);

    for (std::size_t k = 0; k < on.dose.values().size(); ++k)
      if (on.dose.values()[k] > off.dose.values()[k]) ++counterexamples;

    // Every step with a person in range on one side has that bank off.
    for (const auto& st : on.steps) {
      const double mid = 0.5 * (st.t0 + st.t1);
      for (Vec2 h : active_humans(with.humans, mid)) {
        if (distance(h, st.pose.position) > policy.danger_radius) continue;
        const double lat = to_robot_frame(st.pose, h, 0.0).lateral;
        if ((lat >= 0.0 && st.mask.left) || (lat <= 0.0 && st.mask.right)) ++counterexamples;
      }
    }

    // A disabled bank delivers nothing over each interval it stays off.
    for (int side = 0; side < 2; ++side) {
      std::size_t k = 0;
      while (k < on.steps.size()) {
        const auto is_off = [&](const DoseStep& st) { return side == 0 ? !st.mask.left : !st.mask.right; };
        if (!is_off(on.steps[k])) {
          ++k;
          continue;
        }
        std::size_t e = k;
        while (e < on.steps.size() && is_off(on.steps[e])) ++e;
        masked_steps += static_cast<int>(e - k);
        DoseOptions w = o;
        w.record_steps = false;
        w.t_begin = on.steps[k].t0;
        w.t_end = on.steps[e - 1].t1;
        const DoseMap part = accumulate(with, tr, model, w, policy);
        const ScalarField& bank = side == 0 ? *part.left : *part.right;
        for (double v : bank.values())
          if (v != 0.0) ++counterexamples;
        k = e;
      }
    }
  }
  report(8, counterexamples == 0 && masked_steps > 0,
         fmt("500 scenarios, %d masked bank-steps, %d counterexamples, %.1f s", masked_steps, counterexamples,
             seconds_since(t0)));
}

// --- 9 ----------------------------------------------------------------------

void contour_oracle() {
  std::string detail;
  bool ok = true;
  double previous = std::numeric_limits<double>::infinity();
  for (double cs : {0.1, 0.05}) {
    GridSpec g;
    g.cell_size = cs;
    g.width = g.height = static_cast<int>(std::lround(5.0 / cs));
    g.origin = {-2.5, -2.5};
    ScalarField f(g, Unit::normalized_luminosity);
    for (int j = 0; j < g.height; ++j)
      for (int i = 0; i < g.width; ++i) {
        const Vec2 p = g.cell_center(i, j);
        const double r2 = std::max(1e-6, p.x * p.x + p.y * p.y);
        f.at(i, j) = 1.0 / r2;
      }
    const Contour c = extract_contour(f, 0.25);
    double dev = c.polylines.size() == 1 ? 0.0 : std::numeric_limits<double>::infinity();
    for (const auto& pl : c.polylines)
      for (Vec2 v : pl.points) dev = std::max(dev, std::abs(norm(v) - 2.0));
    ok = ok && dev <= cs && dev <= previous;
    previous = dev;
    detail += fmt("%scell %.2f: %.2e m", detail.empty() ? "" : ", ", cs, dev);
  }
  report(9, ok, "r = 2 circle, max radial deviation " + detail);
}

}  // namespace

int main() {
  const RobotModel robot;
  const IrradianceModel model = calibrate(IrradianceModel{}, robot);
  const double d90_static = calibrate_d90(D90Mode::static_exposure, model, robot);
  const double d90_multi = calibrate_d90(D90Mode::multipass, model, robot);

  table_one();
  kinetics_round_trip();
  multipass_claim(model, robot, d90_multi);
  static_equivalence(model, robot, d90_static, d90_multi);
  radiometry(model, robot);
  zone_reconstruction(model, robot);
  dose_oracle(model);
  safety_suite(model);
  contour_oracle();
  std::printf("%s\n", failures == 0 ? "all criteria met" : fmt("%d criteria not met", failures).c_str());
  return failures == 0 ? 0 : 1;
}
