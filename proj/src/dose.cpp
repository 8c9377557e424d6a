#include "uvcplan/dose.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "uvcplan/csv.hpp"
#include "uvcplan/error.hpp"
#include "uvcplan/parallel.hpp"

namespace uvcplan {

void SafetyPolicy::validate() const {
  if (!(std::isfinite(danger_radius) && danger_radius > 0.0)) throw ValidationError("danger_radius", "must be > 0");
}

void DoseOptions::validate() const {
  if (!(std::isfinite(dt) && dt > 0.0)) throw ValidationError("dt", "must be > 0");
  if (!(std::isfinite(height) && height >= 0.0)) throw ValidationError("height", "must be >= 0");
  if (!(std::isfinite(fan_multiplier) && fan_multiplier > 0.0)) throw ValidationError("fan_multiplier", "must be > 0");
  if (t_begin && t_end && *t_end < *t_begin) throw ValidationError("t_end", "must not precede t_begin");
}

BankMask lamp_mask(const Pose& robot_pose, std::span<const Vec2> humans, const SafetyPolicy& policy) {
  BankMask m;
  for (const Vec2& h : humans) {
    if (distance(h, robot_pose.position) > policy.danger_radius) continue;
    const double lateral = to_robot_frame(robot_pose, h, 0.0).lateral;
    if (std::abs(lateral) <= 1e-9) {
      m.left = false;
      m.right = false;
    } else if (lateral > 0.0) {
      m.left = false;
    } else {
      m.right = false;
    }
  }
  return m;
}

namespace {

constexpr double kFootprintStep = 5e-4;  // m of travel between footprint samples

// Step boundaries: t_b, every multiple of dt strictly inside, t_e.
std::vector<double> step_bounds(double tb, double te, double dt) {
  std::vector<double> b{tb};
  if (te <= tb) return b;
  const double eps = 1e-9 * dt;
  for (long k = static_cast<long>(std::floor(tb / dt)) + 1;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t >= te - eps) break;
    if (t > tb + eps) b.push_back(t);
  }
  b.push_back(te);
  return b;
}

template <class Fn>
void for_each_footprint_pose(const RobotModel& robot, const Trajectory& tr, double t0, double t1, Fn&& fn) {
  std::vector<double> breaks{t0};
  for (const auto& p : tr.poses)
    if (p.time > t0 && p.time < t1) breaks.push_back(p.time);
  if (t1 > t0) breaks.push_back(t1);
  const double reach = std::hypot(robot.body_halfwidth, robot.body_halflength);
  fn(tr.pose_at(t0));
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const Pose a = tr.pose_at(breaks[k]);
    const Pose b = tr.pose_at(breaks[k + 1]);
    const double travel = std::max(distance(a.position, b.position), std::abs(b.heading - a.heading) * reach);
    const int n = std::max(1, static_cast<int>(std::ceil(travel / kFootprintStep)));
    for (int s = 1; s <= n; ++s) fn(tr.pose_at(breaks[k] + (breaks[k + 1] - breaks[k]) * s / n));
  }
}

struct BankPair {
  double left{0.0};
  double right{0.0};
  double sum() const { return left + right; }
};

BankPair operator+(BankPair a, BankPair b) { return {a.left + b.left, a.right + b.right}; }
BankPair operator*(BankPair a, double w) { return {a.left * w, a.right * w}; }

// Sample point of one step: its midpoint and the mask in force there.
struct StepSample {
  double t{0.0};
  Pose pose{};
  BankMask mask{};
};

// Steps of one integration window. `before` and `after` are the neighbouring
// steps of the trajectory's own dt grid just outside the window, so that step
// refinement decisions do not depend on where the window was cut.
struct StepGrid {
  std::vector<double> bounds;
  std::vector<Pose> bound_poses;
  std::vector<StepSample> mids;
  std::optional<StepSample> before;
  std::optional<StepSample> after;
};

template <class MaskAt>
StepGrid make_step_grid(const Trajectory& tr, std::vector<double> bounds, double dt, MaskAt&& mask_at) {
  StepGrid g;
  g.bounds = std::move(bounds);
  auto sample = [&](double t) { return StepSample{t, tr.pose_at(t), mask_at(t)}; };
  for (double t : g.bounds) g.bound_poses.push_back(tr.pose_at(t));
  for (std::size_t k = 0; k + 1 < g.bounds.size(); ++k) g.mids.push_back(sample(0.5 * (g.bounds[k] + g.bounds[k + 1])));
  if (g.mids.empty()) return g;
  const double eps = 1e-9 * dt;
  const double tb = g.bounds.front();
  const double te = g.bounds.back();
  if (tb > tr.start_time() + eps) {
    const double a = std::max(tr.start_time(), dt * (std::ceil(tb / dt - 1e-9) - 1.0));
    g.before = sample(0.5 * (a + tb));
  }
  if (te < tr.end_time() - eps) {
    const double b = std::min(tr.end_time(), dt * (std::floor(te / dt + 1e-9) + 1.0));
    g.after = sample(0.5 * (te + b));
  }
  return g;
}

// Window edges make the fluence at near-field cells change almost stepwise, so
// a step whose midpoint disagrees with its neighbours' trend is bisected until
// the midpoint matches the chord of its sub-interval.
constexpr double kTrigger = 1e-3;  // relative deviation from the neighbours' linear trend
constexpr double kTolerance = 1e-4;
constexpr int kMaxDepth = 6;

template <class Rate>
BankPair bisect(const Trajectory& tr, Rate& rate, double a, double b, BankPair fa, BankPair fm, BankPair fb, int depth) {
  const double dev = std::abs(fm.sum() - 0.5 * (fa.sum() + fb.sum()));
  const double mag = std::max({fa.sum(), fm.sum(), fb.sum()});
  if (depth >= kMaxDepth || dev <= kTolerance * mag) return fm * (b - a);
  const double m = 0.5 * (a + b);
  const BankPair f1 = rate(tr.pose_at(0.5 * (a + m)));
  const BankPair f2 = rate(tr.pose_at(0.5 * (m + b)));
  return bisect(tr, rate, a, m, fa, f1, fm, depth + 1) + bisect(tr, rate, m, b, fm, f2, fb, depth + 1);
}

// Integral over the step grid (µW/cm²·s per bank). `rate` ignores the lamp
// mask, so refinement is the same with or without humans; each step's mask
// is applied to its result.
template <class Rate>
BankPair integrate(const StepGrid& g, const Trajectory& tr, Rate& rate) {
  // Midpoint samples of the window's steps, flanked by the outside neighbours.
  std::vector<double> tm;
  std::vector<double> f;
  const std::size_t first = g.before ? 1 : 0;
  std::vector<BankPair> mid;
  mid.reserve(g.mids.size());
  if (g.before) {
    tm.push_back(g.before->t);
    f.push_back(rate(g.before->pose).sum());
  }
  for (const auto& s : g.mids) {
    mid.push_back(rate(s.pose));
    tm.push_back(s.t);
    f.push_back(mid.back().sum());
  }
  if (g.after) {
    tm.push_back(g.after->t);
    f.push_back(rate(g.after->pose).sum());
  }
  const std::size_t n = f.size();
  BankPair total;
  for (std::size_t k = 0; k < mid.size(); ++k) {
    const std::size_t q = k + first;
    const double a = g.bounds[k];
    const double b = g.bounds[k + 1];
    bool flagged = n == 1;
    if (q > 0 && q + 1 < n) {
      const double w = (tm[q] - tm[q - 1]) / (tm[q + 1] - tm[q - 1]);
      const double lin = f[q - 1] + w * (f[q + 1] - f[q - 1]);
      const double mag = std::max({f[q - 1], f[q], f[q + 1]});
      flagged = std::abs(f[q] - lin) > kTrigger * mag;
    } else if (n > 1) {
      const double o = f[q == 0 ? 1 : q - 1];
      flagged = std::abs(f[q] - o) > kTrigger * std::max(f[q], o);
    }
    BankPair v = mid[k] * (b - a);
    if (flagged) v = bisect(tr, rate, a, b, rate(g.bound_poses[k]), mid[k], rate(g.bound_poses[k + 1]), 0);
    const BankMask m = g.mids[k].mask;
    if (m.left) total.left += v.left;
    if (m.right) total.right += v.right;
  }
  return total;
}

}  // namespace

std::vector<std::uint8_t> swept_footprint(const GridSpec& grid, const RobotModel& robot, const Trajectory& tr,
                                          double t0, double t1) {
  std::vector<std::uint8_t> fp(grid.size(), 0);
  const double reach = std::hypot(robot.body_halfwidth, robot.body_halflength);
  for_each_footprint_pose(robot, tr, t0, t1, [&](const Pose& p) {
    const int i0 = std::max(0, static_cast<int>(std::floor((p.position.x - reach - grid.origin.x) / grid.cell_size)));
    const int j0 = std::max(0, static_cast<int>(std::floor((p.position.y - reach - grid.origin.y) / grid.cell_size)));
    const int i1 = std::min(grid.width - 1, static_cast<int>(std::floor((p.position.x + reach - grid.origin.x) / grid.cell_size)));
    const int j1 = std::min(grid.height - 1, static_cast<int>(std::floor((p.position.y + reach - grid.origin.y) / grid.cell_size)));
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        const RobotPoint rp = to_robot_frame(p, grid.cell_center(i, j), 0.0);
        if (robot.inside_body(rp.along, rp.lateral)) fp[grid.index(i, j)] = 1;
      }
  });
  return fp;
}

DoseMap accumulate(const Scene& scene, const Trajectory& trajectory, const IrradianceModel& model,
                   const DoseOptions& options, const SafetyPolicy& policy) {
  scene.validate();
  trajectory.validate();
  model.validate();
  options.validate();
  policy.validate();
  if (!model.calibrated()) throw ValidationError("calibration_constant", "model is not calibrated");
  const RobotModel& robot = scene.robot;
  const GridSpec& grid = scene.grid;
  const double tb = options.t_begin.value_or(trajectory.start_time());
  const double te = options.t_end.value_or(trajectory.end_time());
  if (te < tb) throw ValidationError("t_end", "must not precede t_begin");

  // Admissibility: the robot centre stays in free cells.
  for_each_footprint_pose(robot, trajectory, tb, te, [&](const Pose& p) {
    if (!scene.is_free(p.position)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "passes through an occupied or out-of-map cell at t=%.3f s", p.time);
      throw ValidationError("trajectory", buf);
    }
  });

  DoseMap out;
  out.trajectory_id = trajectory.id;
  out.t_begin = tb;
  out.duration = te - tb;
  out.dose = ScalarField(grid, Unit::dose);

  auto mask_at = [&](double t) {
    BankMask m = lamp_mask(trajectory.pose_at(t), active_humans(scene.humans, t), policy);
    m.left = m.left && robot.bank(Side::left).enabled;
    m.right = m.right && robot.bank(Side::right).enabled;
    return m;
  };
  const StepGrid sg = make_step_grid(trajectory, step_bounds(tb, te, options.dt), options.dt, mask_at);
  std::vector<DoseStep> steps;
  steps.reserve(sg.mids.size());
  for (std::size_t k = 0; k < sg.mids.size(); ++k) {
    DoseStep s;
    s.t0 = sg.bounds[k];
    s.t1 = sg.bounds[k + 1];
    s.pose = sg.mids[k].pose;
    s.mask = sg.mids[k].mask;
    const double len = s.t1 - s.t0;
    if (s.mask.left) out.left_on_time += len;
    if (s.mask.right) out.right_on_time += len;
    if (out.mask_history.empty() || out.mask_history.back().left_on != s.mask.left ||
        out.mask_history.back().right_on != s.mask.right)
      out.mask_history.push_back({s.t0, s.mask.left, s.mask.right});
    steps.push_back(s);
  }
  out.lamp_energy_wh =
      (out.left_on_time * robot.bank_power_w(Side::left) + out.right_on_time * robot.bank_power_w(Side::right)) / 3600.0;

  const auto footprint = swept_footprint(grid, robot, trajectory, tb, te);
  std::vector<std::uint8_t> excluded(grid.size(), 0);
  for (std::size_t k = 0; k < grid.size(); ++k) excluded[k] = footprint[k] || scene.occupied[k];

  const bool occlusion = scene.has_obstacles();
  const double scale = 1e-3 * options.fan_multiplier;  // µW/cm²·s -> mJ/cm²
  std::vector<double> left(options.per_bank ? grid.size() : 0, 0.0);
  std::vector<double> right(options.per_bank ? grid.size() : 0, 0.0);
  auto total = out.dose.values();
  const double hw = robot.body_halfwidth;

  parallel_for(grid.size(), options.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      if (excluded[k]) continue;
      const int i = static_cast<int>(k % static_cast<std::size_t>(grid.width));
      const int j = static_cast<int>(k / static_cast<std::size_t>(grid.width));
      const Vec2 c = grid.cell_center(i, j);
      auto rate = [&](const Pose& p) {
        BankPair f;
        const RobotPoint rp = to_robot_frame(p, c, options.height);
        if (robot.inside_body(rp.along, rp.lateral)) return f;
        if (robot.bank(Side::left).enabled && rp.lateral > hw) {
          f.left = occlusion ? fluence_at(model, robot, p, c, options.height, BankMask{true, false}, &scene)
                             : bank_fluence(model, robot, Side::left, rp);
        } else if (robot.bank(Side::right).enabled && -rp.lateral > hw) {
          f.right = occlusion ? fluence_at(model, robot, p, c, options.height, BankMask{false, true}, &scene)
                              : bank_fluence(model, robot, Side::right, rp);
        }
        return f;
      };
      const BankPair d = integrate(sg, trajectory, rate);
      total[k] = (d.left + d.right) * scale;
      if (options.per_bank) {
        left[k] = d.left * scale;
        right[k] = d.right * scale;
      }
    }
  });

  for (std::size_t k = 0; k < grid.size(); ++k) out.dose.set_excluded(k, excluded[k] != 0);
  if (options.per_bank) {
    out.left = ScalarField(grid, Unit::dose);
    out.right = ScalarField(grid, Unit::dose);
    std::copy(left.begin(), left.end(), out.left->values().begin());
    std::copy(right.begin(), right.end(), out.right->values().begin());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      out.left->set_excluded(k, excluded[k] != 0);
      out.right->set_excluded(k, excluded[k] != 0);
    }
  }
  if (options.record_steps) out.steps = std::move(steps);
  return out;
}

double point_dose(const RobotModel& robot, const Trajectory& trajectory, const IrradianceModel& model, Vec2 point,
                  const DoseOptions& options) {
  trajectory.validate();
  options.validate();
  const double tb = options.t_begin.value_or(trajectory.start_time());
  const double te = options.t_end.value_or(trajectory.end_time());
  const StepGrid sg = make_step_grid(trajectory, step_bounds(tb, te, options.dt), options.dt,
                                     [](double) { return BankMask{}; });
  auto rate = [&](const Pose& p) {
    return BankPair{fluence_at(model, robot, to_robot_frame(p, point, options.height)), 0.0};
  };
  const double d = integrate(sg, trajectory, rate).left;
  return d * 1e-3 * options.fan_multiplier;
}

ScalarField survival(const ScalarField& dose, double d90) {
  if (!(std::isfinite(d90) && d90 > 0.0)) throw ValidationError("d90", "must be > 0");
  ScalarField out(dose.spec(), Unit::survival);
  const auto in = dose.values();
  auto v = out.values();
  for (std::size_t k = 0; k < in.size(); ++k) {
    out.set_excluded(k, dose.excluded(k));
    v[k] = dose.excluded(k) ? 0.0 : std::pow(10.0, -in[k] / d90);
  }
  return out;
}

Trajectory straight_pass(double speed, double length, double y) {
  if (!(speed > 0.0)) throw ValidationError("speed", "must be > 0");
  if (!(length > 0.0)) throw ValidationError("length", "must be > 0");
  Trajectory t;
  t.id = "pass";
  t.poses = {Pose{{-0.5 * length, y}, 0.0, 0.0}, Pose{{0.5 * length, y}, 0.0, length / speed}};
  t.stated_speeds = {speed, 0.0};
  return t;
}

double calibrate_d90(D90Mode mode, const IrradianceModel& model, const RobotModel& robot, const DoseOptions& options,
                     const CalibrationSetup& setup) {
  if (!model.calibrated()) throw ValidationError("calibration_constant", "model is not calibrated");
  const double lp = robot.lamp_plane_offset();
  if (mode == D90Mode::static_exposure) {
    if (!(setup.static_duration > 0.0)) throw ValidationError("static_duration", "must be > 0");
    Trajectory t;
    t.id = "static";
    t.poses = {Pose{{0.0, 0.0}, 0.0, 0.0}, Pose{{0.0, 0.0}, 0.0, setup.static_duration}};
    return point_dose(robot, t, model, {0.0, lp + setup.static_distance}, options);
  }
  if (setup.passes_for_one_log < 1) throw ValidationError("passes_for_one_log", "must be >= 1");
  const Trajectory t = straight_pass(setup.pass_speed, setup.pass_length);
  return setup.passes_for_one_log * point_dose(robot, t, model, {0.0, lp + setup.pass_distance}, options);
}

std::string format_mask_csv(const std::vector<MaskEvent>& history) {
  std::ostringstream out;
  out << "t_s,left_on,right_on\n";
  for (const auto& e : history) out << format_g6(e.t) << "," << (e.left_on ? 1 : 0) << "," << (e.right_on ? 1 : 0) << "\n";
  return out.str();
}

}  // namespace uvcplan
