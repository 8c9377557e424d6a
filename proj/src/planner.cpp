#include "uvcplan/planner.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <queue>
#include <tuple>

#include "uvcplan/error.hpp"

namespace uvcplan {

// ---------------------------------------------------------------------------
// Timed trajectories

void MotionProfile::validate() const {
  if (!(std::isfinite(speed) && speed > 0.0)) throw ValidationError("speed", "must be > 0");
  if (!(std::isfinite(turn_rate) && turn_rate > 0.0)) throw ValidationError("turn_rate", "must be > 0");
  if (!(std::isfinite(accel) && accel >= 0.0)) throw ValidationError("accel", "must be >= 0");
  if (!(std::isfinite(turn_accel) && turn_accel >= 0.0)) throw ValidationError("turn_accel", "must be >= 0");
  if (!(std::isfinite(sample_dt) && sample_dt > 0.0)) throw ValidationError("sample_dt", "must be > 0");
}

namespace {

// (time, distance) samples of a rest-to-rest move over `total` with a
// trapezoidal (or triangular) speed profile; a = 0 moves at vmax throughout.
std::vector<std::pair<double, double>> move_profile(double total, double vmax, double a, double sample_dt) {
  std::vector<std::pair<double, double>> out{{0.0, 0.0}};
  if (a <= 0.0) {
    out.emplace_back(total / vmax, total);
    return out;
  }
  double v = vmax;
  double ta = v / a;
  if (v * ta > total) {  // never reaches vmax
    v = std::sqrt(a * total);
    ta = v / a;
  }
  const double da = 0.5 * a * ta * ta;
  const double tc = (total - 2.0 * da) / v;
  const int n = std::max(1, static_cast<int>(std::ceil(ta / sample_dt)));
  for (int s = 1; s <= n; ++s) {
    const double t = ta * s / n;
    out.emplace_back(t, 0.5 * a * t * t);
  }
  if (tc > 0.0) out.emplace_back(ta + tc, da + v * tc);
  const double t2 = ta + std::max(tc, 0.0);
  for (int s = 1; s <= n; ++s) {
    const double t = ta * s / n;
    const double d = s == n ? total : da + std::max(tc, 0.0) * v + v * t - 0.5 * a * t * t;
    out.emplace_back(t2 + t, d);
  }
  return out;
}

}  // namespace

Trajectory build_trajectory(const std::vector<Vec2>& waypoints_in, const MotionProfile& profile, double start_time,
                            std::optional<double> start_heading, const std::string& id) {
  profile.validate();
  std::vector<Vec2> wp;
  for (const Vec2& p : waypoints_in)
    if (wp.empty() || distance(wp.back(), p) > 1e-12) wp.push_back(p);
  if (wp.empty()) throw ValidationError("waypoints", "at least one waypoint required");

  const bool stated = profile.accel == 0.0 && profile.turn_accel == 0.0;
  Trajectory tr;
  tr.id = id;
  double h = start_heading.value_or(wp.size() > 1 ? std::atan2(wp[1].y - wp[0].y, wp[1].x - wp[0].x) : 0.0);
  double t = start_time;
  tr.poses.push_back({wp[0], h, t});
  std::vector<double> speeds;

  auto rotate_to = [&](double target) {
    const double d = wrap_angle(target - h);
    if (std::abs(d) <= 1e-12) return;
    const auto prof = move_profile(std::abs(d), profile.turn_rate, profile.turn_accel, profile.sample_dt);
    const double h0 = h;
    const double t0 = t;
    const Vec2 at = tr.poses.back().position;
    for (std::size_t s = 1; s < prof.size(); ++s) {
      speeds.push_back(0.0);
      tr.poses.push_back({at, h0 + std::copysign(prof[s].second, d), t0 + prof[s].first});
    }
    h = h0 + d;
    tr.poses.back().heading = h;
    t = tr.poses.back().time;
  };

  for (std::size_t k = 0; k + 1 < wp.size(); ++k) {
    const Vec2 dvec = wp[k + 1] - wp[k];
    rotate_to(std::atan2(dvec.y, dvec.x));
    const double len = norm(dvec);
    const auto prof = move_profile(len, profile.speed, profile.accel, profile.sample_dt);
    const double t0 = t;
    for (std::size_t s = 1; s < prof.size(); ++s) {
      speeds.push_back(profile.speed);
      const Vec2 p = s + 1 == prof.size() ? wp[k + 1] : wp[k] + dvec * (prof[s].second / len);
      tr.poses.push_back({p, h, t0 + prof[s].first});
    }
    t = tr.poses.back().time;
  }
  if (stated) {
    speeds.push_back(0.0);
    tr.stated_speeds = std::move(speeds);
    // Re-derive leg speeds from the rounded geometry so the stated values stay
    // consistent to well under the validation tolerance.
    for (std::size_t k = 0; k + 1 < tr.poses.size(); ++k) {
      const double dtk = tr.poses[k + 1].time - tr.poses[k].time;
      const double moved = distance(tr.poses[k + 1].position, tr.poses[k].position);
      if (tr.stated_speeds[k] > 0.0) tr.stated_speeds[k] = moved / dtk;
    }
  }
  tr.validate();
  return tr;
}

// ---------------------------------------------------------------------------
// Geometry helpers

namespace {

struct Rect {
  double x0, y0, x1, y1;
};

struct ClearanceMap {
  const Scene& scene;
  std::vector<Rect> rects;
  Vec2 lo;
  Vec2 hi;

  explicit ClearanceMap(const Scene& s) : scene(s), lo(s.grid.origin), hi(s.grid.max_corner()) {
    const auto& g = s.grid;
    for (int j = 0; j < g.height; ++j)
      for (int i = 0; i < g.width; ++i)
        if (s.is_occupied(i, j)) {
          const double x0 = g.origin.x + i * g.cell_size;
          const double y0 = g.origin.y + j * g.cell_size;
          rects.push_back({x0, y0, x0 + g.cell_size, y0 + g.cell_size});
        }
  }

  double operator()(Vec2 p) const {
    double c = std::min({p.x - lo.x, hi.x - p.x, p.y - lo.y, hi.y - p.y});
    for (const auto& r : rects) {
      const double dx = std::max({r.x0 - p.x, 0.0, p.x - r.x1});
      const double dy = std::max({r.y0 - p.y, 0.0, p.y - r.y1});
      c = std::min(c, std::hypot(dx, dy));
    }
    return c;
  }

  bool admissible(Vec2 p, double r) const { return (*this)(p) >= r - 1e-9; }

  bool segment_admissible(Vec2 a, Vec2 b, double r) const {
    const double len = distance(a, b);
    const int n = std::max(1, static_cast<int>(std::ceil(len / (scene.grid.cell_size / 8.0))));
    for (int s = 0; s <= n; ++s)
      if (!admissible(a + (b - a) * (static_cast<double>(s) / n), r)) return false;
    return true;
  }
};

double robot_reach(const RobotModel& r) { return std::hypot(r.body_halfwidth, r.body_halflength); }

// A* over cell centres with admissible clearance; returns waypoints from a to b
// after string pulling, or nullopt.
std::optional<std::vector<Vec2>> find_path(const ClearanceMap& cm, Vec2 a, Vec2 b, double r) {
  const auto& g = cm.scene.grid;
  const int n = static_cast<int>(g.size());
  std::vector<char> ok(g.size(), 0);
  for (int j = 0; j < g.height; ++j)
    for (int i = 0; i < g.width; ++i) ok[g.index(i, j)] = cm.admissible(g.cell_center(i, j), r);

  auto attach = [&](Vec2 p) -> int {
    int best = -1;
    double bd = 0.0;
    for (int k = 0; k < n; ++k) {
      if (!ok[static_cast<std::size_t>(k)]) continue;
      const Vec2 c = g.cell_center(k % g.width, k / g.width);
      const double d = distance(c, p);
      if (d > 3.0 * g.cell_size) continue;
      if ((best < 0 || d < bd) && cm.segment_admissible(p, c, r)) {
        best = k;
        bd = d;
      }
    }
    return best;
  };
  const int s = attach(a);
  const int e = attach(b);
  if (s < 0 || e < 0) return std::nullopt;

  auto center = [&](int k) { return g.cell_center(k % g.width, k / g.width); };
  std::vector<double> gcost(g.size(), std::numeric_limits<double>::infinity());
  std::vector<int> parent(g.size(), -1);
  using Item = std::tuple<double, double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  gcost[static_cast<std::size_t>(s)] = 0.0;
  open.emplace(distance(center(s), center(e)), 0.0, s);
  std::vector<char> closed(g.size(), 0);
  while (!open.empty()) {
    const auto [f, gc, k] = open.top();
    open.pop();
    if (closed[static_cast<std::size_t>(k)]) continue;
    closed[static_cast<std::size_t>(k)] = 1;
    if (k == e) break;
    const int i = k % g.width;
    const int j = k / g.width;
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        if (!di && !dj) continue;
        if (!g.in_bounds(i + di, j + dj)) continue;
        const int q = static_cast<int>(g.index(i + di, j + dj));
        if (!ok[static_cast<std::size_t>(q)] || closed[static_cast<std::size_t>(q)]) continue;
        if (!cm.segment_admissible(center(k), center(q), r)) continue;
        const double ng = gc + distance(center(k), center(q));
        if (ng < gcost[static_cast<std::size_t>(q)]) {
          gcost[static_cast<std::size_t>(q)] = ng;
          parent[static_cast<std::size_t>(q)] = k;
          open.emplace(ng + distance(center(q), center(e)), ng, q);
        }
      }
  }
  if (!closed[static_cast<std::size_t>(e)]) return std::nullopt;
  std::vector<Vec2> raw{b};
  for (int k = e; k >= 0; k = parent[static_cast<std::size_t>(k)]) raw.push_back(center(k));
  raw.push_back(a);
  std::reverse(raw.begin(), raw.end());
  // Greedy string pulling: jump to the farthest directly reachable point.
  std::vector<Vec2> out{raw.front()};
  std::size_t cur = 0;
  while (cur + 1 < raw.size()) {
    std::size_t next = cur + 1;
    for (std::size_t q = raw.size() - 1; q > cur + 1; --q)
      if (cm.segment_admissible(raw[cur], raw[q], r)) {
        next = q;
        break;
      }
    out.push_back(raw[next]);
    cur = next;
  }
  return out;
}

std::vector<std::uint8_t> component_of(const Scene& s, CellIndex start) {
  const auto& g = s.grid;
  std::vector<std::uint8_t> comp(g.size(), 0);
  if (!g.in_bounds(start.i, start.j) || s.is_occupied(start.i, start.j)) return comp;
  std::vector<CellIndex> stack{start};
  comp[g.index(start)] = 1;
  while (!stack.empty()) {
    const CellIndex c = stack.back();
    stack.pop_back();
    const CellIndex nb[4] = {{c.i + 1, c.j}, {c.i - 1, c.j}, {c.i, c.j + 1}, {c.i, c.j - 1}};
    for (const auto& q : nb) {
      if (!g.in_bounds(q.i, q.j) || s.is_occupied(q.i, q.j) || comp[g.index(q)]) continue;
      comp[g.index(q)] = 1;
      stack.push_back(q);
    }
  }
  return comp;
}

}  // namespace

double clearance(const Scene& scene, Vec2 p) { return ClearanceMap(scene)(p); }

// ---------------------------------------------------------------------------
// Lanes

void PlannerOptions::validate() const {
  if (!(std::isfinite(lane_pitch) && lane_pitch > 0.0)) throw ValidationError("lane_pitch", "must be > 0");
  if (!(std::isfinite(turn_rate) && turn_rate > 0.0)) throw ValidationError("turn_rate", "must be > 0");
  if (pass_cap < 1) throw ValidationError("pass_cap", "must be >= 1");
  if (!(coverage_goal > 0.0 && coverage_goal <= 1.0)) throw ValidationError("coverage_goal", "must lie in (0, 1]");
  dose.validate();
  policy.validate();
}

CoveragePlan layout_lanes(const Scene& scene, double speed, const PlannerOptions& options) {
  scene.validate();
  options.validate();
  if (!(std::isfinite(speed) && speed > 0.0)) throw ValidationError("speed", "must be > 0");
  const auto& g = scene.grid;
  const double r = robot_reach(scene.robot);
  const Vec2 lo = g.origin;
  const Vec2 hi = g.max_corner();

  CoveragePlan plan;
  plan.speed = speed;
  plan.turn_rate = options.turn_rate;
  plan.lane_pitch = options.lane_pitch;
  // Lanes run along the longer side; (u, w) are along-lane and across-lane.
  plan.lanes_along_x = (hi.x - lo.x) >= (hi.y - lo.y);
  const bool ax = plan.lanes_along_x;
  const double u0 = ax ? lo.x : lo.y;
  const double u1 = ax ? hi.x : hi.y;
  const double w0 = ax ? lo.y : lo.x;
  const double w1 = ax ? hi.y : hi.x;
  auto world = [ax](double u, double w) { return ax ? Vec2{u, w} : Vec2{w, u}; };

  const double usable = (w1 - w0) - 2.0 * r;
  if (usable < 0.0 || (u1 - u0) < 2.0 * r)
    throw UnreachableError("map is narrower than the robot's turning footprint", scene.free_count());
  const int n = static_cast<int>(std::floor(usable / options.lane_pitch + 1e-9)) + 1;
  const double mid = 0.5 * (w0 + w1);
  for (int k = 0; k < n; ++k) plan.lane_positions.push_back(mid + (k - 0.5 * (n - 1)) * options.lane_pitch);

  // Admissible centre intervals per lane: map border and occupied cells
  // inflated by the turning radius.
  std::vector<Rect> rects;
  for (int j = 0; j < g.height; ++j)
    for (int i = 0; i < g.width; ++i)
      if (scene.is_occupied(i, j)) {
        const double x0 = g.origin.x + i * g.cell_size;
        const double y0 = g.origin.y + j * g.cell_size;
        rects.push_back(ax ? Rect{x0, y0, x0 + g.cell_size, y0 + g.cell_size}
                           : Rect{y0, x0, y0 + g.cell_size, x0 + g.cell_size});
      }
  std::vector<std::pair<Vec2, Vec2>> lane_ends;  // low and high end of each non-empty lane
  for (int k = 0; k < n; ++k) {
    const double w = plan.lane_positions[static_cast<std::size_t>(k)];
    std::vector<std::pair<double, double>> blocked;
    for (const auto& rc : rects) {
      const double dw = std::max({rc.y0 - w, 0.0, w - rc.y1});
      if (dw >= r) continue;
      const double half = std::sqrt(r * r - dw * dw);
      blocked.emplace_back(rc.x0 - half, rc.x1 + half);
    }
    std::sort(blocked.begin(), blocked.end());
    std::vector<std::pair<double, double>> free;
    double cur = u0 + r;
    const double end = u1 - r;
    for (const auto& [b0, b1] : blocked) {
      if (b0 > cur) free.emplace_back(cur, std::min(b0, end));
      cur = std::max(cur, b1);
      if (cur >= end) break;
    }
    if (cur <= end) free.emplace_back(cur, end);
    std::vector<std::pair<double, double>> kept;
    for (const auto& iv : free)
      if (iv.second >= iv.first) kept.push_back(iv);
    if (kept.empty()) continue;
    lane_ends.push_back({world(kept.front().first, w), world(kept.back().second, w)});
    if (k % 2 == 1) std::reverse(kept.begin(), kept.end());
    for (const auto& [a, b] : kept) {
      LaneRun run;
      run.lane = k;
      run.from = world(k % 2 == 0 ? a : b, w);
      run.to = world(k % 2 == 0 ? b : a, w);
      plan.runs.push_back(run);
    }
  }
  if (plan.runs.empty()) throw UnreachableError("no admissible lane", scene.free_count());

  // Driving order: headland along the starting end wall, the lanes, then the
  // headland along the far end wall.
  std::vector<Vec2> goals;
  const bool headlands = options.headlands && lane_ends.size() > 1;
  if (headlands) {
    goals.push_back(lane_ends.back().first);
    goals.push_back(lane_ends.front().first);
  }
  for (const auto& run : plan.runs) {
    goals.push_back(run.from);
    goals.push_back(run.to);
  }
  if (headlands) {
    if (distance(goals.back(), lane_ends.back().second) > 1e-12) goals.push_back(lane_ends.back().second);
    goals.push_back(lane_ends.front().second);
  }

  // Connectivity of the free space from the start.
  const auto start = g.world_to_cell(goals.front());
  const auto comp = component_of(scene, start.value_or(CellIndex{-1, -1}));
  std::size_t unreachable = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!scene.occupied[k] && !comp[k]) ++unreachable;
  if (unreachable > 0)
    throw UnreachableError(std::to_string(unreachable) + " free cells are disconnected from the start", unreachable);

  const ClearanceMap cm(scene);
  plan.circuit.push_back(goals.front());
  for (std::size_t q = 1; q < goals.size(); ++q) {
    const Vec2 at = plan.circuit.back();
    const Vec2 to = goals[q];
    if (distance(at, to) <= 1e-12) continue;
    if (cm.segment_admissible(at, to, r)) {
      plan.circuit.push_back(to);
      continue;
    }
    const auto path = find_path(cm, at, to, r);
    if (!path) {
      std::size_t cells = 0;
      for (int j = 0; j < g.height; ++j)
        for (int i = 0; i < g.width; ++i)
          if (!cm.admissible(g.cell_center(i, j), r) && !scene.is_occupied(i, j)) ++cells;
      char buf[96];
      std::snprintf(buf, sizeof buf, "no admissible path to (%.3f, %.3f) at robot width", to.x, to.y);
      throw UnreachableError(buf, cells);
    }
    plan.circuit.insert(plan.circuit.end(), path->begin() + 1, path->end());
  }
  return plan;
}

std::vector<Vec2> pass_waypoints(const CoveragePlan& plan, int passes) {
  if (passes < 1) throw ValidationError("passes", "must be >= 1");
  std::vector<Vec2> out;
  for (int p = 0; p < passes; ++p) {
    if (p % 2 == 0) out.insert(out.end(), plan.circuit.begin(), plan.circuit.end());
    else out.insert(out.end(), plan.circuit.rbegin(), plan.circuit.rend());
  }
  return out;
}

Trajectory plan_trajectory(const CoveragePlan& plan, int passes) {
  MotionProfile prof;
  prof.speed = plan.speed;
  prof.turn_rate = plan.turn_rate;
  return build_trajectory(pass_waypoints(plan, passes), prof, 0.0, std::nullopt, "plan");
}

std::vector<std::uint8_t> circuit_footprint(const Scene& scene, const CoveragePlan& plan) {
  const Trajectory t = plan_trajectory(plan, 3);
  return swept_footprint(scene.grid, scene.robot, t, t.start_time(), t.end_time());
}

std::vector<std::uint8_t> target_cells(const Scene& scene, const CoveragePlan& plan) {
  const auto start = scene.grid.world_to_cell(plan.circuit.front());
  auto comp = component_of(scene, start.value_or(CellIndex{-1, -1}));
  const auto fp = circuit_footprint(scene, plan);
  for (std::size_t k = 0; k < comp.size(); ++k)
    if (fp[k]) comp[k] = 0;
  return comp;
}

// ---------------------------------------------------------------------------
// Verification

namespace {

struct Coverage {
  double fraction{0.0};
  std::size_t targets{0};
};

Coverage coverage_of(const std::vector<double>& dose, const std::vector<std::uint8_t>& targets, double d90,
                     double target_survival) {
  Coverage c;
  std::size_t ok = 0;
  for (std::size_t k = 0; k < dose.size(); ++k) {
    if (!targets[k]) continue;
    ++c.targets;
    if (std::pow(10.0, -dose[k] / d90) <= target_survival) ++ok;
  }
  c.fraction = c.targets ? static_cast<double>(ok) / static_cast<double>(c.targets) : 1.0;
  return c;
}

}  // namespace

VerificationReport evaluate_dose(const Scene& scene, const CoveragePlan& plan, const DoseMap& dose, double d90,
                                 const Trajectory& path) {
  VerificationReport rep;
  const auto targets = target_cells(scene, plan);
  rep.dose = dose.dose;
  rep.survival = survival(rep.dose, d90);
  const auto& g = scene.grid;
  const auto sv = rep.survival.values();
  std::size_t ok = 0;
  rep.worst_survival = 0.0;
  const bool obstacles = scene.has_obstacles();
  std::vector<Vec2> samples;
  if (obstacles) {
    const double total = path.duration();
    const int n = std::max(1, static_cast<int>(std::ceil(path.path_length() / 0.1)));
    for (int s = 0; s <= n; ++s) samples.push_back(path.pose_at(path.start_time() + total * s / n).position);
  }
  for (int j = 0; j < g.height; ++j)
    for (int i = 0; i < g.width; ++i) {
      const std::size_t k = g.index(i, j);
      if (!targets[k]) continue;
      ++rep.target_cells;
      rep.worst_survival = std::max(rep.worst_survival, sv[k]);
      if (sv[k] <= plan.target_survival) {
        ++ok;
        continue;
      }
      rep.failing_cells.push_back({i, j});
      if (obstacles) {
        const Vec2 c = g.cell_center(i, j);
        const bool seen = std::any_of(samples.begin(), samples.end(), [&](Vec2 p) { return line_of_sight(scene, p, c); });
        if (!seen) rep.shadow_cells.push_back({i, j});
      }
    }
  rep.coverage_fraction = rep.target_cells ? static_cast<double>(ok) / static_cast<double>(rep.target_cells) : 1.0;
  rep.total_time = path.duration();
  rep.lamp_energy_wh = dose.lamp_energy_wh;
  rep.mask_history = dose.mask_history;
  return rep;
}

VerificationReport verify_plan(const Scene& scene, const CoveragePlan& plan, const IrradianceModel& model, double d90,
                               const std::optional<std::vector<HumanTrack>>& humans, const PlannerOptions& options) {
  options.validate();
  if (!(std::isfinite(d90) && d90 > 0.0)) throw ValidationError("d90", "must be > 0");
  Scene s = scene;
  if (humans) s.humans = *humans;
  const Trajectory t = plan_trajectory(plan, plan.passes);
  const DoseMap d = accumulate(s, t, model, options.dose, options.policy);
  return evaluate_dose(s, plan, d, d90, t);
}

CoveragePlan plan_coverage(const Scene& scene, double target_survival, double speed, const IrradianceModel& model,
                           double d90, const PlannerOptions& options) {
  if (!(target_survival > 0.0 && target_survival < 1.0))
    throw ValidationError("target_survival", "must lie in (0, 1)");
  if (!(std::isfinite(d90) && d90 > 0.0)) throw ValidationError("d90", "must be > 0");
  if (!model.calibrated()) throw ValidationError("calibration_constant", "model is not calibrated");
  CoveragePlan plan = layout_lanes(scene, speed, options);
  plan.target_survival = target_survival;
  plan.d90 = d90;
  const auto targets = target_cells(scene, plan);

  // Search on the cap-length trajectory, one pass window at a time.
  const Trajectory full = plan_trajectory(plan, options.pass_cap);
  std::vector<double> dose(scene.grid.size(), 0.0);
  double t_prev = full.start_time();
  int chosen = options.pass_cap;
  bool met = false;
  for (int k = 1; k <= options.pass_cap; ++k) {
    const double t_k = k == options.pass_cap ? full.end_time() : plan_trajectory(plan, k).end_time();
    DoseOptions o = options.dose;
    o.t_begin = t_prev;
    o.t_end = t_k;
    const DoseMap part = accumulate(scene, full, model, o, options.policy);
    const auto v = part.dose.values();
    for (std::size_t q = 0; q < dose.size(); ++q) dose[q] += v[q];
    t_prev = t_k;
    const Coverage c = coverage_of(dose, targets, d90, target_survival);
    plan.coverage_by_pass.push_back(c.fraction);
    if (c.fraction >= options.coverage_goal) {
      // Confirm on the exact replay path before accepting.
      plan.passes = k;
      const auto rep = verify_plan(scene, plan, model, d90, std::nullopt, options);
      if (rep.coverage_fraction >= options.coverage_goal) {
        chosen = k;
        met = true;
        break;
      }
    }
  }
  plan.passes = chosen;
  plan.complete = met;
  plan.trajectory = plan_trajectory(plan, chosen);
  const auto rep = verify_plan(scene, plan, model, d90, std::nullopt, options);
  plan.verification = rep.survival;
  plan.coverage_fraction = rep.coverage_fraction;
  plan.report = rep;
  return plan;
}

}  // namespace uvcplan
