#include "uvcplan/zones.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "uvcplan/error.hpp"

namespace uvcplan {

// ---------------------------------------------------------------------------
// Contour geometry

namespace {

double shoelace(const std::vector<Vec2>& pts) {
  double a = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) a += cross(pts[k], pts[(k + 1) % pts.size()]);
  return 0.5 * a;
}

}  // namespace

double Contour::area() const {
  double a = 0.0;
  for (const auto& p : polylines)
    if (p.closed) a += shoelace(p.points);
  return a;
}

bool Contour::contains(Vec2 p, double tol) const {
  bool inside = false;
  for (const auto& pl : polylines) {
    if (!pl.closed) continue;
    const auto& v = pl.points;
    const std::size_t n = v.size();
    for (std::size_t a = 0, b = n - 1; a < n; b = a++) {
      if (point_segment_distance(p, v[a], v[b]) <= tol) return true;
      if ((v[a].y > p.y) != (v[b].y > p.y)) {
        const double x = v[a].x + (p.y - v[a].y) * (v[b].x - v[a].x) / (v[b].y - v[a].y);
        if (p.x < x) inside = !inside;
      }
    }
  }
  return inside;
}

std::vector<double> ray_crossings(const Contour& c, Vec2 origin, Vec2 dir) {
  std::vector<double> out;
  for (const auto& pl : c.polylines) {
    const auto& v = pl.points;
    const std::size_t n = v.size();
    const std::size_t edges = pl.closed ? n : (n ? n - 1 : 0);
    for (std::size_t k = 0; k < edges; ++k) {
      const Vec2 a = v[k];
      const Vec2 b = v[(k + 1) % n];
      const Vec2 e = b - a;
      const double den = cross(dir, e);
      if (den == 0.0) continue;
      const Vec2 w = a - origin;
      const double t = cross(w, e) / den;
      const double u = cross(w, dir) / den;
      if (t > 0.0 && u >= 0.0 && u <= 1.0) out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  // A ray through a vertex meets both adjoining edges.
  out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) <= 1e-9; }), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Marching squares

namespace {

struct Lattice {
  const ScalarField& f;
  double value(int i, int j) const {
    const auto& g = f.spec();
    if (!g.in_bounds(i, j) || f.excluded(i, j)) return 0.0;
    return f.at(i, j);
  }
  Vec2 node(int i, int j) const { return f.spec().cell_center(i, j); }
};

struct Segment {
  std::uint64_t from;
  std::uint64_t to;
  Vec2 a;
  Vec2 b;
};

}  // namespace

Contour extract_contour(const ScalarField& field, double threshold, std::string label) {
  if (!(std::isfinite(threshold) && threshold > 0.0)) throw ValidationError("threshold", "must be finite and > 0");
  const auto& g = field.spec();
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!field.excluded(k) && std::isnan(field.values()[k])) throw ValidationError("field", "contains NaN cells");

  Contour out;
  out.label = std::move(label);
  out.threshold = threshold;
  const Lattice lat{field};
  const std::uint64_t rows = static_cast<std::uint64_t>(g.height) + 3;
  // Edge between lattice nodes; type 0 = horizontal from (i,j), 1 = vertical from (i,j).
  auto key = [rows](int type, int i, int j) {
    return ((static_cast<std::uint64_t>(i + 2) * rows + static_cast<std::uint64_t>(j + 2)) << 1) |
           static_cast<std::uint64_t>(type);
  };
  auto interp = [threshold](Vec2 pa, Vec2 pb, double va, double vb) {
    double t = (threshold - va) / (vb - va);
    t = std::clamp(t, 1e-9, 1.0 - 1e-9);
    return pa + (pb - pa) * t;
  };

  std::vector<Segment> segs;
  for (int j = -1; j < g.height; ++j) {
    for (int i = -1; i < g.width; ++i) {
      const double v[4] = {lat.value(i, j), lat.value(i + 1, j), lat.value(i + 1, j + 1), lat.value(i, j + 1)};
      const bool in[4] = {v[0] >= threshold, v[1] >= threshold, v[2] >= threshold, v[3] >= threshold};
      const int code = in[0] | (in[1] << 1) | (in[2] << 2) | (in[3] << 3);
      if (code == 0 || code == 15) continue;
      const Vec2 c[4] = {lat.node(i, j), lat.node(i + 1, j), lat.node(i + 1, j + 1), lat.node(i, j + 1)};
      // Edge e joins corners (ea[e], eb[e]).
      static constexpr int ea[4] = {0, 1, 3, 0};
      static constexpr int eb[4] = {1, 2, 2, 3};
      const std::uint64_t ek[4] = {key(0, i, j), key(1, i + 1, j), key(0, i, j + 1), key(1, i, j)};
      auto point = [&](int e) { return interp(c[ea[e]], c[eb[e]], v[ea[e]], v[eb[e]]); };

      std::vector<std::pair<int, int>> pairs;
      if (code == 5 || code == 10) {
        const bool centre_in = 0.25 * (v[0] + v[1] + v[2] + v[3]) >= threshold;
        // Each pair isolates one corner: e3-e0 -> c0, e0-e1 -> c1, e1-e2 -> c2, e2-e3 -> c3.
        const bool isolate_even = (code == 5) != centre_in;  // isolate c0 and c2
        if (isolate_even) pairs = {{3, 0}, {1, 2}};
        else pairs = {{0, 1}, {2, 3}};
      } else {
        int e1 = -1;
        int e2 = -1;
        for (int e = 0; e < 4; ++e)
          if (in[ea[e]] != in[eb[e]]) (e1 < 0 ? e1 : e2) = e;
        pairs = {{e1, e2}};
      }
      for (auto [p, q] : pairs) {
        Vec2 a = point(p);
        Vec2 b = point(q);
        std::uint64_t ka = ek[p];
        std::uint64_t kb = ek[q];
        // Reference corner: the one shared by both edges, or corner 0 for opposite edges.
        int ref = 0;
        for (int corner = 0; corner < 4; ++corner) {
          const bool on_p = ea[p] == corner || eb[p] == corner;
          const bool on_q = ea[q] == corner || eb[q] == corner;
          if (on_p && on_q) ref = corner;
        }
        const double s = cross(b - a, c[ref] - a);
        if ((s > 0.0) != in[ref]) {
          std::swap(a, b);
          std::swap(ka, kb);
        }
        segs.push_back({ka, kb, a, b});
      }
    }
  }

  std::unordered_map<std::uint64_t, std::size_t> by_start;
  by_start.reserve(segs.size() * 2);
  for (std::size_t k = 0; k < segs.size(); ++k) by_start.emplace(segs[k].from, k);
  std::vector<char> used(segs.size(), 0);
  for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
    if (used[s0]) continue;
    Polyline pl;
    std::size_t s = s0;
    while (true) {
      used[s] = 1;
      pl.points.push_back(segs[s].a);
      const auto it = by_start.find(segs[s].to);
      if (it == by_start.end()) {
        pl.points.push_back(segs[s].b);
        break;
      }
      if (it->second == s0) {
        pl.closed = true;
        break;
      }
      if (used[it->second]) {
        pl.points.push_back(segs[s].b);
        break;
      }
      s = it->second;
    }
    out.polylines.push_back(std::move(pl));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Zones

const Contour& DisinfectionZone::level(const std::string& label) const {
  for (const auto& c : levels)
    if (c.label == label) return c;
  throw ValidationError("level", "unknown level label '" + label + "'");
}

const Contour& DisinfectionZone::butterfly_level(const std::string& label) const {
  for (const auto& c : butterfly)
    if (c.label == label) return c;
  throw ValidationError("level", "unknown level label '" + label + "'");
}

double sample_bilinear(const ScalarField& field, Vec2 p) {
  const auto& g = field.spec();
  const double fx = (p.x - g.origin.x) / g.cell_size - 0.5;
  const double fy = (p.y - g.origin.y) / g.cell_size - 0.5;
  const int i = static_cast<int>(std::floor(fx));
  const int j = static_cast<int>(std::floor(fy));
  const double tx = fx - i;
  const double ty = fy - j;
  auto v = [&](int a, int b) {
    if (!g.in_bounds(a, b) || field.excluded(a, b)) return 0.0;
    return field.at(a, b);
  };
  return (1 - ty) * ((1 - tx) * v(i, j) + tx * v(i + 1, j)) + ty * ((1 - tx) * v(i, j + 1) + tx * v(i + 1, j + 1));
}

ScalarField mirror_union(const ScalarField& field, double axis_y) {
  const auto& g = field.spec();
  const double cs = g.cell_size;
  const double top = g.origin.y + g.height * cs;
  const double lo = std::min(g.origin.y, 2.0 * axis_y - top);
  const double hi = std::max(top, 2.0 * axis_y - g.origin.y);
  // Extend the lattice by whole cells so original cell centres are kept.
  const int below = static_cast<int>(std::ceil((g.origin.y - lo) / cs - 1e-9));
  const int above = static_cast<int>(std::ceil((hi - top) / cs - 1e-9));
  GridSpec u = g;
  u.origin.y = g.origin.y - below * cs;
  u.height = g.height + below + above;
  ScalarField out(u, field.unit());
  auto vals = out.values();
  for (int j = 0; j < u.height; ++j) {
    const int jo = j - below;  // row in the original grid
    const Vec2 c0 = u.cell_center(0, j);
    const double my = 2.0 * axis_y - c0.y;
    const double fm = (my - g.origin.y) / cs - 0.5;
    const int jm = static_cast<int>(std::lround(fm));
    const bool aligned = std::abs(fm - jm) < 1e-6;
    for (int i = 0; i < u.width; ++i) {
      const double a = (jo >= 0 && jo < g.height && !field.excluded(i, jo)) ? field.at(i, jo) : 0.0;
      double b = 0.0;
      if (aligned) {
        if (jm >= 0 && jm < g.height && !field.excluded(i, jm)) b = field.at(i, jm);
      } else {
        b = sample_bilinear(field, {u.cell_center(i, j).x, my});
      }
      vals[u.index(i, j)] = std::max(a, b);
    }
  }
  return out;
}

DisinfectionZone zone_from_levels(const ScalarField& field, const std::vector<ZoneLevel>& levels, double axis_y) {
  if (levels.empty()) throw ValidationError("levels", "at least one level required");
  for (std::size_t k = 1; k < levels.size(); ++k)
    if (!(levels[k].threshold < levels[k - 1].threshold))
      throw ValidationError("levels", "thresholds must be strictly decreasing");
  for (std::size_t a = 0; a < levels.size(); ++a)
    for (std::size_t b = a + 1; b < levels.size(); ++b)
      if (levels[a].label == levels[b].label) throw ValidationError("levels", "duplicate label '" + levels[a].label + "'");
  DisinfectionZone z;
  z.axis_y = axis_y;
  const ScalarField u = mirror_union(field, axis_y);
  for (const auto& l : levels) {
    z.levels.push_back(extract_contour(field, l.threshold, l.label));
    z.butterfly.push_back(extract_contour(u, l.threshold, l.label));
  }
  return z;
}

bool point_in_zone(const DisinfectionZone& zone, Vec2 p, const std::string& label) {
  return zone.butterfly_level(label).contains(p);
}

// ---------------------------------------------------------------------------
// Luminosity reconstruction

ScalarField simulate_luminosity(const IrradianceModel& model, const RobotModel& robot, const LuminositySetup& setup,
                                int workers) {
  if (setup.sensor_heights.empty()) throw ValidationError("sensor_heights", "at least one sensor required");
  if (!(setup.cell_size > 0.0)) throw ValidationError("cell_size", "must be > 0");
  if (setup.cells_along < 1 || setup.cells_lateral < 1) throw ValidationError("cells", "must be >= 1");
  if (!(setup.first_offset >= 0.0)) throw ValidationError("first_offset", "must be >= 0");
  GridSpec g;
  g.cell_size = setup.cell_size;
  g.width = setup.cells_along;
  g.height = setup.cells_lateral;
  g.origin = {-0.5 * setup.cells_along * setup.cell_size, robot.body_halfwidth + setup.first_offset};
  IrradianceModel m = model;
  m.receiver = Receiver::planar_up;
  const Pose pose{};
  std::vector<ScalarField> fields;
  for (double h : setup.sensor_heights) {
    if (!(std::isfinite(h) && h >= 0.0)) throw ValidationError("sensor_heights", "must be >= 0");
    fields.push_back(field(m, robot, g, pose, h, BankMask{true, false}, nullptr, workers));
  }
  return normalize_and_sum(fields);
}

std::vector<ZoneLevel> default_levels(const ScalarField& luminosity, const RobotModel& robot,
                                      const std::string& mid_label) {
  const double lp = robot.lamp_plane_offset();
  return {{"100%", sample_bilinear(luminosity, {0.0, lp + 0.3})},
          {mid_label, sample_bilinear(luminosity, {0.0, lp + 0.6})},
          {"84.6%", 0.54}};
}

}  // namespace uvcplan
