#include "uvcplan/irradiance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "uvcplan/error.hpp"
#include "uvcplan/parallel.hpp"

namespace uvcplan {

void IrradianceModel::validate() const {
  if (segment_count < 8) throw ValidationError("segment_count", "must be >= 8");
  if (!(std::isfinite(reflectance) && reflectance >= 0.0 && reflectance <= 1.0))
    throw ValidationError("reflectance", "must lie in [0, 1]");
  if (!(std::isfinite(calibration_constant) && calibration_constant >= 0.0))
    throw ValidationError("calibration_constant", "must be >= 0");
}

namespace {

// One vertical line source at (x_s, v_s) seen from (x_p, v_p, z_p), all in the
// bank's own frame (v measured outward). Returns the uncalibrated integral
// averaged over the lamp length.
double line_source(const IrradianceModel& m, const RobotModel& r, const LampBank& b, double x_s, double v_s,
                   double x_p, double v_p, double z_p) {
  const double hw = r.body_halfwidth;
  const double n = v_p - v_s;
  const double alpha = (hw - v_s) / n;  // fraction of the ray spent behind the window plane
  const double beta = 1.0 - alpha;
  const auto& w = r.window;

  // Horizontal clipping at the window's side edges, softened by the lamp diameter.
  double lateral = 0.0;
  if (b.lamp_diameter > 0.0) {
    const double lo = std::max(x_s - 0.5 * b.lamp_diameter, (-w.half_width - alpha * x_p) / beta);
    const double hi = std::min(x_s + 0.5 * b.lamp_diameter, (w.half_width - alpha * x_p) / beta);
    lateral = hi > lo ? (hi - lo) / b.lamp_diameter : 0.0;
  } else {
    lateral = std::abs(x_s * beta + alpha * x_p) <= w.half_width ? 1.0 : 0.0;
  }
  if (lateral <= 0.0) return 0.0;

  const double dx = x_p - x_s;
  if (b.aperture_deg < 180.0 && std::atan2(std::abs(dx), n) > 0.5 * b.aperture_deg * std::numbers::pi / 180.0)
    return 0.0;

  // Vertical clipping: the part of the lamp whose ray passes the window's sill and lintel.
  const double zlo = std::max(b.bottom_height, (w.bottom - alpha * z_p) / beta);
  const double zhi = std::min(b.top_height(), (w.top - alpha * z_p) / beta);
  if (!(zhi > zlo)) return 0.0;

  const double h2 = dx * dx + n * n;
  const int segs = m.segment_count;
  const double step = (zhi - zlo) / segs;
  const double z0 = zlo + 0.5 * step - z_p;
  // Terms go through a buffer so the loop body has no reduction and vectorizes.
  constexpr int kChunk = 64;
  double buf[kChunk];
  double sum = 0.0;
  const bool up = m.receiver == Receiver::planar_up;
  for (int base = 0; base < segs; base += kChunk) {
    const int cnt = std::min(kChunk, segs - base);
    if (!up) {
      for (int s = 0; s < cnt; ++s) {
        const double dz = z0 + (base + s) * step;
        const double r2 = h2 + dz * dz;
        buf[s] = 1.0 / (r2 * std::sqrt(r2));
      }
    } else {
      for (int s = 0; s < cnt; ++s) {
        const double dz = z0 + (base + s) * step;
        const double r2 = h2 + dz * dz;
        buf[s] = dz > 0.0 ? dz / (r2 * r2) : 0.0;
      }
    }
    for (int s = 0; s < cnt; ++s) sum += buf[s];
  }
  return n * sum * step / b.lamp_length * lateral;
}

double lamp_raw(const IrradianceModel& m, const RobotModel& r, const LampBank& b, int k, double x_p, double v_p,
                double z_p) {
  const double x_s = b.lamp_offset(k);
  const double v_s = r.lamp_plane_offset();
  double raw = line_source(m, r, b, x_s, v_s, x_p, v_p, z_p);
  if (m.reflectance > 0.0)
    raw += m.reflectance * line_source(m, r, b, x_s, v_s - 2.0 * r.window.reflector_gap, x_p, v_p, z_p);
  return raw;
}

void check_domain(const RobotModel& r, const RobotPoint& p) {
  if (r.inside_body(p.along, p.lateral)) throw DomainError("point lies inside the robot body");
}

void check_calibrated(const IrradianceModel& m) {
  if (!m.calibrated()) throw ValidationError("calibration_constant", "model is not calibrated");
}

// Outward coordinate of p for a bank.
double outward(Side s, double lateral) { return s == Side::left ? lateral : -lateral; }

}  // namespace

RobotPoint calibration_point(const RobotModel& robot) {
  return {0.0, robot.lamp_plane_offset() + 1.0, robot.bank(Side::left).center_height};
}

IrradianceModel calibrate(IrradianceModel model, const RobotModel& robot) {
  model.validate();
  robot.validate();
  IrradianceModel m = model;
  m.receiver = Receiver::spherical;
  const LampBank& b = robot.bank(Side::left);
  const RobotPoint p = calibration_point(robot);
  double raw = 0.0;
  for (int k = 0; k < b.lamp_count; ++k) raw += lamp_raw(m, robot, b, k, p.along, p.lateral, p.z);
  if (!(raw > 0.0)) throw ValidationError("window", "calibration point receives no light");
  model.calibration_constant = b.lamp_count / raw;
  return model;
}

double lamp_fluence(const IrradianceModel& model, const RobotModel& robot, Side side, int k, const RobotPoint& p) {
  check_calibrated(model);
  check_domain(robot, p);
  const LampBank& b = robot.bank(side);
  if (k < 0 || k >= b.lamp_count) throw ValidationError("lamp_index", "out of range");
  const double v = outward(side, p.lateral);
  if (v <= robot.body_halfwidth) return 0.0;
  return model.calibration_constant * b.per_lamp_power_at_1m * lamp_raw(model, robot, b, k, p.along, v, p.z);
}

double bank_fluence(const IrradianceModel& model, const RobotModel& robot, Side side, const RobotPoint& p) {
  check_calibrated(model);
  check_domain(robot, p);
  const LampBank& b = robot.bank(side);
  if (!b.enabled) return 0.0;
  const double v = outward(side, p.lateral);
  if (v <= robot.body_halfwidth) return 0.0;
  double raw = 0.0;
  for (int k = 0; k < b.lamp_count; ++k) raw += lamp_raw(model, robot, b, k, p.along, v, p.z);
  return model.calibration_constant * b.per_lamp_power_at_1m * raw;
}

double fluence_at(const IrradianceModel& model, const RobotModel& robot, const RobotPoint& p, BankMask mask) {
  check_calibrated(model);
  check_domain(robot, p);
  double f = 0.0;
  if (mask.left) f += bank_fluence(model, robot, Side::left, p);
  if (mask.right) f += bank_fluence(model, robot, Side::right, p);
  return f;
}

bool line_of_sight(const Scene& scene, Vec2 a, Vec2 b) {
  const auto& g = scene.grid;
  const double ax = (a.x - g.origin.x) / g.cell_size;
  const double ay = (a.y - g.origin.y) / g.cell_size;
  const double bx = (b.x - g.origin.x) / g.cell_size;
  const double by = (b.y - g.origin.y) / g.cell_size;
  int i = static_cast<int>(std::floor(ax));
  int j = static_cast<int>(std::floor(ay));
  const int ie = static_cast<int>(std::floor(bx));
  const int je = static_cast<int>(std::floor(by));
  const double dx = bx - ax;
  const double dy = by - ay;
  const int si = dx > 0 ? 1 : -1;
  const int sj = dy > 0 ? 1 : -1;
  const double inf = std::numeric_limits<double>::infinity();
  const double tdx = dx != 0.0 ? std::abs(1.0 / dx) : inf;
  const double tdy = dy != 0.0 ? std::abs(1.0 / dy) : inf;
  double tx = dx != 0.0 ? ((dx > 0 ? std::floor(ax) + 1.0 - ax : ax - std::floor(ax)) * tdx) : inf;
  double ty = dy != 0.0 ? ((dy > 0 ? std::floor(ay) + 1.0 - ay : ay - std::floor(ay)) * tdy) : inf;
  const int max_steps = std::abs(ie - i) + std::abs(je - j);
  for (int s = 0; s < max_steps; ++s) {
    if (tx < ty) {
      i += si;
      tx += tdx;
    } else {
      j += sj;
      ty += tdy;
    }
    if (i == ie && j == je) return true;
    if (g.in_bounds(i, j) && scene.is_occupied(i, j)) return false;
  }
  return true;
}

double fluence_at(const IrradianceModel& model, const RobotModel& robot, const Pose& pose, Vec2 p, double height,
                  BankMask mask, const Scene* scene) {
  const RobotPoint rp = to_robot_frame(pose, p, height);
  if (scene == nullptr || !scene->has_obstacles()) return fluence_at(model, robot, rp, mask);
  check_calibrated(model);
  check_domain(robot, rp);
  double f = 0.0;
  for (Side side : {Side::left, Side::right}) {
    const LampBank& b = robot.bank(side);
    if (!mask.on(side) || !b.enabled) continue;
    const double v = outward(side, rp.lateral);
    if (v <= robot.body_halfwidth) continue;
    const double sign = side == Side::left ? 1.0 : -1.0;
    double raw = 0.0;
    for (int k = 0; k < b.lamp_count; ++k) {
      const Vec2 lamp = to_world(pose, b.lamp_offset(k), sign * robot.lamp_plane_offset());
      if (!line_of_sight(*scene, lamp, p)) continue;
      raw += lamp_raw(model, robot, b, k, rp.along, v, rp.z);
    }
    f += model.calibration_constant * b.per_lamp_power_at_1m * raw;
  }
  return f;
}

ScalarField field(const IrradianceModel& model, const RobotModel& robot, const GridSpec& spec, const Pose& pose,
                  double height, BankMask mask, const Scene* scene, int workers) {
  model.validate();
  check_calibrated(model);
  robot.validate();
  ScalarField out(spec, Unit::irradiance);
  const bool occl = scene != nullptr && scene->has_obstacles();
  if (occl && !(scene->grid == spec)) throw ValidationError("grid", "field grid must match the scene grid");
  auto values = out.values();
  std::vector<std::uint8_t> excl(spec.size(), 0);
  parallel_for(spec.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const int i = static_cast<int>(k % static_cast<std::size_t>(spec.width));
      const int j = static_cast<int>(k / static_cast<std::size_t>(spec.width));
      const Vec2 c = spec.cell_center(i, j);
      const RobotPoint rp = to_robot_frame(pose, c, height);
      if (robot.inside_body(rp.along, rp.lateral) || (occl && scene->is_occupied(i, j))) {
        excl[k] = 1;
        continue;
      }
      values[k] = fluence_at(model, robot, pose, c, height, mask, occl ? scene : nullptr);
    }
  });
  for (std::size_t k = 0; k < excl.size(); ++k) out.set_excluded(k, excl[k] != 0);
  return out;
}

ScalarField normalize_and_sum(std::span<const ScalarField> fields) {
  if (fields.empty()) throw ValidationError("fields", "at least one field required");
  const GridSpec& spec = fields.front().spec();
  ScalarField out(spec, Unit::normalized_luminosity);
  auto acc = out.values();
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const auto& in = fields[f];
    if (!(in.spec() == spec)) throw ValidationError("fields", "grid specs differ");
    const double m = in.max_value();
    if (!(m > 0.0)) throw ValidationError("fields", "field " + std::to_string(f) + " is all zero");
    const auto v = in.values();
    for (std::size_t k = 0; k < acc.size(); ++k) {
      if (in.excluded(k)) {
        out.set_excluded(k, true);
        continue;
      }
      acc[k] += v[k] / m;
    }
  }
  for (std::size_t k = 0; k < acc.size(); ++k)
    if (out.excluded(k)) acc[k] = 0.0;
  const double m = out.max_value();
  if (!(m > 0.0)) throw ValidationError("fields", "sum is all zero");
  for (auto& v : acc) v /= m;
  return out;
}

}  // namespace uvcplan
