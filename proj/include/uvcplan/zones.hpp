#pragma once

#include <map>
#include <string>
#include <vector>

#include "uvcplan/irradiance.hpp"
#include "uvcplan/scene.hpp"

namespace uvcplan {

struct Polyline {
  std::vector<Vec2> points;
  bool closed{false};
};

/// Iso-line of a field. Closed polylines are stored without repeating the
/// first vertex and are oriented with the region (value >= threshold) on the
/// left, so their shoelace area is positive around a peak.
struct Contour {
  std::string label;
  double threshold{0.0};
  std::vector<Polyline> polylines;

  bool empty() const { return polylines.empty(); }
  /// Signed area enclosed by the closed polylines (holes subtract).
  double area() const;
  /// Even-odd containment over all closed polylines; points within `tol` of
  /// an edge count as inside.
  bool contains(Vec2 p, double tol = 1e-6) const;
};

/// Marching squares over the lattice of cell centres. Cells outside the grid
/// and excluded cells count as 0, so every contour closes. Throws
/// ValidationError for NaN values or threshold <= 0.
Contour extract_contour(const ScalarField& field, double threshold, std::string label = {});

struct ZoneLevel {
  std::string label;
  double threshold{0.0};
};

/// Contour per level plus the "butterfly" union of the field with its mirror
/// image about the robot axis y = axis_y.
struct DisinfectionZone {
  double axis_y{0.0};
  std::vector<Contour> levels;    ///< in input order, thresholds decreasing
  std::vector<Contour> butterfly;  ///< same levels, mirrored union

  const Contour& level(const std::string& label) const;
  const Contour& butterfly_level(const std::string& label) const;
};

/// Thresholds must be strictly decreasing in list order.
DisinfectionZone zone_from_levels(const ScalarField& field, const std::vector<ZoneLevel>& levels, double axis_y);

/// Containment in the butterfly polygon of `label`. Throws ValidationError
/// for an unknown label.
bool point_in_zone(const DisinfectionZone& zone, Vec2 p, const std::string& label);

/// Field max(f(x, y), f(x, 2a - y)). When the grid is symmetric about a the
/// rows are flipped exactly; otherwise the mirror is bilinearly resampled
/// with 0 outside.
ScalarField mirror_union(const ScalarField& field, double axis_y);

/// Bilinear interpolation through cell centres (0 outside and on excluded cells).
double sample_bilinear(const ScalarField& field, Vec2 p);

/// Distances along the ray origin + t*dir (dir unit, t > 0) at which the
/// contour's edges are crossed, ascending.
std::vector<double> ray_crossings(const Contour& c, Vec2 origin, Vec2 dir);

/// Luminosity set-up used to reconstruct the zone: phones lying face up on
/// the floor around one side of the robot.
struct LuminositySetup {
  std::vector<double> sensor_heights{0.0, 0.0, 0.0};  ///< one per phone (m)
  double cell_size{0.2};
  int cells_along{21};    ///< centred on the robot, so one column lies on the lamp normal
  int cells_lateral{12};
  double first_offset{0.15};  ///< gap between the body side and the first cell edge (m)
};

/// Robot at the origin heading +x; the grid covers the left side only.
ScalarField simulate_luminosity(const IrradianceModel& model, const RobotModel& robot, const LuminositySetup& setup,
                                int workers = 1);

/// Default levels: the normalized value at 0.3 m and 0.6 m from the lamp
/// plane on the lamp normal, plus the fixed 0.54 outer border.
std::vector<ZoneLevel> default_levels(const ScalarField& luminosity, const RobotModel& robot,
                                      const std::string& mid_label = "86.36%");

}  // namespace uvcplan
