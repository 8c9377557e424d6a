#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uvcplan/geometry.hpp"

namespace uvcplan {

struct CellIndex {
  int i{0};  ///< column (x)
  int j{0};  ///< row (y)
  constexpr bool operator==(const CellIndex&) const = default;
};

/// Uniform axis-aligned grid. Cell (0,0) has its lower-left corner at `origin`;
/// storage is row-major with x varying fastest.
struct GridSpec {
  Vec2 origin{};
  double cell_size{0.2};
  int width{1};
  int height{1};

  void validate() const;

  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(width) + static_cast<std::size_t>(i);
  }
  std::size_t index(CellIndex c) const { return index(c.i, c.j); }
  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < width && j < height; }
  Vec2 cell_center(int i, int j) const {
    return {origin.x + (i + 0.5) * cell_size, origin.y + (j + 0.5) * cell_size};
  }
  Vec2 cell_center(CellIndex c) const { return cell_center(c.i, c.j); }
  Vec2 max_corner() const { return {origin.x + width * cell_size, origin.y + height * cell_size}; }

  /// Containing cell, or nullopt outside the grid. The max edges are exclusive.
  std::optional<CellIndex> world_to_cell(Vec2 p) const;

  bool operator==(const GridSpec&) const = default;
};

enum class Unit { irradiance, normalized_luminosity, dose, survival, cfu };

std::string_view unit_tag(Unit u);
Unit parse_unit(std::string_view tag);

/// Per-cell non-negative values on a grid. Cells flagged in `excluded` carry no
/// defined value (robot body, obstacles) and are skipped by statistics.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(GridSpec spec, Unit unit, double fill = 0.0);

  const GridSpec& spec() const { return spec_; }
  Unit unit() const { return unit_; }
  void set_unit(Unit u) { unit_ = u; }

  double& at(int i, int j) { return values_[spec_.index(i, j)]; }
  double at(int i, int j) const { return values_[spec_.index(i, j)]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool excluded(int i, int j) const { return excluded_[spec_.index(i, j)] != 0; }
  bool excluded(std::size_t k) const { return excluded_[k] != 0; }
  void set_excluded(std::size_t k, bool v) { excluded_[k] = v ? 1 : 0; }
  std::span<const std::uint8_t> excluded_mask() const { return excluded_; }

  /// Largest value over non-excluded cells (0 for an all-excluded field).
  double max_value() const;
  std::size_t valid_count() const;

  /// Checks the unit-specific invariants (non-negative, survival in [0,1]).
  void validate() const;

 private:
  GridSpec spec_{};
  Unit unit_{Unit::irradiance};
  std::vector<double> values_;
  std::vector<std::uint8_t> excluded_;
};

enum class Side { left, right };

/// One side's lamp array. Lamps are vertical line sources spaced along the
/// robot axis and centred on it.
struct LampBank {
  Side side{Side::left};
  int lamp_count{4};
  double lamp_length{0.70};
  double center_height{0.83};
  double bottom_height{0.48};
  double per_lamp_power_at_1m{100.0};  ///< µW/cm²
  double aperture_deg{180.0};
  bool enabled{true};
  double lamp_spacing{0.05};
  double lamp_diameter{0.026};
  double electrical_power_w{30.0};  ///< per lamp

  void validate() const;
  double top_height() const { return bottom_height + lamp_length; }
  /// Position of lamp k along the robot axis.
  double lamp_offset(int k) const { return (k - 0.5 * (lamp_count - 1)) * lamp_spacing; }
};

/// Opening in the body side wall through which a bank emits. The window plane
/// is the body side (|lateral| = body_halfwidth); lamps sit `setback` behind it
/// and the reflector sheet `reflector_gap` behind the lamps.
struct ReflectorWindow {
  double half_width{0.15};
  double bottom{0.40};
  double top{1.26};
  double setback{0.05};
  double reflector_gap{0.02};
};

struct RobotModel {
  std::array<LampBank, 2> banks{LampBank{Side::left}, LampBank{Side::right}};
  // Footprint dimensions are not published for the reference robot; these
  // defaults are configuration, not measurements.
  double body_halfwidth{0.25};
  double body_halflength{0.25};
  ReflectorWindow window{};

  void validate() const;

  const LampBank& bank(Side s) const { return banks[s == Side::left ? 0 : 1]; }
  LampBank& bank(Side s) { return banks[s == Side::left ? 0 : 1]; }
  /// Lateral distance of the lamp axes from the robot centreline.
  double lamp_plane_offset() const { return body_halfwidth - window.setback; }
  bool inside_body(double along, double lateral) const {
    return std::abs(along) <= body_halflength && std::abs(lateral) <= body_halfwidth;
  }
  /// Total electrical lamp power of one bank (W).
  double bank_power_w(Side s) const { return bank(s).electrical_power_w * bank(s).lamp_count; }
};

struct Pose {
  Vec2 position{};
  double heading{0.0};  ///< rad, direction of the robot's forward axis
  double time{0.0};     ///< s
};

/// World point expressed in the frame of a robot at `pose`.
inline RobotPoint to_robot_frame(const Pose& pose, Vec2 p, double z) {
  const Vec2 d = p - pose.position;
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  return {d.x * c + d.y * s, -d.x * s + d.y * c, z};
}

inline Vec2 to_world(const Pose& pose, double along, double lateral) {
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  return {pose.position.x + along * c - lateral * s, pose.position.y + along * s + lateral * c};
}

/// Time-ordered poses, linearly interpolated in position and (unwrapped) heading.
struct Trajectory {
  std::string id{"trajectory"};
  std::vector<Pose> poses;
  /// Optional stated speed of each outgoing segment (m/s); empty when not given.
  std::vector<double> stated_speeds;

  void validate() const;
  double start_time() const { return poses.empty() ? 0.0 : poses.front().time; }
  double end_time() const { return poses.empty() ? 0.0 : poses.back().time; }
  double duration() const { return end_time() - start_time(); }
  Pose pose_at(double t) const;
  double path_length() const;
};

struct HumanSample {
  double time{0.0};
  Vec2 position{};
};

/// A tracked person. Active from the first sample until `exit_time`; without
/// an exit time the last known position persists.
struct HumanTrack {
  std::string id;
  std::vector<HumanSample> samples;
  std::optional<double> exit_time;

  void validate() const;
  std::optional<Vec2> position_at(double t) const;
};

/// Positions of every track active at time t.
std::vector<Vec2> active_humans(std::span<const HumanTrack> tracks, double t);

struct Scene {
  GridSpec grid{};
  std::vector<std::uint8_t> occupied;  ///< one flag per cell
  RobotModel robot{};
  std::vector<HumanTrack> humans;
  std::optional<Pose> robot_pose;  ///< optional placement for single-pose commands

  void validate() const;
  bool is_occupied(int i, int j) const { return occupied[grid.index(i, j)] != 0; }
  bool has_obstacles() const;
  std::size_t free_count() const;
  /// True when p lies in a free cell of the grid.
  bool is_free(Vec2 p) const;

  static Scene empty_room(double width_m, double height_m, double cell_size);
};

Scene parse_scene(std::string_view text, const std::string& source = "<scene>",
                  const std::filesystem::path& base_dir = {});
Scene load_scene(const std::filesystem::path& path);
std::string write_scene(const Scene& scene);

/// Reflects a scene about the horizontal line y = axis_y and swaps bank sides.
Scene mirror_scene(const Scene& scene, double axis_y);

// Track/trajectory CSV: id,t_s,x_m,y_m[,heading_rad][,speed_mps][,exit_t_s].
// The id column may be omitted for a single trajectory.
std::vector<HumanTrack> parse_human_tracks(std::string_view text, const std::string& source = "<tracks>");
std::vector<HumanTrack> load_human_tracks(const std::filesystem::path& path);
std::vector<Trajectory> parse_trajectories(std::string_view text, const std::string& source = "<trajectory>");
/// Loads a file holding exactly one trajectory.
Trajectory load_trajectory(const std::filesystem::path& path);
std::string format_trajectory_csv(const Trajectory& trajectory);

}  // namespace uvcplan
