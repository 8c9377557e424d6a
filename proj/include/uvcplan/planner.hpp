#pragma once

#include <optional>
#include <vector>

#include "uvcplan/dose.hpp"
#include "uvcplan/irradiance.hpp"
#include "uvcplan/scene.hpp"

namespace uvcplan {

/// Motion limits for turning a waypoint polyline into a timed trajectory.
/// Accelerations of 0 mean instantaneous speed changes.
struct MotionProfile {
  double speed{0.14};      ///< m/s
  double accel{0.0};       ///< m/s²
  double turn_rate{0.5};   ///< rad/s, rotation in place at waypoints
  double turn_accel{0.0};  ///< rad/s²
  double sample_dt{0.02};  ///< pose spacing inside acceleration phases (s)

  void validate() const;
};

/// Drives straight between consecutive waypoints and rotates in place to the
/// next leg's heading at each interior waypoint. The robot starts facing the
/// first leg unless `start_heading` is given, in which case it first rotates
/// from there. Without accelerations, legs carry stated speeds.
Trajectory build_trajectory(const std::vector<Vec2>& waypoints, const MotionProfile& profile, double start_time = 0.0,
                            std::optional<double> start_heading = std::nullopt, const std::string& id = "trajectory");

struct PlannerOptions {
  double lane_pitch{1.2};
  double turn_rate{0.5};
  int pass_cap{12};
  double coverage_goal{0.99};
  bool headlands{true};  ///< drive along both end walls once per circuit
  DoseOptions dose{};
  SafetyPolicy policy{};

  void validate() const;
};

/// One lane interval: the robot drives from `from` to `to`.
struct LaneRun {
  int lane{0};
  Vec2 from{};
  Vec2 to{};
};

struct VerificationReport {
  ScalarField survival;
  ScalarField dose;
  double coverage_fraction{0.0};
  double worst_survival{0.0};
  std::size_t target_cells{0};
  std::vector<CellIndex> failing_cells;
  std::vector<CellIndex> shadow_cells;  ///< failing cells with no line of sight to the path
  double total_time{0.0};
  double lamp_energy_wh{0.0};
  std::vector<MaskEvent> mask_history;
};

struct CoveragePlan {
  std::vector<LaneRun> runs;     ///< one circuit, in driving order
  std::vector<Vec2> circuit;     ///< waypoints of one circuit: headland, lanes, headland
  std::vector<double> lane_positions;
  bool lanes_along_x{true};
  double speed{0.14};
  double turn_rate{0.5};
  double lane_pitch{1.2};
  int passes{1};
  bool complete{false};          ///< target met within the pass cap
  double target_survival{0.1};
  double d90{0.0};
  Trajectory trajectory;         ///< all passes
  ScalarField verification;      ///< survival
  VerificationReport report;     ///< full verification of the chosen pass count
  double coverage_fraction{0.0};
  std::vector<double> coverage_by_pass;  ///< fraction after 1..passes_tried
};

/// Waypoints for `passes` circuits, odd circuits forward and even ones reversed.
std::vector<Vec2> pass_waypoints(const CoveragePlan& plan, int passes);

/// Trajectory of `passes` circuits at the plan's speed and turn rate.
Trajectory plan_trajectory(const CoveragePlan& plan, int passes);

/// Cells swept by the body anywhere on the circuit geometry, including the
/// turnarounds at both ends.
std::vector<std::uint8_t> circuit_footprint(const Scene& scene, const CoveragePlan& plan);

/// Free cells in the start's 4-connected component, minus circuit_footprint.
std::vector<std::uint8_t> target_cells(const Scene& scene, const CoveragePlan& plan);

/// Lanes and circuit only (no verification). Throws UnreachableError when the
/// free space is disconnected or a lane cannot be reached.
CoveragePlan layout_lanes(const Scene& scene, double speed, const PlannerOptions& options = {});

CoveragePlan plan_coverage(const Scene& scene, double target_survival, double speed, const IrradianceModel& model,
                           double d90, const PlannerOptions& options = {});

/// Replays the plan's trajectory with the given human tracks (nullopt keeps
/// the scene's own).
VerificationReport verify_plan(const Scene& scene, const CoveragePlan& plan, const IrradianceModel& model, double d90,
                               const std::optional<std::vector<HumanTrack>>& humans = std::nullopt,
                               const PlannerOptions& options = {});

/// Report for an already accumulated dose map. The survival map keeps the
/// dose map's exclusions; statistics cover target_cells only.
VerificationReport evaluate_dose(const Scene& scene, const CoveragePlan& plan, const DoseMap& dose, double d90,
                                 const Trajectory& path);

/// Clearance of p from occupied cells and the map border (m).
double clearance(const Scene& scene, Vec2 p);

}  // namespace uvcplan
