#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uvcplan/irradiance.hpp"
#include "uvcplan/scene.hpp"

namespace uvcplan {

struct SafetyPolicy {
  double danger_radius{3.0};  ///< m
  void validate() const;
};

/// A bank is disabled when a human within danger_radius of the robot centre
/// lies strictly on its side of the robot axis. A human on the axis (within
/// 1e-9 m) disables both banks.
BankMask lamp_mask(const Pose& robot_pose, std::span<const Vec2> humans, const SafetyPolicy& policy);

struct MaskEvent {
  double t{0.0};  ///< start of the step where the state took effect
  bool left_on{true};
  bool right_on{true};
};

struct DoseOptions {
  double dt{0.1};              ///< s
  double height{0.83};         ///< m, height of the exposed surface
  double fan_multiplier{1.0};  ///< scales effective dose
  bool per_bank{false};        ///< also return one map per bank
  bool record_steps{false};    ///< keep the per-step trace
  std::optional<double> t_begin;
  std::optional<double> t_end;
  int workers{1};

  void validate() const;
};

struct DoseStep {
  double t0{0.0};
  double t1{0.0};
  Pose pose{};
  BankMask mask{};
};

struct DoseMap {
  ScalarField dose;  ///< mJ/cm²; footprint and occupied cells excluded
  std::optional<ScalarField> left;
  std::optional<ScalarField> right;
  std::string trajectory_id;
  double t_begin{0.0};
  double duration{0.0};
  std::vector<MaskEvent> mask_history;
  std::vector<DoseStep> steps;  ///< filled when record_steps is set
  double left_on_time{0.0};     ///< s
  double right_on_time{0.0};    ///< s
  double lamp_energy_wh{0.0};
};

/// Cells whose centre the robot body covers at some time in [t0, t1]: one flag
/// per cell. Sampling is geometric (sub-millimetre), independent of dt.
std::vector<std::uint8_t> swept_footprint(const GridSpec& grid, const RobotModel& robot, const Trajectory& trajectory,
                                          double t0, double t1);

/// Integrates fluence over the trajectory with the midpoint rule on a time
/// grid aligned to multiples of dt (partial steps at the ends), masking
/// banks per step from the scene's human tracks.
DoseMap accumulate(const Scene& scene, const Trajectory& trajectory, const IrradianceModel& model,
                   const DoseOptions& options = {}, const SafetyPolicy& policy = {});

/// Dose at one world point (no footprint exclusion; throws DomainError if the
/// body passes over the point). No humans, no obstacles.
double point_dose(const RobotModel& robot, const Trajectory& trajectory, const IrradianceModel& model, Vec2 point,
                  const DoseOptions& options = {});

/// 10^(-dose/d90) per cell.
ScalarField survival(const ScalarField& dose, double d90);

enum class D90Mode { static_exposure, multipass };

struct CalibrationSetup {
  double static_distance{2.8};  ///< m from the lamp plane
  double static_duration{600.0};
  double pass_distance{0.6};
  double pass_speed{0.14};
  double pass_length{10.0};
  int passes_for_one_log{2};
};

/// Straight pass along +x through the origin at `speed`, of total `length`.
Trajectory straight_pass(double speed, double length, double y = 0.0);

/// D90 (mJ/cm²). static: the dose after static_duration at static_distance.
/// multipass: passes_for_one_log times the dose of one pass at pass_distance.
double calibrate_d90(D90Mode mode, const IrradianceModel& model, const RobotModel& robot,
                     const DoseOptions& options = {}, const CalibrationSetup& setup = {});

std::string format_mask_csv(const std::vector<MaskEvent>& history);

}  // namespace uvcplan
