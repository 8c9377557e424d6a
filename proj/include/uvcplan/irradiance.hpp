#pragma once

#include <span>
#include <vector>

#include "uvcplan/scene.hpp"

namespace uvcplan {

/// Which way the receiving surface faces. `spherical` is fluence rate (what
/// the lamp calibration refers to); `planar_up` is an upward-facing flat
/// sensor such as a phone's light meter lying on the floor.
enum class Receiver { spherical, planar_up };

struct BankMask {
  bool left{true};
  bool right{true};
  bool on(Side s) const { return s == Side::left ? left : right; }
  bool operator==(const BankMask&) const = default;
};

struct IrradianceModel {
  int segment_count{32};
  double reflectance{0.7};  ///< weight of the reflector image source
  Receiver receiver{Receiver::spherical};
  /// Scale fixing the on-axis 1 m value; 0 until calibrate() has run.
  double calibration_constant{0.0};

  void validate() const;
  bool calibrated() const { return calibration_constant > 0.0; }
};

/// Reference point for calibration: on-axis, lamp-centre height, 1 m outward
/// from the left bank's lamp plane.
RobotPoint calibration_point(const RobotModel& robot);

/// Returns `model` with calibration_constant solved so that a full enabled
/// bank gives lamp_count × per_lamp_power_at_1m at calibration_point(). The
/// solve always uses the spherical receiver.
IrradianceModel calibrate(IrradianceModel model, const RobotModel& robot);

/// Fluence rate (µW/cm²) at a robot-frame point from the unmasked banks,
/// ignoring obstacles. Throws DomainError inside the body.
double fluence_at(const IrradianceModel& model, const RobotModel& robot, const RobotPoint& p, BankMask mask = {});

/// Contribution of one bank only.
double bank_fluence(const IrradianceModel& model, const RobotModel& robot, Side side, const RobotPoint& p);

/// Contribution of lamp k of one bank, with direct and image source.
double lamp_fluence(const IrradianceModel& model, const RobotModel& robot, Side side, int k, const RobotPoint& p);

/// World-frame evaluation. With a scene that has obstacles, each lamp's light
/// is blocked when the straight line from the lamp to the point crosses an
/// occupied cell.
double fluence_at(const IrradianceModel& model, const RobotModel& robot, const Pose& pose, Vec2 p, double height,
                  BankMask mask, const Scene* scene = nullptr);

/// True when the segment a→b crosses no occupied cell. Endpoints' own cells
/// are not tested; points outside the grid count as free.
bool line_of_sight(const Scene& scene, Vec2 a, Vec2 b);

/// Irradiance at every cell centre for a robot at `pose`. Cells inside the body
/// or occupied by obstacles (when a scene is given) are excluded.
ScalarField field(const IrradianceModel& model, const RobotModel& robot, const GridSpec& spec, const Pose& pose,
                  double height, BankMask mask, const Scene* scene = nullptr, int workers = 1);

/// Scales each field to max 1, sums cell-wise, and rescales the sum to max 1.
ScalarField normalize_and_sum(std::span<const ScalarField> fields);

}  // namespace uvcplan
