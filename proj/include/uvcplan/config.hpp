#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace uvcplan {

/// Everything a CLI run needs. Serialized as JSON; unknown keys are rejected.
struct RunConfig {
  // paths
  std::string scene;
  std::string samples;
  std::string tracks;
  std::string trajectory;
  std::string output_dir{"out"};

  // model
  int segment_count{32};
  double reflectance{0.7};
  std::string d90_mode{"multipass"};  ///< static | multipass
  std::optional<double> d90;          ///< mJ/cm², overrides d90_mode
  double detection_limit{0.5};        ///< CFU
  double dt{0.1};                     ///< s
  double lane_pitch{1.2};             ///< m
  double danger_radius{3.0};          ///< m
  double speed{0.14};                 ///< m/s
  double turn_rate{0.5};              ///< rad/s
  double height{0.83};                ///< m, evaluation height
  double fan_multiplier{1.0};
  int workers{0};                     ///< 0 = all hardware threads

  // field
  std::string banks{"both"};          ///< both | left | right | none
  std::string receiver{"spherical"};  ///< spherical | planar_up
  double field_size_m{6.0};           ///< square grid centred on the robot when no scene is given
  double cell_size{0.2};

  // zone
  std::vector<std::pair<std::string, double>> thresholds;  ///< empty = derived levels
  std::string mid_label{"86.36%"};

  // sweep
  std::optional<double> static_duration;  ///< s, used when no trajectory is given

  // plan
  double target_survival{0.1};
  int pass_cap{12};
  double coverage_goal{0.99};

  /// Range checks for every field; throws ValidationError naming the field.
  void validate() const;
  int resolved_workers() const;

  bool operator==(const RunConfig&) const = default;
};

std::string to_json(const RunConfig& config);
RunConfig parse_config(std::string_view json, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace uvcplan
