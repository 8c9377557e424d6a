#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "uvcplan/irradiance.hpp"
#include "uvcplan/scene.hpp"

namespace uvcplan::test {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(UVCPLAN_DATA_DIR) / name; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto p = std::filesystem::temp_directory_path() / ("uvcplan_" + tag + "_" + std::to_string(rng() % 1000000007));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline IrradianceModel default_model(const RobotModel& robot = {}) { return calibrate(IrradianceModel{}, robot); }

}  // namespace uvcplan::test
