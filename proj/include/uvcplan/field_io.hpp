#pragma once

#include <filesystem>
#include <string>

#include "uvcplan/scene.hpp"

namespace uvcplan {

// Grid CSV: one row per y (j = 0 first), values "%.6g", excluded cells "nan".
// The sidecar header `<file>.hdr` holds the GridSpec and unit tag as
// `key value` lines.

std::string format_field_csv(const ScalarField& field);
std::string format_field_header(const ScalarField& field);

/// Writes `path` and `path` + ".hdr".
void write_field(const std::filesystem::path& path, const ScalarField& field);

/// Reads a field written by write_field. Values are as rounded on export.
ScalarField read_field(const std::filesystem::path& path);

std::filesystem::path header_path(const std::filesystem::path& csv_path);

}  // namespace uvcplan
