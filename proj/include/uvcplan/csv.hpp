#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace uvcplan {

/// Header-first CSV. Blank lines and lines starting with '#' are skipped; no
/// quoting (none of the project's formats need it).
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;  ///< source line of each row

  /// Column index for `name`, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
  /// Column index for `name`; throws ParseError when absent.
  std::size_t require_column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
  long integer(std::size_t row, std::size_t col) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Decimal with 6 significant digits ("%.6g"); the formatting every exported
/// grid uses.
std::string format_g6(double v);
/// Shortest round-trippable decimal ("%.17g").
std::string format_exact(double v);

std::optional<double> parse_double(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

}  // namespace uvcplan
