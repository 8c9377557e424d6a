#include "uvcplan/field_io.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "uvcplan/csv.hpp"
#include "uvcplan/error.hpp"

namespace uvcplan {

std::filesystem::path header_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p += ".hdr";
  return p;
}

std::string format_field_csv(const ScalarField& field) {
  const auto& g = field.spec();
  std::string out;
  out.reserve(g.size() * 9);
  const auto v = field.values();
  for (int j = 0; j < g.height; ++j) {
    for (int i = 0; i < g.width; ++i) {
      if (i) out += ',';
      const std::size_t k = g.index(i, j);
      out += field.excluded(k) ? std::string("nan") : format_g6(v[k]);
    }
    out += '\n';
  }
  return out;
}

std::string format_field_header(const ScalarField& field) {
  const auto& g = field.spec();
  std::ostringstream out;
  out << "origin_x " << format_exact(g.origin.x) << "\n"
      << "origin_y " << format_exact(g.origin.y) << "\n"
      << "cell_size " << format_exact(g.cell_size) << "\n"
      << "width " << g.width << "\n"
      << "height " << g.height << "\n"
      << "unit " << unit_tag(field.unit()) << "\n"
      << "row_order y_ascending\n";
  return out.str();
}

void write_field(const std::filesystem::path& path, const ScalarField& field) {
  write_text_file(path, format_field_csv(field));
  write_text_file(header_path(path), format_field_header(field));
}

ScalarField read_field(const std::filesystem::path& path) {
  const auto hdr = header_path(path);
  const std::string htext = read_text_file(hdr);
  std::map<std::string, std::string> kv;
  std::istringstream hin(htext);
  std::string line;
  int lineno = 0;
  while (std::getline(hin, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto sp = t.find(' ');
    if (sp == std::string_view::npos) throw ParseError(hdr.string(), lineno, "expected 'key value'");
    kv[std::string(t.substr(0, sp))] = std::string(trim(t.substr(sp + 1)));
  }
  auto get = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(hdr.string(), 0, std::string("missing key '") + key + "'");
    const auto v = parse_double(it->second);
    if (!v) throw ParseError(hdr.string(), 0, std::string(key) + ": not a number");
    return *v;
  };
  GridSpec g;
  g.origin = {get("origin_x"), get("origin_y")};
  g.cell_size = get("cell_size");
  g.width = static_cast<int>(get("width"));
  g.height = static_cast<int>(get("height"));
  g.validate();
  const auto uit = kv.find("unit");
  if (uit == kv.end()) throw ParseError(hdr.string(), 0, "missing key 'unit'");
  ScalarField f(g, parse_unit(uit->second));

  const std::string text = read_text_file(path);
  std::istringstream in(text);
  int j = 0;
  lineno = 0;
  auto vals = f.values();
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (j >= g.height) throw ParseError(path.string(), lineno, "more rows than height");
    const auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != g.width) throw ParseError(path.string(), lineno, "row length != width");
    for (int i = 0; i < g.width; ++i) {
      const std::size_t k = g.index(i, j);
      if (cells[static_cast<std::size_t>(i)] == "nan") {
        f.set_excluded(k, true);
        continue;
      }
      const auto v = parse_double(cells[static_cast<std::size_t>(i)]);
      if (!v || !std::isfinite(*v)) throw ParseError(path.string(), lineno, "bad value");
      vals[k] = *v;
    }
    ++j;
  }
  if (j != g.height) throw ParseError(path.string(), lineno, "fewer rows than height");
  return f;
}

}  // namespace uvcplan
