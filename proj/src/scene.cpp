#include "uvcplan/scene.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "uvcplan/csv.hpp"
#include "uvcplan/error.hpp"

namespace uvcplan {

namespace {

void require(bool ok, const char* field, const std::string& msg) {
  if (!ok) throw ValidationError(field, msg);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

// ---------------------------------------------------------------------------
// GridSpec / ScalarField

void GridSpec::validate() const {
  require(finite(cell_size) && cell_size > 0.0, "cell_size", "must be > 0");
  require(width >= 1, "width", "must be >= 1");
  require(height >= 1, "height", "must be >= 1");
  require(finite(origin.x) && finite(origin.y), "origin", "must be finite");
}

std::optional<CellIndex> GridSpec::world_to_cell(Vec2 p) const {
  const double fx = (p.x - origin.x) / cell_size;
  const double fy = (p.y - origin.y) / cell_size;
  if (!(fx >= 0.0 && fy >= 0.0 && fx < width && fy < height)) return std::nullopt;
  return CellIndex{static_cast<int>(fx), static_cast<int>(fy)};
}

std::string_view unit_tag(Unit u) {
  switch (u) {
    case Unit::irradiance: return "uW/cm2";
    case Unit::normalized_luminosity: return "normalized_luminosity";
    case Unit::dose: return "mJ/cm2";
    case Unit::survival: return "survival_fraction";
    case Unit::cfu: return "CFU";
  }
  return "?";
}

Unit parse_unit(std::string_view tag) {
  for (Unit u : {Unit::irradiance, Unit::normalized_luminosity, Unit::dose, Unit::survival, Unit::cfu})
    if (unit_tag(u) == tag) return u;
  throw ValidationError("unit", "unknown unit tag '" + std::string(tag) + "'");
}

ScalarField::ScalarField(GridSpec spec, Unit unit, double fill)
    : spec_(spec), unit_(unit), values_(spec.size(), fill), excluded_(spec.size(), 0) {
  spec_.validate();
}

double ScalarField::max_value() const {
  double m = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k)
    if (!excluded_[k]) m = std::max(m, values_[k]);
  return m;
}

std::size_t ScalarField::valid_count() const {
  return static_cast<std::size_t>(std::count(excluded_.begin(), excluded_.end(), std::uint8_t{0}));
}

void ScalarField::validate() const {
  spec_.validate();
  require(values_.size() == spec_.size(), "values", "length must equal width*height");
  require(excluded_.size() == spec_.size(), "excluded", "length must equal width*height");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (excluded_[k]) continue;
    const double v = values_[k];
    require(finite(v) && v >= 0.0, "values", "must be finite and non-negative");
    if (unit_ == Unit::survival) require(v <= 1.0, "values", "survival fraction must lie in [0,1]");
  }
}

// ---------------------------------------------------------------------------
// Robot

void LampBank::validate() const {
  require(lamp_count >= 1, "lamp_count", "must be >= 1");
  require(finite(lamp_length) && lamp_length > 0.0, "lamp_length", "must be > 0");
  require(finite(bottom_height) && bottom_height >= 0.0, "bottom_height", "must be >= 0");
  require(finite(center_height) && std::abs(bottom_height + 0.5 * lamp_length - center_height) <= 1e-6,
          "center_height", "must equal bottom_height + lamp_length/2");
  require(finite(per_lamp_power_at_1m) && per_lamp_power_at_1m > 0.0, "per_lamp_power_at_1m", "must be > 0");
  require(finite(aperture_deg) && aperture_deg > 0.0 && aperture_deg <= 360.0, "aperture_deg", "must lie in (0, 360]");
  require(finite(lamp_spacing) && lamp_spacing >= 0.0, "lamp_spacing", "must be >= 0");
  require(finite(lamp_diameter) && lamp_diameter >= 0.0, "lamp_diameter", "must be >= 0");
  require(finite(electrical_power_w) && electrical_power_w >= 0.0, "electrical_power_w", "must be >= 0");
}

void RobotModel::validate() const {
  require(banks[0].side == Side::left && banks[1].side == Side::right, "banks", "must be one left and one right bank");
  banks[0].validate();
  banks[1].validate();
  require(finite(body_halfwidth) && body_halfwidth > 0.0, "body_halfwidth", "must be > 0");
  require(finite(body_halflength) && body_halflength > 0.0, "body_halflength", "must be > 0");
  require(finite(window.half_width) && window.half_width > 0.0, "window.half_width", "must be > 0");
  require(finite(window.top) && finite(window.bottom) && window.top > window.bottom, "window.top",
          "must exceed window.bottom");
  require(finite(window.setback) && window.setback >= 0.0 && window.setback < body_halfwidth, "window.setback",
          "must lie in [0, body_halfwidth)");
  require(finite(window.reflector_gap) && window.reflector_gap > 0.0 &&
              window.reflector_gap < body_halfwidth - window.setback,
          "window.reflector_gap", "must lie in (0, body_halfwidth - setback)");
  for (const auto& b : banks) {
    const double span = 0.5 * (b.lamp_count - 1) * b.lamp_spacing + 0.5 * b.lamp_diameter;
    require(span <= body_halflength, "lamp_spacing", "lamp array longer than the body");
  }
}

// ---------------------------------------------------------------------------
// Trajectory

void Trajectory::validate() const {
  require(!poses.empty(), "poses", "trajectory '" + id + "' has no poses");
  for (const auto& p : poses)
    require(finite(p.time) && finite(p.position.x) && finite(p.position.y) && finite(p.heading), "poses",
            "non-finite value");
  for (std::size_t k = 1; k < poses.size(); ++k)
    require(poses[k].time > poses[k - 1].time, "t_s", "timestamps must be strictly increasing");
  if (stated_speeds.empty()) return;
  require(stated_speeds.size() == poses.size(), "speed_mps", "one speed per pose required");
  for (std::size_t k = 0; k + 1 < poses.size(); ++k) {
    const double moved = distance(poses[k + 1].position, poses[k].position);
    const double expected = stated_speeds[k] * (poses[k + 1].time - poses[k].time);
    require(stated_speeds[k] >= 0.0, "speed_mps", "must be >= 0");
    require(std::abs(moved - expected) <= 1e-6, "speed_mps",
            "segment " + std::to_string(k) + " inconsistent with stated speed");
  }
}

Pose Trajectory::pose_at(double t) const {
  if (t <= poses.front().time) return poses.front();
  if (t >= poses.back().time) return poses.back();
  const auto it = std::upper_bound(poses.begin(), poses.end(), t,
                                   [](double v, const Pose& p) { return v < p.time; });
  const Pose& b = *it;
  const Pose& a = *(it - 1);
  const double u = (t - a.time) / (b.time - a.time);
  return {a.position + (b.position - a.position) * u, a.heading + (b.heading - a.heading) * u, t};
}

double Trajectory::path_length() const {
  double s = 0.0;
  for (std::size_t k = 1; k < poses.size(); ++k) s += distance(poses[k].position, poses[k - 1].position);
  return s;
}

// ---------------------------------------------------------------------------
// Humans

void HumanTrack::validate() const {
  require(!samples.empty(), "samples", "track '" + id + "' has no samples");
  for (std::size_t k = 1; k < samples.size(); ++k)
    require(samples[k].time > samples[k - 1].time, "t_s", "track '" + id + "': timestamps must be strictly increasing");
  if (exit_time) require(*exit_time >= samples.front().time, "exit_t_s", "precedes the first sample");
}

std::optional<Vec2> HumanTrack::position_at(double t) const {
  if (samples.empty() || t < samples.front().time) return std::nullopt;
  if (exit_time && t >= *exit_time) return std::nullopt;
  if (t >= samples.back().time) return samples.back().position;
  const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double v, const HumanSample& s) { return v < s.time; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double u = (t - a.time) / (b.time - a.time);
  return a.position + (b.position - a.position) * u;
}

std::vector<Vec2> active_humans(std::span<const HumanTrack> tracks, double t) {
  std::vector<Vec2> out;
  for (const auto& h : tracks)
    if (auto p = h.position_at(t)) out.push_back(*p);
  return out;
}

// ---------------------------------------------------------------------------
// Scene

void Scene::validate() const {
  grid.validate();
  require(occupied.size() == grid.size(), "map", "occupancy size must equal width*height");
  robot.validate();
  for (const auto& h : humans) h.validate();
  if (robot_pose)
    require(finite(robot_pose->position.x) && finite(robot_pose->position.y) && finite(robot_pose->heading),
            "robot.pose", "must be finite");
}

bool Scene::has_obstacles() const { return std::any_of(occupied.begin(), occupied.end(), [](auto v) { return v != 0; }); }

std::size_t Scene::free_count() const {
  return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), std::uint8_t{0}));
}

bool Scene::is_free(Vec2 p) const {
  const auto c = grid.world_to_cell(p);
  return c && !is_occupied(c->i, c->j);
}

Scene Scene::empty_room(double width_m, double height_m, double cell_size) {
  Scene s;
  s.grid.cell_size = cell_size;
  s.grid.width = static_cast<int>(std::lround(width_m / cell_size));
  s.grid.height = static_cast<int>(std::lround(height_m / cell_size));
  s.grid.validate();
  s.occupied.assign(s.grid.size(), 0);
  return s;
}

// ---------------------------------------------------------------------------
// Scene file

namespace {

struct HeaderLine {
  int line;
  std::vector<std::string> args;
};

std::vector<std::string> tokens(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

double num(const std::string& source, int line, const std::string& key, const std::string& text) {
  const auto v = parse_double(text);
  if (!v || !std::isfinite(*v)) throw ParseError(source, line, key + ": not a number: '" + text + "'");
  return *v;
}

bool boolean(const std::string& source, int line, const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "on") return true;
  if (text == "0" || text == "false" || text == "off") return false;
  throw ParseError(source, line, key + ": expected a boolean, got '" + text + "'");
}

void expect_args(const std::string& source, int line, const std::string& key, const std::vector<std::string>& args,
                 std::size_t n) {
  if (args.size() != n)
    throw ParseError(source, line, key + ": expected " + std::to_string(n) + " value(s), got " + std::to_string(args.size()));
}

void set_bank_key(LampBank& b, const std::string& source, int line, const std::string& key, const std::string& name,
                  const std::string& v) {
  if (name == "lamp_count") {
    const double n = num(source, line, key, v);
    if (n != std::floor(n)) throw ParseError(source, line, key + ": expected an integer");
    b.lamp_count = static_cast<int>(n);
  } else if (name == "lamp_length") b.lamp_length = num(source, line, key, v);
  else if (name == "center_height") b.center_height = num(source, line, key, v);
  else if (name == "bottom_height") b.bottom_height = num(source, line, key, v);
  else if (name == "per_lamp_power_at_1m") b.per_lamp_power_at_1m = num(source, line, key, v);
  else if (name == "aperture_deg") b.aperture_deg = num(source, line, key, v);
  else if (name == "enabled") b.enabled = boolean(source, line, key, v);
  else if (name == "lamp_spacing") b.lamp_spacing = num(source, line, key, v);
  else if (name == "lamp_diameter") b.lamp_diameter = num(source, line, key, v);
  else if (name == "electrical_power_w") b.electrical_power_w = num(source, line, key, v);
  else throw ParseError(source, line, "unknown key '" + key + "'");
}

void set_robot_key(RobotModel& r, const std::string& source, int line, const std::string& key, const std::string& v) {
  const std::string rest = key.substr(6);  // after "robot."
  if (rest == "body_halfwidth") r.body_halfwidth = num(source, line, key, v);
  else if (rest == "body_halflength") r.body_halflength = num(source, line, key, v);
  else if (rest == "window.half_width") r.window.half_width = num(source, line, key, v);
  else if (rest == "window.bottom") r.window.bottom = num(source, line, key, v);
  else if (rest == "window.top") r.window.top = num(source, line, key, v);
  else if (rest == "window.setback") r.window.setback = num(source, line, key, v);
  else if (rest == "window.reflector_gap") r.window.reflector_gap = num(source, line, key, v);
  else {
    const auto dot = rest.find('.');
    if (dot == std::string::npos) throw ParseError(source, line, "unknown key '" + key + "'");
    const std::string which = rest.substr(0, dot);
    const std::string name = rest.substr(dot + 1);
    if (which == "left" || which == "banks") set_bank_key(r.bank(Side::left), source, line, key, name, v);
    if (which == "right" || which == "banks") set_bank_key(r.bank(Side::right), source, line, key, name, v);
    if (which != "left" && which != "right" && which != "banks")
      throw ParseError(source, line, "unknown key '" + key + "'");
  }
}

}  // namespace

Scene parse_scene(std::string_view text, const std::string& source, const std::filesystem::path& base_dir) {
  Scene scene;
  std::optional<double> cell_size;
  Vec2 origin{};
  std::optional<Vec2> size_m;
  std::optional<int> width;
  std::optional<int> height;
  std::vector<std::array<double, 4>> obstacles;
  std::vector<std::string> map_rows;
  int map_line = 0;
  std::optional<std::string> humans_path;
  int humans_line = 0;

  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  bool in_map = false;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = std::string(trim(raw));
    if (in_map) {
      if (line.empty()) continue;
      for (char c : line)
        if (c != '#' && c != '.') throw ParseError(source, lineno, std::string("map: unexpected character '") + c + "'");
      map_rows.push_back(line);
      continue;
    }
    if (line.empty() || line.front() == '#') continue;
    auto tok = tokens(line);
    const std::string key = tok.front();
    tok.erase(tok.begin());
    if (!tok.empty() && tok.front() == "=") tok.erase(tok.begin());

    if (key == "map") {
      expect_args(source, lineno, key, tok, 0);
      in_map = true;
      map_line = lineno;
    } else if (key == "cell_size") {
      expect_args(source, lineno, key, tok, 1);
      cell_size = num(source, lineno, key, tok[0]);
      if (!(*cell_size > 0.0)) throw ValidationError("cell_size", "must be > 0 (line " + std::to_string(lineno) + ")");
    } else if (key == "origin") {
      expect_args(source, lineno, key, tok, 2);
      origin = {num(source, lineno, key, tok[0]), num(source, lineno, key, tok[1])};
    } else if (key == "size_m") {
      expect_args(source, lineno, key, tok, 2);
      size_m = Vec2{num(source, lineno, key, tok[0]), num(source, lineno, key, tok[1])};
      if (!(size_m->x > 0.0 && size_m->y > 0.0)) throw ValidationError("size_m", "must be > 0");
    } else if (key == "width" || key == "height") {
      expect_args(source, lineno, key, tok, 1);
      const double n = num(source, lineno, key, tok[0]);
      if (n != std::floor(n)) throw ParseError(source, lineno, key + ": expected an integer");
      if (n < 1) throw ValidationError(key, "must be >= 1");
      (key == "width" ? width : height) = static_cast<int>(n);
    } else if (key == "obstacle") {
      expect_args(source, lineno, key, tok, 4);
      std::array<double, 4> r{};
      for (int k = 0; k < 4; ++k) r[k] = num(source, lineno, key, tok[k]);
      if (!(r[2] > r[0] && r[3] > r[1])) throw ValidationError("obstacle", "needs x0 < x1 and y0 < y1");
      obstacles.push_back(r);
    } else if (key == "robot.pose") {
      expect_args(source, lineno, key, tok, 3);
      scene.robot_pose = Pose{{num(source, lineno, key, tok[0]), num(source, lineno, key, tok[1])},
                              num(source, lineno, key, tok[2]), 0.0};
    } else if (key.rfind("robot.", 0) == 0) {
      expect_args(source, lineno, key, tok, 1);
      set_robot_key(scene.robot, source, lineno, key, tok[0]);
    } else if (key == "humans") {
      expect_args(source, lineno, key, tok, 1);
      humans_path = tok[0];
      humans_line = lineno;
    } else {
      throw ParseError(source, lineno, "unknown key '" + key + "'");
    }
  }

  if (!cell_size) cell_size = 0.2;
  scene.grid.cell_size = *cell_size;
  scene.grid.origin = origin;
  if (in_map) {
    if (map_rows.empty()) throw ParseError(source, map_line, "map: no rows");
    const auto w = map_rows.front().size();
    for (std::size_t r = 0; r < map_rows.size(); ++r)
      if (map_rows[r].size() != w) throw ParseError(source, map_line + 1 + static_cast<int>(r), "map: ragged row");
    scene.grid.width = static_cast<int>(w);
    scene.grid.height = static_cast<int>(map_rows.size());
    if ((width && *width != scene.grid.width) || (height && *height != scene.grid.height))
      throw ValidationError("map", "dimensions disagree with width/height");
  } else if (width && height) {
    scene.grid.width = *width;
    scene.grid.height = *height;
  } else if (size_m) {
    scene.grid.width = static_cast<int>(std::lround(size_m->x / *cell_size));
    scene.grid.height = static_cast<int>(std::lround(size_m->y / *cell_size));
  } else {
    scene.grid.width = width.value_or(1);
    scene.grid.height = height.value_or(1);
  }
  if (size_m && (std::abs(scene.grid.width * *cell_size - size_m->x) > 1e-6 ||
                 std::abs(scene.grid.height * *cell_size - size_m->y) > 1e-6))
    throw ValidationError("size_m", "not a whole number of cells");
  scene.grid.validate();

  scene.occupied.assign(scene.grid.size(), 0);
  for (std::size_t r = 0; r < map_rows.size(); ++r)
    for (int i = 0; i < scene.grid.width; ++i)
      if (map_rows[r][static_cast<std::size_t>(i)] == '#') scene.occupied[scene.grid.index(i, static_cast<int>(r))] = 1;
  for (const auto& o : obstacles)
    for (int j = 0; j < scene.grid.height; ++j)
      for (int i = 0; i < scene.grid.width; ++i) {
        const Vec2 c = scene.grid.cell_center(i, j);
        if (c.x >= o[0] && c.x <= o[2] && c.y >= o[1] && c.y <= o[3]) scene.occupied[scene.grid.index(i, j)] = 1;
      }

  if (humans_path) {
    std::filesystem::path p = *humans_path;
    if (p.is_relative()) p = base_dir / p;
    try {
      scene.humans = load_human_tracks(p);
    } catch (const IoError& e) {
      throw ParseError(source, humans_line, e.what());
    }
  }
  scene.validate();
  return scene;
}

Scene load_scene(const std::filesystem::path& path) {
  return parse_scene(read_text_file(path), path.string(), path.parent_path());
}

std::string write_scene(const Scene& scene) {
  std::ostringstream out;
  const auto& r = scene.robot;
  out << "cell_size " << format_exact(scene.grid.cell_size) << "\n";
  out << "origin " << format_exact(scene.grid.origin.x) << " " << format_exact(scene.grid.origin.y) << "\n";
  out << "robot.body_halfwidth " << format_exact(r.body_halfwidth) << "\n";
  out << "robot.body_halflength " << format_exact(r.body_halflength) << "\n";
  out << "robot.window.half_width " << format_exact(r.window.half_width) << "\n";
  out << "robot.window.bottom " << format_exact(r.window.bottom) << "\n";
  out << "robot.window.top " << format_exact(r.window.top) << "\n";
  out << "robot.window.setback " << format_exact(r.window.setback) << "\n";
  out << "robot.window.reflector_gap " << format_exact(r.window.reflector_gap) << "\n";
  for (const auto& b : r.banks) {
    const std::string p = std::string("robot.") + (b.side == Side::left ? "left." : "right.");
    out << p << "lamp_count " << b.lamp_count << "\n";
    out << p << "lamp_length " << format_exact(b.lamp_length) << "\n";
    out << p << "center_height " << format_exact(b.center_height) << "\n";
    out << p << "bottom_height " << format_exact(b.bottom_height) << "\n";
    out << p << "per_lamp_power_at_1m " << format_exact(b.per_lamp_power_at_1m) << "\n";
    out << p << "aperture_deg " << format_exact(b.aperture_deg) << "\n";
    out << p << "enabled " << (b.enabled ? 1 : 0) << "\n";
    out << p << "lamp_spacing " << format_exact(b.lamp_spacing) << "\n";
    out << p << "lamp_diameter " << format_exact(b.lamp_diameter) << "\n";
    out << p << "electrical_power_w " << format_exact(b.electrical_power_w) << "\n";
  }
  if (scene.robot_pose)
    out << "robot.pose " << format_exact(scene.robot_pose->position.x) << " "
        << format_exact(scene.robot_pose->position.y) << " " << format_exact(scene.robot_pose->heading) << "\n";
  out << "map\n";
  for (int j = 0; j < scene.grid.height; ++j) {
    for (int i = 0; i < scene.grid.width; ++i) out << (scene.is_occupied(i, j) ? '#' : '.');
    out << "\n";
  }
  return out.str();
}

Scene mirror_scene(const Scene& scene, double axis_y) {
  Scene m = scene;
  const auto& g = scene.grid;
  m.grid.origin.y = 2.0 * axis_y - (g.origin.y + g.height * g.cell_size);
  for (int j = 0; j < g.height; ++j)
    for (int i = 0; i < g.width; ++i) m.occupied[g.index(i, g.height - 1 - j)] = scene.occupied[g.index(i, j)];
  auto reflect = [axis_y](Vec2 p) { return Vec2{p.x, 2.0 * axis_y - p.y}; };
  if (m.robot_pose) {
    m.robot_pose->position = reflect(m.robot_pose->position);
    m.robot_pose->heading = -m.robot_pose->heading;
  }
  for (auto& h : m.humans)
    for (auto& s : h.samples) s.position = reflect(s.position);
  // A reflected robot has its left and right swapped.
  std::swap(m.robot.banks[0], m.robot.banks[1]);
  m.robot.banks[0].side = Side::left;
  m.robot.banks[1].side = Side::right;
  return m;
}

// ---------------------------------------------------------------------------
// Track / trajectory CSV

namespace {

long find_or_add(std::vector<std::string>& ids, const std::string& id) {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it != ids.end()) return it - ids.begin();
  ids.push_back(id);
  return static_cast<long>(ids.size()) - 1;
}

}  // namespace

std::vector<HumanTrack> parse_human_tracks(std::string_view text, const std::string& source) {
  const CsvTable t = parse_csv(text, source);
  const auto id_col = t.column("id");
  const auto tc = t.require_column("t_s");
  const auto xc = t.require_column("x_m");
  const auto yc = t.require_column("y_m");
  const auto ec = t.column("exit_t_s");
  std::vector<std::string> ids;
  std::vector<HumanTrack> tracks;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string id = id_col ? t.rows[r][*id_col] : "human";
    const auto k = static_cast<std::size_t>(find_or_add(ids, id));
    if (k == tracks.size()) tracks.push_back(HumanTrack{id, {}, std::nullopt});
    auto& h = tracks[k];
    h.samples.push_back({t.number(r, tc), {t.number(r, xc), t.number(r, yc)}});
    if (ec && !t.rows[r][*ec].empty()) {
      const double e = t.number(r, *ec);
      if (h.exit_time && *h.exit_time != e) throw ParseError(source, t.lines[r], "exit_t_s: conflicting values");
      h.exit_time = e;
    }
    if (h.samples.size() > 1 && !(h.samples.back().time > h.samples[h.samples.size() - 2].time))
      throw ParseError(source, t.lines[r], "t_s: timestamps must be strictly increasing per track");
  }
  for (const auto& h : tracks) h.validate();
  return tracks;
}

std::vector<HumanTrack> load_human_tracks(const std::filesystem::path& path) {
  return parse_human_tracks(read_text_file(path), path.string());
}

std::vector<Trajectory> parse_trajectories(std::string_view text, const std::string& source) {
  const CsvTable t = parse_csv(text, source);
  const auto id_col = t.column("id");
  const auto tc = t.require_column("t_s");
  const auto xc = t.require_column("x_m");
  const auto yc = t.require_column("y_m");
  const auto hc = t.column("heading_rad");
  const auto sc = t.column("speed_mps");
  std::vector<std::string> ids;
  std::vector<Trajectory> out;
  std::vector<std::vector<int>> lines;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string id = id_col ? t.rows[r][*id_col] : "trajectory";
    const auto k = static_cast<std::size_t>(find_or_add(ids, id));
    if (k == out.size()) {
      out.push_back(Trajectory{id, {}, {}});
      lines.emplace_back();
    }
    Pose p{{t.number(r, xc), t.number(r, yc)}, hc ? t.number(r, *hc) : 0.0, t.number(r, tc)};
    out[k].poses.push_back(p);
    if (sc) out[k].stated_speeds.push_back(t.number(r, *sc));
    lines[k].push_back(t.lines[r]);
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& tr = out[k];
    if (!hc) {
      // Heading follows the direction of travel; stationary segments keep the previous heading.
      double h = 0.0;
      for (std::size_t q = 0; q + 1 < tr.poses.size(); ++q) {
        const Vec2 d = tr.poses[q + 1].position - tr.poses[q].position;
        if (norm(d) > 1e-12) {
          h = std::atan2(d.y, d.x);
          break;
        }
      }
      for (std::size_t q = 0; q < tr.poses.size(); ++q) {
        if (q + 1 < tr.poses.size()) {
          const Vec2 d = tr.poses[q + 1].position - tr.poses[q].position;
          if (norm(d) > 1e-12) {
            const double nh = std::atan2(d.y, d.x);
            h = h + wrap_angle(nh - h);
          }
        }
        tr.poses[q].heading = h;
      }
    }
    for (std::size_t q = 1; q < tr.poses.size(); ++q)
      if (!(tr.poses[q].time > tr.poses[q - 1].time))
        throw ParseError(source, lines[k][q], "t_s: timestamps must be strictly increasing");
    tr.validate();
  }
  return out;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  auto all = parse_trajectories(read_text_file(path), path.string());
  if (all.size() != 1)
    throw ParseError(path.string(), 0, "expected exactly one trajectory, found " + std::to_string(all.size()));
  return std::move(all.front());
}

std::string format_trajectory_csv(const Trajectory& tr) {
  std::ostringstream out;
  const bool speeds = !tr.stated_speeds.empty();
  out << "id,t_s,x_m,y_m,heading_rad" << (speeds ? ",speed_mps" : "") << "\n";
  for (std::size_t k = 0; k < tr.poses.size(); ++k) {
    const auto& p = tr.poses[k];
    out << tr.id << "," << format_exact(p.time) << "," << format_exact(p.position.x) << "," << format_exact(p.position.y)
        << "," << format_exact(p.heading);
    if (speeds) out << "," << format_exact(tr.stated_speeds[k]);
    out << "\n";
  }
  return out.str();
}

}  // namespace uvcplan
