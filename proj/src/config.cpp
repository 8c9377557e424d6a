#include "uvcplan/config.hpp"

#include <cmath>
#include <set>

#include "json.hpp"
#include "uvcplan/csv.hpp"
#include "uvcplan/error.hpp"
#include "uvcplan/parallel.hpp"

namespace uvcplan {

using Json = nlohmann::ordered_json;

namespace {

void require(bool ok, const char* field, const std::string& msg) {
  if (!ok) throw ValidationError(field, msg);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void RunConfig::validate() const {
  require(segment_count >= 8, "segment_count", "must be >= 8");
  require(std::isfinite(reflectance) && reflectance >= 0.0 && reflectance <= 1.0, "reflectance", "must lie in [0, 1]");
  require(d90_mode == "static" || d90_mode == "multipass", "d90_mode", "must be static or multipass");
  require(!d90 || positive(*d90), "d90", "must be > 0");
  require(positive(detection_limit), "detection_limit", "must be > 0");
  require(positive(dt), "dt", "must be > 0");
  require(positive(lane_pitch), "lane_pitch", "must be > 0");
  require(positive(danger_radius), "danger_radius", "must be > 0");
  require(positive(speed), "speed", "must be > 0");
  require(positive(turn_rate), "turn_rate", "must be > 0");
  require(std::isfinite(height) && height >= 0.0, "height", "must be >= 0");
  require(std::isfinite(fan_multiplier) && fan_multiplier >= 0.0, "fan_multiplier", "must be >= 0");
  require(workers >= 0, "workers", "must be >= 0");
  require(banks == "both" || banks == "left" || banks == "right" || banks == "none", "banks",
          "must be both, left, right or none");
  require(receiver == "spherical" || receiver == "planar_up", "receiver", "must be spherical or planar_up");
  require(positive(field_size_m), "field_size_m", "must be > 0");
  require(positive(cell_size), "cell_size", "must be > 0");
  std::set<std::string> labels;
  for (const auto& [label, t] : thresholds) {
    require(!label.empty(), "thresholds", "labels must be non-empty");
    require(labels.insert(label).second, "thresholds", "duplicate label " + label);
    require(positive(t), "thresholds", "values must be > 0");
  }
  for (std::size_t k = 1; k < thresholds.size(); ++k)
    require(thresholds[k].second < thresholds[k - 1].second, "thresholds", "must be strictly decreasing");
  require(!mid_label.empty(), "mid_label", "must be non-empty");
  require(!static_duration || (std::isfinite(*static_duration) && *static_duration >= 0.0), "static_duration",
          "must be >= 0");
  require(target_survival > 0.0 && target_survival < 1.0, "target_survival", "must lie in (0, 1)");
  require(pass_cap >= 1, "pass_cap", "must be >= 1");
  require(coverage_goal > 0.0 && coverage_goal <= 1.0, "coverage_goal", "must lie in (0, 1]");
}

int RunConfig::resolved_workers() const { return workers > 0 ? workers : default_workers(); }

std::string to_json(const RunConfig& c) {
  Json j;
  j["scene"] = c.scene;
  j["samples"] = c.samples;
  j["tracks"] = c.tracks;
  j["trajectory"] = c.trajectory;
  j["output_dir"] = c.output_dir;
  j["segment_count"] = c.segment_count;
  j["reflectance"] = c.reflectance;
  j["d90_mode"] = c.d90_mode;
  j["d90"] = c.d90 ? Json(*c.d90) : Json(nullptr);
  j["detection_limit"] = c.detection_limit;
  j["dt"] = c.dt;
  j["lane_pitch"] = c.lane_pitch;
  j["danger_radius"] = c.danger_radius;
  j["speed"] = c.speed;
  j["turn_rate"] = c.turn_rate;
  j["height"] = c.height;
  j["fan_multiplier"] = c.fan_multiplier;
  j["workers"] = c.workers;
  j["banks"] = c.banks;
  j["receiver"] = c.receiver;
  j["field_size_m"] = c.field_size_m;
  j["cell_size"] = c.cell_size;
  Json levels = Json::array();
  for (const auto& [label, t] : c.thresholds) levels.push_back({{"label", label}, {"threshold", t}});
  j["thresholds"] = levels;
  j["mid_label"] = c.mid_label;
  j["static_duration"] = c.static_duration ? Json(*c.static_duration) : Json(nullptr);
  j["target_survival"] = c.target_survival;
  j["pass_cap"] = c.pass_cap;
  j["coverage_goal"] = c.coverage_goal;
  return j.dump(2) + "\n";
}

namespace {

template <class T>
void take(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(key, std::string("wrong type: ") + e.what());
  }
}

void take_optional(const Json& j, const char* key, std::optional<double>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  if (!j.at(key).is_number()) throw ValidationError(key, "must be a number or null");
  out = j.at(key).get<double>();
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& source) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(source, 0, e.what());
  }
  if (!j.is_object()) throw ParseError(source, 0, "config must be a JSON object");
  static const std::set<std::string> known = {
      "scene",       "samples",       "tracks",      "trajectory",  "output_dir",     "segment_count",
      "reflectance", "d90_mode",      "d90",         "detection_limit", "dt",         "lane_pitch",
      "danger_radius", "speed",       "turn_rate",   "height",      "fan_multiplier", "workers",
      "banks",       "receiver",      "field_size_m", "cell_size",  "thresholds",     "mid_label",
      "static_duration", "target_survival", "pass_cap", "coverage_goal"};
  for (const auto& item : j.items())
    if (!known.count(item.key())) throw ValidationError(item.key(), "unknown config key");

  RunConfig c;
  take(j, "scene", c.scene);
  take(j, "samples", c.samples);
  take(j, "tracks", c.tracks);
  take(j, "trajectory", c.trajectory);
  take(j, "output_dir", c.output_dir);
  take(j, "segment_count", c.segment_count);
  take(j, "reflectance", c.reflectance);
  take(j, "d90_mode", c.d90_mode);
  take_optional(j, "d90", c.d90);
  take(j, "detection_limit", c.detection_limit);
  take(j, "dt", c.dt);
  take(j, "lane_pitch", c.lane_pitch);
  take(j, "danger_radius", c.danger_radius);
  take(j, "speed", c.speed);
  take(j, "turn_rate", c.turn_rate);
  take(j, "height", c.height);
  take(j, "fan_multiplier", c.fan_multiplier);
  take(j, "workers", c.workers);
  take(j, "banks", c.banks);
  take(j, "receiver", c.receiver);
  take(j, "field_size_m", c.field_size_m);
  take(j, "cell_size", c.cell_size);
  if (j.contains("thresholds")) {
    const Json& t = j.at("thresholds");
    if (!t.is_array()) throw ValidationError("thresholds", "must be an array");
    for (const Json& e : t) {
      if (!e.is_object() || !e.contains("label") || !e.contains("threshold") || !e.at("label").is_string() ||
          !e.at("threshold").is_number())
        throw ValidationError("thresholds", "entries need a string label and a numeric threshold");
      c.thresholds.emplace_back(e.at("label").get<std::string>(), e.at("threshold").get<double>());
    }
  }
  take(j, "mid_label", c.mid_label);
  take_optional(j, "static_duration", c.static_duration);
  take(j, "target_survival", c.target_survival);
  take(j, "pass_cap", c.pass_cap);
  take(j, "coverage_goal", c.coverage_goal);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path), path.string()); }

}  // namespace uvcplan
