#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "uvcplan/config.hpp"
#include "uvcplan/csv.hpp"
#include "uvcplan/dose.hpp"
#include "uvcplan/error.hpp"
#include "uvcplan/field_io.hpp"
#include "uvcplan/irradiance.hpp"
#include "uvcplan/kinetics.hpp"
#include "uvcplan/planner.hpp"
#include "uvcplan/scene.hpp"
#include "uvcplan/zones.hpp"

namespace fs = std::filesystem;

namespace uvcplan::cli {
namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Flag values are collected separately and copied over the config file's
// values only when the flag was given.
class Overrides {
 public:
  explicit Overrides(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& name, T RunConfig::*field, const std::string& help) {
    auto holder = std::make_shared<T>();
    CLI::Option* o = app_->add_option(name, *holder, help);
    apply_.emplace_back(o, [holder, field](RunConfig& c) { c.*field = *holder; });
    return o;
  }

  CLI::Option* add_optional(const std::string& name, std::optional<double> RunConfig::*field, const std::string& help) {
    auto holder = std::make_shared<double>();
    CLI::Option* o = app_->add_option(name, *holder, help);
    apply_.emplace_back(o, [holder, field](RunConfig& c) { c.*field = *holder; });
    return o;
  }

  CLI::Option* add_thresholds(const std::string& name, const std::string& help) {
    auto holder = std::make_shared<std::vector<std::string>>();
    CLI::Option* o = app_->add_option(name, *holder, help);
    apply_.emplace_back(o, [holder](RunConfig& c) {
      c.thresholds.clear();
      for (const auto& item : *holder) {
        const auto eq = item.find('=');
        const std::string label = eq == std::string::npos ? item : item.substr(0, eq);
        const std::string value = eq == std::string::npos ? item : item.substr(eq + 1);
        const auto t = parse_double(value);
        if (!t) throw ValidationError("thresholds", "cannot parse '" + item + "'");
        c.thresholds.emplace_back(label, *t);
      }
    });
    return o;
  }

  void apply(RunConfig& c) const {
    for (const auto& [opt, fn] : apply_)
      if (opt->count() > 0) fn(c);
  }

 private:
  CLI::App* app_;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> apply_;
};

struct Command {
  CLI::App* app{nullptr};
  std::unique_ptr<Overrides> flags;
  std::string config_path;
  std::string write_config;
};

void add_common(Command& c) {
  c.app->add_option("--config", c.config_path, "JSON run configuration; flags override its values");
  c.app->add_option("--write-config", c.write_config, "write the effective configuration as JSON to this path");
  c.flags->add("-o,--out", &RunConfig::output_dir, "output directory");
  c.flags->add("--workers", &RunConfig::workers, "worker threads for field and dose evaluation (0 = all cores)");
}

void add_model(Command& c) {
  c.flags->add("--segment-count", &RunConfig::segment_count, "segments per lamp line source (>= 8)");
  c.flags->add("--reflectance", &RunConfig::reflectance, "reflector image-source weight in [0, 1]");
}

void add_dose(Command& c) {
  c.flags->add("--dt", &RunConfig::dt, "dose time step (s)");
  c.flags->add("--height", &RunConfig::height, "height of the exposed surface (m)");
  c.flags->add("--fan-multiplier", &RunConfig::fan_multiplier, "scalar multiplier on effective dose (fans)");
  c.flags->add("--danger-radius", &RunConfig::danger_radius, "human safety radius (m)");
  c.flags->add("--d90-mode", &RunConfig::d90_mode, "D90 calibration: static (600 s at 2.8 m) or multipass (2 passes at 0.6 m)");
  c.flags->add_optional("--d90", &RunConfig::d90, "explicit D90 (mJ/cm^2), overrides --d90-mode");
  c.flags->add("--tracks", &RunConfig::tracks, "human track CSV (id,t_s,x_m,y_m[,exit_t_s]); replaces the scene's tracks");
}

RunConfig resolve(const Command& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  c.flags->apply(cfg);
  cfg.validate();
  if (!c.write_config.empty()) write_text_file(c.write_config, to_json(cfg));
  return cfg;
}

IrradianceModel make_model(const RunConfig& cfg, const RobotModel& robot) {
  IrradianceModel m;
  m.segment_count = cfg.segment_count;
  m.reflectance = cfg.reflectance;
  m.receiver = cfg.receiver == "planar_up" ? Receiver::planar_up : Receiver::spherical;
  return calibrate(m, robot);
}

Scene require_scene(const RunConfig& cfg) {
  if (cfg.scene.empty()) throw ValidationError("scene", "a scene file is required");
  Scene s = load_scene(cfg.scene);
  if (!cfg.tracks.empty()) s.humans = load_human_tracks(cfg.tracks);
  return s;
}

DoseOptions dose_options(const RunConfig& cfg) {
  DoseOptions o;
  o.dt = cfg.dt;
  o.height = cfg.height;
  o.fan_multiplier = cfg.fan_multiplier;
  o.workers = cfg.resolved_workers();
  return o;
}

struct D90Values {
  double static_mode{0.0};
  double multipass{0.0};
  double used{0.0};
  std::string source;
};

D90Values resolve_d90(const RunConfig& cfg, const IrradianceModel& model, const RobotModel& robot) {
  IrradianceModel spherical = model;
  spherical.receiver = Receiver::spherical;
  DoseOptions o;
  o.dt = cfg.dt;
  o.height = robot.bank(Side::left).center_height;
  D90Values d;
  d.static_mode = calibrate_d90(D90Mode::static_exposure, spherical, robot, o);
  d.multipass = calibrate_d90(D90Mode::multipass, spherical, robot, o);
  if (cfg.d90) {
    d.used = *cfg.d90;
    d.source = "explicit";
  } else {
    d.used = cfg.d90_mode == "static" ? d.static_mode : d.multipass;
    d.source = cfg.d90_mode;
  }
  return d;
}

std::string contour_csv(const std::vector<Contour>& contours) {
  std::ostringstream out;
  out << "label,threshold,polyline,closed,vertex,x_m,y_m\n";
  for (const auto& c : contours)
    for (std::size_t p = 0; p < c.polylines.size(); ++p) {
      const auto& pl = c.polylines[p];
      for (std::size_t v = 0; v < pl.points.size(); ++v)
        out << c.label << "," << format_g6(c.threshold) << "," << p << "," << (pl.closed ? 1 : 0) << "," << v << ","
            << format_exact(pl.points[v].x) << "," << format_exact(pl.points[v].y) << "\n";
    }
  return out.str();
}

// ---------------------------------------------------------------------------

int cmd_field(const RunConfig& cfg, std::ostream& out) {
  Scene scene;
  bool have_scene = !cfg.scene.empty();
  if (have_scene) scene = load_scene(cfg.scene);
  const RobotModel& robot = scene.robot;
  const IrradianceModel model = make_model(cfg, robot);

  GridSpec spec;
  Pose pose;
  if (have_scene) {
    spec = scene.grid;
    if (scene.robot_pose) pose = *scene.robot_pose;
    else pose.position = (spec.origin + spec.max_corner()) * 0.5;
  } else {
    int n = static_cast<int>(std::lround(cfg.field_size_m / cfg.cell_size));
    if (n % 2 == 0) ++n;  // odd count keeps the robot centre on a cell centre
    spec.cell_size = cfg.cell_size;
    spec.width = n;
    spec.height = n;
    spec.origin = {-0.5 * n * cfg.cell_size, -0.5 * n * cfg.cell_size};
  }
  BankMask mask{cfg.banks == "both" || cfg.banks == "left", cfg.banks == "both" || cfg.banks == "right"};
  const ScalarField f =
      field(model, robot, spec, pose, cfg.height, mask, have_scene ? &scene : nullptr, cfg.resolved_workers());
  const fs::path path = fs::path(cfg.output_dir) / "field.csv";
  write_field(path, f);

  double peak = 0.0;
  for (int j = 0; j < spec.height; ++j)
    for (int i = 0; i < spec.width; ++i)
      if (!f.excluded(i, j)) peak = std::max(peak, f.at(i, j));
  const RobotPoint ref{0.0, robot.lamp_plane_offset() + 1.0, cfg.height};
  out << "field: " << path.string() << "\n";
  out << "grid: " << spec.width << " x " << spec.height << " cells of " << format_g6(spec.cell_size) << " m\n";
  out << "max_uW_per_cm2: " << format_g6(peak) << "\n";
  out << "on_axis_1m_uW_per_cm2: " << format_g6(fluence_at(model, robot, ref, mask)) << "\n";
  return kOk;
}

int cmd_zone(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Scene scene;
  if (!cfg.scene.empty()) scene = load_scene(cfg.scene);
  const RobotModel& robot = scene.robot;
  const IrradianceModel model = make_model(cfg, robot);
  const ScalarField lum = simulate_luminosity(model, robot, LuminositySetup{}, cfg.resolved_workers());

  std::vector<ZoneLevel> levels;
  if (cfg.thresholds.empty()) {
    levels = default_levels(lum, robot, cfg.mid_label);
  } else {
    for (const auto& [label, t] : cfg.thresholds) levels.push_back({label, t});
  }
  const DisinfectionZone zone = zone_from_levels(lum, levels, 0.0);

  const fs::path dir(cfg.output_dir);
  write_field(dir / "luminosity.csv", lum);
  write_text_file(dir / "contours.csv", contour_csv(zone.levels));
  write_text_file(dir / "butterfly.csv", contour_csv(zone.butterfly));

  std::ostringstream rep;
  rep << "label,threshold,polylines,area_m2,normal_crossing_m\n";
  const Vec2 origin{0.0, robot.lamp_plane_offset()};
  for (const auto& c : zone.levels) {
    if (c.empty())
      err << "warning: level " << c.label << " (threshold " << format_g6(c.threshold)
          << ") lies above the field maximum; no contour written\n";
    const auto hits = ray_crossings(c, origin, {0.0, 1.0});
    rep << c.label << "," << format_g6(c.threshold) << "," << c.polylines.size() << "," << format_g6(c.area()) << ","
        << (hits.empty() ? std::string("none") : format_g6(hits.back())) << "\n";
  }
  write_text_file(dir / "zone_report.csv", rep.str());
  out << rep.str();
  return kOk;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  if (cfg.samples.empty()) throw ValidationError("samples", "a sample CSV is required");
  const auto series = load_samples(cfg.samples);
  std::ostringstream rep;
  rep << "# kinetics fit, zero counts censored at " << format_g6(cfg.detection_limit) << " CFU\n";
  rep << "label,distance_m,height_m,lambda_per_pass,n0_fit,residual_log10,censored\n";
  for (const auto& s : series) {
    const KineticsFit f = fit(s, cfg.detection_limit);
    rep << s.label << "," << format_g6(s.distance_m) << "," << format_g6(s.height_m) << "," << fmt("%.6f", f.lambda)
        << "," << format_g6(f.n0_fit) << "," << fmt("%.6f", f.residual) << "," << f.censored_count << "\n";
  }
  rep << "# single-pass TBC decrease, shelves normalized and summed per distance\n";
  rep << "distance_m,series,decrease_percent,lambda_equivalent\n";
  for (const auto& row : decrease_by_distance(series)) {
    const auto lam = decrease_to_lambda(row.decrease);
    rep << format_g6(row.distance_m) << "," << row.pairs.size() << "," << fmt("%.2f", row.decrease) << ","
        << (lam ? fmt("%.4f", *lam) : std::string("complete-kill")) << "\n";
  }
  write_text_file(fs::path(cfg.output_dir) / "fit_report.csv", rep.str());
  out << rep.str();
  return kOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const Scene scene = require_scene(cfg);
  const IrradianceModel model = make_model(cfg, scene.robot);
  Trajectory traj;
  if (!cfg.trajectory.empty()) {
    traj = load_trajectory(cfg.trajectory);
  } else if (cfg.static_duration) {
    if (!scene.robot_pose) throw ValidationError("robot.pose", "a static sweep needs the scene's robot.pose");
    traj.id = "static";
    Pose p = *scene.robot_pose;
    p.time = 0.0;
    traj.poses.push_back(p);
    if (*cfg.static_duration > 0.0) {
      p.time = *cfg.static_duration;
      traj.poses.push_back(p);
    }
  } else {
    throw ValidationError("trajectory", "give a trajectory file or a static duration");
  }
  SafetyPolicy policy;
  policy.danger_radius = cfg.danger_radius;
  const DoseMap d = accumulate(scene, traj, model, dose_options(cfg), policy);
  const D90Values d90 = resolve_d90(cfg, model, scene.robot);
  const ScalarField surv = survival(d.dose, d90.used);

  const fs::path dir(cfg.output_dir);
  write_field(dir / "dose.csv", d.dose);
  write_field(dir / "survival.csv", surv);
  write_text_file(dir / "mask.csv", format_mask_csv(d.mask_history));

  double peak = 0.0;
  for (int j = 0; j < scene.grid.height; ++j)
    for (int i = 0; i < scene.grid.width; ++i)
      if (!d.dose.excluded(i, j)) peak = std::max(peak, d.dose.at(i, j));
  std::ostringstream rep;
  rep << "trajectory: " << d.trajectory_id << "\n";
  rep << "duration_s: " << format_g6(d.duration) << "\n";
  rep << "max_dose_mJ_per_cm2: " << format_g6(peak) << "\n";
  rep << "d90_mJ_per_cm2: " << format_g6(d90.used) << " (" << d90.source << ")\n";
  rep << "d90_static_mJ_per_cm2: " << format_g6(d90.static_mode) << "\n";
  rep << "d90_multipass_mJ_per_cm2: " << format_g6(d90.multipass) << "\n";
  rep << "left_on_s: " << format_g6(d.left_on_time) << "\n";
  rep << "right_on_s: " << format_g6(d.right_on_time) << "\n";
  rep << "lamp_energy_wh: " << format_g6(d.lamp_energy_wh) << "\n";
  rep << "mask_events: " << d.mask_history.size() << "\n";
  write_text_file(dir / "sweep_report.txt", rep.str());
  out << rep.str();
  return kOk;
}

int cmd_plan(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Scene scene = require_scene(cfg);
  IrradianceModel model = make_model(cfg, scene.robot);
  const D90Values d90 = resolve_d90(cfg, model, scene.robot);
  PlannerOptions opt;
  opt.lane_pitch = cfg.lane_pitch;
  opt.turn_rate = cfg.turn_rate;
  opt.pass_cap = cfg.pass_cap;
  opt.coverage_goal = cfg.coverage_goal;
  opt.dose = dose_options(cfg);
  opt.policy.danger_radius = cfg.danger_radius;
  const CoveragePlan plan = plan_coverage(scene, cfg.target_survival, cfg.speed, model, d90.used, opt);
  const VerificationReport& rep = plan.report;

  const fs::path dir(cfg.output_dir);
  write_text_file(dir / "plan.csv", format_trajectory_csv(plan.trajectory));
  std::ostringstream wp;
  wp << "index,x_m,y_m\n";
  for (std::size_t k = 0; k < plan.circuit.size(); ++k)
    wp << k << "," << format_exact(plan.circuit[k].x) << "," << format_exact(plan.circuit[k].y) << "\n";
  write_text_file(dir / "circuit.csv", wp.str());
  write_field(dir / "verification.csv", plan.verification);
  write_field(dir / "dose.csv", rep.dose);
  write_text_file(dir / "mask.csv", format_mask_csv(rep.mask_history));

  std::ostringstream r;
  r << "passes: " << plan.passes << "\n";
  r << "complete: " << (plan.complete ? "yes" : "no") << "\n";
  r << "target_survival: " << format_g6(plan.target_survival) << "\n";
  r << "coverage_fraction: " << fmt("%.6f", plan.coverage_fraction) << "\n";
  r << "coverage_by_pass:";
  for (double c : plan.coverage_by_pass) r << " " << fmt("%.6f", c);
  r << "\n";
  r << "target_cells: " << rep.target_cells << "\n";
  r << "worst_survival: " << format_g6(rep.worst_survival) << "\n";
  r << "lanes_along: " << (plan.lanes_along_x ? "x" : "y") << "\n";
  r << "lane_positions_m:";
  for (double w : plan.lane_positions) r << " " << format_g6(w);
  r << "\n";
  r << "speed_m_per_s: " << format_g6(plan.speed) << "\n";
  r << "total_time_s: " << format_g6(rep.total_time) << "\n";
  r << "lamp_energy_wh: " << format_g6(rep.lamp_energy_wh) << "\n";
  r << "d90_mJ_per_cm2: " << format_g6(d90.used) << " (" << d90.source << ")\n";
  r << "d90_static_mJ_per_cm2: " << format_g6(d90.static_mode) << "\n";
  r << "d90_multipass_mJ_per_cm2: " << format_g6(d90.multipass) << "\n";
  r << "failing_cells: " << rep.failing_cells.size() << "\n";
  for (const auto& c : rep.failing_cells)
    r << "  failing " << c.i << " " << c.j << " survival " << format_g6(rep.survival.at(c.i, c.j)) << "\n";
  r << "shadow_cells: " << rep.shadow_cells.size() << "\n";
  for (const auto& c : rep.shadow_cells) r << "  shadow " << c.i << " " << c.j << "\n";
  write_text_file(dir / "plan_report.txt", r.str());
  out << r.str();
  if (!plan.complete) {
    err << "error: target survival " << format_g6(plan.target_survival) << " not met on "
        << format_g6(100.0 * opt.coverage_goal) << "% of cells within " << opt.pass_cap
        << " passes; best plan written, flagged incomplete\n";
    return kInfeasible;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"uvcplan: UV-C disinfection robot field, zone, kinetics, dose and coverage planning toolkit.\n"
               "Lengths in m, times in s, irradiance in uW/cm^2, dose in mJ/cm^2, counts in CFU per 25 cm^2."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "uvcplan 1.0.0");

  std::vector<Command> cmds;
  auto make = [&](const char* name, const char* help) -> Command& {
    Command c;
    c.app = app.add_subcommand(name, help);
    c.flags = std::make_unique<Overrides>(c.app);
    cmds.push_back(std::move(c));
    add_common(cmds.back());
    return cmds.back();
  };
  cmds.reserve(5);

  Command& field_cmd = make("field", "irradiance grid (uW/cm^2) around the robot -> field.csv + .hdr");
  add_model(field_cmd);
  field_cmd.flags->add("--scene", &RunConfig::scene, "scene file; its grid and robot.pose are used");
  field_cmd.flags->add("--banks", &RunConfig::banks, "enabled banks: both | left | right | none");
  field_cmd.flags->add("--receiver", &RunConfig::receiver, "receiver: spherical (fluence rate) | planar_up");
  field_cmd.flags->add("--height", &RunConfig::height, "evaluation height (m)");
  field_cmd.flags->add("--size", &RunConfig::field_size_m, "side of the square grid without a scene (m)");
  field_cmd.flags->add("--cell-size", &RunConfig::cell_size, "cell size without a scene (m)");

  Command& zone_cmd = make("zone", "disinfection zone contours from simulated floor luminosity");
  add_model(zone_cmd);
  zone_cmd.flags->add("--scene", &RunConfig::scene, "scene file (robot model only)");
  zone_cmd.flags->add_thresholds("--threshold", "level as LABEL=VALUE or VALUE (normalized luminosity), repeatable, decreasing");
  zone_cmd.flags->add("--mid-label", &RunConfig::mid_label, "label of the 0.6 m default level");

  Command& fit_cmd = make("fit", "Chick-Watson fit and TBC decrease table from swab counts");
  fit_cmd.flags->add("--samples", &RunConfig::samples, "sample CSV: label,distance_m,height_m,pass_n,count_cfu");
  fit_cmd.flags->add("--detection-limit", &RunConfig::detection_limit, "substitute for zero counts (CFU)");

  Command& sweep_cmd = make("sweep", "dose (mJ/cm^2) and survival along a trajectory, with lamp masking");
  add_model(sweep_cmd);
  add_dose(sweep_cmd);
  sweep_cmd.flags->add("--scene", &RunConfig::scene, "scene file");
  sweep_cmd.flags->add("--trajectory", &RunConfig::trajectory, "trajectory CSV (id,t_s,x_m,y_m[,heading_rad])");
  sweep_cmd.flags->add_optional("--static-duration", &RunConfig::static_duration,
                                "hold the scene's robot.pose for this long (s) instead of a trajectory");

  Command& plan_cmd = make("plan", "multi-pass boustrophedon coverage plan verified by simulation");
  add_model(plan_cmd);
  add_dose(plan_cmd);
  plan_cmd.flags->add("--scene", &RunConfig::scene, "scene file");
  plan_cmd.flags->add("--target", &RunConfig::target_survival, "target survival fraction in (0, 1)");
  plan_cmd.flags->add("--speed", &RunConfig::speed, "driving speed (m/s)");
  plan_cmd.flags->add("--turn-rate", &RunConfig::turn_rate, "rotation rate in place (rad/s)");
  plan_cmd.flags->add("--lane-pitch", &RunConfig::lane_pitch, "lane spacing (m)");
  plan_cmd.flags->add("--pass-cap", &RunConfig::pass_cap, "maximum number of passes");
  plan_cmd.flags->add("--coverage-goal", &RunConfig::coverage_goal, "fraction of target cells that must meet the target");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << "uvcplan 1.0.0\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  try {
    for (auto& c : cmds) {
      if (!c.app->parsed()) continue;
      const RunConfig cfg = resolve(c);
      const std::string name = c.app->get_name();
      if (name == "field") return cmd_field(cfg, out);
      if (name == "zone") return cmd_zone(cfg, out, err);
      if (name == "fit") return cmd_fit(cfg, out);
      if (name == "sweep") return cmd_sweep(cfg, out);
      if (name == "plan") return cmd_plan(cfg, out, err);
    }
  } catch (const UnreachableError& e) {
    err << "error: " << e.what() << " (" << e.cell_count() << " cells)\n";
    return kInfeasible;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  return kValidation;
}

}  // namespace uvcplan::cli
