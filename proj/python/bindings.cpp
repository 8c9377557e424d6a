#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "uvcplan/dose.hpp"
#include "uvcplan/error.hpp"
#include "uvcplan/kinetics.hpp"
#include "uvcplan/planner.hpp"
#include "uvcplan/zones.hpp"

namespace py = pybind11;
using namespace uvcplan;

namespace {

using XY = std::pair<double, double>;

Vec2 vec(XY p) { return {p.first, p.second}; }

py::array_t<double> values_of(const ScalarField& f) {
  const GridSpec& g = f.spec();
  py::array_t<double> a({g.height, g.width});
  auto v = f.values();
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<bool> excluded_of(const ScalarField& f) {
  const GridSpec& g = f.spec();
  py::array_t<bool> a({g.height, g.width});
  auto m = f.excluded_mask();
  bool* out = a.mutable_data();
  for (std::size_t k = 0; k < m.size(); ++k) out[k] = m[k] != 0;
  return a;
}

PassSeries to_series(const std::vector<double>& counts, const std::string& label) {
  PassSeries s;
  s.label = label;
  for (std::size_t n = 0; n < counts.size(); ++n) s.observations.push_back({static_cast<int>(n), counts[n]});
  return s;
}

py::dict fit_dict(const KineticsFit& f) {
  py::dict d;
  d["lambda"] = f.lambda;
  d["n0"] = f.n0_fit;
  d["residual"] = f.residual;
  d["censored"] = f.censored_count;
  return d;
}

std::vector<std::vector<XY>> polylines_of(const Contour& c) {
  std::vector<std::vector<XY>> out;
  for (const auto& pl : c.polylines) {
    std::vector<XY> pts;
    for (Vec2 v : pl.points) pts.emplace_back(v.x, v.y);
    out.push_back(std::move(pts));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "UV-C disinfection robot toolkit: irradiance, zones, kinetics, dose and coverage planning";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<UnreachableError>(m, "UnreachableError", PyExc_RuntimeError);

  py::class_<GridSpec>(m, "GridSpec")
      .def_readonly("width", &GridSpec::width)
      .def_readonly("height", &GridSpec::height)
      .def_readonly("cell_size", &GridSpec::cell_size)
      .def_property_readonly("origin", [](const GridSpec& g) { return XY{g.origin.x, g.origin.y}; })
      .def("cell_center", [](const GridSpec& g, int i, int j) {
        const Vec2 c = g.cell_center(i, j);
        return XY{c.x, c.y};
      });

  py::class_<ScalarField>(m, "ScalarField")
      .def_property_readonly("spec", &ScalarField::spec)
      .def_property_readonly("values", &values_of, "values as a (height, width) array, row j is y")
      .def_property_readonly("excluded", &excluded_of)
      .def("at", py::overload_cast<int, int>(&ScalarField::at, py::const_))
      .def("max_value", &ScalarField::max_value);

  py::class_<RobotModel>(m, "RobotModel")
      .def(py::init<>())
      .def_readwrite("body_halfwidth", &RobotModel::body_halfwidth)
      .def_readwrite("body_halflength", &RobotModel::body_halflength)
      .def("lamp_plane_offset", &RobotModel::lamp_plane_offset)
      .def("bank_power_w", [](const RobotModel& r, const std::string& side) {
        return r.bank_power_w(side == "left" ? Side::left : Side::right);
      });

  py::class_<IrradianceModel>(m, "IrradianceModel")
      .def(py::init<>())
      .def_readwrite("segment_count", &IrradianceModel::segment_count)
      .def_readwrite("reflectance", &IrradianceModel::reflectance)
      .def_property(
          "receiver", [](const IrradianceModel& i) { return i.receiver == Receiver::planar_up ? "planar_up" : "spherical"; },
          [](IrradianceModel& i, const std::string& r) {
            if (r != "spherical" && r != "planar_up") throw ValidationError("receiver", "spherical or planar_up");
            i.receiver = r == "planar_up" ? Receiver::planar_up : Receiver::spherical;
          })
      .def_property_readonly("calibrated", &IrradianceModel::calibrated);

  m.def("calibrate", &calibrate, py::arg("model"), py::arg("robot"));
  m.def(
      "fluence_at",
      [](const IrradianceModel& model, const RobotModel& robot, double along, double lateral, double z, bool left,
         bool right) { return fluence_at(model, robot, RobotPoint{along, lateral, z}, BankMask{left, right}); },
      py::arg("model"), py::arg("robot"), py::arg("along"), py::arg("lateral"), py::arg("z"), py::arg("left") = true,
      py::arg("right") = true, "fluence rate (uW/cm^2) at a robot-frame point");

  py::class_<Scene>(m, "Scene")
      .def_static("empty_room", &Scene::empty_room, py::arg("width_m"), py::arg("height_m"), py::arg("cell_size"))
      .def_readonly("grid", &Scene::grid)
      .def_readonly("robot", &Scene::robot)
      .def("has_obstacles", &Scene::has_obstacles);
  m.def("load_scene", &load_scene, py::arg("path"));
  m.def("parse_scene", [](const std::string& text) { return parse_scene(text); }, py::arg("text"));

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("id", &Trajectory::id)
      .def("duration", &Trajectory::duration)
      .def("path_length", &Trajectory::path_length)
      .def("pose_at", [](const Trajectory& t, double time) {
        const Pose p = t.pose_at(time);
        return py::make_tuple(p.position.x, p.position.y, p.heading);
      });
  m.def("load_trajectory", &load_trajectory, py::arg("path"));
  m.def(
      "build_trajectory",
      [](const std::vector<XY>& waypoints, double speed, double turn_rate) {
        std::vector<Vec2> w;
        for (XY p : waypoints) w.push_back(vec(p));
        MotionProfile prof;
        prof.speed = speed;
        prof.turn_rate = turn_rate;
        return build_trajectory(w, prof);
      },
      py::arg("waypoints"), py::arg("speed") = 0.14, py::arg("turn_rate") = 0.5);

  m.def(
      "field",
      [](const IrradianceModel& model, const RobotModel& robot, double size_m, double cell_size, double height) {
        int n = static_cast<int>(std::lround(size_m / cell_size));
        if (n % 2 == 0) ++n;
        GridSpec g;
        g.cell_size = cell_size;
        g.width = g.height = n;
        g.origin = {-0.5 * n * cell_size, -0.5 * n * cell_size};
        return field(model, robot, g, Pose{}, height, BankMask{});
      },
      py::arg("model"), py::arg("robot"), py::arg("size_m") = 6.0, py::arg("cell_size") = 0.2, py::arg("height") = 0.83,
      "irradiance grid centred on a robot at the origin facing +x");

  m.def(
      "accumulate",
      [](const Scene& scene, const Trajectory& t, const IrradianceModel& model, double dt, double height) {
        DoseOptions o;
        o.dt = dt;
        o.height = height;
        const DoseMap d = accumulate(scene, t, model, o);
        py::dict r;
        r["dose"] = d.dose;
        r["lamp_energy_wh"] = d.lamp_energy_wh;
        r["left_on_s"] = d.left_on_time;
        r["right_on_s"] = d.right_on_time;
        return r;
      },
      py::arg("scene"), py::arg("trajectory"), py::arg("model"), py::arg("dt") = 0.1, py::arg("height") = 0.83);
  m.def("survival", &survival, py::arg("dose"), py::arg("d90"));
  m.def(
      "calibrate_d90",
      [](const std::string& mode, const IrradianceModel& model, const RobotModel& robot) {
        if (mode != "static" && mode != "multipass") throw ValidationError("mode", "static or multipass");
        return calibrate_d90(mode == "static" ? D90Mode::static_exposure : D90Mode::multipass, model, robot);
      },
      py::arg("mode"), py::arg("model"), py::arg("robot"));

  m.def("predict", &predict, py::arg("n0"), py::arg("lam"), py::arg("n"));
  m.def(
      "fit", [](const std::vector<double>& counts, double limit) { return fit_dict(fit(to_series(counts, "s"), limit)); },
      py::arg("counts"), py::arg("detection_limit") = 0.5, "fit counts observed after 0, 1, 2, ... passes");
  m.def("tbc_decrease", &tbc_decrease, py::arg("before"), py::arg("after"));
  m.def("aggregate_decrease", &aggregate_decrease, py::arg("pairs"));
  m.def("decrease_to_lambda", &decrease_to_lambda, py::arg("percent"));
  m.def(
      "decrease_table",
      [](const std::filesystem::path& path) {
        std::vector<std::pair<double, double>> rows;
        for (const auto& r : decrease_by_distance(load_samples(path))) rows.emplace_back(r.distance_m, r.decrease);
        return rows;
      },
      py::arg("path"), "(distance, percent decrease) per distance from a sample CSV");

  m.def(
      "simulate_luminosity",
      [](const IrradianceModel& model, const RobotModel& robot) { return simulate_luminosity(model, robot, LuminositySetup{}); },
      py::arg("model"), py::arg("robot"));
  m.def(
      "extract_contour",
      [](const ScalarField& f, double threshold) { return polylines_of(extract_contour(f, threshold)); },
      py::arg("field"), py::arg("threshold"), "iso-contour polylines as lists of (x, y)");

  m.def(
      "plan_coverage",
      [](const Scene& scene, const IrradianceModel& model, double d90, double target, double speed, int pass_cap) {
        PlannerOptions o;
        o.pass_cap = pass_cap;
        const CoveragePlan p = plan_coverage(scene, target, speed, model, d90, o);
        py::dict r;
        r["passes"] = p.passes;
        r["complete"] = p.complete;
        r["coverage_fraction"] = p.coverage_fraction;
        r["coverage_by_pass"] = p.coverage_by_pass;
        r["lane_positions"] = p.lane_positions;
        r["lanes_along_x"] = p.lanes_along_x;
        r["total_time_s"] = p.report.total_time;
        r["lamp_energy_wh"] = p.report.lamp_energy_wh;
        r["trajectory"] = p.trajectory;
        r["survival"] = p.verification;
        return r;
      },
      py::arg("scene"), py::arg("model"), py::arg("d90"), py::arg("target") = 0.1, py::arg("speed") = 0.14,
      py::arg("pass_cap") = PlannerOptions{}.pass_cap);
}
