#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gridadv/attack.hpp"
#include "gridadv/bdd.hpp"
#include "gridadv/estimation.hpp"
#include "gridadv/grid.hpp"
#include "gridadv/harness.hpp"
#include "gridadv/nse.hpp"
#include "gridadv/powerflow.hpp"
#include "gridadv/region.hpp"

namespace py = pybind11;
using namespace gridadv;

namespace {

/// Case plus its admittance matrices, built once.
struct Grid {
  NetworkCase c;
  AdmittanceSet y;
  explicit Grid(NetworkCase nc) : c(std::move(nc)), y(build_admittance(c)) {}
};

StateVector state_of(const Grid& g, const Eigen::VectorXd& vm, const Eigen::VectorXd& va) {
  if (vm.size() != g.c.num_buses() || va.size() != g.c.num_buses())
    throw std::invalid_argument("vm and va need one entry per bus");
  StateVector x = StateVector::flat(g.c.num_buses());
  x.vm = vm;
  x.va = va;
  return x;
}

py::dict state_dict(const StateVector& x) {
  py::dict d;
  d["vm"] = x.vm;
  d["va"] = x.va;
  return d;
}

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Power-grid state estimation and attack-evaluation core";

  py::register_exception<HarnessError>(m, "HarnessError");
  py::register_exception<RegionError>(m, "RegionError");

  py::class_<Grid>(m, "Grid")
      .def_property_readonly("name", [](const Grid& g) { return g.c.name; })
      .def_property_readonly("base_mva", [](const Grid& g) { return g.c.base_mva; })
      .def_property_readonly("num_buses", [](const Grid& g) { return g.c.num_buses(); })
      .def_property_readonly("num_branches", [](const Grid& g) { return g.c.num_branches(); })
      .def_property_readonly("num_measurements", [](const Grid& g) { return g.c.num_measurements(); })
      .def_property_readonly("slack_bus", [](const Grid& g) { return g.c.slack_bus(); })
      .def("__repr__", [](const Grid& g) {
        return "<Grid " + g.c.name + ": " + std::to_string(g.c.num_buses()) + " buses, " +
               std::to_string(g.c.num_branches()) + " branches>";
      });

  m.def("load_case", [](const std::string& name) { return Grid(load_case(name)); }, py::arg("name_or_path"),
        "Bundled case name (case14, case39, ...) or a MATPOWER/JSON file path.");

  m.def(
      "solve_powerflow",
      [](const Grid& g, double factor) {
        const auto r = solve_scaled_powerflow(g.c, g.y, factor);
        auto d = state_dict(r.state);
        d["iterations"] = r.iterations;
        d["mismatch"] = r.mismatch;
        return d;
      },
      py::arg("grid"), py::arg("load_factor") = 1.0);

  m.def(
      "measurement_function",
      [](const Grid& g, const Eigen::VectorXd& vm, const Eigen::VectorXd& va) {
        return measurement_function(g.c, g.y, state_of(g, vm, va)).values;
      },
      py::arg("grid"), py::arg("vm"), py::arg("va"));

  m.def(
      "measurement_jacobian",
      [](const Grid& g, const Eigen::VectorXd& vm, const Eigen::VectorXd& va) {
        return measurement_jacobian(g.c, g.y, state_of(g, vm, va));
      },
      py::arg("grid"), py::arg("vm"), py::arg("va"));

  m.def("nominal_weights", [](const Grid& g) { return nominal_weights(g.c, g.y); }, py::arg("grid"));

  m.def(
      "wls_estimate",
      [](const Grid& g, const Eigen::VectorXd& z, std::optional<Eigen::VectorXd> weights, double tol) {
        EstimatorConfig cfg;
        cfg.tol = tol;
        cfg.weights = weights ? *weights : nominal_weights(g.c, g.y);
        const auto r = wls_estimate(g.c, g.y, MeasurementVector{z}, cfg);
        auto d = state_dict(r.state);
        d["converged"] = r.converged;
        d["iterations"] = r.iterations;
        d["objective"] = r.objective;
        return d;
      },
      py::arg("grid"), py::arg("z"), py::arg("weights") = py::none(), py::arg("tol") = 1e-6);

  m.def(
      "normalized_residuals",
      [](const Grid& g, const Eigen::VectorXd& z, const Eigen::VectorXd& vm, const Eigen::VectorXd& va,
         std::optional<Eigen::VectorXd> weights, bool classical) {
        BddOptions opts;
        opts.classical_normalization = classical;
        return normalized_residuals(g.c, g.y, MeasurementVector{z}, state_of(g, vm, va),
                                    weights ? *weights : nominal_weights(g.c, g.y), opts);
      },
      py::arg("grid"), py::arg("z"), py::arg("vm"), py::arg("va"), py::arg("weights") = py::none(),
      py::arg("classical") = false);

  py::class_<AttackRegion>(m, "AttackRegion")
      .def_readonly("case_name", &AttackRegion::case_name)
      .def_readonly("buses", &AttackRegion::buses)
      .def_readonly("lines", &AttackRegion::lines)
      .def_readonly("measurement_index_map", &AttackRegion::measurement_index_map)
      .def_readonly("state_index_map", &AttackRegion::state_index_map)
      .def_property_readonly("kind", [](const AttackRegion& r) { return to_string(r.kind); })
      .def_property_readonly("num_measurements", &AttackRegion::num_measurements)
      .def_property_readonly("num_states", &AttackRegion::num_states);

  m.def("load_region", [](const Grid& g, const std::string& name) { return load_region(g.c, name); },
        py::arg("grid"), py::arg("name_or_path"));
  m.def("localized_region", [](const Grid& g, int bus, int hops) { return localized_region(g.c, bus, hops); },
        py::arg("grid"), py::arg("target_bus"), py::arg("k_hops"));

  m.def(
      "solve_sdp",
      [](const Eigen::MatrixXd& q, double epsilon) {
        PcdmConfig cfg;
        cfg.epsilon = epsilon;
        const auto s = solve_sdp(q, cfg);
        py::dict d;
        d["objective"] = s.objective;
        d["lambda_star"] = s.lambda_star;
        d["lambda_2"] = s.lambda_2;
        d["nu_star"] = s.nu_star;
        d["degenerate"] = s.degenerate;
        d["eta"] = recover_perturbation(s, cfg);
        return d;
      },
      py::arg("q"), py::arg("epsilon"), "Solve the attack SDP for a symmetric PSD matrix q = J^T J.");

  py::class_<MlpModel>(m, "Model")
      .def_property_readonly("inputs", &MlpModel::inputs)
      .def_property_readonly("outputs", &MlpModel::outputs)
      .def_property_readonly("metadata", [](const MlpModel& mm) { return to_py(mm.metadata); })
      .def("predict", [](const MlpModel& mm, const Eigen::VectorXd& z) { return predict(mm, z); })
      .def("input_jacobian", [](const MlpModel& mm, const Eigen::VectorXd& z) { return input_jacobian(mm, z); });

  m.def("load_model", [](const std::filesystem::path& p) { return load_model(p); }, py::arg("path"));

  m.def(
      "run_attack",
      [](const MlpModel& model, const AttackRegion& region, const Eigen::VectorXd& z, double epsilon,
         const std::string& mode, double unit) {
        PcdmConfig cfg;
        cfg.epsilon = epsilon;
        cfg.mode = selection_mode_from(mode);
        cfg.measurement_unit = unit;
        const auto r = run_attack(model, region, z, cfg);
        py::dict d;
        d["z_attacked"] = r.z_attacked;
        d["eta"] = r.eta;
        d["selection"] = r.selection;
        d["lambda_star"] = r.diagnostics.lambda_star;
        d["lambda_2"] = r.diagnostics.lambda_2;
        d["predicted_deviation"] = r.diagnostics.predicted_deviation;
        return d;
      },
      py::arg("model"), py::arg("region"), py::arg("z"), py::arg("epsilon") = 1.0, py::arg("mode") = "all",
      py::arg("measurement_unit") = 1.0);

  m.def("default_plan", []() { return to_py(plan_to_json(ExperimentPlan::desk())); });
  m.def(
      "run_pipeline",
      [](const py::dict& overrides) {
        const auto plan = plan_from_json(from_py(overrides));
        Report rep;
        {
          py::gil_scoped_release release;
          rep = run_pipeline(plan);
        }
        return to_py(rep.json);
      },
      py::arg("plan"), "Run every stage with the given plan overrides; returns the report JSON.");
}
