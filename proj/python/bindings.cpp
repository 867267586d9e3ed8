// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dmabeam/em_model.hpp"
#include "dmabeam/errors.hpp"
#include "dmabeam/io.hpp"
#include "dmabeam/metrics.hpp"
#include "dmabeam/oracle.hpp"
#include "dmabeam/orchestrator.hpp"

namespace py = pybind11;
using namespace dmabeam;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Hybrid beamforming engine for dynamic-metasurface ISAC arrays";

    py::register_exception<ValidationError>(m, "ValidationError");
    py::register_exception<ConditioningError>(m, "ConditioningError");
    py::register_exception<OracleError>(m, "OracleError");

    py::class_<ArrayGeometry>(m, "ArrayGeometry")
        .def_static("uniform_planar", &ArrayGeometry::uniform_planar, py::arg("rows"),
                    py::arg("cols"), py::arg("spacing"), py::arg("num_rf_ports"),
                    py::arg("num_users"))
        .def_readwrite("positions", &ArrayGeometry::positions)
        .def_readwrite("num_rf_ports", &ArrayGeometry::num_rf_ports)
        .def_readwrite("num_users", &ArrayGeometry::num_users)
        .def("num_elements", &ArrayGeometry::num_elements);

    py::class_<Direction>(m, "Direction")
        .def(py::init([](double theta, double phi) {
                 Direction d;
                 d.theta = theta;
                 d.phi = phi;
                 return d;
             }),
             py::arg("theta"), py::arg("phi"))
        .def_readwrite("theta", &Direction::theta)
        .def_readwrite("phi", &Direction::phi);

    py::class_<AdmittanceSet>(m, "AdmittanceSet")
        .def_readwrite("y_tt", &AdmittanceSet::y_tt)
        .def_readwrite("y_s", &AdmittanceSet::y_s)
        .def_readwrite("y_ss", &AdmittanceSet::y_ss)
        .def_readwrite("y_st", &AdmittanceSet::y_st)
        .def_readwrite("y_r", &AdmittanceSet::y_r)
        .def_readwrite("y_rr", &AdmittanceSet::y_rr)
        .def_readwrite("y_rs", &AdmittanceSet::y_rs);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("geometry", &Scenario::geometry)
        .def_readwrite("admittances", &Scenario::admittances)
        .def_readwrite("directions", &Scenario::directions)
        .def_readwrite("beta_lo", &Scenario::beta_lo)
        .def_readwrite("beta_max", &Scenario::beta_max)
        .def_readwrite("gamma_min", &Scenario::gamma_min)
        .def_readwrite("noise_power", &Scenario::noise_power)
        .def_readwrite("p_max", &Scenario::p_max)
        .def_readwrite("r0", &Scenario::r0)
        .def("num_elements", &Scenario::num_elements)
        .def("num_rf_ports", &Scenario::num_rf_ports)
        .def("num_users", &Scenario::num_users)
        .def("num_directions", &Scenario::num_directions)
        .def("validate", &Scenario::validate);

    py::class_<Beamformer>(m, "Beamformer")
        .def(py::init<>())
        .def_static("zero", &Beamformer::zero, py::arg("num_rf_ports"), py::arg("num_users"))
        .def_readwrite("B", &Beamformer::B);

    py::enum_<SurrogateMode>(m, "SurrogateMode")
        .value("CONVEX_RESTRICTION", SurrogateMode::ConvexRestriction)
        .value("AS_PRINTED", SurrogateMode::AsPrinted);

    py::class_<AlgorithmConfig>(m, "AlgorithmConfig")
        .def(py::init<>())
        .def_readwrite("max_outer_iters", &AlgorithmConfig::max_outer_iters)
        .def_readwrite("analog_steps_per_outer", &AlgorithmConfig::analog_steps_per_outer)
        .def_readwrite("objective_tolerance", &AlgorithmConfig::objective_tolerance)
        .def_readwrite("rank_one_threshold", &AlgorithmConfig::rank_one_threshold)
        .def_readwrite("randomization_samples", &AlgorithmConfig::randomization_samples)
        .def_readwrite("trust_rho", &AlgorithmConfig::trust_rho)
        .def_readwrite("trust_rho_max", &AlgorithmConfig::trust_rho_max)
        .def_readwrite("max_shrinks", &AlgorithmConfig::max_shrinks)
        .def_readwrite("seed", &AlgorithmConfig::seed)
        .def_readwrite("surrogate", &AlgorithmConfig::surrogate);

    py::class_<IterationRecord>(m, "IterationRecord")
        .def_readonly("outer", &IterationRecord::outer)
        .def_property_readonly("stage",
                               [](const IterationRecord& r) { return to_string(r.stage); })
        .def_readonly("p_tot", &IterationRecord::p_tot)
        .def_readonly("per_direction", &IterationRecord::per_direction)
        .def_readonly("per_user_sinr", &IterationRecord::per_user_sinr)
        .def_readonly("p_t", &IterationRecord::p_t)
        .def_readonly("bound", &IterationRecord::bound)
        .def_readonly("accepted", &IterationRecord::accepted);

    py::class_<RunResult>(m, "RunResult")
        .def_property_readonly("B", [](const RunResult& r) { return r.B.B; })
        .def_property_readonly("susceptance", [](const RunResult& r) { return r.state.y; })
        .def_readonly("trace", &RunResult::trace)
        .def_property_readonly("termination",
                               [](const RunResult& r) { return to_string(r.termination); })
        .def_readonly("feasible", &RunResult::feasible)
        .def_readonly("detail", &RunResult::infeasibility_detail)
        .def_readonly("objective", &RunResult::final_p_tot)
        .def_readonly("bound", &RunResult::final_bound);

    m.def("steering_vector",
          [](const ArrayGeometry& g, double theta, double phi) {
              return steering_vector(g, theta, phi).entries;
          },
          py::arg("geometry"), py::arg("theta"), py::arg("phi"));
    m.def("build_synthetic_admittances", &build_synthetic_admittances, py::arg("geometry"),
          py::arg("seed"), py::arg("coupling_scale") = 0.2, py::arg("r0") = 0.0);
    m.def("validate_admittances",
          [](const AdmittanceSet& adm, double eps) {
              const AdmittanceReport report = validate_admittances(adm, eps);
              std::vector<std::pair<std::string, bool>> out;
              out.reserve(report.checks.size());
              for (const auto& c : report.checks) out.emplace_back(c.name, c.passed);
              return out;
          },
          py::arg("admittances"), py::arg("eps") = 1e-9);
    m.def("scenario_with_susceptance", &scenario_with_susceptance, py::arg("scenario"),
          py::arg("susceptance"));

    m.def("sinr",
          [](const Scenario& s, const Beamformer& B, int user) {
              return sinr(s, effective_channels(s), B, user);
          },
          py::arg("scenario"), py::arg("beamformer"), py::arg("user"));
    m.def("beampattern_gain",
          [](const Scenario& s, const Beamformer& B, double theta, double phi) {
              return beampattern_gain(s, B, theta, phi);
          },
          py::arg("scenario"), py::arg("beamformer"), py::arg("theta"), py::arg("phi"));
    m.def("total_beampattern",
          [](const Scenario& s, const Beamformer& B) { return total_beampattern(s, B); },
          py::arg("scenario"), py::arg("beamformer"));
    m.def("radiated_power",
          [](const Scenario& s, const Beamformer& B) { return radiated_power(s, B); },
          py::arg("scenario"), py::arg("beamformer"));
    m.def("objective_upper_bound", &objective_upper_bound, py::arg("scenario"),
          py::arg("beamformer"));

    m.def("run_alternating", &run_alternating, py::arg("scenario"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());

    m.def("run_all_oracles",
          [](int trials, std::uint64_t seed) {
              std::vector<std::tuple<std::string, double, double, bool>> out;
              for (const auto& r : oracle::run_all_oracles(trials, seed))
                  out.emplace_back(r.identity, r.max_rel_error, r.tolerance, r.passed);
              return out;
          },
          py::arg("trials") = 100, py::arg("seed") = 0);

    m.def("load_scenario", &io::load_scenario, py::arg("path"));
    m.def("load_config", &io::load_config, py::arg("path"));
    m.def("parse_scenario_text", &io::parse_scenario_text, py::arg("text"),
          py::arg("origin") = "<string>");
    m.def("render_trace", &io::render_trace, py::arg("result"));
    m.def("render_result", &io::render_result, py::arg("result"), py::arg("scenario"));
}
