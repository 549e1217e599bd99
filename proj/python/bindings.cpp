#include "mienkf/io.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace mienkf;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ensemble Kalman filters: EnKF, MLEnKF and MIEnKF";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<ConfigurationError>(m, "ConfigurationError", PyExc_RuntimeError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  py::class_<ModelSpec>(m, "ModelSpec")
      .def_property_readonly("kind", [](const ModelSpec& s) { return std::string(to_string(s.kind)); })
      .def_readonly("state_dim", &ModelSpec::state_dim)
      .def_readwrite("sigma", &ModelSpec::sigma)
      .def_readwrite("kappa", &ModelSpec::kappa)
      .def_readwrite("temperature", &ModelSpec::temperature)
      .def_readwrite("obs_operator", &ModelSpec::obs_operator)
      .def_readwrite("obs_noise_cov", &ModelSpec::obs_noise_cov)
      .def_readwrite("obs_interval", &ModelSpec::obs_interval);

  m.def("make_model", [](const std::string& name) { return make_model(parse_model_kind(name)); }, py::arg("name"));
  m.def("make_langevin", &make_langevin, py::arg("obs_operator") = Matrix(Matrix::Identity(1, 2)));

  py::class_<ObservationSequence>(m, "ObservationSequence")
      .def_readonly("truth", &ObservationSequence::truth)
      .def_readonly("obs", &ObservationSequence::obs)
      .def_readonly("horizon", &ObservationSequence::horizon)
      .def_readonly("seed", &ObservationSequence::seed);

  m.def(
      "synthesize_data",
      [](const ModelSpec& model, int horizon, std::uint64_t seed, int truth_steps) {
        SynthesisOptions opt;
        opt.truth_steps = truth_steps;
        return synthesize_data(model, horizon, seed, opt);
      },
      py::arg("model"), py::arg("horizon"), py::arg("seed"), py::arg("truth_steps") = 256);

  py::class_<ScheduleParams>(m, "Schedule")
      .def_property_readonly("method", [](const ScheduleParams& s) { return std::string(to_string(s.method)); })
      .def_readonly("epsilon", &ScheduleParams::epsilon)
      .def_readonly("max_level", &ScheduleParams::max_level)
      .def_property_readonly("n0", [](const ScheduleParams& s) { return s.resolution.n0; })
      .def_property_readonly("p0", [](const ScheduleParams& s) { return s.resolution.p0; })
      .def_property_readonly("levels",
                             [](const ScheduleParams& s) {
                               std::vector<std::tuple<int, int, long>> out;
                               for (const auto& l : s.levels) out.emplace_back(l.index.l1, l.index.l2, l.samples);
                               return out;
                             })
      .def("work_units", &ScheduleParams::work_units, py::arg("horizon"));

  m.def(
      "build_schedule",
      [](const std::string& method, double epsilon, const std::string& profile) {
        return build_schedule(parse_method(method), epsilon, parse_profile(profile));
      },
      py::arg("method"), py::arg("epsilon"), py::arg("profile") = "scalar");

  py::class_<RunRecord>(m, "RunRecord")
      .def_property_readonly("method", [](const RunRecord& r) { return std::string(to_string(r.method)); })
      .def_readonly("qoi_names", &RunRecord::qoi_names)
      .def_readonly("estimates", &RunRecord::estimates)
      .def_readonly("work_units", &RunRecord::work_units)
      .def_readonly("wall_time", &RunRecord::wall_time)
      .def_readonly("schedule", &RunRecord::schedule)
      .def("to_json", [](const RunRecord& r) { return run_record_json(r); });

  m.def(
      "run_filter",
      [](const ScheduleParams& schedule, const ModelSpec& model, const ObservationSequence& data, std::uint64_t seed,
         std::uint64_t run, int threads) {
        const auto qois = default_qois(model);
        py::gil_scoped_release release;
        return run_filter(schedule, model, data, qois, RunOptions{seed, run, threads});
      },
      py::arg("schedule"), py::arg("model"), py::arg("data"), py::arg("seed") = 0, py::arg("run") = 0,
      py::arg("threads") = 1);

  m.def(
      "kalman_reference",
      [](const ModelSpec& model, const ObservationSequence& data) {
        std::vector<Vector> means;
        std::vector<Matrix> covs;
        for (const auto& b : kalman_reference(model, data)) {
          means.push_back(b.mean);
          covs.push_back(b.cov);
        }
        return py::make_tuple(means, covs);
      },
      py::arg("model"), py::arg("data"));

  m.def(
      "reference_means",
      [](const ModelSpec& model, const ObservationSequence& data, double epsilon, int runs, std::uint64_t seed) {
        py::gil_scoped_release release;
        return compute_pseudoreference(model, data, PseudoreferenceOptions{epsilon, runs, seed, 1}).mean;
      },
      py::arg("model"), py::arg("data"), py::arg("epsilon") = 1.0 / 256.0, py::arg("runs") = 32,
      py::arg("seed") = 0);

  m.def(
      "rmse",
      [](const std::vector<RunRecord>& runs, const std::vector<double>& reference, std::size_t q) {
        return compute_rmse(runs, reference, q);
      },
      py::arg("runs"), py::arg("reference"), py::arg("qoi") = 0);

  m.def(
      "mixed_difference_moments",
      [](const ModelSpec& model, const ObservationSequence& data, int max_order, long samples, int n0, int p0,
         std::uint64_t seed) {
        RateOptions opt;
        opt.max_order = max_order;
        opt.samples = samples;
        opt.resolution = {n0, p0};
        opt.seed = seed;
        RateTable table;
        {
          py::gil_scoped_release release;
          table = estimate_rates(model, data, opt);
        }
        std::ostringstream os;
        write_rates_csv(os, table);
        return os.str();
      },
      py::arg("model"), py::arg("data"), py::arg("max_order") = 2, py::arg("samples") = 100, py::arg("n0") = 4,
      py::arg("p0") = 20, py::arg("seed") = 0);
}
