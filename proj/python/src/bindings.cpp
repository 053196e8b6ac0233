#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qff/capacity.hpp"
#include "qff/circuit.hpp"
#include "qff/cli.hpp"
#include "qff/data.hpp"
#include "qff/dynamics.hpp"
#include "qff/errors.hpp"
#include "qff/gradients.hpp"
#include "qff/model.hpp"
#include "qff/presets.hpp"
#include "qff/train.hpp"

namespace py = pybind11;
using namespace qff;

namespace {

QnnTemplate make_template(int qubits, int depth, const std::string& entanglement,
                          std::vector<std::vector<int>> degree_sets) {
  EncodingSpec enc;
  enc.num_qubits = qubits;
  enc.entanglement = parse_entanglement(entanglement);
  enc.degree_sets = std::move(degree_sets);
  AnsatzSpec ans;
  static_cast<CouplingSpec&>(ans) = enc;
  return assemble_qnn(enc, ans, depth);
}

}  // namespace

PYBIND11_MODULE(_qff, m) {
  m.doc() = "Re-uploading quantum neural network force fields";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
  auto data_err = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", data_err.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<QnnTemplate>(m, "QnnTemplate")
      .def_property_readonly("num_params", &QnnTemplate::num_params)
      .def_property_readonly("num_features", &QnnTemplate::num_features)
      .def_property_readonly("depth", &QnnTemplate::depth)
      .def("to_text", &QnnTemplate::to_text)
      .def_static("from_text", &QnnTemplate::from_text);

  m.def("make_template", &make_template, py::arg("qubits"), py::arg("depth"), py::arg("entanglement") = "full",
        py::arg("degree_sets") = std::vector<std::vector<int>>{});
  m.def("preset_names", &preset_names);
  m.def("preset_template", [](const std::string& name) { return get_preset(name).make_template(); });

  m.def("eval_qnn", [](const QnnTemplate& t, std::vector<double> y, std::vector<double> theta) {
    return eval_qnn(t, y, theta);
  });
  m.def("grad_params", [](const QnnTemplate& t, std::vector<double> y, std::vector<double> theta) {
    return grad_params(t, y, theta);
  });
  m.def("grad_inputs", [](const QnnTemplate& t, std::vector<double> y, std::vector<double> theta) {
    return grad_inputs(t, y, theta);
  });
  m.def("mixed_hessian", [](const QnnTemplate& t, std::vector<double> y, std::vector<double> theta) {
    return mixed_hessian(t, y, theta);
  });
  m.def("model_spectrum",
        [](const QnnTemplate& t, std::vector<double> theta, int feature, int grid) {
          return qnn_model_spectrum(t, theta, feature, grid);
        },
        py::arg("template"), py::arg("theta"), py::arg("feature") = 0, py::arg("grid") = 64);

  m.def("generate_dataset",
        [](const std::string& preset, std::size_t count, std::uint64_t seed, bool mirror) {
          GenOptions opt;
          opt.count = count;
          opt.seed = seed;
          opt.mirror = mirror;
          return dataset_to_text(generate_dataset(get_preset(preset), opt));
        },
        py::arg("preset"), py::arg("count") = 0, py::arg("seed") = 0, py::arg("mirror") = false,
        "Dataset in the text file format.");

  m.def("effective_dimension",
        [](const QnnTemplate& t, std::vector<std::vector<double>> inputs, double n, int draws, std::uint64_t seed) {
          EffDimConfig cfg;
          cfg.n = n;
          cfg.draws = draws;
          cfg.seed = seed;
          const auto r = effective_dimension(QnnRegressor(t), inputs, cfg);
          return py::dict(py::arg("d_n") = r.d_n, py::arg("normalized") = r.normalized,
                          py::arg("std_error") = r.std_error);
        },
        py::arg("template"), py::arg("inputs"), py::arg("n") = 50.0, py::arg("draws") = 100, py::arg("seed") = 0);

  m.def("morse_md",
        [](double r0, double dt, int steps) {
          MdConfig cfg;
          cfg.masses = {reduced_mass(atomic_mass("Li"), atomic_mass("H"))};
          cfg.dof_per_atom = 1;
          cfg.positions = {r0};
          cfg.dt = dt;
          cfg.steps = steps;
          const auto t = velocity_verlet_run(morse_bond_provider(MorseParams{}), cfg);
          return py::dict(py::arg("time") = t.time, py::arg("r") = distance_series(t, 1),
                          py::arg("total") = t.total, py::arg("drift") = t.max_relative_drift());
        },
        py::arg("r0") = 1.05, py::arg("dt") = 0.02, py::arg("steps") = 10000,
        "LiH reduced-mass trajectory on the Morse surrogate (A, fs, eV).");

  m.def("dominant_frequency",
        [](std::vector<double> series, double dt_fs, int repetitions) {
          return dominant_frequency(oscillation_spectrum(series, dt_fs, repetitions));
        },
        py::arg("series"), py::arg("dt_fs"), py::arg("repetitions") = 1, "THz");

  m.def("cli",
        [](std::vector<std::string> args) {
          args.insert(args.begin(), "qff");
          std::vector<const char*> argv;
          for (const auto& a : args) argv.push_back(a.c_str());
          std::ostringstream out, err;
          const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
