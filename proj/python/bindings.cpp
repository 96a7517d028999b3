#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cctype>
#include <string>
#include <vector>

#include "bitkernel/binq.hpp"
#include "bitkernel/data.hpp"
#include "bitkernel/errors.hpp"
#include "bitkernel/experiment.hpp"
#include "bitkernel/kernel.hpp"
#include "bitkernel/net.hpp"
#include "bitkernel/theory.hpp"
#include "bitkernel/train.hpp"

namespace py = pybind11;
using namespace bitkernel;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-D array");
  return std::vector<double>(a.data(), a.data() + a.shape(0));
}

Array from_matrix(const Matrix& m) {
  const std::vector<py::ssize_t> shape = {static_cast<py::ssize_t>(m.rows()),
                                          static_cast<py::ssize_t>(m.cols())};
  return Array(shape, m.data().data());
}

Array from_vector(const std::vector<double>& v) {
  return Array(static_cast<py::ssize_t>(v.size()), v.data());
}

data::Dataset make_dataset(const Array& x, const Array& y) {
  data::Dataset ds;
  ds.x = to_matrix(x);
  ds.y = to_vector(y);
  ds.meta.n = ds.x.rows();
  ds.meta.d = ds.x.cols();
  return ds;
}

net::GateMode gate_mode(const std::string& s) {
  if (s == "one_bit") return net::GateMode::one_bit;
  if (s == "full_precision") return net::GateMode::full_precision;
  throw InvalidInputError("gate mode must be one_bit or full_precision");
}

net::ForwardMode forward_mode(const std::string& s) {
  if (s == "one_bit") return net::ForwardMode::one_bit;
  if (s == "full_precision") return net::ForwardMode::full_precision;
  if (s == "ste") return net::ForwardMode::ste;
  throw InvalidInputError("forward mode must be one_bit, full_precision or ste");
}

py::dict trajectory_dict(const train::TrainTrajectory& t) {
  std::vector<double> steps, l1, lf, tl1, tlf, drift, flips, dtr, dte, lmin, lmax, rel;
  for (const auto& r : t.records) {
    steps.push_back(static_cast<double>(r.step));
    l1.push_back(r.loss_1bit);
    lf.push_back(r.loss_fp);
    tl1.push_back(r.test_loss_1bit);
    tlf.push_back(r.test_loss_fp);
    drift.push_back(r.weight_drift);
    flips.push_back(r.flip_fraction);
    dtr.push_back(r.max_train_diff);
    dte.push_back(r.max_test_diff);
    lmin.push_back(r.kernel ? r.kernel->lambda_min : NAN);
    lmax.push_back(r.kernel ? r.kernel->lambda_max : NAN);
    rel.push_back(r.kernel ? r.kernel->relative_drift : NAN);
  }
  py::dict d;
  d["eta"] = t.eta;
  d["step"] = from_vector(steps);
  d["loss_1bit"] = from_vector(l1);
  d["loss_fp"] = from_vector(lf);
  d["test_loss_1bit"] = from_vector(tl1);
  d["test_loss_fp"] = from_vector(tlf);
  d["weight_drift"] = from_vector(drift);
  d["flip_fraction"] = from_vector(flips);
  d["max_train_diff"] = from_vector(dtr);
  d["max_test_diff"] = from_vector(dte);
  d["lambda_min"] = from_vector(lmin);
  d["lambda_max"] = from_vector(lmax);
  d["relative_drift"] = from_vector(rel);
  d["final_1bit"] = t.final_1bit;
  d["final_fp"] = t.final_fp;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "One-bit two-layer network training and kernel diagnostics";
  m.attr("__version__") = experiment::kVersion;

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidInputError>(m, "InvalidInputError", base);
  py::register_exception<DimensionError>(m, "DimensionError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<NumericalError>(m, "NumericalError", base);
  py::register_exception<DivergenceError>(m, "DivergenceError", base);
  py::register_exception<InvalidRegimeError>(m, "InvalidRegimeError", base);
  py::register_exception<DomainError>(m, "DomainError", base);
  py::register_exception<PoleError>(m, "PoleError", base);
  py::register_exception<ParseError>(m, "ParseError", base);
  py::register_exception<IoError>(m, "IoError", base);

  m.def(
      "quantize",
      [](const Array& w) {
        const auto q = binq::quantize(to_vector(w));
        return py::make_tuple(q.bits.unpack(), q.stats.mean, q.stats.scale);
      },
      py::arg("w"), "Returns (signs, mean, scale) of the one-bit quantization of w.");
  m.def(
      "dequantize_dot",
      [](const Array& w, const Array& x) {
        return binq::dequantize_dot(binq::quantize(to_vector(w)), to_vector(x));
      },
      py::arg("w"), py::arg("x"));
  m.def(
      "quant_error_vector", [](const Array& w) { return from_vector(binq::quant_error_vector(to_vector(w))); },
      py::arg("w"));

  py::class_<net::NetworkState>(m, "NetworkState")
      .def_property_readonly("weights", [](const net::NetworkState& s) { return from_matrix(s.weights); })
      .def_readonly("output_signs", &net::NetworkState::output_signs)
      .def_readonly("kappa", &net::NetworkState::kappa)
      .def_readonly("sigma", &net::NetworkState::sigma)
      .def_property_readonly("width", &net::NetworkState::width)
      .def_property_readonly("input_dim", &net::NetworkState::input_dim)
      .def("with_kappa", &net::NetworkState::with_kappa, py::arg("kappa"));

  m.def("init_network", &net::init_network, py::arg("d"), py::arg("m"), py::arg("kappa") = 1.0,
        py::arg("seed") = 0, py::arg("sigma") = 1.0);
  m.def(
      "forward",
      [](const Array& x, const net::NetworkState& s, const std::string& mode) {
        return from_vector(net::batch_forward(to_matrix(x), s, forward_mode(mode)));
      },
      py::arg("x"), py::arg("net"), py::arg("mode") = "one_bit",
      "Network outputs for every row of x; mode is one_bit, full_precision or ste.");

  m.def(
      "gram_matrix",
      [](const Array& x, const net::NetworkState& s, const std::string& mode) {
        return from_matrix(kernel::gram_matrix(to_matrix(x), s, gate_mode(mode)).entries);
      },
      py::arg("x"), py::arg("net"), py::arg("mode") = "one_bit");
  m.def(
      "eigenvalues", [](const Array& a) { return kernel::symmetric_eigenvalues(to_matrix(a)); },
      py::arg("a"), "Eigenvalues of a symmetric matrix in ascending order.");

  m.def("lambert_w", &data::lambert_w, py::arg("z"));
  m.def("gamma", &data::gamma_fn, py::arg("z"));
  m.def(
      "evaluate_target",
      [](const std::string& target, const Array& x) {
        const auto fn = target.size() == 2 && target[0] == 'f' && std::isdigit(target[1])
                            ? data::TargetFunction::by_name(target)
                            : data::TargetFunction::custom(target);
        return fn(to_vector(x));
      },
      py::arg("target"), py::arg("x"),
      "Evaluates f1..f6, or any other string as an expression in x.");
  m.def(
      "generate_dataset",
      [](const std::string& target, std::size_t n, std::uint64_t seed, const std::string& mode) {
        const auto ds = data::generate_dataset(data::TargetFunction::by_name(target), n, seed,
                                               data::parse_sample_mode(mode));
        return py::make_tuple(from_matrix(ds.x), from_vector(ds.y));
      },
      py::arg("target"), py::arg("n"), py::arg("seed"), py::arg("mode") = "box");

  m.def(
      "train_twin",
      [](const Array& x, const Array& y, const Array& x_test, const Array& y_test, std::size_t width,
         std::optional<double> eta, std::size_t steps, double kappa, std::uint64_t seed,
         bool kernel_probes, std::size_t probe_stride, bool cap_eta) {
        train::Hyperparams hp;
        hp.eta = eta;
        hp.cap_eta = cap_eta;
        hp.steps = steps;
        hp.kappa = kappa;
        hp.seed = seed;
        train::Diagnostics diag;
        diag.kernel_probes = kernel_probes;
        diag.probe_stride = probe_stride;
        const auto train_set = make_dataset(x, y);
        const auto test_set = make_dataset(x_test, y_test);
        train::TrainTrajectory traj;
        {
          py::gil_scoped_release release;
          traj = train::train_twin(train_set, test_set, width, hp, diag);
        }
        return trajectory_dict(traj);
      },
      py::arg("x"), py::arg("y"), py::arg("x_test"), py::arg("y_test"), py::arg("width"),
      py::arg("eta") = py::none(), py::arg("steps") = 1000, py::arg("kappa") = 1.0,
      py::arg("seed") = 0, py::arg("kernel_probes") = true, py::arg("probe_stride") = 0,
      py::arg("cap_eta") = true, "Trains the one-bit and full-precision twins from a shared initialization.");

  m.def(
      "bound_D",
      [](double m_, double d, double delta, double c) {
        theory::TheoryParams p;
        p.m = m_;
        p.d = d;
        p.delta = delta;
        p.big_o_constant = c;
        return theory::bound_D(p);
      },
      py::arg("m"), py::arg("d"), py::arg("delta"), py::arg("big_o_constant") = 1.0);
  m.def("predicted_loss_curve", &theory::predicted_loss_curve, py::arg("l0"), py::arg("eta"),
        py::arg("lambda_"), py::arg("t_max"));

  m.def(
      "run_command",
      [](const std::string& config_json, const std::filesystem::path& out_dir) {
        const auto cfg = experiment::parse_config_text(config_json);
        py::gil_scoped_release release;
        experiment::run_command(cfg, out_dir);
      },
      py::arg("config_json"), py::arg("out_dir"),
      "Runs a bitkernel-lab command from a JSON configuration string.");
}
