#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <numeric>

#include "bregman_perceptron/data.hpp"
#include "bregman_perceptron/errors.hpp"
#include "bregman_perceptron/experiment.hpp"
#include "bregman_perceptron/gradcheck.hpp"
#include "bregman_perceptron/model_io.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace bregman;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

DenseVector to_vector(const Array& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-d array, got " + std::to_string(a.ndim()) + "-d");
  return DenseVector(std::vector<double>(a.data(), a.data() + a.size()));
}

DenseMatrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-d array, got " + std::to_string(a.ndim()) + "-d");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return DenseMatrix(rows, cols, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_vector(const DenseVector& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.raw().begin(), v.raw().end(), out.mutable_data());
  return out;
}

Array from_matrix(const DenseMatrix& m) {
  Array out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  std::copy(m.raw().begin(), m.raw().end(), out.mutable_data());
  return out;
}

ProximalActivation proximal_from(const std::string& name) { return parse_activation(name).proximal(); }

LabeledDataset dataset_from(const Array& X, const std::vector<int>& labels, std::size_t n_classes) {
  return make_dataset(to_matrix(X), labels, n_classes);
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Perceptron training with proximal activations and Bregman losses";
  m.attr("__version__") = kLibraryVersion;

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<IdxError>(m, "IdxError", PyExc_OSError);

  m.def("prox", [](const std::string& act, const Array& z) { return from_vector(prox(proximal_from(act), to_vector(z))); },
        "activation"_a, "z"_a, "Apply the activation sigma = prox of its penalty.");
  m.def(
      "psi",
      [](const std::string& act, const Array& u) -> double {
        const ExtendedReal v = psi(proximal_from(act), to_vector(u));
        return v.is_finite() ? v.value() : std::numeric_limits<double>::infinity();
      },
      "activation"_a, "u"_a);
  m.def("bregman_loss",
        [](const std::string& act, const Array& y, const Array& z) {
          return bregman_loss(proximal_from(act), to_vector(y), to_vector(z));
        },
        "activation"_a, "y"_a, "z"_a);
  m.def("envelope_loss",
        [](const std::string& act, const Array& y, const Array& z) {
          return envelope_loss(proximal_from(act), to_vector(y), to_vector(z));
        },
        "activation"_a, "y"_a, "z"_a);
  m.def("bregman_loss_grad_z",
        [](const std::string& act, const Array& y, const Array& z) {
          return from_vector(bregman_loss_grad_z(proximal_from(act), to_vector(y), to_vector(z)));
        },
        "activation"_a, "y"_a, "z"_a);
  m.def("squared_loss",
        [](const std::string& act, const Array& y, const Array& z) {
          return squared_loss(parse_activation(act), to_vector(y), to_vector(z));
        },
        "activation"_a, "y"_a, "z"_a);
  m.def("soft_threshold", [](const Array& W, double theta) { return from_matrix(soft_threshold(to_matrix(W), theta)); },
        "W"_a, "theta"_a);

  py::class_<PerceptronModel>(m, "PerceptronModel")
      .def(py::init([](const Array& W, const Array& b) { return PerceptronModel(to_matrix(W), to_vector(b)); }), "W"_a,
           "b"_a)
      .def_static("initial", &initial_model, "inputs"_a, "outputs"_a, "seed"_a)
      .def_property_readonly("W", [](const PerceptronModel& p) { return from_matrix(p.W); })
      .def_property_readonly("b", [](const PerceptronModel& p) { return from_vector(p.b); })
      .def_property_readonly("inputs", &PerceptronModel::inputs)
      .def_property_readonly("outputs", &PerceptronModel::outputs)
      .def("forward",
           [](const PerceptronModel& p, const Array& x, const std::string& act) {
             return from_vector(forward(p, to_vector(x), parse_activation(act)).out);
           },
           "x"_a, "activation"_a = "relu")
      .def("hash", [](const PerceptronModel& p) { return model_hash(p); })
      .def("__eq__", [](const PerceptronModel& a, const PerceptronModel& b) { return a == b; });

  m.def("rosenblatt_step",
        [](const PerceptronModel& p, const Array& x, const Array& y, const std::string& act) {
          return rosenblatt_step(p, to_vector(x), to_vector(y), parse_activation(act));
        },
        "model"_a, "x"_a, "y"_a, "activation"_a = "relu");

  // Batch steps take the full X, Y and optional 0-based row indices (default: all rows).
  auto batch_step = [&m](const char* name, auto step, const char* doc) {
    m.def(
        name,
        [step](const PerceptronModel& p, const Array& X, const Array& Y, const std::string& act, double tau_w,
               double tau_b, double alpha, std::optional<std::vector<std::size_t>> indices) {
          const DenseMatrix Xm = to_matrix(X);
          const DenseMatrix Ym = to_matrix(Y);
          const auto idx = indices ? *indices : all_indices(Xm.rows());
          for (auto i : idx) {
            if (i >= Xm.rows()) throw py::index_error("batch index out of range");
          }
          return step(p, Batch{Xm, Ym, idx}, proximal_from(act), tau_w, tau_b, alpha);
        },
        "model"_a, "X"_a, "Y"_a, "activation"_a = "relu", "tau_w"_a = 1.0, "tau_b"_a = 1.0, "alpha"_a = 0.0,
        "indices"_a = py::none(), doc);
  };
  batch_step(
      "bregman_sgd_step",
      [](const PerceptronModel& p, const Batch& b, const ProximalActivation& a, double tw, double tb, double) {
        return bregman_sgd_step(p, b, a, tw, tb);
      },
      "Gradient step on the mean Bregman loss (alpha is ignored).");
  batch_step(
      "subgradient_step",
      [](const PerceptronModel& p, const Batch& b, const ProximalActivation& a, double tw, double tb, double al) {
        return subgradient_step(p, b, a, tw, tb, al);
      },
      "Subgradient step on the mean squared loss plus alpha |W|_1.");
  batch_step(
      "rosenblatt_ista_step",
      [](const PerceptronModel& p, const Batch& b, const ProximalActivation& a, double tw, double tb, double al) {
        return rosenblatt_ista_step(p, b, a, tw, tb, al);
      },
      "Bregman gradient step followed by soft-thresholding of W at tau_w * alpha.");
  batch_step(
      "subgradient_ista_step",
      [](const PerceptronModel& p, const Batch& b, const ProximalActivation& a, double tw, double tb, double al) {
        return subgradient_ista_step(p, b, a, tw, tb, al);
      },
      "Squared-loss subgradient step followed by soft-thresholding of W at tau_w * alpha.");

  m.def(
      "gradcheck",
      [](const std::string& act, int trials, std::uint64_t seed, std::size_t dim, double poison) {
        GradCheckOptions o;
        o.trials = trials;
        o.seed = seed;
        o.dim = dim;
        o.poison = poison;
        const auto r = run_gradcheck(proximal_from(act), o);
        py::dict d;
        d["passed"] = r.passed;
        d["max_fd_error"] = r.max_fd_error;
        d["max_envelope_gap"] = r.max_envelope_gap;
        d["trials"] = r.trials;
        return d;
      },
      "activation"_a, "trials"_a = 1000, "seed"_a = 0, "dim"_a = 4, "poison"_a = 0.0);

  m.def(
      "synthetic_dataset",
      [](std::size_t s, std::size_t inputs, std::size_t classes, std::uint64_t seed, double noise) {
        const auto d = synthetic_dataset(s, inputs, classes, seed, noise);
        return py::make_tuple(from_matrix(d.X), d.labels);
      },
      "samples"_a, "inputs"_a, "classes"_a, "seed"_a = 0, "noise"_a = 0.05, "Returns (X, labels).");
  m.def(
      "load_idx_directory",
      [](const std::filesystem::path& dir) {
        const auto s = load_idx_directory(dir);
        return py::make_tuple(from_matrix(s.train.X), s.train.labels, from_matrix(s.test.X), s.test.labels);
      },
      "directory"_a, "Returns (X_train, labels_train, X_test, labels_test) with pixels scaled to [0, 1].");
  m.def(
      "one_hot", [](const std::vector<int>& labels, std::size_t n) { return from_matrix(one_hot(labels, n)); },
      "labels"_a, "classes"_a);
  m.def(
      "accuracy",
      [](const PerceptronModel& p, const Array& X, const std::vector<int>& labels, const std::string& act) {
        return accuracy(p, dataset_from(X, labels, p.outputs()), parse_activation(act));
      },
      "model"_a, "X"_a, "labels"_a, "activation"_a = "relu");
  m.def(
      "objective",
      [](const PerceptronModel& p, const Array& X, const std::vector<int>& labels, const std::string& act,
         const std::string& loss, double alpha) {
        if (loss != "bregman" && loss != "squared") throw py::value_error("loss must be bregman or squared");
        const Activation a = parse_activation(act);
        const LossKind l = loss == "bregman" ? LossKind::bregman(a.proximal()) : LossKind::squared(a);
        return objective(p, dataset_from(X, labels, p.outputs()), l, alpha);
      },
      "model"_a, "X"_a, "labels"_a, "activation"_a = "relu", "loss"_a = "bregman", "alpha"_a = 0.0);
  m.def("gram_lipschitz_estimate", [](const Array& X) { return gram_lipschitz_estimate(to_matrix(X)); }, "X"_a);
  m.def("weight_sparsity", [](const Array& W) { return weight_sparsity(to_matrix(W)); }, "W"_a);

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig config = config_from_json(nlohmann::json::parse(config_json));
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(config);
        }
        return py::make_tuple(trace_csv(result), metadata_json(config, result).dump(2));
      },
      "config_json"_a, "Runs an experiment from a JSON configuration; returns (trace_csv, metadata_json).");
  m.def("paper_defaults_json", [] { return config_to_json(paper_defaults()).dump(2); });
}
