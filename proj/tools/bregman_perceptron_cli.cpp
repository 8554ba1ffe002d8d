// bregman-perceptron: train, evaluate, gradient-check and compare perceptron
// training schemes from the command line.
//
// Exit codes: 0 ok, 1 check failure, 2 usage, 3 data, 4 divergence.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bregman_perceptron/data.hpp"
#include "bregman_perceptron/errors.hpp"
#include "bregman_perceptron/experiment.hpp"
#include "bregman_perceptron/gradcheck.hpp"
#include "bregman_perceptron/model_io.hpp"

namespace {

using namespace bregman;

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kDataError = 3, kDiverged = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataOptions {
  std::string data_dir;
  bool synthetic = false;
  std::size_t train_count = 0;
  std::size_t val_count = 0;
  SyntheticSpec shape;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--data-dir", d.data_dir,
                  "Directory with the four IDX files (default: $BREGMAN_PERCEPTRON_DATA)");
  cmd->add_flag("--synthetic", d.synthetic, "Use generated class-template data instead of IDX files");
  cmd->add_option("--train-count", d.train_count, "Training samples drawn from the training split (0: all)");
  cmd->add_option("--val-count", d.val_count, "Validation samples drawn from the test split (0: all)");
  cmd->add_option("--synthetic-train", d.shape.train_size, "Synthetic training set size")->capture_default_str();
  cmd->add_option("--synthetic-val", d.shape.val_size, "Synthetic validation set size")->capture_default_str();
  cmd->add_option("--synthetic-inputs", d.shape.inputs, "Synthetic input dimension")->capture_default_str();
  cmd->add_option("--synthetic-classes", d.shape.classes, "Synthetic class count")->capture_default_str();
  cmd->add_option("--synthetic-noise", d.shape.noise, "Synthetic noise half-width")->capture_default_str();
}

// Fills the data-related fields of an experiment configuration.
void apply_data_options(const DataOptions& d, ExperimentConfig& config) {
  if (d.synthetic && !d.data_dir.empty()) throw UsageError("--synthetic and --data-dir are mutually exclusive");
  config.train_count = d.train_count;
  config.val_count = d.val_count;
  config.synthetic = d.shape;
  if (d.synthetic) {
    config.data_dir.reset();
    return;
  }
  std::string dir = d.data_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("BREGMAN_PERCEPTRON_DATA"); env != nullptr && *env != '\0') dir = env;
  }
  if (dir.empty()) {
    std::string names;
    for (const auto& n : expected_idx_filenames()) names += "\n  " + n;
    throw IdxError(IdxErrorKind::MissingFile,
                   "no data directory: pass --data-dir, set BREGMAN_PERCEPTRON_DATA, or use --synthetic; "
                   "the directory must contain" + names);
  }
  config.data_dir = dir;
}

struct BatchFlag {
  BatchPlan::Mode mode = BatchPlan::Mode::FullBatch;
  std::size_t size = 0;
  std::optional<std::uint64_t> seed;
};

// "full", "det:N" or "random:N[:seed]".
BatchFlag parse_batch_flag(const std::string& text) {
  BatchFlag b;
  if (text == "full") return b;
  const auto parts = CLI::detail::split(text, ':');
  auto number = [&](const std::string& s) -> std::uint64_t {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError("--batch: '" + s + "' is not a non-negative integer");
    }
  };
  if (parts.size() == 2 && parts[0] == "det") {
    b.mode = BatchPlan::Mode::Deterministic;
  } else if ((parts.size() == 2 || parts.size() == 3) && parts[0] == "random") {
    b.mode = BatchPlan::Mode::Random;
    if (parts.size() == 3) b.seed = number(parts[2]);
  } else {
    throw UsageError("--batch must be full, det:N or random:N[:seed], got '" + text + "'");
  }
  b.size = number(parts[1]);
  if (b.size == 0) throw UsageError("--batch: size must be >= 1");
  return b;
}

template <class F>
auto as_usage(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void print_final_accuracies(const ExperimentResult& result) {
  for (const auto& t : result.trainers) {
    if (t.trace.empty()) continue;
    const auto& r = t.trace.back();
    std::printf("%-26s iter %5ld  objective %.6g  train_acc %.4f  val_acc %.4f  sparsity %.4f%s\n", t.label.c_str(),
                r.iteration, r.objective, r.train_accuracy, r.val_accuracy, r.weight_sparsity,
                t.diverged ? "  (diverged)" : "");
  }
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string trainer;
  std::string activation = "relu";
  double alpha = 0.0;
  std::optional<double> tau_w;
  std::optional<double> tau_b;
  std::string schedule = "constant";
  std::string batch = "full";
  std::string threshold_rule = "tau-scaled";
  long iters = 100;
  std::uint64_t seed = 0;
  std::string out = "model.json";
  std::string trace = "trace.csv";
  DataOptions data;
};

int cmd_train(const TrainOptions& o) {
  ExperimentConfig config;
  TrainerSpec spec;
  spec.label = o.trainer;
  as_usage([&] {
    spec.kind = parse_trainer(o.trainer);
    spec.activation = o.activation;
    parse_activation(o.activation);
    spec.schedule = parse_schedule(o.schedule);
    spec.threshold_rule = parse_threshold_rule(o.threshold_rule);
    return 0;
  });
  if (!(o.alpha >= 0.0) || !std::isfinite(o.alpha)) throw UsageError("--alpha must be a finite value >= 0");
  if (o.tau_w && !(*o.tau_w > 0.0)) throw UsageError("--tau-w must be positive");
  if (o.tau_b && !(*o.tau_b > 0.0)) throw UsageError("--tau-b must be positive");
  if (o.iters < 1) throw UsageError("--iters must be >= 1");
  spec.alpha = o.alpha;
  spec.tau_w = o.tau_w;
  spec.tau_b = o.tau_b;
  const BatchFlag batch = parse_batch_flag(o.batch);
  spec.batch_mode = batch.mode;
  spec.batch_size = batch.size;
  spec.batch_seed = batch.seed;
  config.trainers = {spec};
  config.iterations = o.iters;
  config.seed = o.seed;
  config.alpha_units = AlphaUnits::Mean;
  apply_data_options(o.data, config);
  as_usage([&] {
    validate(config);
    return 0;
  });

  const TrainTestSplit split = experiment_data(config);
  const ExperimentResult result = as_usage([&] { return run_experiment(config, split.train, split.test); });
  const TrainerResult& t = result.trainers.front();

  ModelFile file;
  file.model = t.final_model;
  file.activation = t.config.activation.name();
  const auto meta = metadata_json(config, result);
  file.metadata["library"] = meta["library"];
  file.metadata["seed"] = o.seed;
  file.metadata["trainer"] = trainer_name(t.config.kind);
  file.metadata["loss"] = t.loss;
  file.metadata["alpha"] = t.config.alpha;
  file.metadata["iterations"] = o.iters;
  file.metadata["initial_model_hash"] = result.initial_model_hash;
  file.metadata["model_hash"] = model_hash(t.final_model);
  file.metadata["data"] = meta["data"];
  file.metadata["step_size"] = meta["step_size"];
  save_model(o.out, file);
  write_trace_csv(result, o.trace);

  print_final_accuracies(result);
  std::printf("model: %s\ntrace: %s\n", o.out.c_str(), o.trace.c_str());
  if (t.diverged) {
    std::fprintf(stderr, "error: training diverged at iteration %ld: %s\n", t.divergence_iteration,
                 t.divergence_message.c_str());
    return kDiverged;
  }
  return kOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string model;
  std::string split = "test";
  std::uint64_t seed = 0;
  DataOptions data;
};

int cmd_evaluate(const EvaluateOptions& o) {
  ModelFile file = [&] {
    try {
      return load_model(o.model);
    } catch (const std::exception& e) {
      throw IdxError(IdxErrorKind::Io, e.what());
    }
  }();
  ExperimentConfig config;
  config.seed = o.seed;
  apply_data_options(o.data, config);
  const TrainTestSplit split = experiment_data(config);
  const LabeledDataset& data = o.split == "train" ? split.train : split.test;
  if (data.input_dim() != file.model.inputs() || data.n_classes != file.model.outputs()) {
    throw UsageError("model is " + std::to_string(file.model.inputs()) + " -> " +
                     std::to_string(file.model.outputs()) + " but the data is " + std::to_string(data.input_dim()) +
                     " -> " + std::to_string(data.n_classes));
  }
  const Activation act = parse_activation(file.activation);
  std::printf("samples: %zu\naccuracy: %s\nsparsity: %s\n", data.size(),
              format_real(accuracy(file.model, data, act)).c_str(),
              format_real(weight_sparsity(file.model.W)).c_str());
  return kOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradCheckCliOptions {
  std::string activation = "relu";
  GradCheckOptions check;
};

int cmd_gradcheck(const GradCheckCliOptions& o) {
  const Activation act = as_usage([&] { return parse_activation(o.activation); });
  if (!act.is_proximal()) throw UsageError("gradcheck needs a proximal activation (relu, identity, softshrink:<t>)");
  if (o.check.trials < 1) throw UsageError("--trials must be >= 1");
  const GradCheckReport report = as_usage([&] { return run_gradcheck(act.proximal(), o.check); });
  std::fputs(format_report(act.proximal(), report).c_str(), stdout);
  return report.passed ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------- experiment

struct ExperimentOptions {
  bool paper_defaults = false;
  std::string config_path;
  std::optional<long> iters;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<long> eval_stride;
  std::string alpha_units;
  std::vector<std::string> alpha_overrides;
  std::vector<std::string> only;
  bool timing = false;
  bool serial = false;
  std::string csv = "experiment.csv";
  std::string json = "experiment.json";
  DataOptions data;
  bool data_given = false;
};

int cmd_experiment(const ExperimentOptions& o) {
  ExperimentConfig config = paper_defaults();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw UsageError("cannot open config file " + o.config_path);
    config = as_usage([&] {
      try {
        return config_from_json(nlohmann::json::parse(in));
      } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config file: ") + e.what());
      }
    });
  }
  if (o.config_path.empty() || o.data_given) {
    apply_data_options(o.data, config);
    // Without --paper-defaults, or on synthetic data, the sizes come from the
    // data source unless given explicitly.
    const bool default_sizes = o.paper_defaults && config.data_dir;
    if (o.data.train_count == 0 && !default_sizes) config.train_count = 0;
    if (o.data.val_count == 0 && !default_sizes) config.val_count = 0;
    if (default_sizes && o.data.train_count == 0) config.train_count = paper_defaults().train_count;
    if (default_sizes && o.data.val_count == 0) config.val_count = paper_defaults().val_count;
  }
  if (o.iters) config.iterations = *o.iters;
  if (o.seed) config.seed = *o.seed;
  if (o.tau) config.tau = *o.tau;
  if (o.eval_stride) config.eval_stride = *o.eval_stride;
  if (!o.alpha_units.empty()) {
    if (o.alpha_units == "mean") {
      config.alpha_units = AlphaUnits::Mean;
    } else if (o.alpha_units == "sum") {
      config.alpha_units = AlphaUnits::Sum;
    } else {
      throw UsageError("--alpha-units must be mean or sum");
    }
  }
  config.record_wall_time = o.timing;
  config.parallel = !o.serial;

  for (const auto& ov : o.alpha_overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw UsageError("--set-alpha expects LABEL=VALUE, got '" + ov + "'");
    const std::string label = ov.substr(0, eq);
    double value = 0.0;
    try {
      value = std::stod(ov.substr(eq + 1));
    } catch (const std::exception&) {
      throw UsageError("--set-alpha: bad value in '" + ov + "'");
    }
    bool found = false;
    for (auto& t : config.trainers) {
      if (t.label == label) {
        t.alpha = value;
        found = true;
      }
    }
    if (!found) throw UsageError("--set-alpha: no trainer labelled '" + label + "'");
  }
  if (!o.only.empty()) {
    std::vector<TrainerSpec> kept;
    for (const auto& label : o.only) {
      bool found = false;
      for (const auto& t : config.trainers) {
        if (t.label == label) {
          kept.push_back(t);
          found = true;
        }
      }
      if (!found) throw UsageError("--only: no trainer labelled '" + label + "'");
    }
    config.trainers = std::move(kept);
  }
  as_usage([&] {
    validate(config);
    return 0;
  });

  const TrainTestSplit split = experiment_data(config);
  ExperimentResult result = as_usage([&] { return run_experiment(config, split.train, split.test); });
  if (config.data_dir) result.data_description = "idx:" + config.data_dir->string();
  write_trace_csv(result, o.csv);
  write_metadata_json(config, result, o.json);

  std::printf("data: %s (train %zu, validation %zu, %zu inputs, %zu classes)\n", result.data_description.c_str(),
              result.train_size, result.val_size, result.inputs, result.classes);
  std::printf("step size: %.6g\n", result.tau);
  print_final_accuracies(result);
  std::printf("trace: %s\nmetadata: %s\n", o.csv.c_str(), o.json.c_str());
  return kOk;
}

// ---------------------------------------------------------------- synthetic-gen

struct SyntheticGenOptions {
  std::string out_dir;
  std::size_t train_size = 600;
  std::size_t test_size = 200;
  std::uint32_t rows = 8;
  std::uint32_t cols = 8;
  std::size_t classes = 10;
  double noise = 0.05;
  std::uint64_t seed = 0;
  bool gzip = false;
};

IdxImages to_idx(const LabeledDataset& d, std::size_t from, std::size_t count, std::uint32_t rows,
                 std::uint32_t cols) {
  IdxImages img;
  img.count = static_cast<std::uint32_t>(count);
  img.rows = rows;
  img.cols = cols;
  img.pixels.reserve(count * rows * cols);
  for (std::size_t r = from; r < from + count; ++r) {
    for (double v : d.X.row(r)) img.pixels.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  return img;
}

int cmd_synthetic_gen(const SyntheticGenOptions& o) {
  if (o.classes == 0 || o.classes > 256) throw UsageError("--classes must be in [1, 256]");
  if (o.train_size == 0 || o.test_size == 0 || o.rows == 0 || o.cols == 0) {
    throw UsageError("sizes must be positive");
  }
  if (!(o.noise >= 0.0)) throw UsageError("--noise must be >= 0");
  std::filesystem::create_directories(o.out_dir);
  const LabeledDataset all =
      synthetic_dataset(o.train_size + o.test_size, std::size_t{o.rows} * o.cols, o.classes, o.seed, o.noise);
  const auto names = expected_idx_filenames();
  const std::string ext = o.gzip ? ".gz" : "";
  const std::filesystem::path dir = o.out_dir;
  write_idx_images(dir / (names[0] + ext), to_idx(all, 0, o.train_size, o.rows, o.cols));
  write_idx_labels(dir / (names[1] + ext), std::span(all.labels).subspan(0, o.train_size));
  write_idx_images(dir / (names[2] + ext), to_idx(all, o.train_size, o.test_size, o.rows, o.cols));
  write_idx_labels(dir / (names[3] + ext), std::span(all.labels).subspan(o.train_size, o.test_size));
  std::printf("wrote %zu training and %zu test images (%ux%u, %zu classes) to %s\n", o.train_size, o.test_size,
              o.rows, o.cols, o.classes, o.out_dir.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perceptron training with proximal activations and Bregman losses"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(kLibraryVersion));

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train one model and write it with its trace");
  train_cmd->add_option("--trainer", train.trainer,
                        "classic, bregman-sgd, subgradient, rosenblatt-ista or subgradient-ista")
      ->required();
  train_cmd->add_option("--activation", train.activation, "relu, identity, softshrink:<theta> or heaviside")
      ->capture_default_str();
  train_cmd->add_option("--alpha", train.alpha, "l1 weight on W (mean-loss units)")->capture_default_str();
  train_cmd->add_option("--tau-w", train.tau_w, "Initial weight step size (default: 1 / Gram Lipschitz estimate)");
  train_cmd->add_option("--tau-b", train.tau_b, "Initial bias step size (default: same as weights)");
  train_cmd->add_option("--schedule", train.schedule, "constant or diminishing (tau0 / sqrt(k))")
      ->capture_default_str();
  train_cmd->add_option("--batch", train.batch, "full, det:N or random:N[:seed]")->capture_default_str();
  train_cmd->add_option("--threshold-rule", train.threshold_rule, "tau-scaled or literal-alpha")
      ->capture_default_str();
  train_cmd->add_option("--iters", train.iters, "Iterations")->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Seed for initialization, data and batches")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Model file to write")->capture_default_str();
  train_cmd->add_option("--trace", train.trace, "Trace CSV to write")->capture_default_str();
  add_data_options(train_cmd, train.data);

  EvaluateOptions evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "Report the accuracy of a saved model");
  eval_cmd->add_option("--model", evaluate.model, "Model file")->required();
  eval_cmd->add_option("--split", evaluate.split, "train or test")
      ->check(CLI::IsMember({"train", "test"}))
      ->capture_default_str();
  eval_cmd->add_option("--seed", evaluate.seed, "Seed used for data generation and subsampling")
      ->capture_default_str();
  add_data_options(eval_cmd, evaluate.data);

  GradCheckCliOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the Bregman loss gradient");
  grad_cmd->add_option("--activation", grad.activation, "relu, identity or softshrink:<theta>")
      ->capture_default_str();
  grad_cmd->add_option("--trials", grad.check.trials, "Random (y, z) pairs")->capture_default_str();
  grad_cmd->add_option("--seed", grad.check.seed, "Sampling seed")->capture_default_str();
  grad_cmd->add_option("--dim", grad.check.dim, "Output dimension of each sample")->capture_default_str();
  grad_cmd->add_option("--step", grad.check.h, "Central-difference step")->capture_default_str();
  grad_cmd->add_option("--poison", grad.check.poison, "Offset added to the analytic gradient (test hook)")
      ->capture_default_str();

  ExperimentOptions exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run the four-scheme comparison from one initial model");
  exp_cmd->add_flag("--paper-defaults", exp.paper_defaults,
                    "alpha 0.9/0.81/0.81/0.85 per summed loss, full batch, 3000 train / 10000 validation, 200 iters");
  exp_cmd->add_option("--config", exp.config_path, "Experiment configuration JSON");
  exp_cmd->add_option("--iters", exp.iters, "Iterations (default 200)");
  exp_cmd->add_option("--seed", exp.seed, "Seed (default 0)");
  exp_cmd->add_option("--tau", exp.tau, "Shared step size (default: 1 / Gram Lipschitz estimate)");
  exp_cmd->add_option("--eval-stride", exp.eval_stride, "Evaluate every this many iterations (default 1)");
  exp_cmd->add_option("--alpha-units", exp.alpha_units, "sum (alpha per summed loss, default) or mean");
  exp_cmd->add_option("--set-alpha", exp.alpha_overrides, "Override one trainer's alpha, LABEL=VALUE (repeatable)");
  exp_cmd->add_option("--only", exp.only, "Run only these trainer labels (repeatable)");
  exp_cmd->add_flag("--timing", exp.timing, "Record wall-clock time per record (makes output run-dependent)");
  exp_cmd->add_flag("--serial", exp.serial, "Run trainers one after another instead of in parallel");
  exp_cmd->add_option("--csv", exp.csv, "Trace CSV to write")->capture_default_str();
  exp_cmd->add_option("--json", exp.json, "Metadata JSON to write")->capture_default_str();
  add_data_options(exp_cmd, exp.data);

  SyntheticGenOptions gen;
  auto* gen_cmd = app.add_subcommand("synthetic-gen", "Write a synthetic data set as IDX files");
  gen_cmd->add_option("--out-dir", gen.out_dir, "Directory to create")->required();
  gen_cmd->add_option("--train-size", gen.train_size, "Training images")->capture_default_str();
  gen_cmd->add_option("--test-size", gen.test_size, "Test images")->capture_default_str();
  gen_cmd->add_option("--rows", gen.rows, "Image rows")->capture_default_str();
  gen_cmd->add_option("--cols", gen.cols, "Image columns")->capture_default_str();
  gen_cmd->add_option("--classes", gen.classes, "Classes")->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "Noise half-width")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Seed")->capture_default_str();
  gen_cmd->add_flag("--gzip", gen.gzip, "Write .gz files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  exp.data_given = exp_cmd->count("--data-dir") > 0 || exp_cmd->count("--synthetic") > 0;

  try {
    if (*train_cmd) return cmd_train(train);
    if (*eval_cmd) return cmd_evaluate(evaluate);
    if (*grad_cmd) return cmd_gradcheck(grad);
    if (*exp_cmd) return cmd_experiment(exp);
    if (*gen_cmd) return cmd_synthetic_gen(gen);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\nRun with --help for usage.\n", e.what());
    return kUsage;
  } catch (const IdxError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDiverged;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDataError;
  }
  return kUsage;
}
