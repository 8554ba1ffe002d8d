#include "bregman_perceptron/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bregman_perceptron/random.hpp"

namespace bregman {

namespace {

// Stream ids for seeds derived from ExperimentConfig::seed.
constexpr std::uint64_t kInitStream = 101;
constexpr std::uint64_t kTrainSubsampleStream = 102;
constexpr std::uint64_t kValSubsampleStream = 103;
constexpr std::uint64_t kSyntheticStream = 104;
constexpr std::uint64_t kBatchStreamBase = 200;

template <class Enum>
struct NamedValue {
  const char* name;
  Enum value;
};

template <class Enum, std::size_t N>
Enum parse_named(const NamedValue<Enum> (&table)[N], const std::string& s, const char* what) {
  for (const auto& entry : table) {
    if (s == entry.name) return entry.value;
  }
  std::string options;
  for (const auto& entry : table) options += (options.empty() ? "" : ", ") + std::string(entry.name);
  throw std::invalid_argument("unknown " + std::string(what) + " '" + s + "' (expected " + options + ")");
}

template <class Enum, std::size_t N>
const char* name_of(const NamedValue<Enum> (&table)[N], Enum value) {
  for (const auto& entry : table) {
    if (entry.value == value) return entry.name;
  }
  return "unknown";
}

constexpr NamedValue<BatchPlan::Mode> kBatchModes[] = {{"full", BatchPlan::Mode::FullBatch},
                                                       {"deterministic", BatchPlan::Mode::Deterministic},
                                                       {"random", BatchPlan::Mode::Random}};
constexpr NamedValue<ThresholdRule> kThresholdRules[] = {{"tau-scaled", ThresholdRule::TauScaled},
                                                         {"literal-alpha", ThresholdRule::LiteralAlpha}};
constexpr NamedValue<StepSchedule::Kind> kSchedules[] = {{"constant", StepSchedule::Kind::Constant},
                                                         {"diminishing", StepSchedule::Kind::Diminishing}};
constexpr NamedValue<AlphaUnits> kAlphaUnits[] = {{"mean", AlphaUnits::Mean}, {"sum", AlphaUnits::Sum}};

TraceRecord evaluate(long k, const PerceptronModel& model, const LabeledDataset& train, const LabeledDataset& val,
                     const LossKind& loss, double alpha, const Activation& act) {
  TraceRecord rec;
  rec.iteration = k;
  rec.objective = objective(model, train, loss, alpha);
  rec.train_accuracy = accuracy(model, train, act);
  rec.val_accuracy = accuracy(model, val, act);
  rec.weight_sparsity = weight_sparsity(model.W);
  return rec;
}

TrainerConfig resolve(const TrainerSpec& spec, std::size_t index, const ExperimentConfig& config, double tau,
                      std::size_t s) {
  TrainerConfig c;
  c.kind = spec.kind;
  c.activation = parse_activation(spec.activation);
  c.alpha = config.alpha_units == AlphaUnits::Sum ? spec.alpha / static_cast<double>(s) : spec.alpha;
  const double tw = spec.tau_w.value_or(tau);
  const double tb = spec.tau_b.value_or(tau);
  c.tau_w = spec.schedule == StepSchedule::Kind::Constant ? StepSchedule::constant(tw) : StepSchedule::diminishing(tw);
  c.tau_b = spec.schedule == StepSchedule::Kind::Constant ? StepSchedule::constant(tb) : StepSchedule::diminishing(tb);
  switch (spec.batch_mode) {
    case BatchPlan::Mode::FullBatch:
      c.batch = BatchPlan::full(s);
      break;
    case BatchPlan::Mode::Deterministic:
      c.batch = BatchPlan::deterministic(spec.batch_size, s);
      break;
    case BatchPlan::Mode::Random:
      c.batch = BatchPlan::random(spec.batch_size, s,
                                  spec.batch_seed.value_or(mix_seed(config.seed, kBatchStreamBase + index)));
      break;
  }
  c.threshold_rule = spec.threshold_rule;
  return c;
}

TrainerResult run_one(const TrainerSpec& spec, const TrainerConfig& cfg, const ExperimentConfig& config,
                      const PerceptronModel& initial, const LabeledDataset& train, const LabeledDataset& val) {
  using Clock = std::chrono::steady_clock;
  TrainerResult res;
  res.label = spec.label;
  res.config = cfg;
  Trainer trainer(cfg, initial, train);
  res.loss = trainer.loss().name();
  res.initial = evaluate(0, initial, train, val, trainer.loss(), cfg.alpha, cfg.activation);

  const auto start = Clock::now();
  for (long k = 1; k <= config.iterations; ++k) {
    trainer.step();
    if (k % config.eval_stride != 0 && k != config.iterations) continue;
    const double elapsed = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    TraceRecord rec = evaluate(k, trainer.model(), train, val, trainer.loss(), cfg.alpha, cfg.activation);
    rec.wall_time_ms = config.record_wall_time ? elapsed : 0.0;
    if (!std::isfinite(rec.objective)) {
      res.diverged = true;
      res.divergence_iteration = k;
      res.divergence_message = "non-finite objective at iteration " + std::to_string(k);
      break;
    }
    res.trace.push_back(rec);
    if (config.keep_snapshots) res.snapshots.push_back(trainer.model());
  }
  res.final_model = trainer.model();
  return res;
}

nlohmann::ordered_json record_json(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["iteration"] = r.iteration;
  j["objective"] = r.objective;
  j["train_accuracy"] = r.train_accuracy;
  j["val_accuracy"] = r.val_accuracy;
  j["weight_sparsity"] = r.weight_sparsity;
  j["wall_time_ms"] = r.wall_time_ms;
  return j;
}

}  // namespace

double accuracy(const PerceptronModel& model, const LabeledDataset& data, const Activation& act) {
  if (data.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ForwardResult f = forward(model, data.X.row(i), act);
    if (static_cast<int>(argmax(f.out.values())) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::string model_hash(const PerceptronModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (bits >> (8 * byte)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (double w : model.W.values()) feed(w);
  for (double b : model.b.values()) feed(b);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<TrainerSpec> paper_trainers() {
  std::vector<TrainerSpec> t(4);
  t[0].label = "rosenblatt-ista";
  t[0].kind = TrainerKind::RosenblattISTA;
  t[0].alpha = 0.9;
  t[1].label = "subgradient-constant";
  t[1].kind = TrainerKind::SubgradientDescent;
  t[1].alpha = 0.81;
  t[2].label = "subgradient-diminishing";
  t[2].kind = TrainerKind::SubgradientDescent;
  t[2].alpha = 0.81;
  t[2].schedule = StepSchedule::Kind::Diminishing;
  t[3].label = "subgradient-ista";
  t[3].kind = TrainerKind::SubgradientISTA;
  t[3].alpha = 0.85;
  return t;
}

ExperimentConfig paper_defaults() {
  ExperimentConfig c;
  c.trainers = paper_trainers();
  c.train_count = 3000;
  c.val_count = 10000;
  c.iterations = 200;
  c.alpha_units = AlphaUnits::Sum;
  return c;
}

void validate(const ExperimentConfig& config) {
  if (config.trainers.empty()) throw std::invalid_argument("experiment: no trainers configured");
  if (config.iterations < 1) throw std::invalid_argument("experiment: iterations must be >= 1");
  if (config.eval_stride < 1) throw std::invalid_argument("experiment: eval_stride must be >= 1");
  if (config.tau && !(*config.tau > 0.0)) throw std::invalid_argument("experiment: tau must be positive");
  for (std::size_t i = 0; i < config.trainers.size(); ++i) {
    const auto& t = config.trainers[i];
    if (t.label.empty()) throw std::invalid_argument("experiment: trainer " + std::to_string(i) + " has no label");
    for (std::size_t j = 0; j < i; ++j) {
      if (config.trainers[j].label == t.label) throw std::invalid_argument("experiment: duplicate label " + t.label);
    }
    if (!(t.alpha >= 0.0) || !std::isfinite(t.alpha)) {
      throw std::invalid_argument("experiment: alpha must be >= 0 for " + t.label);
    }
    if ((t.tau_w && !(*t.tau_w > 0.0)) || (t.tau_b && !(*t.tau_b > 0.0))) {
      throw std::invalid_argument("experiment: step sizes must be positive for " + t.label);
    }
    parse_activation(t.activation);
  }
  if (!config.data_dir) {
    const auto& s = config.synthetic;
    if (s.train_size == 0 || s.val_size == 0 || s.inputs == 0 || s.classes == 0) {
      throw std::invalid_argument("experiment: synthetic sizes must be positive");
    }
  }
}

TrainTestSplit experiment_data(const ExperimentConfig& config) {
  TrainTestSplit split;
  if (config.data_dir) {
    split = load_idx_directory(*config.data_dir);
  } else {
    const auto& s = config.synthetic;
    const LabeledDataset all = synthetic_dataset(s.train_size + s.val_size, s.inputs, s.classes,
                                                 mix_seed(config.seed, kSyntheticStream), s.noise);
    auto take = [&](std::size_t from, std::size_t count) {
      DenseMatrix X(count, all.input_dim());
      std::vector<int> labels(count);
      for (std::size_t r = 0; r < count; ++r) {
        std::ranges::copy(all.X.row(from + r), X.row(r).begin());
        labels[r] = all.labels[from + r];
      }
      return make_dataset(std::move(X), std::move(labels), all.n_classes);
    };
    split.train = take(0, s.train_size);
    split.test = take(s.train_size, s.val_size);
  }
  if (config.train_count != 0 && config.train_count < split.train.size()) {
    split.train = subsample(split.train, config.train_count, mix_seed(config.seed, kTrainSubsampleStream));
  } else if (config.train_count > split.train.size()) {
    throw std::invalid_argument("experiment: train_count " + std::to_string(config.train_count) + " exceeds " +
                                std::to_string(split.train.size()) + " available samples");
  }
  if (config.val_count != 0 && config.val_count < split.test.size()) {
    split.test = subsample(split.test, config.val_count, mix_seed(config.seed, kValSubsampleStream));
  } else if (config.val_count > split.test.size()) {
    throw std::invalid_argument("experiment: val_count " + std::to_string(config.val_count) + " exceeds " +
                                std::to_string(split.test.size()) + " available samples");
  }
  return split;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const TrainTestSplit split = experiment_data(config);
  ExperimentResult res = run_experiment(config, split.train, split.test);
  if (config.data_dir) {
    res.data_description = "idx:" + config.data_dir->string();
  }
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const LabeledDataset& train,
                                const LabeledDataset& val) {
  validate(config);
  if (train.input_dim() != val.input_dim() || train.n_classes != val.n_classes) {
    throw std::invalid_argument("experiment: training and validation data disagree on shape");
  }
  ExperimentResult res;
  res.train_size = train.size();
  res.val_size = val.size();
  res.inputs = train.input_dim();
  res.classes = train.n_classes;
  res.data_description = "synthetic";
  res.initial_model = initial_model(train.input_dim(), train.n_classes, mix_seed(config.seed, kInitStream));
  res.initial_model_hash = model_hash(res.initial_model);
  res.lipschitz_estimate = gram_lipschitz_estimate(train.X);
  res.tau = config.tau.value_or(1.0 / res.lipschitz_estimate);

  std::vector<TrainerConfig> resolved;
  for (std::size_t i = 0; i < config.trainers.size(); ++i) {
    resolved.push_back(resolve(config.trainers[i], i, config, res.tau, train.size()));
  }

  const std::size_t count = config.trainers.size();
  res.trainers.resize(count);
  std::vector<std::exception_ptr> errors(count);
  auto work = [&](std::size_t i) {
    try {
      res.trainers[i] = run_one(config.trainers[i], resolved[i], config, res.initial_model, train, val);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (config.parallel && count > 1) {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < count; ++i) threads.emplace_back(work, i);
    for (auto& t : threads) t.join();
  } else {
    for (std::size_t i = 0; i < count; ++i) work(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return res;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trace_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "trainer,iteration,objective,train_acc,val_acc,sparsity,wall_time_ms\n";
  for (const auto& t : result.trainers) {
    for (const auto& r : t.trace) {
      out << t.label << ',' << r.iteration << ',' << format_real(r.objective) << ','
          << format_real(r.train_accuracy) << ',' << format_real(r.val_accuracy) << ','
          << format_real(r.weight_sparsity) << ',' << format_real(r.wall_time_ms) << '\n';
    }
  }
  return out.str();
}

void write_trace_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << trace_csv(result);
  if (!out) throw std::runtime_error("cannot write trace CSV to " + path.string());
}

BatchPlan::Mode parse_batch_mode(const std::string& s) { return parse_named(kBatchModes, s, "batch mode"); }
const char* batch_mode_name(BatchPlan::Mode mode) { return name_of(kBatchModes, mode); }
ThresholdRule parse_threshold_rule(const std::string& s) { return parse_named(kThresholdRules, s, "threshold rule"); }
const char* threshold_rule_name(ThresholdRule rule) { return name_of(kThresholdRules, rule); }
StepSchedule::Kind parse_schedule(const std::string& s) { return parse_named(kSchedules, s, "schedule"); }
const char* schedule_name(StepSchedule::Kind kind) { return name_of(kSchedules, kind); }

nlohmann::ordered_json config_to_json(const ExperimentConfig& config) {
  nlohmann::ordered_json j;
  j["seed"] = config.seed;
  j["iterations"] = config.iterations;
  j["train_count"] = config.train_count;
  j["val_count"] = config.val_count;
  j["eval_stride"] = config.eval_stride;
  j["alpha_units"] = name_of(kAlphaUnits, config.alpha_units);
  j["tau"] = config.tau ? nlohmann::ordered_json(*config.tau) : nlohmann::ordered_json(nullptr);
  j["record_wall_time"] = config.record_wall_time;
  nlohmann::ordered_json data;
  if (config.data_dir) {
    data["source"] = "idx";
    data["dir"] = config.data_dir->string();
  } else {
    data["source"] = "synthetic";
    data["train_size"] = config.synthetic.train_size;
    data["val_size"] = config.synthetic.val_size;
    data["inputs"] = config.synthetic.inputs;
    data["classes"] = config.synthetic.classes;
    data["noise"] = config.synthetic.noise;
  }
  j["data"] = data;
  j["trainers"] = nlohmann::ordered_json::array();
  for (const auto& t : config.trainers) {
    nlohmann::ordered_json tj;
    tj["label"] = t.label;
    tj["trainer"] = trainer_name(t.kind);
    tj["activation"] = t.activation;
    tj["alpha"] = t.alpha;
    tj["schedule"] = schedule_name(t.schedule);
    tj["tau_w"] = t.tau_w ? nlohmann::ordered_json(*t.tau_w) : nlohmann::ordered_json(nullptr);
    tj["tau_b"] = t.tau_b ? nlohmann::ordered_json(*t.tau_b) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json batch;
    batch["mode"] = batch_mode_name(t.batch_mode);
    if (t.batch_mode != BatchPlan::Mode::FullBatch) batch["size"] = t.batch_size;
    if (t.batch_mode == BatchPlan::Mode::Random && t.batch_seed) batch["seed"] = *t.batch_seed;
    tj["batch"] = batch;
    tj["threshold_rule"] = threshold_rule_name(t.threshold_rule);
    j["trainers"].push_back(tj);
  }
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.seed = j.value("seed", std::uint64_t{0});
  c.iterations = j.value("iterations", 200L);
  c.train_count = j.value("train_count", std::size_t{0});
  c.val_count = j.value("val_count", std::size_t{0});
  c.eval_stride = j.value("eval_stride", 1L);
  c.alpha_units = parse_named(kAlphaUnits, j.value("alpha_units", std::string("mean")), "alpha units");
  if (j.contains("tau") && !j["tau"].is_null()) c.tau = j["tau"].get<double>();
  c.record_wall_time = j.value("record_wall_time", false);
  if (j.contains("data")) {
    const auto& d = j["data"];
    const std::string source = d.value("source", std::string("synthetic"));
    if (source == "idx") {
      c.data_dir = std::filesystem::path(d.at("dir").get<std::string>());
    } else if (source == "synthetic") {
      c.synthetic.train_size = d.value("train_size", c.synthetic.train_size);
      c.synthetic.val_size = d.value("val_size", c.synthetic.val_size);
      c.synthetic.inputs = d.value("inputs", c.synthetic.inputs);
      c.synthetic.classes = d.value("classes", c.synthetic.classes);
      c.synthetic.noise = d.value("noise", c.synthetic.noise);
    } else {
      throw std::invalid_argument("unknown data source '" + source + "' (expected idx or synthetic)");
    }
  }
  if (j.contains("trainers")) {
    for (const auto& tj : j["trainers"]) {
      TrainerSpec t;
      t.kind = parse_trainer(tj.at("trainer").get<std::string>());
      t.label = tj.value("label", std::string(trainer_name(t.kind)));
      t.activation = tj.value("activation", std::string("relu"));
      t.alpha = tj.value("alpha", 0.0);
      t.schedule = parse_schedule(tj.value("schedule", std::string("constant")));
      if (tj.contains("tau_w") && !tj["tau_w"].is_null()) t.tau_w = tj["tau_w"].get<double>();
      if (tj.contains("tau_b") && !tj["tau_b"].is_null()) t.tau_b = tj["tau_b"].get<double>();
      if (tj.contains("batch")) {
        const auto& b = tj["batch"];
        t.batch_mode = parse_batch_mode(b.value("mode", std::string("full")));
        t.batch_size = b.value("size", std::size_t{0});
        if (b.contains("seed")) t.batch_seed = b["seed"].get<std::uint64_t>();
      }
      t.threshold_rule = parse_threshold_rule(tj.value("threshold_rule", std::string("tau-scaled")));
      c.trainers.push_back(t);
    }
  }
  return c;
}

nlohmann::ordered_json metadata_json(const ExperimentConfig& config, const ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["library"] = {{"name", "bregman-perceptron"}, {"version", kLibraryVersion}};
  j["seed"] = config.seed;
  j["initial_model_hash"] = result.initial_model_hash;
  j["data"] = {{"description", result.data_description},
               {"train_size", result.train_size},
               {"val_size", result.val_size},
               {"inputs", result.inputs},
               {"classes", result.classes}};
  j["step_size"] = {{"tau", result.tau},
                    {"lipschitz_estimate", result.lipschitz_estimate},
                    {"source", config.tau ? "config" : "inverse-gram-lipschitz"}};
  j["config"] = config_to_json(config);
  j["trainers"] = nlohmann::ordered_json::array();
  for (const auto& t : result.trainers) {
    nlohmann::ordered_json tj;
    tj["label"] = t.label;
    tj["trainer"] = trainer_name(t.config.kind);
    tj["activation"] = t.config.activation.name();
    tj["loss"] = t.loss;
    tj["alpha_effective"] = t.config.alpha;
    tj["threshold_rule"] = threshold_rule_name(t.config.threshold_rule);
    tj["schedule"] = schedule_name(t.config.tau_w.kind);
    tj["tau_w0"] = t.config.tau_w.tau0;
    tj["tau_b0"] = t.config.tau_b.tau0;
    tj["batch_mode"] = batch_mode_name(t.config.batch.mode);
    tj["batch_size"] = t.config.batch.size;
    if (t.config.batch.mode == BatchPlan::Mode::Random) tj["batch_seed"] = t.config.batch.seed;
    tj["initial"] = record_json(t.initial);
    tj["final"] = t.trace.empty() ? nlohmann::ordered_json(nullptr) : record_json(t.trace.back());
    tj["records"] = t.trace.size();
    tj["diverged"] = t.diverged;
    if (t.diverged) {
      tj["divergence_iteration"] = t.divergence_iteration;
      tj["divergence_message"] = t.divergence_message;
    }
    j["trainers"].push_back(tj);
  }
  return j;
}

void write_metadata_json(const ExperimentConfig& config, const ExperimentResult& result,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << metadata_json(config, result).dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write metadata JSON to " + path.string());
}

}  // namespace bregman
