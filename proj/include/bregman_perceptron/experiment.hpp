#pragma once

// Side-by-side training runs from one shared initial model, with per-iteration
// traces of objective, accuracy and weight sparsity.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bregman_perceptron/data.hpp"
#include "bregman_perceptron/optim.hpp"

namespace bregman {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Fraction of samples whose argmax_j sigma(z)_j equals the label (ties to
/// the lowest index).
double accuracy(const PerceptronModel& model, const LabeledDataset& data, const Activation& act);

/// FNV-1a over the bit patterns of W (row-major) then b, as "fnv1a64:<hex>".
std::string model_hash(const PerceptronModel& model);

struct TraceRecord {
  long iteration = 0;
  double objective = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double weight_sparsity = 0.0;
  double wall_time_ms = 0.0;
};

/// How the configured alpha relates to the mean-loss objective: used as is,
/// or quoted for the summed data term sum_i L_i + alpha |W|_1, in which case
/// the mean-form alpha is alpha / s.
enum class AlphaUnits { Mean, Sum };

struct TrainerSpec {
  std::string label;
  TrainerKind kind = TrainerKind::RosenblattISTA;
  std::string activation = "relu";
  double alpha = 0.0;
  StepSchedule::Kind schedule = StepSchedule::Kind::Constant;
  std::optional<double> tau_w;  // unset: the experiment-wide step size
  std::optional<double> tau_b;
  BatchPlan::Mode batch_mode = BatchPlan::Mode::FullBatch;
  std::size_t batch_size = 0;
  std::optional<std::uint64_t> batch_seed;
  ThresholdRule threshold_rule = ThresholdRule::TauScaled;
};

struct SyntheticSpec {
  std::size_t train_size = 300;
  std::size_t val_size = 100;
  std::size_t inputs = 20;
  std::size_t classes = 3;
  double noise = 0.05;
};

struct ExperimentConfig {
  std::vector<TrainerSpec> trainers;
  std::optional<std::filesystem::path> data_dir;  // IDX directory; unset: synthetic
  SyntheticSpec synthetic;
  std::size_t train_count = 0;  // 0: use the whole training split
  std::size_t val_count = 0;    // 0: use the whole validation split
  long iterations = 200;
  std::uint64_t seed = 0;
  long eval_stride = 1;
  AlphaUnits alpha_units = AlphaUnits::Mean;
  std::optional<double> tau;  // unset: 1 / gram_lipschitz_estimate(train X)
  bool record_wall_time = false;
  bool keep_snapshots = false;
  bool parallel = true;
};

/// The four-scheme comparison: Rosenblatt-ISTA (alpha 0.9) against a
/// constant-step subgradient method (0.81), a diminishing-step subgradient
/// method (0.81) and subgradient-ISTA (0.85); full batch, 3000 training and
/// 10000 validation samples, 200 iterations, alpha quoted per summed loss.
ExperimentConfig paper_defaults();
std::vector<TrainerSpec> paper_trainers();

struct TrainerResult {
  std::string label;
  TrainerConfig config;  // resolved: effective alpha and step sizes
  std::string loss;
  TraceRecord initial;   // evaluation of the shared initial model
  std::vector<TraceRecord> trace;
  std::vector<PerceptronModel> snapshots;  // one per trace record when requested
  PerceptronModel final_model;
  bool diverged = false;
  long divergence_iteration = 0;
  std::string divergence_message;
};

struct ExperimentResult {
  std::vector<TrainerResult> trainers;
  PerceptronModel initial_model;
  std::string initial_model_hash;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  std::size_t inputs = 0;
  std::size_t classes = 0;
  double tau = 0.0;
  double lipschitz_estimate = 0.0;
  std::string data_description;
};

/// Validates the configuration; throws std::invalid_argument.
void validate(const ExperimentConfig& config);

/// Loads or generates the data the configuration names (already subsampled).
TrainTestSplit experiment_data(const ExperimentConfig& config);

ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const LabeledDataset& train,
                                const LabeledDataset& val);

/// Header trainer,iteration,objective,train_acc,val_acc,sparsity,wall_time_ms;
/// rows grouped by trainer in configured order, then by iteration; reals
/// with 17 significant digits.
std::string trace_csv(const ExperimentResult& result);
void write_trace_csv(const ExperimentResult& result, const std::filesystem::path& path);

nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

nlohmann::ordered_json metadata_json(const ExperimentConfig& config, const ExperimentResult& result);
void write_metadata_json(const ExperimentConfig& config, const ExperimentResult& result,
                         const std::filesystem::path& path);

/// Text helpers shared with the CLI.
std::string format_real(double v);
BatchPlan::Mode parse_batch_mode(const std::string& s);
const char* batch_mode_name(BatchPlan::Mode mode);
ThresholdRule parse_threshold_rule(const std::string& s);
const char* threshold_rule_name(ThresholdRule rule);
StepSchedule::Kind parse_schedule(const std::string& s);
const char* schedule_name(StepSchedule::Kind kind);

}  // namespace bregman
