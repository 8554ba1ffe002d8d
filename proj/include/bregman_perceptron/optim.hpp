#pragma once

// Training procedures for y = sigma(W^T x + b):
//
//   classic Rosenblatt      e = y - sigma(z);  W += x e^T;  b += e
//   Bregman SGD             step along sigma(z) - y, no sigma' anywhere
//   subgradient descent     step along (sigma(z) - y) * sigma'(z)
//   Rosenblatt-ISTA         Bregman step on W, then l1 soft-threshold
//   subgradient-ISTA        subgradient step on W, then l1 soft-threshold
//
// Batch gradients are accumulated in ascending sample order and then scaled
// by 1/|B|, so runs are bitwise reproducible and the |B| = 1, tau = 1 Bregman
// step coincides exactly with the classic update.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bregman_perceptron/activation.hpp"
#include "bregman_perceptron/data.hpp"
#include "bregman_perceptron/loss.hpp"
#include "bregman_perceptron/tensor.hpp"

namespace bregman {

struct PerceptronModel {
  DenseMatrix W;  // m x n
  DenseVector b;  // n

  PerceptronModel() = default;
  /// Throws DimensionError unless b.size() == W.cols().
  PerceptronModel(DenseMatrix weights, DenseVector bias);
  static PerceptronModel zeros(std::size_t inputs, std::size_t outputs);

  std::size_t inputs() const noexcept { return W.rows(); }
  std::size_t outputs() const noexcept { return W.cols(); }

  friend bool operator==(const PerceptronModel&, const PerceptronModel&) = default;
};

/// W uniform on [-1/sqrt(m), 1/sqrt(m)], b = 0.
PerceptronModel initial_model(std::size_t inputs, std::size_t outputs, std::uint64_t seed);

struct ForwardResult {
  DenseVector z;    // W^T x + b
  DenseVector out;  // sigma(z)
};

ForwardResult forward(const PerceptronModel& model, std::span<const double> x, const Activation& act);
inline ForwardResult forward(const PerceptronModel& model, const DenseVector& x, const Activation& act) {
  return forward(model, x.values(), act);
}

/// A view of selected samples. Indices are row numbers into X and Y.
struct Batch {
  const DenseMatrix& X;
  const DenseMatrix& Y;
  std::span<const std::size_t> indices;
};

PerceptronModel rosenblatt_step(const PerceptronModel& model, std::span<const double> x,
                                std::span<const double> y, const Activation& act);
inline PerceptronModel rosenblatt_step(const PerceptronModel& model, const DenseVector& x, const DenseVector& y,
                                       const Activation& act) {
  return rosenblatt_step(model, x.values(), y.values(), act);
}

/// One gradient step on the mean Bregman loss over the batch.
PerceptronModel bregman_sgd_step(const PerceptronModel& model, const Batch& batch, const ProximalActivation& act,
                                 double tau_w, double tau_b);

/// One subgradient step on the mean squared loss, plus alpha * sign(W) for
/// an l1 penalty (alpha = 0 gives the unregularized update).
PerceptronModel subgradient_step(const PerceptronModel& model, const Batch& batch, const ProximalActivation& act,
                                 double tau_w, double tau_b, double alpha = 0.0);

/// Elementwise sign(w) * max(|w| - theta, 0). Throws for theta < 0.
DenseMatrix soft_threshold(const DenseMatrix& W, double theta);

/// Which threshold the l1 prox step uses: alpha itself, or tau_w * alpha
/// (the prox of tau_w * alpha |W|_1, i.e. textbook ISTA on the objective).
enum class ThresholdRule { LiteralAlpha, TauScaled };

double prox_threshold(ThresholdRule rule, double alpha, double tau_w);

PerceptronModel rosenblatt_ista_step(const PerceptronModel& model, const Batch& batch, const ProximalActivation& act,
                                     double tau_w, double tau_b, double alpha,
                                     ThresholdRule rule = ThresholdRule::TauScaled);

PerceptronModel subgradient_ista_step(const PerceptronModel& model, const Batch& batch,
                                      const ProximalActivation& act, double tau_w, double tau_b, double alpha,
                                      ThresholdRule rule = ThresholdRule::TauScaled);

struct StepSchedule {
  enum class Kind { Constant, Diminishing };
  Kind kind = Kind::Constant;
  double tau0 = 1.0;

  static StepSchedule constant(double tau0);
  static StepSchedule diminishing(double tau0);
};

/// tau0 or tau0 / sqrt(k). Throws std::invalid_argument for k < 1.
double step_size(const StepSchedule& schedule, long k);

struct BatchPlan {
  enum class Mode { FullBatch, Deterministic, Random };
  Mode mode = Mode::FullBatch;
  std::size_t size = 0;          // ignored for FullBatch
  std::uint64_t seed = 0;        // Random only
  std::size_t sample_count = 0;  // s

  static BatchPlan full(std::size_t s);
  static BatchPlan deterministic(std::size_t size, std::size_t s);
  static BatchPlan random(std::size_t size, std::size_t s, std::uint64_t seed);
};

/// Zero-based sample indices for iteration k >= 1, ascending.
/// Deterministic: the cyclic window of `size` starting at ((k-1) * size) mod s.
/// Random: `size` indices without replacement from a generator seeded by (seed, k).
std::vector<std::size_t> select_batch(const BatchPlan& plan, long k);

/// (1/s) sum_i L(y_i, sigma(W^T x_i + b)) + alpha |W|_1. The bias is not penalized.
double objective(const PerceptronModel& model, const LabeledDataset& data, const LossKind& loss, double alpha);

/// Largest eigenvalue of (1/s) [X 1]^T [X 1] by power iteration: a Lipschitz
/// constant for the mean-loss gradient in (W, b) when sigma is 1-Lipschitz.
double gram_lipschitz_estimate(const DenseMatrix& X, int max_iters = 1000, double rel_tol = 1e-13);

/// Fraction of exactly-zero entries of W.
double weight_sparsity(const DenseMatrix& W);

enum class TrainerKind { ClassicRosenblatt, BregmanSGD, SubgradientDescent, RosenblattISTA, SubgradientISTA };

const char* trainer_name(TrainerKind kind);
/// "classic", "bregman-sgd", "subgradient", "rosenblatt-ista", "subgradient-ista".
TrainerKind parse_trainer(std::string_view name);

struct TrainerConfig {
  TrainerKind kind = TrainerKind::RosenblattISTA;
  Activation activation = ProximalActivation::rectifier();
  double alpha = 0.0;
  StepSchedule tau_w = StepSchedule::constant(1.0);
  StepSchedule tau_b = StepSchedule::constant(1.0);
  BatchPlan batch;  // sample_count 0 means "size of the training set"
  ThresholdRule threshold_rule = ThresholdRule::TauScaled;
};

/// Data term a trainer of this configuration minimizes: Bregman for the
/// Bregman-path trainers (and classic Rosenblatt with a proximal activation),
/// squared otherwise.
LossKind loss_for(const TrainerConfig& config);

/// Holds (model, iteration counter, schedule) for one training run. The
/// dataset is borrowed and must outlive the trainer.
class Trainer {
 public:
  /// Validates the configuration against the data; throws
  /// std::invalid_argument, DimensionError or DomainError.
  Trainer(TrainerConfig config, PerceptronModel initial, const LabeledDataset& data);

  /// Advances one iteration (k -> k + 1). For ClassicRosenblatt one
  /// iteration is one sample of the cyclic pass.
  void step();
  void run(long iterations);

  const PerceptronModel& model() const noexcept { return model_; }
  long iteration() const noexcept { return k_; }
  const TrainerConfig& config() const noexcept { return config_; }
  const LossKind& loss() const noexcept { return loss_; }

  /// Objective on the training data at the current model.
  double objective() const;

 private:
  TrainerConfig config_;
  PerceptronModel model_;
  const LabeledDataset& data_;
  LossKind loss_;
  long k_ = 0;
};

}  // namespace bregman
