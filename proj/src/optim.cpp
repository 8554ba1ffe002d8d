#include "bregman_perceptron/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bregman_perceptron/errors.hpp"
#include "bregman_perceptron/random.hpp"

namespace bregman {

namespace {

DenseVector preactivation(const PerceptronModel& model, std::span<const double> x) {
  DenseVector z = matvec_transposed(model.W, x);
  for (std::size_t j = 0; j < z.size(); ++j) z[j] += model.b[j];
  return z;
}

void check_batch(const PerceptronModel& model, const Batch& batch) {
  if (batch.X.cols() != model.inputs()) {
    throw DimensionError("batch inputs are " + batch.X.shape_string() + " but W is " + model.W.shape_string());
  }
  if (batch.Y.cols() != model.outputs() || batch.Y.rows() != batch.X.rows()) {
    throw DimensionError("batch targets are " + batch.Y.shape_string() + ", inputs " + batch.X.shape_string() +
                         ", W " + model.W.shape_string());
  }
  if (batch.indices.empty()) throw std::invalid_argument("empty batch");
  for (std::size_t idx : batch.indices) {
    if (idx >= batch.X.rows()) throw std::out_of_range("batch index " + std::to_string(idx) + " out of range");
  }
}

struct Gradient {
  DenseMatrix w;
  DenseVector b;
};

// Mean over the batch of x_i r_i^T and r_i, where r_i = residual(z_i, y_i).
// Samples are visited in the order given (ascending for select_batch output).
template <class Residual>
Gradient batch_gradient(const PerceptronModel& model, const Batch& batch, Residual residual) {
  check_batch(model, batch);
  const std::size_t m = model.inputs();
  const std::size_t n = model.outputs();
  Gradient g{DenseMatrix(m, n), DenseVector(n)};
  for (std::size_t idx : batch.indices) {
    const auto x = batch.X.row(idx);
    const DenseVector y(batch.Y.row(idx));
    const DenseVector z = preactivation(model, x);
    const DenseVector r = residual(y, z);
    for (std::size_t i = 0; i < m; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;  // adds only signed zeros
      auto grow = g.w.row(i);
      for (std::size_t j = 0; j < n; ++j) grow[j] += xi * r[j];
    }
    for (std::size_t j = 0; j < n; ++j) g.b[j] += r[j];
  }
  const double inv = 1.0 / static_cast<double>(batch.indices.size());
  for (double& v : g.w.values()) v *= inv;
  for (double& v : g.b.values()) v *= inv;
  return g;
}

PerceptronModel descend(const PerceptronModel& model, const Gradient& g, double tau_w, double tau_b) {
  PerceptronModel next = model;
  auto w = next.W.values();
  const auto gw = g.w.values();
  for (std::size_t k = 0; k < w.size(); ++k) w[k] -= tau_w * gw[k];
  for (std::size_t j = 0; j < next.b.size(); ++j) next.b[j] -= tau_b * g.b[j];
  return next;
}

auto bregman_residual(const ProximalActivation& act) {
  return [&act](const DenseVector& y, const DenseVector& z) { return bregman_loss_grad_z(act, y, z); };
}

auto squared_residual(const ProximalActivation& act) {
  return [&act](const DenseVector& y, const DenseVector& z) { return squared_loss_subgrad_z(act, y, z); };
}

void check_steps(double tau_w, double tau_b) {
  if (!(tau_w > 0.0) || !(tau_b > 0.0)) throw std::invalid_argument("step sizes must be positive");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

PerceptronModel::PerceptronModel(DenseMatrix weights, DenseVector bias) : W(std::move(weights)), b(std::move(bias)) {
  if (b.size() != W.cols()) {
    throw DimensionError("PerceptronModel: W is " + W.shape_string() + " but b has length " +
                         std::to_string(b.size()));
  }
}

PerceptronModel PerceptronModel::zeros(std::size_t inputs, std::size_t outputs) {
  return PerceptronModel(DenseMatrix(inputs, outputs), DenseVector(outputs));
}

PerceptronModel initial_model(std::size_t inputs, std::size_t outputs, std::uint64_t seed) {
  if (inputs == 0 || outputs == 0) throw std::invalid_argument("initial_model: dimensions must be positive");
  Rng rng(seed);
  const double r = 1.0 / std::sqrt(static_cast<double>(inputs));
  PerceptronModel model = PerceptronModel::zeros(inputs, outputs);
  for (double& w : model.W.values()) w = rng.uniform(-r, r);
  return model;
}

ForwardResult forward(const PerceptronModel& model, std::span<const double> x, const Activation& act) {
  ForwardResult res{preactivation(model, x), {}};
  res.out = act.apply(res.z);
  return res;
}

PerceptronModel rosenblatt_step(const PerceptronModel& model, std::span<const double> x,
                                std::span<const double> y, const Activation& act) {
  if (y.size() != model.outputs()) throw DimensionError("rosenblatt_step: target length mismatch");
  const ForwardResult f = forward(model, x, act);
  const DenseVector e = subtract(DenseVector(y), f.out);
  PerceptronModel next;
  next.W = axpy_matrix(1.0, outer_product(e, x), model.W);
  next.b = add(model.b, e);
  return next;
}

PerceptronModel bregman_sgd_step(const PerceptronModel& model, const Batch& batch, const ProximalActivation& act,
                                 double tau_w, double tau_b) {
  check_steps(tau_w, tau_b);
  return descend(model, batch_gradient(model, batch, bregman_residual(act)), tau_w, tau_b);
}

PerceptronModel subgradient_step(const PerceptronModel& model, const Batch& batch, const ProximalActivation& act,
                                 double tau_w, double tau_b, double alpha) {
  check_steps(tau_w, tau_b);
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  Gradient g = batch_gradient(model, batch, squared_residual(act));
  if (alpha > 0.0) {
    auto gw = g.w.values();
    const auto w = model.W.values();
    for (std::size_t k = 0; k < gw.size(); ++k) gw[k] += alpha * sign(w[k]);
  }
  return descend(model, g, tau_w, tau_b);
}

DenseMatrix soft_threshold(const DenseMatrix& W, double theta) {
  if (!(theta >= 0.0)) throw std::invalid_argument("soft_threshold: theta must be >= 0");
  DenseMatrix out(W.rows(), W.cols());
  auto o = out.values();
  const auto w = W.values();
  for (std::size_t k = 0; k < o.size(); ++k) {
    const double v = w[k];
    o[k] = v > theta ? v - theta : (v < -theta ? v + theta : 0.0);
  }
  return out;
}

double prox_threshold(ThresholdRule rule, double alpha, double tau_w) {
  return rule == ThresholdRule::LiteralAlpha ? alpha : tau_w * alpha;
}

PerceptronModel rosenblatt_ista_step(const PerceptronModel& model, const Batch& batch, const ProximalActivation& act,
                                     double tau_w, double tau_b, double alpha, ThresholdRule rule) {
  check_steps(tau_w, tau_b);
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  PerceptronModel next = descend(model, batch_gradient(model, batch, bregman_residual(act)), tau_w, tau_b);
  next.W = soft_threshold(next.W, prox_threshold(rule, alpha, tau_w));
  return next;
}

PerceptronModel subgradient_ista_step(const PerceptronModel& model, const Batch& batch,
                                      const ProximalActivation& act, double tau_w, double tau_b, double alpha,
                                      ThresholdRule rule) {
  check_steps(tau_w, tau_b);
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  PerceptronModel next = descend(model, batch_gradient(model, batch, squared_residual(act)), tau_w, tau_b);
  next.W = soft_threshold(next.W, prox_threshold(rule, alpha, tau_w));
  return next;
}

StepSchedule StepSchedule::constant(double tau0) {
  if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw std::invalid_argument("step size must be positive");
  return {Kind::Constant, tau0};
}

StepSchedule StepSchedule::diminishing(double tau0) {
  if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw std::invalid_argument("step size must be positive");
  return {Kind::Diminishing, tau0};
}

double step_size(const StepSchedule& schedule, long k) {
  if (k < 1) throw std::invalid_argument("step_size: iteration must be >= 1, got " + std::to_string(k));
  if (schedule.kind == StepSchedule::Kind::Constant) return schedule.tau0;
  return schedule.tau0 / std::sqrt(static_cast<double>(k));
}

BatchPlan BatchPlan::full(std::size_t s) { return {Mode::FullBatch, s, 0, s}; }

BatchPlan BatchPlan::deterministic(std::size_t size, std::size_t s) { return {Mode::Deterministic, size, 0, s}; }

BatchPlan BatchPlan::random(std::size_t size, std::size_t s, std::uint64_t seed) {
  return {Mode::Random, size, seed, s};
}

std::vector<std::size_t> select_batch(const BatchPlan& plan, long k) {
  const std::size_t s = plan.sample_count;
  if (s == 0) throw std::invalid_argument("select_batch: empty sample set");
  if (k < 1) throw std::invalid_argument("select_batch: iteration must be >= 1");
  std::vector<std::size_t> idx;
  switch (plan.mode) {
    case BatchPlan::Mode::FullBatch:
      idx.resize(s);
      for (std::size_t i = 0; i < s; ++i) idx[i] = i;
      return idx;
    case BatchPlan::Mode::Deterministic: {
      if (plan.size == 0 || plan.size > s) throw std::invalid_argument("select_batch: batch size must be in [1, s]");
      const std::size_t start = (static_cast<std::size_t>(k - 1) % s) * (plan.size % s) % s;
      for (std::size_t t = 0; t < plan.size; ++t) idx.push_back((start + t) % s);
      break;
    }
    case BatchPlan::Mode::Random: {
      if (plan.size == 0 || plan.size > s) throw std::invalid_argument("select_batch: batch size must be in [1, s]");
      Rng rng(mix_seed(plan.seed, static_cast<std::uint64_t>(k)));
      idx = rng.sample_without_replacement(s, plan.size);
      break;
    }
  }
  std::ranges::sort(idx);
  return idx;
}

double objective(const PerceptronModel& model, const LabeledDataset& data, const LossKind& loss, double alpha) {
  if (data.size() == 0) throw std::invalid_argument("objective: empty dataset");
  if (data.input_dim() != model.inputs() || data.Y.cols() != model.outputs()) {
    throw DimensionError("objective: data " + data.X.shape_string() + "/" + data.Y.shape_string() +
                         " does not fit W " + model.W.shape_string());
  }
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const DenseVector z = preactivation(model, data.X.row(i));
    total += loss.value(data.Y.row(i), z.values());
  }
  return total / static_cast<double>(data.size()) + alpha * l1_norm(model.W);
}

double gram_lipschitz_estimate(const DenseMatrix& X, int max_iters, double rel_tol) {
  const std::size_t s = X.rows();
  const std::size_t m = X.cols();
  if (s == 0) throw std::invalid_argument("gram_lipschitz_estimate: empty data");
  // v covers [weights..., bias]; the bias column of the augmented matrix is all ones.
  std::vector<double> v(m + 1, 1.0 / std::sqrt(static_cast<double>(m + 1)));
  std::vector<double> u(s);
  std::vector<double> w(m + 1);
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    for (std::size_t r = 0; r < s; ++r) {
      const auto x = X.row(r);
      double acc = v[m];
      for (std::size_t i = 0; i < m; ++i) acc += x[i] * v[i];
      u[r] = acc;
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t r = 0; r < s; ++r) {
      const auto x = X.row(r);
      for (std::size_t i = 0; i < m; ++i) w[i] += x[i] * u[r];
      w[m] += u[r];
    }
    double norm = 0.0;
    for (double& val : w) {
      val /= static_cast<double>(s);
      norm += val * val;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    const double prev = lambda;
    lambda = norm;  // |A v| with |v| = 1
    for (std::size_t i = 0; i <= m; ++i) v[i] = w[i] / norm;
    if (it > 0 && std::abs(lambda - prev) <= rel_tol * lambda) break;
  }
  return lambda;
}

double weight_sparsity(const DenseMatrix& W) {
  if (W.size() == 0) return 0.0;
  std::size_t zeros = 0;
  for (double w : W.values()) zeros += (w == 0.0) ? 1 : 0;
  return static_cast<double>(zeros) / static_cast<double>(W.size());
}

const char* trainer_name(TrainerKind kind) {
  switch (kind) {
    case TrainerKind::ClassicRosenblatt:
      return "classic";
    case TrainerKind::BregmanSGD:
      return "bregman-sgd";
    case TrainerKind::SubgradientDescent:
      return "subgradient";
    case TrainerKind::RosenblattISTA:
      return "rosenblatt-ista";
    case TrainerKind::SubgradientISTA:
      return "subgradient-ista";
  }
  return "unknown";
}

TrainerKind parse_trainer(std::string_view name) {
  for (auto kind : {TrainerKind::ClassicRosenblatt, TrainerKind::BregmanSGD, TrainerKind::SubgradientDescent,
                    TrainerKind::RosenblattISTA, TrainerKind::SubgradientISTA}) {
    if (name == trainer_name(kind)) return kind;
  }
  throw std::invalid_argument("unknown trainer '" + std::string(name) +
                              "' (expected classic, bregman-sgd, subgradient, rosenblatt-ista, subgradient-ista)");
}

LossKind loss_for(const TrainerConfig& config) {
  if (config.kind != TrainerKind::ClassicRosenblatt && !config.activation.is_proximal()) {
    throw std::invalid_argument(std::string(trainer_name(config.kind)) + " needs a proximal activation, got " +
                                config.activation.name() + "; heaviside only works with the classic trainer");
  }
  switch (config.kind) {
    case TrainerKind::BregmanSGD:
    case TrainerKind::RosenblattISTA:
      return LossKind::bregman(config.activation.proximal());
    case TrainerKind::ClassicRosenblatt:
      if (config.activation.is_proximal()) return LossKind::bregman(config.activation.proximal());
      return LossKind::squared(config.activation);
    case TrainerKind::SubgradientDescent:
    case TrainerKind::SubgradientISTA:
      return LossKind::squared(config.activation);
  }
  return LossKind::squared(config.activation);
}

Trainer::Trainer(TrainerConfig config, PerceptronModel initial, const LabeledDataset& data)
    : config_(std::move(config)), model_(std::move(initial)), data_(data), loss_(loss_for(config_)) {
  if (data_.size() == 0) throw std::invalid_argument("Trainer: empty training set");
  if (model_.inputs() != data_.input_dim() || model_.outputs() != data_.Y.cols()) {
    throw DimensionError("Trainer: model W " + model_.W.shape_string() + " does not fit data " +
                         data_.X.shape_string() + "/" + data_.Y.shape_string());
  }
  if (!(config_.alpha >= 0.0)) throw std::invalid_argument("Trainer: alpha must be >= 0");
  if (config_.batch.sample_count == 0) config_.batch.sample_count = data_.size();
  if (config_.batch.sample_count != data_.size()) {
    throw std::invalid_argument("Trainer: batch plan sample count does not match the training set");
  }
  if (config_.batch.mode == BatchPlan::Mode::FullBatch) config_.batch.size = data_.size();
  if (config_.batch.size == 0 || config_.batch.size > data_.size()) {
    throw std::invalid_argument("Trainer: batch size must be in [1, s]");
  }
  if (loss_.is_bregman()) {
    const auto& act = config_.activation.proximal();
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!in_domain(act, data_.Y.row(i))) {
        throw DomainError("Trainer: target " + std::to_string(i) + " outside dom(Psi) of " + act.name());
      }
    }
  }
}

void Trainer::step() {
  ++k_;
  if (config_.kind == TrainerKind::ClassicRosenblatt) {
    const std::size_t idx = static_cast<std::size_t>(k_ - 1) % data_.size();
    model_ = rosenblatt_step(model_, data_.X.row(idx), data_.Y.row(idx), config_.activation);
    return;
  }
  const auto indices = select_batch(config_.batch, k_);
  const Batch batch{data_.X, data_.Y, indices};
  const auto& act = config_.activation.proximal();
  const double tw = step_size(config_.tau_w, k_);
  const double tb = step_size(config_.tau_b, k_);
  switch (config_.kind) {
    case TrainerKind::BregmanSGD:
      model_ = bregman_sgd_step(model_, batch, act, tw, tb);
      break;
    case TrainerKind::SubgradientDescent:
      model_ = subgradient_step(model_, batch, act, tw, tb, config_.alpha);
      break;
    case TrainerKind::RosenblattISTA:
      model_ = rosenblatt_ista_step(model_, batch, act, tw, tb, config_.alpha, config_.threshold_rule);
      break;
    case TrainerKind::SubgradientISTA:
      model_ = subgradient_ista_step(model_, batch, act, tw, tb, config_.alpha, config_.threshold_rule);
      break;
    case TrainerKind::ClassicRosenblatt:
      break;
  }
}

void Trainer::run(long iterations) {
  for (long t = 0; t < iterations; ++t) step();
}

double Trainer::objective() const { return bregman::objective(model_, data_, loss_, config_.alpha); }

}  // namespace bregman
