#include "bregman_perceptron/loss.hpp"

#include <string>

#include "bregman_perceptron/errors.hpp"

namespace bregman {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": target length " + std::to_string(a) +
                         " vs pre-activation length " + std::to_string(b));
  }
}

void require_domain(const ProximalActivation& act, std::span<const double> y, const char* what) {
  if (!in_domain(act, y)) {
    throw DomainError(std::string(what) + ": target lies outside dom(Psi) of activation " + act.name());
  }
}

}  // namespace

ExtendedReal bregman_distance(const ProximalActivation& act, const DenseVector& u,
                              const DenseVector& v, const DenseVector& q) {
  if (u.size() != v.size() || u.size() != q.size()) {
    throw DimensionError("bregman_distance: u, v, q must have equal length");
  }
  const ExtendedReal psi_v = psi(act, v);
  if (psi_v.is_infinite()) throw DomainError("bregman_distance: v outside dom(Psi)");
  const ExtendedReal psi_u = psi(act, u);
  if (psi_u.is_infinite()) return ExtendedReal::infinity();
  const DenseVector diff = subtract(u, v);
  return ExtendedReal(psi_u.value() - psi_v.value() - dot(q.values(), diff.values()));
}

double bregman_loss(const ProximalActivation& act, std::span<const double> y, std::span<const double> z) {
  require_same_length(y.size(), z.size(), "bregman_loss");
  require_domain(act, y, "bregman_loss");
  const DenseVector zv(z);
  const DenseVector yv(y);
  const DenseVector s = prox(act, zv);
  const DenseVector q = subtract(zv, s);  // z - sigma(z), a subgradient of Psi at sigma(z)
  const DenseVector r = subtract(yv, s);
  const double half_sq = 0.5 * squared_norm(r.values());
  return half_sq + bregman_distance(act, yv, s, q).value();
}

double envelope_loss(const ProximalActivation& act, const DenseVector& y, const DenseVector& z) {
  require_same_length(y.size(), z.size(), "envelope_loss");
  require_domain(act, y.values(), "envelope_loss");
  auto envelope = [&](const DenseVector& x) {
    return 0.5 * squared_norm(subtract(x, z).values()) + psi(act, x).value();
  };
  return envelope(y) - envelope(prox(act, z));
}

DenseVector bregman_loss_grad_z(const ProximalActivation& act, const DenseVector& y, const DenseVector& z) {
  require_same_length(y.size(), z.size(), "bregman_loss_grad_z");
  require_domain(act, y.values(), "bregman_loss_grad_z");
  return subtract(prox(act, z), y);
}

double squared_loss(const Activation& act, std::span<const double> y, std::span<const double> z) {
  require_same_length(y.size(), z.size(), "squared_loss");
  const DenseVector s = act.apply(DenseVector(z));
  const DenseVector r = subtract(DenseVector(y), s);
  return 0.5 * squared_norm(r.values());
}

DenseVector squared_loss_subgrad_z(const ProximalActivation& act, const DenseVector& y, const DenseVector& z) {
  require_same_length(y.size(), z.size(), "squared_loss_subgrad_z");
  const DenseVector r = subtract(prox(act, z), y);
  const DenseVector slope = subderivative(act, z);
  if (slope.size() != r.size()) throw DimensionError("squared_loss_subgrad_z: subderivative length");
  DenseVector out(r.size());
  for (std::size_t j = 0; j < r.size(); ++j) out[j] = r[j] * slope[j];
  return out;
}

double LossKind::value(std::span<const double> y, std::span<const double> z) const {
  if (bregman_) return bregman_loss(act_.proximal(), y, z);
  return squared_loss(act_, y, z);
}

}  // namespace bregman
