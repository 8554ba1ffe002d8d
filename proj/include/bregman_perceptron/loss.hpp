#pragma once

// Data terms for a single sample with pre-activation z and target y.
//
// Bregman loss:  L(y, sigma(z)) = 1/2 |y - sigma(z)|^2 + D_Psi^{z - sigma(z)}(y, sigma(z))
//   equal to E_z(y) - E_z(sigma(z)) with E_z(x) = 1/2 |x - z|^2 + Psi(x),
//   and with gradient sigma(z) - y in z. No derivative of sigma is involved.
//
// Squared loss:  1/2 |y - sigma(z)|^2, whose z-subgradient needs sigma'.

#include <span>

#include "bregman_perceptron/activation.hpp"
#include "bregman_perceptron/tensor.hpp"

namespace bregman {

/// Psi(u) - Psi(v) - <q, u - v>. Infinite when u is outside dom Psi.
/// Throws DomainError if Psi(v) is infinite.
ExtendedReal bregman_distance(const ProximalActivation& act, const DenseVector& u,
                              const DenseVector& v, const DenseVector& q);

/// Throws DomainError when y is outside dom Psi.
double bregman_loss(const ProximalActivation& act, std::span<const double> y, std::span<const double> z);
inline double bregman_loss(const ProximalActivation& act, const DenseVector& y, const DenseVector& z) {
  return bregman_loss(act, y.values(), z.values());
}

/// E_z(y) - E_z(sigma(z)), evaluated from the two envelope terms directly.
double envelope_loss(const ProximalActivation& act, const DenseVector& y, const DenseVector& z);

/// sigma(z) - y.
DenseVector bregman_loss_grad_z(const ProximalActivation& act, const DenseVector& y, const DenseVector& z);

double squared_loss(const Activation& act, std::span<const double> y, std::span<const double> z);
inline double squared_loss(const Activation& act, const DenseVector& y, const DenseVector& z) {
  return squared_loss(act, y.values(), z.values());
}

/// (sigma(z) - y) * sigma'(z), componentwise.
DenseVector squared_loss_subgrad_z(const ProximalActivation& act, const DenseVector& y, const DenseVector& z);

/// The data term a trainer minimizes.
class LossKind {
 public:
  static LossKind bregman(ProximalActivation act) { return LossKind(true, Activation(std::move(act))); }
  static LossKind squared(Activation act) { return LossKind(false, std::move(act)); }

  bool is_bregman() const noexcept { return bregman_; }
  const Activation& activation() const noexcept { return act_; }
  const char* name() const noexcept { return bregman_ ? "bregman" : "squared"; }

  double value(std::span<const double> y, std::span<const double> z) const;

 private:
  LossKind(bool bregman, Activation act) : bregman_(bregman), act_(std::move(act)) {}

  bool bregman_;
  Activation act_;
};

}  // namespace bregman
