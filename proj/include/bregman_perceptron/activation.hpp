#pragma once

// Proximal activation functions. Each activation sigma is the proximal map
// of a convex penalty Psi:
//
//   sigma(z) = argmin_u 1/2 |u - z|^2 + Psi(u)
//
// Rectifier   : Psi = indicator of the nonnegative orthant, sigma = max(0, z)
// Identity    : Psi = 0, sigma = z
// SoftThreshold(theta): Psi = theta |u|_1, sigma = shrink(z, theta)
//
// The Heaviside step is kept separately; it is not the prox of any convex
// penalty and is only usable with the classic Rosenblatt update.

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "bregman_perceptron/tensor.hpp"

namespace bregman {

/// A value in R u {+inf}. Infinity is a state, not a sentinel double;
/// reading value() of an infinite ExtendedReal throws.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr explicit ExtendedReal(double v) : value_(v) {}
  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_finite() const noexcept { return !infinite_; }
  constexpr bool is_infinite() const noexcept { return infinite_; }
  double value() const;

  friend constexpr bool operator==(const ExtendedReal&, const ExtendedReal&) = default;

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

enum class ActivationKind { Rectifier, Identity, SoftThreshold };

class ProximalActivation {
 public:
  /// Replacement for the built-in subderivative convention. Only the
  /// subgradient baselines consult it.
  using SubderivativeRule = std::function<DenseVector(const DenseVector&)>;

  static ProximalActivation rectifier() { return ProximalActivation(ActivationKind::Rectifier, 0.0); }
  static ProximalActivation identity() { return ProximalActivation(ActivationKind::Identity, 0.0); }
  /// Throws std::invalid_argument for negative or non-finite theta.
  static ProximalActivation soft_threshold(double theta);

  ActivationKind kind() const noexcept { return kind_; }
  double theta() const noexcept { return theta_; }

  /// Copy of this activation whose subderivative() answers with `rule`.
  ProximalActivation with_subderivative_rule(SubderivativeRule rule) const;
  bool has_custom_subderivative() const noexcept { return static_cast<bool>(subderivative_rule_); }
  const SubderivativeRule& subderivative_rule() const noexcept { return subderivative_rule_; }

  /// Name in the config/CLI vocabulary: "relu", "identity", "softshrink:<theta>".
  std::string name() const;

 private:
  ProximalActivation(ActivationKind kind, double theta) : kind_(kind), theta_(theta) {}

  ActivationKind kind_;
  double theta_;
  SubderivativeRule subderivative_rule_;
};

/// Componentwise sigma(z).
DenseVector prox(const ProximalActivation& act, const DenseVector& z);
void prox_into(const ProximalActivation& act, std::span<const double> z, std::span<double> out);
double prox_scalar(const ProximalActivation& act, double z);

/// Psi(u); +inf for the rectifier outside the nonnegative orthant.
ExtendedReal psi(const ProximalActivation& act, const DenseVector& u);
ExtendedReal psi(const ProximalActivation& act, std::span<const double> u);

/// True iff psi(act, y) is finite.
bool in_domain(const ProximalActivation& act, const DenseVector& y);
bool in_domain(const ProximalActivation& act, std::span<const double> y);

/// sigma'(z) under the baseline convention: the rectifier slope at 0 is 1.
DenseVector subderivative(const ProximalActivation& act, const DenseVector& z);

/// Step function with H(0) = 1.
DenseVector heaviside(const DenseVector& z);

struct HeavisideActivation {
  friend bool operator==(const HeavisideActivation&, const HeavisideActivation&) = default;
};

/// Any activation the library can evaluate: a proximal one or Heaviside.
class Activation {
 public:
  Activation(ProximalActivation act) : impl_(std::move(act)) {}  // NOLINT(implicit)
  Activation(HeavisideActivation act) : impl_(act) {}             // NOLINT(implicit)

  bool is_proximal() const noexcept { return std::holds_alternative<ProximalActivation>(impl_); }
  /// Throws std::logic_error for Heaviside.
  const ProximalActivation& proximal() const;

  DenseVector apply(const DenseVector& z) const;
  void apply_into(std::span<const double> z, std::span<double> out) const;
  std::string name() const;

 private:
  std::variant<ProximalActivation, HeavisideActivation> impl_;
};

/// Parses "relu", "identity", "softshrink:<theta>" or "heaviside".
/// Throws std::invalid_argument on anything else.
Activation parse_activation(std::string_view name);

}  // namespace bregman
