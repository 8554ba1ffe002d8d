#include "bregman_perceptron/activation.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

#include "bregman_perceptron/errors.hpp"

namespace bregman {

double ExtendedReal::value() const {
  if (infinite_) throw std::logic_error("ExtendedReal::value() called on +inf");
  return value_;
}

ProximalActivation ProximalActivation::soft_threshold(double theta) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    throw std::invalid_argument("soft-threshold activation needs a finite theta >= 0");
  }
  return ProximalActivation(ActivationKind::SoftThreshold, theta);
}

ProximalActivation ProximalActivation::with_subderivative_rule(SubderivativeRule rule) const {
  ProximalActivation copy = *this;
  copy.subderivative_rule_ = std::move(rule);
  return copy;
}

std::string ProximalActivation::name() const {
  switch (kind_) {
    case ActivationKind::Rectifier:
      return "relu";
    case ActivationKind::Identity:
      return "identity";
    case ActivationKind::SoftThreshold: {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), theta_);
      return "softshrink:" + std::string(buf, end);
    }
  }
  return "unknown";
}

double prox_scalar(const ProximalActivation& act, double z) {
  switch (act.kind()) {
    case ActivationKind::Rectifier:
      return z > 0.0 ? z : 0.0;
    case ActivationKind::Identity:
      return z;
    case ActivationKind::SoftThreshold: {
      const double t = act.theta();
      if (z > t) return z - t;
      if (z < -t) return z + t;
      return 0.0;
    }
  }
  return z;
}

void prox_into(const ProximalActivation& act, std::span<const double> z, std::span<double> out) {
  if (z.size() != out.size()) throw DimensionError("prox_into: output length mismatch");
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = prox_scalar(act, z[j]);
}

DenseVector prox(const ProximalActivation& act, const DenseVector& z) {
  DenseVector out(z.size());
  prox_into(act, z.values(), out.values());
  return out;
}

ExtendedReal psi(const ProximalActivation& act, std::span<const double> u) {
  switch (act.kind()) {
    case ActivationKind::Rectifier:
      for (double v : u) {
        if (!(v >= 0.0)) return ExtendedReal::infinity();
      }
      return ExtendedReal(0.0);
    case ActivationKind::Identity:
      return ExtendedReal(0.0);
    case ActivationKind::SoftThreshold: {
      double s = 0.0;
      for (double v : u) s += std::abs(v);
      return ExtendedReal(act.theta() * s);
    }
  }
  return ExtendedReal(0.0);
}

ExtendedReal psi(const ProximalActivation& act, const DenseVector& u) { return psi(act, u.values()); }

bool in_domain(const ProximalActivation& act, std::span<const double> y) {
  return psi(act, y).is_finite();
}

bool in_domain(const ProximalActivation& act, const DenseVector& y) { return in_domain(act, y.values()); }

DenseVector subderivative(const ProximalActivation& act, const DenseVector& z) {
  if (act.has_custom_subderivative()) return act.subderivative_rule()(z);
  DenseVector out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    switch (act.kind()) {
      case ActivationKind::Rectifier:
        out[j] = z[j] >= 0.0 ? 1.0 : 0.0;
        break;
      case ActivationKind::Identity:
        out[j] = 1.0;
        break;
      case ActivationKind::SoftThreshold:
        out[j] = std::abs(z[j]) > act.theta() ? 1.0 : 0.0;
        break;
    }
  }
  return out;
}

DenseVector heaviside(const DenseVector& z) {
  DenseVector out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] >= 0.0 ? 1.0 : 0.0;
  return out;
}

const ProximalActivation& Activation::proximal() const {
  if (const auto* p = std::get_if<ProximalActivation>(&impl_)) return *p;
  throw std::logic_error("heaviside is not a proximal activation");
}

DenseVector Activation::apply(const DenseVector& z) const {
  if (const auto* p = std::get_if<ProximalActivation>(&impl_)) return prox(*p, z);
  return heaviside(z);
}

void Activation::apply_into(std::span<const double> z, std::span<double> out) const {
  if (const auto* p = std::get_if<ProximalActivation>(&impl_)) {
    prox_into(*p, z, out);
    return;
  }
  if (z.size() != out.size()) throw DimensionError("apply_into: output length mismatch");
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] >= 0.0 ? 1.0 : 0.0;
}

std::string Activation::name() const {
  if (const auto* p = std::get_if<ProximalActivation>(&impl_)) return p->name();
  return "heaviside";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return ProximalActivation::rectifier();
  if (name == "identity") return ProximalActivation::identity();
  if (name == "heaviside") return HeavisideActivation{};
  constexpr std::string_view prefix = "softshrink:";
  if (name.starts_with(prefix)) {
    const auto arg = name.substr(prefix.size());
    double theta = 0.0;
    auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), theta);
    if (ec != std::errc() || ptr != arg.data() + arg.size()) {
      throw std::invalid_argument("bad softshrink threshold in '" + std::string(name) + "'");
    }
    return ProximalActivation::soft_threshold(theta);
  }
  throw std::invalid_argument("unknown activation '" + std::string(name) +
                              "' (expected relu, identity, softshrink:<theta> or heaviside)");
}

}  // namespace bregman
