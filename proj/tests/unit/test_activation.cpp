#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "bregman_perceptron/activation.hpp"

using namespace bregman;

namespace {

// Brute-force minimizer of 1/2 (u - z)^2 + penalty(u) over u in [lo, hi].
template <class Penalty>
double grid_argmin(double z, Penalty penalty, double lo = -10.0, double hi = 10.0, double step = 1e-4) {
  double best_u = lo;
  double best = std::numeric_limits<double>::infinity();
  const long n = std::lround((hi - lo) / step);
  for (long k = 0; k <= n; ++k) {
    const double u = lo + k * step;
    const double f = 0.5 * (u - z) * (u - z) + penalty(u);
    if (f < best) {
      best = f;
      best_u = u;
    }
  }
  return best_u;
}

std::vector<ProximalActivation> all_kinds() {
  return {ProximalActivation::rectifier(), ProximalActivation::identity(), ProximalActivation::soft_threshold(0.9),
          ProximalActivation::soft_threshold(0.0)};
}

}  // namespace

TEST_CASE("prox examples") {
  CHECK(prox(ProximalActivation::rectifier(), DenseVector{-3, 0, 5}) == DenseVector{0, 0, 5});
  CHECK(prox(ProximalActivation::identity(), DenseVector{1.5, -2}) == DenseVector{1.5, -2});
  const DenseVector st = prox(ProximalActivation::soft_threshold(0.9), DenseVector{1.5, -0.5});
  CHECK(st[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(st[1] == 0.0);

  // The same soft-threshold example against a grid search on [-3, 3].
  const auto pen = [](double u) { return 0.9 * std::abs(u); };
  CHECK(std::abs(grid_argmin(1.5, pen, -3, 3) - st[0]) <= 1e-4);
  CHECK(std::abs(grid_argmin(-0.5, pen, -3, 3) - st[1]) <= 1e-4);
}

TEST_CASE("psi examples") {
  CHECK(psi(ProximalActivation::rectifier(), DenseVector{0, 2}) == ExtendedReal(0.0));
  CHECK(psi(ProximalActivation::rectifier(), DenseVector{-0.1, 2}).is_infinite());
  CHECK(psi(ProximalActivation::soft_threshold(0.5), DenseVector{2, -2}).value() == 2.0);
  CHECK(psi(ProximalActivation::identity(), DenseVector{-7, 3}).value() == 0.0);
  CHECK_THROWS_AS(ExtendedReal::infinity().value(), std::logic_error);
}

TEST_CASE("in_domain") {
  CHECK(in_domain(ProximalActivation::rectifier(), DenseVector{0, 1, 0}));
  CHECK_FALSE(in_domain(ProximalActivation::rectifier(), DenseVector{-1, 0}));
  CHECK(in_domain(ProximalActivation::identity(), DenseVector{-1e300, 5}));
  CHECK(in_domain(ProximalActivation::soft_threshold(2), DenseVector{-4, 5}));
}

TEST_CASE("subderivative") {
  CHECK(subderivative(ProximalActivation::rectifier(), DenseVector{0}) == DenseVector{1});
  CHECK(subderivative(ProximalActivation::rectifier(), DenseVector{-2, 3}) == DenseVector{0, 1});
  CHECK(subderivative(ProximalActivation::identity(), DenseVector{7}) == DenseVector{1});
  CHECK(subderivative(ProximalActivation::soft_threshold(1), DenseVector{-2, 0.5, 1, 1.5}) ==
        DenseVector{1, 0, 0, 1});

  const auto poisoned = ProximalActivation::rectifier().with_subderivative_rule(
      [](const DenseVector& z) { return DenseVector(z.size(), 42.0); });
  CHECK(poisoned.has_custom_subderivative());
  CHECK(subderivative(poisoned, DenseVector{-1, 1}) == DenseVector{42, 42});
  // The rule does not change the map itself.
  CHECK(prox(poisoned, DenseVector{-1, 1}) == DenseVector{0, 1});
}

TEST_CASE("heaviside") {
  CHECK(heaviside(DenseVector{-1, 0, 2}) == DenseVector{0, 1, 1});
  CHECK(heaviside(DenseVector(4, 0.0)) == DenseVector(4, 1.0));
  CHECK(heaviside(DenseVector{1e-12}) == DenseVector{1});
  CHECK(heaviside(DenseVector{-1e-300}) == DenseVector{0});
}

TEST_CASE("parse_activation") {
  CHECK(parse_activation("relu").proximal().kind() == ActivationKind::Rectifier);
  CHECK(parse_activation("identity").proximal().kind() == ActivationKind::Identity);
  const Activation s = parse_activation("softshrink:0.25");
  CHECK(s.proximal().kind() == ActivationKind::SoftThreshold);
  CHECK(s.proximal().theta() == 0.25);
  CHECK(parse_activation(s.name()).proximal().theta() == 0.25);
  const Activation h = parse_activation("heaviside");
  CHECK_FALSE(h.is_proximal());
  CHECK_THROWS_AS(h.proximal(), std::logic_error);
  CHECK(h.apply(DenseVector{-1, 0}) == DenseVector{0, 1});
  CHECK_THROWS_AS(parse_activation("sigmoid"), std::invalid_argument);
  CHECK_THROWS_AS(parse_activation("softshrink:"), std::invalid_argument);
  CHECK_THROWS_AS(parse_activation("softshrink:-1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_activation("softshrink:1x"), std::invalid_argument);
  CHECK_THROWS_AS(ProximalActivation::soft_threshold(-0.1), std::invalid_argument);
}

TEST_CASE("prox optimality conditions on random points") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(-5, 5);
  std::uniform_real_distribution<double> th(0, 3);
  for (int t = 0; t < 1000; ++t) {
    DenseVector z(6);
    for (auto& v : z) v = u(gen);
    if (t % 10 == 0) z[t % 6] = 0.0;

    const DenseVector r = prox(ProximalActivation::rectifier(), z);
    for (std::size_t j = 0; j < z.size(); ++j) {
      const bool active = r[j] > 0 && z[j] - r[j] == 0;
      const bool clipped = r[j] == 0 && z[j] <= 0;
      CHECK((active || clipped));
    }

    const double theta = th(gen);
    const DenseVector s = prox(ProximalActivation::soft_threshold(theta), z);
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (s[j] != 0.0) {
        CHECK(std::abs((z[j] - s[j]) - theta * (s[j] > 0 ? 1.0 : -1.0)) <= 1e-12);
      } else {
        CHECK(std::abs(z[j]) <= theta + 1e-12);
      }
    }
  }
}

TEST_CASE("prox lands in the domain, is monotone and 1-Lipschitz") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(-4, 4);
  for (const auto& act : all_kinds()) {
    for (int t = 0; t < 1000; ++t) {
      DenseVector z1(3), z2(3);
      for (auto& v : z1) v = u(gen);
      for (auto& v : z2) v = u(gen);
      const DenseVector s1 = prox(act, z1);
      const DenseVector s2 = prox(act, z2);
      CHECK(in_domain(act, s1));
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK((s1[j] - s2[j]) * (z1[j] - z2[j]) >= 0.0);
        CHECK(std::abs(s1[j] - s2[j]) <= std::abs(z1[j] - z2[j]) + 1e-12);
      }
    }
  }
}

TEST_CASE("prox matches a brute-force grid minimizer for every kind") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-8, 8);
  for (const auto& act : all_kinds()) {
    const auto pen = [&](double v) {
      const ExtendedReal p = psi(act, DenseVector{v});
      return p.is_finite() ? p.value() : std::numeric_limits<double>::infinity();
    };
    for (int t = 0; t < 60; ++t) {
      const double z = u(gen);
      CHECK(std::abs(prox_scalar(act, z) - grid_argmin(z, pen)) <= 1e-4);
    }
  }
}
