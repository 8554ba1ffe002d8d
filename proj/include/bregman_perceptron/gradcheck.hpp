#pragma once

// Numerical validation of the Bregman loss: central differences of the loss
// against the closed-form gradient sigma(z) - y, and the loss against its
// envelope form E_z(y) - E_z(sigma(z)).

#include <cstdint>
#include <string>
#include <vector>

#include "bregman_perceptron/activation.hpp"

namespace bregman {

struct GradCheckOptions {
  int trials = 1000;
  std::uint64_t seed = 0;
  std::size_t dim = 4;
  double h = 1e-6;
  double kink_margin = 1e-4;  // sampled z stays this far from kinks of sigma
  double fd_tolerance = 1e-5;
  double envelope_tolerance = 1e-10;
  double poison = 0.0;  // added to every analytic gradient entry (negative control)
};

struct GradCheckPoint {
  int trial = -1;
  std::size_t coordinate = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double error = 0.0;
};

struct GradCheckReport {
  int trials = 0;
  double max_fd_error = 0.0;        // relative, denominator max(1, |analytic|, |numeric|)
  double max_envelope_gap = 0.0;    // |bregman_loss - envelope_loss|
  GradCheckPoint worst_fd;
  int worst_envelope_trial = -1;
  std::vector<GradCheckPoint> fd_failures;  // at most 20, in trial order
  bool passed = false;
};

GradCheckReport run_gradcheck(const ProximalActivation& act, const GradCheckOptions& options);

std::string format_report(const ProximalActivation& act, const GradCheckReport& report);

}  // namespace bregman
