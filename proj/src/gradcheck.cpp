#include "bregman_perceptron/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "bregman_perceptron/loss.hpp"
#include "bregman_perceptron/random.hpp"

namespace bregman {

namespace {

constexpr std::size_t kMaxReportedFailures = 20;

bool near_kink(const ProximalActivation& act, double z, double margin) {
  switch (act.kind()) {
    case ActivationKind::Rectifier:
      return std::abs(z) < margin;
    case ActivationKind::SoftThreshold:
      return std::abs(std::abs(z) - act.theta()) < margin;
    case ActivationKind::Identity:
      return false;
  }
  return false;
}

double sample_z(Rng& rng, const ProximalActivation& act, double margin) {
  for (;;) {
    const double z = rng.uniform(-3.0, 3.0);
    if (!near_kink(act, z, margin)) return z;
  }
}

// Targets inside dom(Psi); for the rectifier half the entries sit on the
// boundary y_j = 0 like one-hot targets do.
double sample_y(Rng& rng, const ProximalActivation& act) {
  if (act.kind() == ActivationKind::Rectifier) {
    return rng.uniform01() < 0.5 ? 0.0 : rng.uniform(0.0, 2.0);
  }
  return rng.uniform(-2.0, 2.0);
}

}  // namespace

GradCheckReport run_gradcheck(const ProximalActivation& act, const GradCheckOptions& options) {
  if (options.trials < 1 || options.dim == 0) throw std::invalid_argument("gradcheck: trials and dim must be >= 1");
  if (!(options.h > 0.0)) throw std::invalid_argument("gradcheck: h must be positive");
  Rng rng(options.seed);
  GradCheckReport report;
  report.trials = options.trials;
  for (int t = 0; t < options.trials; ++t) {
    DenseVector y(options.dim);
    DenseVector z(options.dim);
    for (std::size_t j = 0; j < options.dim; ++j) {
      y[j] = sample_y(rng, act);
      z[j] = sample_z(rng, act, options.kink_margin);
    }

    const double gap = std::abs(bregman_loss(act, y, z) - envelope_loss(act, y, z));
    if (gap > report.max_envelope_gap || report.worst_envelope_trial < 0) {
      report.max_envelope_gap = std::max(report.max_envelope_gap, gap);
      report.worst_envelope_trial = t;
    }

    const DenseVector grad = bregman_loss_grad_z(act, y, z);
    for (std::size_t j = 0; j < options.dim; ++j) {
      DenseVector zp = z;
      DenseVector zm = z;
      zp[j] += options.h;
      zm[j] -= options.h;
      const double numeric = (bregman_loss(act, y, zp) - bregman_loss(act, y, zm)) / (2.0 * options.h);
      const double analytic = grad[j] + options.poison;
      const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
      const double err = std::abs(analytic - numeric) / denom;
      const GradCheckPoint point{t, j, analytic, numeric, err};
      if (err > report.max_fd_error || report.worst_fd.trial < 0) {
        report.max_fd_error = std::max(report.max_fd_error, err);
        report.worst_fd = point;
      }
      if (err > options.fd_tolerance && report.fd_failures.size() < kMaxReportedFailures) {
        report.fd_failures.push_back(point);
      }
    }
  }
  report.passed = report.max_fd_error <= options.fd_tolerance && report.max_envelope_gap <= options.envelope_tolerance;
  return report;
}

std::string format_report(const ProximalActivation& act, const GradCheckReport& report) {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof(buf),
                "activation: %s\ntrials: %d\nmax relative finite-difference error: %.3e\n"
                "max |bregman_loss - envelope_loss|: %.3e\n",
                act.name().c_str(), report.trials, report.max_fd_error, report.max_envelope_gap);
  out += buf;
  for (const auto& p : report.fd_failures) {
    std::snprintf(buf, sizeof(buf), "  FAIL trial %d coordinate %zu: analytic %.12g numeric %.12g (rel err %.3e)\n",
                  p.trial, p.coordinate, p.analytic, p.numeric, p.error);
    out += buf;
  }
  out += report.passed ? "result: PASS\n" : "result: FAIL\n";
  return out;
}

}  // namespace bregman
