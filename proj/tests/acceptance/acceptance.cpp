// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1).
//
// The oracles below (prox, envelope, classic loop, delta rule, grid search)
// are written out independently of the library code they check.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bregman_perceptron/experiment.hpp"
#include "bregman_perceptron/loss.hpp"
#include "bregman_perceptron/optim.hpp"

using namespace bregman;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- independent scalar oracles -------------------------------------------

enum class Kind { Relu, Identity, Shrink };

struct Act {
  Kind kind;
  double theta = 0.0;
  ProximalActivation lib() const {
    switch (kind) {
      case Kind::Relu:
        return ProximalActivation::rectifier();
      case Kind::Identity:
        return ProximalActivation::identity();
      case Kind::Shrink:
        return ProximalActivation::soft_threshold(theta);
    }
    return ProximalActivation::identity();
  }
  const char* name() const { return kind == Kind::Relu ? "relu" : kind == Kind::Identity ? "identity" : "softshrink"; }
};

double sigma(const Act& a, double z) {
  switch (a.kind) {
    case Kind::Relu:
      return z > 0 ? z : 0.0;
    case Kind::Identity:
      return z;
    case Kind::Shrink:
      return z > a.theta ? z - a.theta : (z < -a.theta ? z + a.theta : 0.0);
  }
  return z;
}

double psi(const Act& a, double u) {
  switch (a.kind) {
    case Kind::Relu:
      return u >= 0 ? 0.0 : std::numeric_limits<double>::infinity();
    case Kind::Identity:
      return 0.0;
    case Kind::Shrink:
      return a.theta * std::abs(u);
  }
  return 0.0;
}

// E_z(y) - E_z(sigma(z)), summed over coordinates.
double envelope(const Act& a, const std::vector<double>& y, const std::vector<double>& z) {
  double total = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double s = sigma(a, z[j]);
    total += 0.5 * (y[j] - z[j]) * (y[j] - z[j]) + psi(a, y[j]) - 0.5 * (s - z[j]) * (s - z[j]) - psi(a, s);
  }
  return total;
}

bool near_kink(const Act& a, double z) {
  if (a.kind == Kind::Relu) return std::abs(z) < 1e-4;
  if (a.kind == Kind::Shrink) return std::abs(std::abs(z) - a.theta) < 1e-4;
  return false;
}

struct Sample {
  std::vector<double> y, z;
};

std::vector<Sample> draw_samples(const Act& a, int count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> uz(-3, 3), uy(-2, 2), coin(0, 1);
  std::vector<Sample> out;
  for (int t = 0; t < count; ++t) {
    Sample s;
    for (int j = 0; j < 5; ++j) {
      double z;
      do {
        z = uz(gen);
      } while (near_kink(a, z));
      s.z.push_back(z);
      double y = uy(gen);
      if (a.kind == Kind::Relu) y = coin(gen) < 0.3 ? 0.0 : std::abs(y);
      s.y.push_back(y);
    }
    out.push_back(std::move(s));
  }
  return out;
}

const std::array<Act, 3> kActs = {Act{Kind::Relu}, Act{Kind::Identity}, Act{Kind::Shrink, 0.7}};

// ---- criteria -------------------------------------------------------------

void criterion_1_and_2() {
  const auto t0 = std::chrono::steady_clock::now();
  const double h = 1e-6;
  double worst_fd = 0.0, worst_gap = 0.0, worst_oracle_gap = 0.0;
  int pairs = 0;
  for (const Act& a : kActs) {
    const ProximalActivation act = a.lib();
    for (const Sample& s : draw_samples(a, 1000, 1234)) {
      ++pairs;
      const DenseVector y(s.y), z(s.z);
      const double L = bregman_loss(act, y, z);
      worst_gap = std::max(worst_gap, std::abs(L - envelope_loss(act, y, z)));
      worst_oracle_gap = std::max(worst_oracle_gap, std::abs(L - envelope(a, s.y, s.z)));
      for (std::size_t j = 0; j < s.z.size(); ++j) {
        DenseVector zp = z, zm = z;
        zp[j] += h;
        zm[j] -= h;
        const double fd = (bregman_loss(act, y, zp) - bregman_loss(act, y, zm)) / (2 * h);
        const double expected = sigma(a, s.z[j]) - s.y[j];
        worst_fd = std::max(worst_fd, std::abs(fd - expected) / std::max({1.0, std::abs(fd), std::abs(expected)}));
      }
    }
  }
  const double elapsed = seconds_since(t0);
  report(1, worst_fd <= 1e-5 && elapsed < 5.0 && pairs >= 3000, "loss gradient equals sigma(z) - y",
         fmt("max relative FD error %.3e over %.0f pairs, %.2f s", worst_fd, pairs, elapsed));
  report(2, worst_gap <= 1e-10 && worst_oracle_gap <= 1e-10, "loss equals E_z(y) - E_z(sigma(z))",
         fmt("max gap to envelope_loss %.3e, to independent envelope %.3e", worst_gap, worst_oracle_gap));
}

void criterion_3() {
  const auto data = synthetic_dataset(50, 12, 4, 2024, 0.3);
  const PerceptronModel start = initial_model(12, 4, 7);
  const auto relu = ProximalActivation::rectifier();

  // The classic loop written out: e = y - max(0, W^T x + b); W += x e^T; b += e.
  std::vector<double> W(start.W.raw()), b(start.b.raw());
  const std::size_t m = 12, n = 4;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.X.row(i);
    const auto y = data.Y.row(i);
    std::vector<double> e(n);
    for (std::size_t j = 0; j < n; ++j) {
      double z = 0.0;
      for (std::size_t r = 0; r < m; ++r) z += W[r * n + j] * x[r];
      z += b[j];
      e[j] = y[j] - std::max(0.0, z);
    }
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t j = 0; j < n; ++j) W[r * n + j] += x[r] * e[j];
    for (std::size_t j = 0; j < n; ++j) b[j] += e[j];
  }

  PerceptronModel sgd = start, classic = start;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::vector<std::size_t> one{i};
    sgd = bregman_sgd_step(sgd, Batch{data.X, data.Y, one}, relu, 1.0, 1.0);
    classic = rosenblatt_step(classic, data.X.row(i), data.Y.row(i), relu);
  }
  const bool same = sgd.W.raw() == W && sgd.b.raw() == b && sgd == classic;
  report(3, same && !(sgd == start), "unit-step Bregman SGD is the classic Rosenblatt loop",
         same ? "bitwise identical after a 50-sample pass" : "models differ");
}

void criterion_4() {
  const auto data = synthetic_dataset(40, 9, 3, 77, 0.2);
  PerceptronModel p = initial_model(9, 3, 11);
  std::vector<double> W(p.W.raw()), b(p.b.raw());
  const double tau = 0.05;
  bool same = true;
  for (int k = 0; k < 100 && same; ++k) {
    const std::size_t i = static_cast<std::size_t>(k) % data.size();
    const auto x = data.X.row(i);
    const auto y = data.Y.row(i);
    std::vector<double> e(3);
    for (std::size_t j = 0; j < 3; ++j) {
      double z = 0.0;
      for (std::size_t r = 0; r < 9; ++r) z += W[r * 3 + j] * x[r];
      e[j] = y[j] - (z + b[j]);
    }
    for (std::size_t r = 0; r < 9; ++r)
      for (std::size_t j = 0; j < 3; ++j) W[r * 3 + j] += tau * (e[j] * x[r]);
    for (std::size_t j = 0; j < 3; ++j) b[j] += tau * e[j];

    const std::vector<std::size_t> one{i};
    p = bregman_sgd_step(p, Batch{data.X, data.Y, one}, ProximalActivation::identity(), tau, tau);
    same = p.W.raw() == W && p.b.raw() == b;
  }
  report(4, same, "identity-activation Bregman SGD is the delta rule",
         same ? "exact match over 100 steps" : "mismatch");
}

double grid_shrink(double w, double theta) {
  double best_u = -10.0, best = std::numeric_limits<double>::infinity();
  for (long k = 0; k <= 200000; ++k) {
    const double u = -10.0 + static_cast<double>(k) * 1e-4;
    const double f = 0.5 * (u - w) * (u - w) + theta * std::abs(u);
    if (f < best) {
      best = f;
      best_u = u;
    }
  }
  return best_u;
}

void criterion_5() {
  std::mt19937_64 gen(55);
  std::uniform_real_distribution<double> uw(-9, 9), ut(0, 4);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double w = uw(gen), theta = ut(gen);
    const double oracle = grid_shrink(w, theta);
    const double a = prox(ProximalActivation::soft_threshold(theta), DenseVector{w})[0];
    const double b = soft_threshold(DenseMatrix{{w}}, theta)(0, 0);
    worst = std::max({worst, std::abs(a - oracle), std::abs(b - oracle)});
  }
  report(5, worst <= 1e-4, "soft-threshold matches grid-search argmin", fmt("max deviation %.3e", worst));
}

void criterion_6() {
  std::mt19937_64 gen(66);
  std::uniform_real_distribution<double> uz(-5, 5), ut(0, 3);
  int bad_relu = 0, bad_shrink = 0;
  for (int t = 0; t < 1000; ++t) {
    DenseVector z(4);
    for (auto& v : z) v = uz(gen);
    if (t % 7 == 0) z[0] = 0.0;
    const DenseVector r = prox(ProximalActivation::rectifier(), z);
    const double theta = ut(gen);
    const DenseVector s = prox(ProximalActivation::soft_threshold(theta), z);
    for (std::size_t j = 0; j < 4; ++j) {
      if (!((r[j] > 0 && z[j] - r[j] == 0) || (r[j] == 0 && z[j] <= 0))) ++bad_relu;
      if (s[j] != 0.0) {
        if (std::abs((z[j] - s[j]) - theta * (s[j] > 0 ? 1 : -1)) > 1e-12) ++bad_shrink;
      } else if (std::abs(z[j]) > theta + 1e-12) {
        ++bad_shrink;
      }
    }
  }
  report(6, bad_relu == 0 && bad_shrink == 0, "prox optimality conditions",
         fmt("%.0f rectifier and %.0f soft-threshold violations in 1000 points", bad_relu, bad_shrink));
}

void criterion_7() {
  ExperimentConfig c;
  c.trainers = {paper_trainers()[0]};
  c.trainers[0].threshold_rule = ThresholdRule::TauScaled;
  c.synthetic = SyntheticSpec{300, 100, 20, 3, 0.05};
  c.iterations = 200;
  c.alpha_units = AlphaUnits::Sum;
  double worst = -std::numeric_limits<double>::infinity();
  bool ok = true;
  for (AlphaUnits units : {AlphaUnits::Sum, AlphaUnits::Mean}) {
    c.alpha_units = units;
    const auto r = run_experiment(c);
    const auto& t = r.trainers[0];
    ok = ok && !t.diverged && t.trace.size() == 200;
    double prev = t.initial.objective;
    for (const auto& rec : t.trace) {
      worst = std::max(worst, rec.objective - prev);
      prev = rec.objective;
    }
  }
  ok = ok && worst <= 1e-9;
  report(7, ok, "full-batch Rosenblatt-ISTA objective is non-increasing",
         fmt("largest per-step increase %.3e over 200 iterations (alpha 0.9 summed and mean)", worst));
}

void criterion_8() {
  ExperimentConfig c = paper_defaults();
  std::string source;
  const char* env = std::getenv("BREGMAN_PERCEPTRON_DATA");
  TrainTestSplit split;
  bool have_idx = false;
  if (env != nullptr && *env != '\0') {
    try {
      c.data_dir = env;
      split = experiment_data(c);
      have_idx = true;
      source = std::string("IDX files in ") + env;
    } catch (const std::exception& e) {
      std::printf("note: %s; using the synthetic variant\n", e.what());
    }
  }
  if (!have_idx) {
    c.data_dir.reset();
    c.train_count = 0;
    c.val_count = 0;
    c.synthetic = SyntheticSpec{600, 2000, 64, 10, 1.0};
    split = experiment_data(c);
    source = "synthetic variant, 600 train / 2000 validation, 64 inputs, 10 classes";
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_experiment(c, split.train, split.test);
  const double elapsed = seconds_since(t0);

  const auto& ista = r.trainers[0];
  const double best = ista.trace.back().val_accuracy;
  bool a = !ista.diverged;
  std::string accs = "val acc";
  for (const auto& t : r.trainers) {
    const double v = t.trace.empty() ? 0.0 : t.trace.back().val_accuracy;
    accs += " " + t.label + "=" + fmt("%.4f", v);
    if (&t == &ista) continue;
    a = a && best >= v - 0.005 && best > v;
  }
  const bool b = ista.trace.back().weight_sparsity > 0.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 10; k + 1 < ista.trace.size(); ++k) {
    worst = std::max(worst, ista.trace[k + 1].objective - ista.trace[k].objective);
  }
  const bool cc = worst <= 1e-6;
  report(8, a && b && cc && elapsed < 300.0, "four-scheme comparison: Rosenblatt-ISTA best, sparse, monotone",
         source + "; " + accs + fmt("; sparsity %.4f; max increase after k=10 %.3e; %.1f s",
                                    ista.trace.back().weight_sparsity, worst, elapsed) +
             (a ? "" : "; (a) failed") + (b ? "" : "; (b) failed") + (cc ? "" : "; (c) failed"));
}

void criterion_9() {
  const auto data = synthetic_dataset(60, 10, 3, 9, 0.2);
  std::vector<std::size_t> all(60);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Batch batch{data.X, data.Y, all};
  const auto relu = ProximalActivation::rectifier();
  const auto poisoned = relu.with_subderivative_rule([](const DenseVector& z) {
    DenseVector out(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) out[j] = 3.0 + static_cast<double>(j);
    return out;
  });
  const auto p = initial_model(10, 3, 4);
  const bool sgd_same = bregman_sgd_step(p, batch, poisoned, 0.2, 0.2) == bregman_sgd_step(p, batch, relu, 0.2, 0.2);
  const bool ista_same =
      rosenblatt_ista_step(p, batch, poisoned, 0.2, 0.2, 0.01) == rosenblatt_ista_step(p, batch, relu, 0.2, 0.2, 0.01);
  const bool sub_changed = !(subgradient_step(p, batch, poisoned, 0.2, 0.2) == subgradient_step(p, batch, relu, 0.2, 0.2));
  report(9, sgd_same && ista_same && sub_changed, "Bregman path ignores the activation derivative",
         std::string("bregman_sgd_step ") + (sgd_same ? "unchanged" : "CHANGED") + ", rosenblatt_ista_step " +
             (ista_same ? "unchanged" : "CHANGED") + ", subgradient_step " + (sub_changed ? "corrupted" : "UNCHANGED"));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_10() {
  const fs::path dir = fs::path(BP_TEST_TMPDIR) / "determinism";
  fs::create_directories(dir);
  bool ok = true;
  std::string detail;
#ifdef BP_CLI_PATH
  std::array<std::string, 2> csv, json;
  for (int run = 0; run < 2; ++run) {
    const fs::path c = dir / ("run" + std::to_string(run) + ".csv");
    const fs::path j = dir / ("run" + std::to_string(run) + ".json");
    const std::string cmd = std::string("\"") + BP_CLI_PATH + "\" experiment --synthetic --iters 40 --seed 17 --csv \"" +
                            c.string() + "\" --json \"" + j.string() + "\" > \"" + (dir / "stdout.txt").string() + "\"";
    ok = ok && std::system(cmd.c_str()) == 0;
    csv[run] = slurp(c);
    json[run] = slurp(j);
  }
  ok = ok && !csv[0].empty() && csv[0] == csv[1] && !json[0].empty() && json[0] == json[1];
  detail = "CLI experiment twice: CSV " + std::to_string(csv[0].size()) + " bytes, JSON " +
           std::to_string(json[0].size()) + " bytes, " + (ok ? "byte-identical" : "DIFFERENT");
#else
  detail = "CLI not built;";
#endif
  ExperimentConfig c = paper_defaults();
  c.train_count = 0;
  c.val_count = 0;
  c.iterations = 40;
  c.seed = 17;
  const auto r1 = run_experiment(c);
  const auto r2 = run_experiment(c);
  const bool lib_same = trace_csv(r1) == trace_csv(r2) && metadata_json(c, r1).dump() == metadata_json(c, r2).dump();
  ok = ok && lib_same;
  detail += std::string("; library run twice: ") + (lib_same ? "identical" : "DIFFERENT");
  report(10, ok, "repeated experiments are byte-identical", detail);
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> checks = {criterion_1_and_2, criterion_3, criterion_4, criterion_5,
                                                     criterion_6,       criterion_7, criterion_8, criterion_9,
                                                     criterion_10};
  for (const auto& check : checks) {
    try {
      check();
    } catch (const std::exception& e) {
      std::printf("FAIL criterion check raised: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
