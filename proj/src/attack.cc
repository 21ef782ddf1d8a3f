//
// Copyright 2026 The pdpreg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "pdpreg/attack.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>

#include "pdpreg/errors.h"

namespace pdpreg {
namespace {

constexpr double kNoLeakageThreshold = 1e-12;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-12;

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Matching objective over the packed variables v = (x_1..x_d, t).
class MatchingObjective {
 public:
  MatchingObjective(const ModelSpec& spec, const ParameterSet& params,
                    const Vector& observed)
      : spec_(spec), params_(params), observed_(observed) {
    norm2_ = SquaredNorm(observed_);
  }

  std::size_t input_dim() const { return spec_.input_dim(); }

  double Value(const Vector& v) const {
    const Vector g = ModelGradient(v);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      s += (g[i] - observed_[i]) * (g[i] - observed_[i]);
    }
    return s / norm2_;
  }

  Vector Gradient(const Vector& v) const {
    return spec_.IsLinearNeuron() ? LinearGradient(v) : NumericGradient(v);
  }

 private:
  Vector ModelGradient(const Vector& v) const {
    const std::span<const double> x(v.data(), input_dim());
    const Vector t(v.begin() + input_dim(), v.end());
    return Backward(spec_, params_, Forward(spec_, params_, x), t);
  }

  // With u = (x, 1?) and r = theta . u - t, the model gradient is 2 r u, so
  // dO/dx_k = 4 theta_k (D . u) + 4 r D_k and dO/dt = -4 (D . u), where
  // D = 2 r u - g.
  Vector LinearGradient(const Vector& v) const {
    const std::size_t d = input_dim();
    const Vector& theta = params_.values();
    Vector u(v.begin(), v.begin() + d);
    if (spec_.include_bias) u.push_back(1.0);
    const double r = Dot(theta, u) - v[d];
    Vector diff(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      diff[i] = 2.0 * r * u[i] - observed_[i];
    }
    const double du = Dot(diff, u);
    Vector grad(d + 1);
    for (std::size_t k = 0; k < d; ++k) {
      grad[k] = (4.0 * theta[k] * du + 4.0 * r * diff[k]) / norm2_;
    }
    grad[d] = -4.0 * du / norm2_;
    return grad;
  }

  Vector NumericGradient(const Vector& v) const {
    Vector probe = v;
    Vector grad(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(v[k]));
      probe[k] = v[k] + h;
      const double up = Value(probe);
      probe[k] = v[k] - h;
      const double down = Value(probe);
      probe[k] = v[k];
      grad[k] = (up - down) / (2.0 * h);
    }
    return grad;
  }

  const ModelSpec& spec_;
  const ParameterSet& params_;
  const Vector& observed_;
  double norm2_ = 1.0;
};

}  // namespace

Vector InvertLinearGradient(const GradientRecord& record,
                            const ModelSpec& spec) {
  if (!spec.IsLinearNeuron() || !spec.include_bias) {
    throw UnsupportedError(
        "InvertLinearGradient: needs a single linear neuron with bias");
  }
  if (record.batch_indices.size() > 1) {
    throw UnsupportedError("InvertLinearGradient: batch size must be 1");
  }
  const std::size_t d = spec.input_dim();
  const Vector& g = record.noisy;
  if (g.size() != d + 1) {
    throw ParameterError("InvertLinearGradient: gradient has length " +
                         std::to_string(g.size()) + ", expected " +
                         std::to_string(d + 1));
  }
  const double g_bias = g[d];
  if (!(std::abs(g_bias) >= kNoLeakageThreshold)) {
    throw NoLeakageError(
        "InvertLinearGradient: bias gradient is zero; the example sits at the "
        "loss minimum");
  }
  Vector x(d);
  for (std::size_t i = 0; i < d; ++i) x[i] = g[i] / g_bias;
  return x;
}

IterativeAttackResult InvertGradientIterative(
    const GradientRecord& record, const ModelSpec& spec,
    const ParameterSet& params, uint64_t seed,
    const IterativeAttackOptions& options) {
  spec.Validate();
  if (record.batch_indices.size() > 1) {
    throw UnsupportedError("InvertGradientIterative: batch size must be 1");
  }
  if (record.noisy.size() != params.size()) {
    throw ParameterError("InvertGradientIterative: gradient length mismatch");
  }
  if (SquaredNorm(record.noisy) == 0.0) {
    throw NoLeakageError("InvertGradientIterative: observed gradient is zero");
  }
  if (!(options.step > 0.0) || options.restarts == 0) {
    throw ParameterError(
        "InvertGradientIterative: step must be positive and restarts >= 1");
  }
  const MatchingObjective objective(spec, params, record.noisy);
  const std::size_t d = spec.input_dim();
  const std::size_t nvars = d + spec.output_dim();

  Vector best;
  double best_value = std::numeric_limits<double>::infinity();
  bool any_converged = false;
  for (std::size_t restart = 0; restart < options.restarts; ++restart) {
    RngStream rng(seed, restart);
    Vector v = GaussianSample(rng, 0.0, 1.0, nvars);
    Vector first(nvars, 0.0);
    Vector second(nvars, 0.0);
    double previous = std::numeric_limits<double>::infinity();
    std::size_t increases = 0;
    bool diverged = false;
    for (std::size_t it = 0; it <= options.iters; ++it) {
      const double value = objective.Value(v);
      if (!std::isfinite(value)) {
        diverged = true;
        break;
      }
      if (value < best_value) {
        best_value = value;
        best = v;
      }
      increases = value > previous ? increases + 1 : 0;
      if (increases >= options.divergence_window) {
        diverged = true;
        break;
      }
      previous = value;
      if (it == options.iters) break;
      const Vector grad = objective.Gradient(v);
      if (options.optimizer == AttackOptimizer::kGradientDescent) {
        for (std::size_t k = 0; k < nvars; ++k) v[k] -= options.step * grad[k];
        continue;
      }
      const double steps = static_cast<double>(it + 1);
      const double c1 = 1.0 - std::pow(kBeta1, steps);
      const double c2 = 1.0 - std::pow(kBeta2, steps);
      for (std::size_t k = 0; k < nvars; ++k) {
        first[k] = kBeta1 * first[k] + (1.0 - kBeta1) * grad[k];
        second[k] = kBeta2 * second[k] + (1.0 - kBeta2) * grad[k] * grad[k];
        v[k] -= options.step * (first[k] / c1) /
                (std::sqrt(second[k] / c2) + kAdamEpsilon);
      }
    }
    any_converged = any_converged || !diverged;
  }
  if (!any_converged) {
    throw ConvergenceError("InvertGradientIterative: every restart diverged",
                           best, best_value);
  }
  IterativeAttackResult result;
  result.x.assign(best.begin(), best.begin() + d);
  result.t.assign(best.begin() + d, best.end());
  result.objective = best_value;
  return result;
}

double RocAuc(const std::vector<double>& positives,
              const std::vector<double>& negatives) {
  if (positives.empty() || negatives.empty()) {
    throw ParameterError("RocAuc: both classes must be nonempty");
  }
  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  for (double s : positives) all.push_back({s, true});
  for (double s : negatives) all.push_back({s, false});
  std::sort(all.begin(), all.end(),
            [](const Scored& a, const Scored& b) { return a.score < b.score; });
  // Rank sum of positives with average ranks over ties.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].positive) rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(positives.size());
  const double nn = static_cast<double>(negatives.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

MembershipReport MembershipInference(const ModelSpec& spec,
                                     const ParameterSet& params,
                                     const Dataset& members,
                                     const Dataset& non_members,
                                     double threshold) {
  if (members.empty() || non_members.empty()) {
    throw ParameterError("MembershipInference: member sets must be nonempty");
  }
  if (members.size() != non_members.size()) {
    throw ParameterError(
        "MembershipInference: member and non-member sets differ in size");
  }
  MembershipReport report;
  std::size_t correct = 0;
  for (const Example& ex : members.examples) {
    const double score =
        -QuadraticLoss(Forward(spec, params, ex.x).output(), ex.t);
    report.member_scores.push_back(score);
    if (score >= threshold) ++correct;
  }
  for (const Example& ex : non_members.examples) {
    const double score =
        -QuadraticLoss(Forward(spec, params, ex.x).output(), ex.t);
    report.non_member_scores.push_back(score);
    if (score < threshold) ++correct;
  }
  report.auc = RocAuc(report.member_scores, report.non_member_scores);
  report.accuracy = static_cast<double>(correct) /
                    static_cast<double>(members.size() + non_members.size());
  return report;
}

double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  const double na = Norm(a);
  const double nb = Norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(Dot(a, b) / (na * nb), -1.0, 1.0);
}

double MeanSquaredError(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("MeanSquaredError: size mismatch");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

AttackSummary Summarize(std::vector<TrialMetrics> trials) {
  AttackSummary s;
  s.trials = std::move(trials);
  if (s.trials.empty()) return s;
  std::vector<double> mse;
  std::vector<double> cos;
  double successes = 0.0;
  for (const TrialMetrics& m : s.trials) {
    mse.push_back(m.mse);
    cos.push_back(m.cosine);
    if (m.success) successes += 1.0;
  }
  const double n = static_cast<double>(s.trials.size());
  s.mean_mse = std::accumulate(mse.begin(), mse.end(), 0.0) / n;
  s.mean_cosine = std::accumulate(cos.begin(), cos.end(), 0.0) / n;
  s.median_mse = Median(std::move(mse));
  s.median_cosine = Median(std::move(cos));
  s.success_rate = successes / n;
  return s;
}

std::vector<LeakageReport> LeakageSweep(const ModelSpec& spec,
                                        const Dataset& data,
                                        const std::vector<Mechanism>& mechanisms,
                                        std::size_t trials, uint64_t seed,
                                        const SweepOptions& options) {
  if (trials < 1) throw ParameterError("LeakageSweep: trials must be >= 1");
  if (options.attack_step >= data.size()) {
    throw ParameterError("LeakageSweep: attack_step beyond one epoch");
  }
  const bool closed_form = spec.IsLinearNeuron() && spec.include_bias;
  auto metrics = [](const Vector& guess, const Vector& truth) {
    TrialMetrics m;
    m.mse = MeanSquaredError(guess, truth);
    m.cosine = CosineSimilarity(guess, truth);
    m.success = m.cosine >= 0.99;
    return m;
  };

  std::vector<LeakageReport> reports;
  for (const Mechanism& mech : mechanisms) {
    std::vector<TrialMetrics> closed;
    std::vector<TrialMetrics> iterative;
    for (std::size_t k = 0; k < trials; ++k) {
      const uint64_t cell_seed = MixSeed(seed, k);
      TrainConfig config;
      config.eta = options.eta;
      config.batch_size = 1;
      config.epochs = 1;
      config.seed = cell_seed;
      config.noise = mech.noise;
      config.reg = mech.reg;
      config.record_gradients = true;
      config.record_cap = options.attack_step + 1;
      const TrainReport run = Train(spec, data, config);
      const GradientRecord& record = run.records.at(options.attack_step);
      const Vector& truth = data.examples[record.batch_indices.front()].x;

      if (closed_form) {
        Vector guess(truth.size(), 0.0);
        try {
          guess = InvertLinearGradient(record, spec);
        } catch (const NoLeakageError&) {
        }
        closed.push_back(metrics(guess, truth));
      }

      Vector guess(truth.size(), 0.0);
      try {
        guess = InvertGradientIterative(record, spec, record.params_before,
                                        MixSeed(cell_seed, 0xa77acc), options.iterative)
                    .x;
      } catch (const ConvergenceError& e) {
        if (e.best().size() >= truth.size()) {
          guess.assign(e.best().begin(), e.best().begin() + truth.size());
        }
      } catch (const NoLeakageError&) {
      }
      iterative.push_back(metrics(guess, truth));
    }
    LeakageReport report;
    report.mechanism = mech.label;
    if (closed_form) report.closed_form = Summarize(std::move(closed));
    report.iterative = Summarize(std::move(iterative));
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace pdpreg
