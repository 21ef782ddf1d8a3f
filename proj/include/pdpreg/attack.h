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

#ifndef PDPREG_ATTACK_H_
#define PDPREG_ATTACK_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdpreg/model.h"
#include "pdpreg/optimizers.h"
#include "pdpreg/regularizers.h"

namespace pdpreg {

// Closed-form inversion of a batch-1 linear-neuron gradient:
// x_i = g_theta_i / g_bias, since every coordinate shares the factor
// 2 (y - t). Reads the record's noisy gradient (what an observer sees).
// Throws NoLeakageError when |g_bias| < 1e-12 and UnsupportedError unless
// the model is a linear neuron with bias.
Vector InvertLinearGradient(const GradientRecord& record, const ModelSpec& spec);

enum class AttackOptimizer {
  // Adam with fixed learning rate `step`, betas (0.9, 0.999).
  kAdam,
  // Plain gradient descent with fixed step `step`.
  kGradientDescent,
};

struct IterativeAttackOptions {
  std::size_t iters = 2000;
  // Learning rate on the matching objective normalized by ||g||^2.
  double step = 0.1;
  AttackOptimizer optimizer = AttackOptimizer::kAdam;
  std::size_t restarts = 10;
  // Consecutive objective increases that count as divergence.
  std::size_t divergence_window = 100;
};

struct IterativeAttackResult {
  Vector x;
  Vector t;
  // Normalized matching objective ||grad(x, t) - g||^2 / ||g||^2.
  double objective = 0.0;
};

// Minimizes ||grad_theta L(x, t; theta) - g||^2 over (x, t) from seeded
// standard-normal starts, keeping the best iterate over all
// restarts. Linear neurons use the analytic objective gradient; other models
// use central differences. Throws ConvergenceError (carrying the best x
// followed by t) when every restart diverges.
IterativeAttackResult InvertGradientIterative(
    const GradientRecord& record, const ModelSpec& spec,
    const ParameterSet& params, uint64_t seed,
    const IterativeAttackOptions& options = {});

struct MembershipReport {
  double auc = 0.5;
  double accuracy = 0.5;
  // score = -loss; higher means "more likely a member".
  std::vector<double> member_scores;
  std::vector<double> non_member_scores;
};

// Loss-threshold attack: predicts "member" when -loss >= threshold. AUC is
// the Mann-Whitney statistic with ties counted as 1/2.
MembershipReport MembershipInference(const ModelSpec& spec,
                                     const ParameterSet& params,
                                     const Dataset& members,
                                     const Dataset& non_members,
                                     double threshold);

// Area under the ROC curve of positives vs negatives.
double RocAuc(const std::vector<double>& positives,
              const std::vector<double>& negatives);

struct Mechanism {
  std::string label;
  NoiseSpec noise;
  RegSpec reg;
};

struct TrialMetrics {
  double mse = 0.0;
  double cosine = 0.0;
  bool success = false;  // cosine >= 0.99

  friend bool operator==(const TrialMetrics&, const TrialMetrics&) = default;
};

struct AttackSummary {
  std::vector<TrialMetrics> trials;
  double mean_mse = 0.0;
  double median_mse = 0.0;
  double mean_cosine = 0.0;
  double median_cosine = 0.0;
  double success_rate = 0.0;

  friend bool operator==(const AttackSummary&, const AttackSummary&) = default;
};

struct LeakageReport {
  std::string mechanism;
  // Present only for linear neurons with bias.
  std::optional<AttackSummary> closed_form;
  AttackSummary iterative;

  friend bool operator==(const LeakageReport&, const LeakageReport&) = default;
};

struct SweepOptions {
  double eta = 0.05;
  // Index of the recorded step that is attacked, counted from the start of
  // training (batch size is 1).
  std::size_t attack_step = 0;
  IterativeAttackOptions iterative;
};

// For each mechanism and trial: train one epoch with batch size 1 under the
// mechanism, take the gradient record at options.attack_step as an observer
// would see it, and run both inverters. Trial k uses seed MixSeed(seed, k)
// for every mechanism, so identical mechanisms give identical reports.
std::vector<LeakageReport> LeakageSweep(const ModelSpec& spec,
                                        const Dataset& data,
                                        const std::vector<Mechanism>& mechanisms,
                                        std::size_t trials, uint64_t seed,
                                        const SweepOptions& options = {});

double CosineSimilarity(std::span<const double> a, std::span<const double> b);
double MeanSquaredError(std::span<const double> a, std::span<const double> b);
AttackSummary Summarize(std::vector<TrialMetrics> trials);

}  // namespace pdpreg

#endif  // PDPREG_ATTACK_H_
