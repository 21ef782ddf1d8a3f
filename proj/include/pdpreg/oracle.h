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

#ifndef PDPREG_ORACLE_H_
#define PDPREG_ORACLE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdpreg/model.h"
#include "pdpreg/numerics.h"
#include "pdpreg/optimizers.h"

namespace pdpreg {

inline constexpr double kDefaultZThreshold = 3.0;

// Replicas are split into this many chunks, each drawing from its own
// substream (seed, chunk index). Chunks may run on any number of threads;
// reduction is always in chunk order, so results do not depend on the
// thread count.
inline constexpr std::size_t kMonteCarloChunks = 16;

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t replicas = 0;
  uint64_t seed = 0;
};

struct IdentityCheck {
  std::string name;
  double analytic = 0.0;
  McEstimate mc;
  double z = 0.0;
  bool pass = false;
};

// z = (mc.mean - analytic) / mc.std_error. With a zero standard error the
// check passes only on exact agreement.
IdentityCheck MakeIdentityCheck(std::string name, double analytic,
                                const McEstimate& mc,
                                double threshold = kDefaultZThreshold);

// Monte Carlo estimate of E[(theta(t+1) . x - t)^2] where
// theta(t+1) = theta - eta (g + epsilon), g the clean gradient of (y - t)^2
// at theta, epsilon drawn per `noise`. The bias, if any, is a weight on the
// constant input 1. Throws UnsupportedError unless spec is a linear neuron.
McEstimate McPostUpdateLoss(const ModelSpec& spec, const ParameterSet& params,
                            std::span<const double> x, double t, double eta,
                            const NoiseSpec& noise, std::size_t replicas,
                            uint64_t seed);

// Closed form of the same expectation: the clean post-update loss plus
// eta^2 sigma^2 sum x_i^2 (iid) or eta^2 sigma^2 sum theta_i^2 x_i^2
// (proportional).
double AnalyticPostUpdateLoss(const ModelSpec& spec, const ParameterSet& params,
                              std::span<const double> x, double t, double eta,
                              const NoiseSpec& noise);

// (y_clean(t+1) - t)^2 with no noise.
double CleanPostUpdateLoss(const ModelSpec& spec, const ParameterSet& params,
                           std::span<const double> x, double t, double eta);

// Monte Carlo mean of 2 (y - t) eta (epsilon . x) against 0.
IdentityCheck CheckCrossTermVanishes(const ModelSpec& spec,
                                     const ParameterSet& params,
                                     std::span<const double> x, double t,
                                     double eta, const NoiseSpec& noise,
                                     std::size_t replicas, uint64_t seed,
                                     double threshold = kDefaultZThreshold);

// Checks E[X^2] = sigma^2, E[X^4] = 3 sigma^4 and Var[X^2] = 2 sigma^4 for
// X ~ N(0, sigma^2).
std::vector<IdentityCheck> CheckMomentIdentities(
    double sigma, std::size_t replicas, uint64_t seed,
    double threshold = kDefaultZThreshold);

// Density of X Y for independent zero-mean normals:
// K0(|u| / (sx sy)) / (pi sx sy).
double ProductNormalDensity(double u, double sigma_x, double sigma_y);

struct ProductDensityOptions {
  // Bin range over |u|, in units of sigma_x * sigma_y. The lower edge keeps
  // the histogram away from the logarithmic singularity at 0.
  double lo = 0.05;
  double hi = 4.0;
  double max_z = 4.0;
  double symmetry_max_z = 3.0;
};

struct ProductDensityReport {
  std::vector<double> edges;  // bins + 1 edges over |u|
  std::vector<uint64_t> positive_counts;
  std::vector<uint64_t> negative_counts;
  // Probability of landing in each bin on one side of 0.
  std::vector<double> side_probability;
  // Standardized deviation of the folded count from its expectation.
  std::vector<double> bin_z;
  double max_abs_z = 0.0;
  double chi_square = 0.0;
  std::size_t degrees_of_freedom = 0;
  // Max over bins of |pos - neg| / sqrt(pos + neg).
  double max_symmetry_z = 0.0;
  std::size_t replicas = 0;
  bool pass = false;
  bool symmetric = false;
};

// Histogram of X * Y against bin integrals of ProductNormalDensity.
ProductDensityReport CheckProductDensity(double sigma_x, double sigma_y,
                                         std::size_t replicas, std::size_t bins,
                                         uint64_t seed,
                                         const ProductDensityOptions& options = {});

// Exact minimizer of sum_n (theta . x_n - t_n)^2 + kappa sum_n sum_i
// theta_i^2 x_{n,i}^2 via (X^T X + kappa D) theta = X^T t. With include_bias
// a constant feature 1 is appended, matching the training convention.
ParameterSet RegularizedLeastSquaresOracle(const Dataset& data, double kappa,
                                           bool include_bias = false);

enum class PenaltyKind { kL2, kDpInput, kPdp, kCombined };

struct GradCheckCoefficients {
  double lambda = 0.0;
  double kappa = 0.0;
  // kCombined adds the linear-neuron data loss (theta . x - target)^2.
  double target = 0.0;
};

// Worst per-coordinate |analytic - numeric| / max(1, |analytic|, |numeric|)
// with central differences of step h * max(1, |theta_i|).
double GradCheck(PenaltyKind kind, std::span<const double> params,
                 std::span<const double> x, const GradCheckCoefficients& coeffs,
                 double h);

// Same comparison for Backward on an arbitrary model and one example.
double BackwardGradCheck(const ModelSpec& spec, const ParameterSet& params,
                         const Example& example, double h = 1e-6);

// Mean over `seeds` independent noise streams of theta after one full-batch
// step, compared per coordinate against the noiseless step. Only the noise
// seed varies; the starting point and batch are fixed.
std::vector<IdentityCheck> CheckExpectedStep(
    const ModelSpec& spec, const ParameterSet& params, const Dataset& data,
    double eta, const NoiseSpec& noise, std::size_t seeds, uint64_t seed,
    double threshold = kDefaultZThreshold);

// Largest absolute difference between the parameter trajectories (every
// epoch) of `config` and the same config with reg.input_kappa added. Zero
// when the input-only term leaves training untouched.
double InputPenaltyTrajectoryGap(const ModelSpec& spec, const Dataset& data,
                                 const TrainConfig& config, double input_kappa);

}  // namespace pdpreg

#endif  // PDPREG_ORACLE_H_
