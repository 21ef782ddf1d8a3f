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

#include "pdpreg/oracle.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <thread>
#include <utility>

#include "pdpreg/errors.h"
#include "pdpreg/regularizers.h"

namespace pdpreg {
namespace {

// Runs body(chunk, rng, count) for every chunk, spreading chunks over the
// available hardware threads.
template <typename Body>
void ForEachChunk(std::size_t replicas, uint64_t seed, Body&& body) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < kMonteCarloChunks; c = next++) {
      const std::size_t count = replicas / kMonteCarloChunks +
                                (c < replicas % kMonteCarloChunks ? 1 : 0);
      RngStream rng(seed, c);
      body(c, rng, count);
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(
      std::thread::hardware_concurrency(), 1, kMonteCarloChunks);
  std::vector<std::jthread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
}

// Mean and standard error of f(rng) over `replicas` draws.
template <typename Sampler>
McEstimate MonteCarloMean(std::size_t replicas, uint64_t seed,
                          Sampler&& sample) {
  std::vector<RunningStats> partial(kMonteCarloChunks);
  ForEachChunk(replicas, seed, [&](std::size_t c, RngStream& rng,
                                   std::size_t count) {
    RunningStats stats;
    for (std::size_t r = 0; r < count; ++r) stats.Add(sample(rng));
    partial[c] = stats;
  });
  RunningStats total;
  for (const RunningStats& s : partial) total.Merge(s);
  return McEstimate{total.mean(), total.StandardError(), total.count(), seed};
}

// A linear neuron seen as theta . x' with x' = (x, 1) when biased.
struct LinearView {
  Vector theta;
  Vector input;
};

LinearView ViewLinear(const ModelSpec& spec, const ParameterSet& params,
                      std::span<const double> x, const char* where) {
  if (!spec.IsLinearNeuron()) {
    throw UnsupportedError(std::string(where) +
                           ": identity holds only for a single linear neuron");
  }
  if (x.size() != spec.input_dim()) {
    throw ParameterError(std::string(where) + ": input dimension mismatch");
  }
  if (params.size() != x.size() + (spec.include_bias ? 1 : 0)) {
    throw ParameterError(std::string(where) + ": parameter length mismatch");
  }
  LinearView v;
  v.theta = params.values();
  v.input.assign(x.begin(), x.end());
  if (spec.include_bias) v.input.push_back(1.0);
  return v;
}

// theta(t+1) without noise.
Vector CleanUpdate(const LinearView& v, double t, double eta) {
  const double y = Dot(v.theta, v.input);
  Vector next = v.theta;
  for (std::size_t i = 0; i < next.size(); ++i) {
    next[i] -= eta * 2.0 * (y - t) * v.input[i];
  }
  return next;
}

void CheckReplicas(const char* where, std::size_t replicas, std::size_t min) {
  if (replicas < min) {
    throw ParameterError(std::string(where) + ": needs at least " +
                         std::to_string(min) + " replicas");
  }
}

double RelativeError(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

}  // namespace

IdentityCheck MakeIdentityCheck(std::string name, double analytic,
                                const McEstimate& mc, double threshold) {
  IdentityCheck check;
  check.name = std::move(name);
  check.analytic = analytic;
  check.mc = mc;
  const double diff = mc.mean - analytic;
  if (mc.std_error > 0.0) {
    check.z = diff / mc.std_error;
  } else if (diff == 0.0) {
    check.z = 0.0;
  } else {
    check.z = std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  check.pass = std::abs(check.z) <= threshold;
  return check;
}

McEstimate McPostUpdateLoss(const ModelSpec& spec, const ParameterSet& params,
                            std::span<const double> x, double t, double eta,
                            const NoiseSpec& noise, std::size_t replicas,
                            uint64_t seed) {
  const LinearView v = ViewLinear(spec, params, x, "McPostUpdateLoss");
  noise.Validate();
  CheckReplicas("McPostUpdateLoss", replicas, 2);
  const Vector next = CleanUpdate(v, t, eta);
  const std::size_t d = next.size();
  Vector scale(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    switch (noise.mode) {
      case NoiseMode::kNone:
        break;
      case NoiseMode::kIid:
        scale[i] = noise.sigma;
        break;
      case NoiseMode::kProportional:
        scale[i] = v.theta[i] * noise.sigma;
        break;
    }
  }
  return MonteCarloMean(replicas, seed, [&](RngStream& rng) {
    double y = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double eps = scale[i] * rng.Normal();
      y += (next[i] - eta * eps) * v.input[i];
    }
    return (y - t) * (y - t);
  });
}

double CleanPostUpdateLoss(const ModelSpec& spec, const ParameterSet& params,
                           std::span<const double> x, double t, double eta) {
  const LinearView v = ViewLinear(spec, params, x, "CleanPostUpdateLoss");
  const double y = Dot(CleanUpdate(v, t, eta), v.input);
  return (y - t) * (y - t);
}

double AnalyticPostUpdateLoss(const ModelSpec& spec, const ParameterSet& params,
                              std::span<const double> x, double t, double eta,
                              const NoiseSpec& noise) {
  const LinearView v = ViewLinear(spec, params, x, "AnalyticPostUpdateLoss");
  noise.Validate();
  const double clean = CleanPostUpdateLoss(spec, params, x, t, eta);
  const double kappa = eta * eta * noise.sigma * noise.sigma;
  switch (noise.mode) {
    case NoiseMode::kNone:
      return clean;
    case NoiseMode::kIid:
      return clean + DpInputPenalty(v.input, kappa);
    case NoiseMode::kProportional:
      return clean + PdpPenalty(v.theta, v.input, kappa);
  }
  return clean;
}

IdentityCheck CheckCrossTermVanishes(const ModelSpec& spec,
                                     const ParameterSet& params,
                                     std::span<const double> x, double t,
                                     double eta, const NoiseSpec& noise,
                                     std::size_t replicas, uint64_t seed,
                                     double threshold) {
  const LinearView v = ViewLinear(spec, params, x, "CheckCrossTermVanishes");
  noise.Validate();
  CheckReplicas("CheckCrossTermVanishes", replicas, 2);
  const double residual = Dot(CleanUpdate(v, t, eta), v.input) - t;
  const std::size_t d = v.theta.size();
  const McEstimate mc = MonteCarloMean(replicas, seed, [&](RngStream& rng) {
    double eps_dot_x = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double z = rng.Normal();
      double eps = 0.0;
      if (noise.mode == NoiseMode::kIid) eps = noise.sigma * z;
      if (noise.mode == NoiseMode::kProportional) eps = v.theta[i] * noise.sigma * z;
      eps_dot_x += eps * v.input[i];
    }
    return 2.0 * residual * eta * eps_dot_x;
  });
  return MakeIdentityCheck("cross_term", 0.0, mc, threshold);
}

std::vector<IdentityCheck> CheckMomentIdentities(double sigma,
                                                 std::size_t replicas,
                                                 uint64_t seed,
                                                 double threshold) {
  if (!(sigma > 0.0)) {
    throw ParameterError("CheckMomentIdentities: sigma must be positive");
  }
  CheckReplicas("CheckMomentIdentities", replicas, 10000);
  RngStream rng(seed, 0);
  const Vector x = GaussianSample(rng, 0.0, sigma, replicas);
  Vector squares(x.size());
  Vector fourths(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    squares[i] = x[i] * x[i];
    fourths[i] = squares[i] * squares[i];
  }
  const double n = static_cast<double>(replicas);
  const MomentSummary sq = Moments(squares);
  const MomentSummary q = Moments(fourths);

  // Sample variance of Y = X^2 and the delta-method standard error
  // sqrt((mu4_Y - var_Y^2) / n).
  double c2 = 0.0;
  double c4 = 0.0;
  for (double y : squares) {
    const double d = y - sq.mean;
    c2 += d * d;
    c4 += d * d * d * d;
  }
  c2 /= n;
  c4 /= n;
  const double var_y = c2 * n / (n - 1.0);

  const double s2 = sigma * sigma;
  const double s4 = s2 * s2;
  std::vector<IdentityCheck> checks;
  checks.push_back(MakeIdentityCheck(
      "second_moment", s2,
      McEstimate{sq.mean, std::sqrt(sq.variance / n), replicas, seed},
      threshold));
  checks.push_back(MakeIdentityCheck(
      "fourth_moment", 3.0 * s4,
      McEstimate{q.mean, std::sqrt(q.variance / n), replicas, seed}, threshold));
  checks.push_back(MakeIdentityCheck(
      "variance_of_square", 2.0 * s4,
      McEstimate{var_y, std::sqrt(std::max(0.0, c4 - c2 * c2) / n), replicas,
                 seed},
      threshold));
  return checks;
}

double ProductNormalDensity(double u, double sigma_x, double sigma_y) {
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) {
    throw ParameterError("ProductNormalDensity: sigmas must be positive");
  }
  const double s = sigma_x * sigma_y;
  return BesselK0(std::abs(u) / s) / (std::numbers::pi * s);
}

ProductDensityReport CheckProductDensity(double sigma_x, double sigma_y,
                                         std::size_t replicas, std::size_t bins,
                                         uint64_t seed,
                                         const ProductDensityOptions& options) {
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) {
    throw ParameterError("CheckProductDensity: sigmas must be positive");
  }
  if (bins < 10) throw ParameterError("CheckProductDensity: needs >= 10 bins");
  if (!(options.lo > 0.0) || !(options.hi > options.lo)) {
    throw ParameterError(
        "CheckProductDensity: bin range must satisfy 0 < lo < hi");
  }
  CheckReplicas("CheckProductDensity", replicas, 2);

  const double s = sigma_x * sigma_y;
  ProductDensityReport report;
  report.replicas = replicas;
  report.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    report.edges[b] =
        s * (options.lo + (options.hi - options.lo) * static_cast<double>(b) /
                              static_cast<double>(bins));
  }
  const double lo = report.edges.front();
  const double width = report.edges[1] - report.edges[0];

  std::vector<std::vector<uint64_t>> pos(kMonteCarloChunks);
  std::vector<std::vector<uint64_t>> neg(kMonteCarloChunks);
  ForEachChunk(replicas, seed, [&](std::size_t c, RngStream& rng,
                                   std::size_t count) {
    std::vector<uint64_t> p(bins, 0);
    std::vector<uint64_t> m(bins, 0);
    for (std::size_t r = 0; r < count; ++r) {
      const double u = sigma_x * rng.Normal() * (sigma_y * rng.Normal());
      const double a = std::abs(u);
      if (a < lo) continue;
      const auto b = static_cast<std::size_t>((a - lo) / width);
      if (b >= bins) continue;
      (u > 0.0 ? p : m)[b]++;
    }
    pos[c] = std::move(p);
    neg[c] = std::move(m);
  });
  report.positive_counts.assign(bins, 0);
  report.negative_counts.assign(bins, 0);
  for (std::size_t c = 0; c < kMonteCarloChunks; ++c) {
    for (std::size_t b = 0; b < bins; ++b) {
      report.positive_counts[b] += pos[c][b];
      report.negative_counts[b] += neg[c][b];
    }
  }

  const double n = static_cast<double>(replicas);
  auto density = [&](double u) {
    return ProductNormalDensity(u, sigma_x, sigma_y);
  };
  for (std::size_t b = 0; b < bins; ++b) {
    const double side = IntegrateGaussLegendre(density, report.edges[b],
                                               report.edges[b + 1], 4);
    report.side_probability.push_back(side);
    const double p = 2.0 * side;
    const double expected = n * p;
    const double observed = static_cast<double>(report.positive_counts[b] +
                                                report.negative_counts[b]);
    const double z = (observed - expected) / std::sqrt(expected * (1.0 - p));
    report.bin_z.push_back(z);
    report.max_abs_z = std::max(report.max_abs_z, std::abs(z));
    report.chi_square += (observed - expected) * (observed - expected) / expected;

    const double total = observed;
    if (total > 0.0) {
      const double diff = static_cast<double>(report.positive_counts[b]) -
                          static_cast<double>(report.negative_counts[b]);
      report.max_symmetry_z =
          std::max(report.max_symmetry_z, std::abs(diff) / std::sqrt(total));
    }
  }
  report.degrees_of_freedom = bins;
  report.pass = report.max_abs_z <= options.max_z;
  report.symmetric = report.max_symmetry_z <= options.symmetry_max_z;
  return report;
}

ParameterSet RegularizedLeastSquaresOracle(const Dataset& data, double kappa,
                                           bool include_bias) {
  if (!(kappa >= 0.0)) {
    throw ParameterError("RegularizedLeastSquaresOracle: kappa must be >= 0");
  }
  data.Validate();
  if (data.empty()) {
    throw ParameterError("RegularizedLeastSquaresOracle: empty dataset");
  }
  const std::size_t d = data.feature_dim + (include_bias ? 1 : 0);
  DenseMatrix a(d, d);
  Vector rhs(d, 0.0);
  Vector x(d, 1.0);
  for (const Example& ex : data.examples) {
    if (ex.t.size() != 1) {
      throw ParameterError(
          "RegularizedLeastSquaresOracle: targets must be scalar");
    }
    std::copy(ex.x.begin(), ex.x.end(), x.begin());
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) a(i, j) += x[i] * x[j];
      a(i, i) += kappa * x[i] * x[i];
      rhs[i] += x[i] * ex.t[0];
    }
  }
  const ModelSpec spec = ModelSpec::LinearNeuron(data.feature_dim, include_bias);
  return ParameterSet::FromValues(spec, SolveLinearSystem(a, rhs));
}

double GradCheck(PenaltyKind kind, std::span<const double> params,
                 std::span<const double> x, const GradCheckCoefficients& coeffs,
                 double h) {
  if (!(h > 0.0)) throw ParameterError("GradCheck: step must be positive");
  if (params.size() != x.size()) {
    throw ParameterError("GradCheck: params and inputs differ in length");
  }
  auto value = [&](std::span<const double> theta) {
    switch (kind) {
      case PenaltyKind::kL2:
        return L2Penalty(theta, coeffs.lambda);
      case PenaltyKind::kDpInput:
        return DpInputPenalty(x, coeffs.kappa);
      case PenaltyKind::kPdp:
        return PdpPenalty(theta, x, coeffs.kappa);
      case PenaltyKind::kCombined: {
        const double r = Dot(theta, x) - coeffs.target;
        return r * r + L2Penalty(theta, coeffs.lambda) +
               PdpPenalty(theta, x, coeffs.kappa);
      }
    }
    return 0.0;
  };
  Vector analytic;
  switch (kind) {
    case PenaltyKind::kL2:
      analytic = L2Grad(params, coeffs.lambda);
      break;
    case PenaltyKind::kDpInput:
      analytic = DpInputGrad(params, coeffs.kappa);
      break;
    case PenaltyKind::kPdp:
      analytic = PdpGrad(params, x, coeffs.kappa);
      break;
    case PenaltyKind::kCombined: {
      const double r = Dot(params, x) - coeffs.target;
      Vector base(params.size());
      for (std::size_t i = 0; i < base.size(); ++i) base[i] = 2.0 * r * x[i];
      analytic = CombinedGrad(params, x, coeffs.lambda, coeffs.kappa, base);
      break;
    }
  }
  Vector theta(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(params[i]));
    theta[i] = params[i] + step;
    const double up = value(theta);
    theta[i] = params[i] - step;
    const double down = value(theta);
    theta[i] = params[i];
    worst = std::max(worst, RelativeError(analytic[i], (up - down) / (2.0 * step)));
  }
  return worst;
}

double BackwardGradCheck(const ModelSpec& spec, const ParameterSet& params,
                         const Example& example, double h) {
  if (!(h > 0.0)) throw ParameterError("BackwardGradCheck: step must be positive");
  const Vector analytic =
      Backward(spec, params, Forward(spec, params, example.x), example.t);
  ParameterSet probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(params[i]));
    probe.mutable_values()[i] = params[i] + step;
    const double up =
        QuadraticLoss(Forward(spec, probe, example.x).output(), example.t);
    probe.mutable_values()[i] = params[i] - step;
    const double down =
        QuadraticLoss(Forward(spec, probe, example.x).output(), example.t);
    probe.mutable_values()[i] = params[i];
    worst = std::max(worst, RelativeError(analytic[i], (up - down) / (2.0 * step)));
  }
  return worst;
}

std::vector<IdentityCheck> CheckExpectedStep(
    const ModelSpec& spec, const ParameterSet& params, const Dataset& data,
    double eta, const NoiseSpec& noise, std::size_t seeds, uint64_t seed,
    double threshold) {
  noise.Validate();
  CheckReplicas("CheckExpectedStep", seeds, 2);
  const Vector grad = BatchGradient(spec, params, data.examples);
  const ParameterSet clean = SgdStep(params, grad, eta);
  std::vector<RunningStats> stats(params.size());
  for (std::size_t s = 0; s < seeds; ++s) {
    RngStream rng(seed, s);
    const ParameterSet next =
        SgdStep(params, ApplyNoise(grad, params.values(), noise, rng), eta);
    for (std::size_t i = 0; i < next.size(); ++i) stats[i].Add(next[i]);
  }
  std::vector<IdentityCheck> checks;
  for (std::size_t i = 0; i < params.size(); ++i) {
    checks.push_back(MakeIdentityCheck(
        "expected_step[" + std::to_string(i) + "]", clean[i],
        McEstimate{stats[i].mean(), stats[i].StandardError(), seeds, seed},
        threshold));
  }
  return checks;
}

double InputPenaltyTrajectoryGap(const ModelSpec& spec, const Dataset& data,
                                 const TrainConfig& config, double input_kappa) {
  TrainConfig with_term = config;
  with_term.reg.input_kappa = config.reg.input_kappa + input_kappa;
  const TrainReport base = Train(spec, data, config);
  const TrainReport shifted = Train(spec, data, with_term);
  double gap = 0.0;
  for (std::size_t e = 0; e < base.epoch_params.size(); ++e) {
    const Vector& a = base.epoch_params[e].values();
    const Vector& b = shifted.epoch_params[e].values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      gap = std::max(gap, std::abs(a[i] - b[i]));
      if (std::isnan(a[i]) != std::isnan(b[i])) {
        return std::numeric_limits<double>::infinity();
      }
    }
  }
  return gap;
}

}  // namespace pdpreg
