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

#include "pdpreg/runner.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>
#include <tuple>
#include <utility>

#include "json.hpp"
#include "pdpreg/attack.h"
#include "pdpreg/dataset.h"
#include "pdpreg/errors.h"
#include "pdpreg/numerics.h"
#include "pdpreg/optimizers.h"
#include "pdpreg/oracle.h"
#include "pdpreg/regularizers.h"

namespace pdpreg {
namespace {

using nlohmann::json;

// Seed tags: every check draws from MixSeed(config.seed, tag).
enum SeedTag : uint64_t {
  kTagIdentityConfigs = 0x101,
  kTagDpMc = 0x102,
  kTagPdpMc = 0x103,
  kTagCrossMc = 0x104,
  kTagZeroGradient = 0x105,
  kTagExpectedStep = 0x106,
  kTagGradCheck = 0x107,
  kTagBackward = 0x108,
  kTagRegression = 0x109,
  kTagMoments = 0x10a,
  kTagDensity = 0x10b,
  kTagMembership = 0x10c,
  kTagAttack = 0x10d,
};

class Rows {
 public:
  explicit Rows(std::vector<ResultRow>& rows) : rows_(rows) {}

  void Add(const std::string& experiment_id, const std::string& mechanism,
           const std::string& metric, double value, uint64_t seed,
           std::optional<double> std_error = {}) {
    rows_.push_back({experiment_id, mechanism, metric, value, std_error, seed});
  }

  void AddPass(const std::string& experiment_id, const std::string& mechanism,
               bool pass, uint64_t seed) {
    Add(experiment_id, mechanism, "pass", pass ? 1.0 : 0.0, seed);
  }

  void AddCheck(const std::string& experiment_id, const IdentityCheck& c) {
    Add(experiment_id, c.name, "analytic", c.analytic, c.mc.seed);
    Add(experiment_id, c.name, "mc_mean", c.mc.mean, c.mc.seed, c.mc.std_error);
    Add(experiment_id, c.name, "z", c.z, c.mc.seed);
    AddPass(experiment_id, c.name, c.pass, c.mc.seed);
  }

  // Deterministic comparison with an absolute tolerance.
  void AddComparison(const std::string& experiment_id,
                     const std::string& mechanism, double expected,
                     double observed, double tolerance, uint64_t seed) {
    const double err = std::abs(expected - observed);
    Add(experiment_id, mechanism, "expected", expected, seed);
    Add(experiment_id, mechanism, "observed", observed, seed);
    Add(experiment_id, mechanism, "abs_error", err, seed);
    AddPass(experiment_id, mechanism, err <= tolerance, seed);
  }

 private:
  std::vector<ResultRow>& rows_;
};

std::string Sub(const std::string& id, const std::string& suffix) {
  return id + "/" + suffix;
}

std::string Compact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void RequireModelMatchesData(const ExperimentConfig& config, const Dataset& data) {
  if (!config.has_model) throw ConfigError("model", "missing section");
  if (config.model.input_dim() != data.feature_dim) {
    throw ConfigError("model.layer_sizes",
                      "input size " + std::to_string(config.model.input_dim()) +
                          " does not match data dimension " +
                          std::to_string(data.feature_dim));
  }
  if (config.model.output_dim() != 1) {
    throw ConfigError("model.layer_sizes", "targets are scalar; output size must be 1");
  }
}

// --- verify -------------------------------------------------------------

struct LinearCase {
  ModelSpec spec;
  ParameterSet params;
  Vector x;
  double t = 0.0;
  double eta = 0.0;
  double sigma = 0.0;
};

LinearCase RandomLinearCase(uint64_t seed, std::size_t k) {
  RngStream rng(seed, k);
  LinearCase c;
  const std::size_t d = 1 + rng.UniformIndex(8);
  c.spec = ModelSpec::LinearNeuron(d, rng.Uniform01() < 0.5);
  const std::size_t p = d + (c.spec.include_bias ? 1 : 0);
  c.params = ParameterSet::FromValues(c.spec, GaussianSample(rng, 0.0, 1.0, p));
  c.x = GaussianSample(rng, 0.0, 1.0, d);
  c.t = rng.Normal();
  c.eta = 0.05 + 0.25 * rng.Uniform01();
  c.sigma = 0.25 + 1.25 * rng.Uniform01();
  return c;
}

Vector WithBiasInput(const LinearCase& c) {
  Vector x = c.x;
  if (c.spec.include_bias) x.push_back(1.0);
  return x;
}

void VerifyPostUpdateIdentities(const ExperimentConfig& cfg, Rows& rows) {
  const OracleConfig& o = cfg.oracle;
  const uint64_t case_seed = MixSeed(cfg.seed, kTagIdentityConfigs);
  for (std::size_t k = 0; k < o.configs; ++k) {
    const LinearCase c = RandomLinearCase(case_seed, k);
    const std::string id = Sub(cfg.experiment_id, "config_" + std::to_string(k));
    const double clean = CleanPostUpdateLoss(c.spec, c.params, c.x, c.t, c.eta);
    const double kappa = c.eta * c.eta * c.sigma * c.sigma;
    const Vector x_aug = WithBiasInput(c);

    const struct {
      const char* label;
      NoiseMode mode;
      uint64_t tag;
    } modes[] = {{"dp", NoiseMode::kIid, kTagDpMc},
                 {"pdp", NoiseMode::kProportional, kTagPdpMc}};
    for (const auto& m : modes) {
      const NoiseSpec noise{m.mode, c.sigma, std::nullopt};
      const uint64_t mc_seed = MixSeed(cfg.seed, m.tag + (k << 16));
      const double analytic =
          AnalyticPostUpdateLoss(c.spec, c.params, c.x, c.t, c.eta, noise);
      const McEstimate mc = McPostUpdateLoss(c.spec, c.params, c.x, c.t, c.eta,
                                             noise, o.replicas, mc_seed);
      IdentityCheck check = MakeIdentityCheck(std::string(m.label) + "_identity",
                                              analytic, mc, o.z_threshold);
      rows.AddCheck(id, check);
      // How many standard errors separate the noisy expectation from the
      // clean loss, i.e. whether the noise term is actually resolved.
      rows.Add(id, check.name, "effect_z", (analytic - clean) / mc.std_error, mc_seed);

      const uint64_t cross_seed = MixSeed(cfg.seed, kTagCrossMc + m.tag + (k << 16));
      IdentityCheck cross = CheckCrossTermVanishes(
          c.spec, c.params, c.x, c.t, c.eta, noise, o.replicas, cross_seed,
          o.z_threshold);
      cross.name = std::string(m.label) + "_cross_term";
      rows.AddCheck(id, cross);

      // The noisy expectation equals the clean loss plus the regularizer at
      // kappa = eta^2 sigma^2; the derived-kappa rule must produce it.
      RegSpec derived;
      derived.kappa_mode = KappaMode::kDerived;
      const double kappa_rule = EffectiveKappa(derived, c.eta, c.sigma);
      const double penalty = m.mode == NoiseMode::kIid
                                 ? DpInputPenalty(x_aug, kappa_rule)
                                 : PdpPenalty(c.spec, c.params, c.x, kappa_rule);
      const double chain = clean + penalty;
      rows.AddComparison(id, std::string(m.label) + "_equivalence_chain", analytic,
                         chain, 1e-12 * std::max(1.0, std::abs(analytic)), case_seed);
      rows.AddComparison(id, std::string(m.label) + "_derived_kappa", kappa,
                         kappa_rule, 1e-15 * std::max(1.0, kappa), case_seed);
    }
  }
}

void VerifyZeroGradient(const ExperimentConfig& cfg, Rows& rows) {
  const OracleConfig& o = cfg.oracle;
  const uint64_t seed = MixSeed(cfg.seed, kTagZeroGradient);
  const Dataset data = GenerateDataset(DatasetKind::kNoisyLinear,
                                       o.trajectory_examples, 5, 0.1, seed);
  const ModelSpec spec = ModelSpec::LinearNeuron(5, true);
  const struct {
    const char* label;
    NoiseSpec noise;
    double kappa;
  } variants[] = {
      {"zero_gradient_sgd", NoiseSpec{}, 0.0},
      {"zero_gradient_dp_sgd", NoiseSpec{NoiseMode::kIid, 0.5, 1.0}, 0.0},
      {"zero_gradient_pdp_sgd_reg", NoiseSpec{NoiseMode::kProportional, 0.5, std::nullopt},
       0.3},
  };
  for (const auto& v : variants) {
    TrainConfig train;
    train.eta = 0.05;
    train.batch_size = 10;
    train.epochs = o.trajectory_epochs;
    train.seed = seed;
    train.noise = v.noise;
    train.reg.kappa = v.kappa;
    const double gap = InputPenaltyTrajectoryGap(spec, data, train, 0.7);
    rows.AddComparison(cfg.experiment_id, v.label, 0.0, gap, 0.0, seed);
  }
}

void VerifyExpectedStep(const ExperimentConfig& cfg, Rows& rows) {
  const OracleConfig& o = cfg.oracle;
  const uint64_t seed = MixSeed(cfg.seed, kTagExpectedStep);
  RngStream rng(seed, 0);
  const ModelSpec spec = ModelSpec::LinearNeuron(4, true);
  const ParameterSet params =
      ParameterSet::FromValues(spec, GaussianSample(rng, 0.0, 1.0, 5));
  const Dataset data = GenerateDataset(DatasetKind::kNoisyLinear, 8, 4, 0.1, seed);
  const double eta = 0.1;
  const double sigma = 0.5;
  const double root_s = std::sqrt(static_cast<double>(o.step_seeds));
  const struct {
    const char* label;
    NoiseMode mode;
  } modes[] = {{"dp", NoiseMode::kIid}, {"pdp", NoiseMode::kProportional}};
  for (const auto& m : modes) {
    const NoiseSpec noise{m.mode, sigma, std::nullopt};
    const uint64_t step_seed = MixSeed(seed, static_cast<uint64_t>(m.mode));
    const std::vector<IdentityCheck> checks = CheckExpectedStep(
        spec, params, data, eta, noise, o.step_seeds, step_seed, o.z_threshold);
    for (std::size_t i = 0; i < checks.size(); ++i) {
      const IdentityCheck& c = checks[i];
      // Per-coordinate noise scale of one step, then 3 standard errors of
      // the mean over the seeds.
      const double scale =
          eta * sigma * (m.mode == NoiseMode::kIid ? 1.0 : std::abs(params[i]));
      const double tolerance = o.z_threshold * scale / root_s;
      const std::string mech = std::string(m.label) + "_expected_step[" +
                               std::to_string(i) + "]";
      rows.Add(cfg.experiment_id, mech, "expected", c.analytic, step_seed);
      rows.Add(cfg.experiment_id, mech, "observed", c.mc.mean, step_seed,
               c.mc.std_error);
      rows.Add(cfg.experiment_id, mech, "abs_error", std::abs(c.mc.mean - c.analytic),
               step_seed);
      rows.Add(cfg.experiment_id, mech, "z", c.z, step_seed);
      rows.AddPass(cfg.experiment_id, mech,
                   std::abs(c.mc.mean - c.analytic) <= tolerance, step_seed);
    }
  }
}

void VerifyGradients(const ExperimentConfig& cfg, Rows& rows) {
  const OracleConfig& o = cfg.oracle;
  const uint64_t seed = MixSeed(cfg.seed, kTagGradCheck);
  const struct {
    const char* label;
    PenaltyKind kind;
  } kinds[] = {{"gradcheck_l2", PenaltyKind::kL2},
               {"gradcheck_dp_input", PenaltyKind::kDpInput},
               {"gradcheck_pdp", PenaltyKind::kPdp},
               {"gradcheck_combined", PenaltyKind::kCombined}};
  for (const auto& k : kinds) {
    double worst = 0.0;
    for (std::size_t i = 0; i < o.gradcheck_instances; ++i) {
      RngStream rng(MixSeed(seed, static_cast<uint64_t>(k.kind)), i);
      const std::size_t d = 1 + rng.UniformIndex(10);
      const Vector theta = GaussianSample(rng, 0.0, 1.0, d);
      const Vector x = GaussianSample(rng, 0.0, 1.0, d);
      GradCheckCoefficients coeffs;
      coeffs.lambda = rng.Uniform01();
      coeffs.kappa = rng.Uniform01();
      coeffs.target = rng.Normal();
      // The penalties are quadratic, so central differences carry no
      // truncation error and a moderate step keeps rounding small.
      worst = std::max(worst, GradCheck(k.kind, theta, x, coeffs, 1e-5));
    }
    rows.Add(cfg.experiment_id, k.label, "rel_error", worst, seed);
    rows.AddPass(cfg.experiment_id, k.label, worst <= o.gradcheck_tolerance, seed);
  }

  const uint64_t mlp_seed = MixSeed(cfg.seed, kTagBackward);
  const struct {
    const char* label;
    ModelSpec spec;
  } models[] = {
      {"gradcheck_backward_tanh",
       ModelSpec{{4, 6, 5, 1}, {Activation::kTanh, Activation::kTanh}, true}},
      {"gradcheck_backward_identity",
       ModelSpec{{3, 4, 2}, {Activation::kIdentity}, true}},
      {"gradcheck_backward_linear", ModelSpec::LinearNeuron(6, true)},
  };
  for (std::size_t m = 0; m < std::size(models); ++m) {
    const ModelSpec& spec = models[m].spec;
    double worst = 0.0;
    for (std::size_t i = 0; i < o.gradcheck_instances; ++i) {
      RngStream rng(MixSeed(mlp_seed, m), i);
      const ParameterSet params = ParameterSet::RandomInit(spec, rng);
      Example ex{GaussianSample(rng, 0.0, 1.0, spec.input_dim()),
                 GaussianSample(rng, 0.0, 1.0, spec.output_dim())};
      worst = std::max(worst, BackwardGradCheck(spec, params, ex));
    }
    rows.Add(cfg.experiment_id, models[m].label, "rel_error", worst, mlp_seed);
    rows.AddPass(cfg.experiment_id, models[m].label, worst <= o.backward_tolerance,
                 mlp_seed);
  }
}

// Full-batch PDP-regularized training against the closed-form minimizer.
double MaxAbsDiff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double StableStep(const Dataset& data, double kappa, bool bias) {
  // eta <= 1 / L with L <= (2 / N) trace(X'^T X' + kappa D).
  double trace = 0.0;
  for (const Example& ex : data.examples) {
    trace += SquaredNorm(ex.x) + (bias ? 1.0 : 0.0);
  }
  trace *= 1.0 + kappa;
  return static_cast<double>(data.size()) / (2.0 * trace);
}

void VerifyRegressionOracle(const ExperimentConfig& cfg, Rows& rows) {
  const OracleConfig& o = cfg.oracle;
  const uint64_t seed = MixSeed(cfg.seed, kTagRegression);

  Dataset hand{2, {{{1.0, 0.0}, {1.0}}, {{0.0, 1.0}, {1.0}}, {{1.0, 1.0}, {2.0}}}};
  const ParameterSet exact = RegularizedLeastSquaresOracle(hand, 0.5);
  rows.AddComparison(cfg.experiment_id, "regression_oracle_hand[0]", 0.75, exact[0],
                     1e-12, seed);
  rows.AddComparison(cfg.experiment_id, "regression_oracle_hand[1]", 0.75, exact[1],
                     1e-12, seed);

  const struct {
    const char* label;
    Dataset data;
    double kappa;
    bool bias;
  } cases[] = {
      {"regression_train_hand", hand, 0.5, false},
      {"regression_train_noisy_linear",
       GenerateDataset(DatasetKind::kNoisyLinear, 40, 3, 0.1, seed), 0.2, true},
      {"regression_train_clusters",
       GenerateDataset(DatasetKind::kClusters, 30, 4, 0.5, seed), 1.0, true},
  };
  for (const auto& c : cases) {
    const ModelSpec spec = ModelSpec::LinearNeuron(c.data.feature_dim, c.bias);
    TrainConfig train;
    train.eta = StableStep(c.data, c.kappa, c.bias);
    train.batch_size = c.data.size();
    train.epochs = 3000;
    train.seed = seed;
    train.reg.kappa = c.kappa;
    const TrainReport report = Train(spec, c.data, train);
    const ParameterSet oracle = RegularizedLeastSquaresOracle(c.data, c.kappa, c.bias);
    const double diff = MaxAbsDiff(report.final_params.values(), oracle.values());
    rows.Add(cfg.experiment_id, c.label, "oracle_max_abs_diff", diff, seed);
    rows.AddPass(cfg.experiment_id, c.label, diff <= o.regression_tolerance, seed);
  }
}

void VerifyBessel(const ExperimentConfig& cfg, Rows& rows) {
  double worst = 0.0;
  for (double z = 0.01; z < 50.0; z *= 1.1) {
    const double ref = std::cyl_bessel_k(0.0, z);
    worst = std::max(worst, std::abs(BesselK0(z) - ref) / ref);
  }
  rows.Add(cfg.experiment_id, "bessel_k0", "rel_error", worst, 0);
  rows.AddPass(cfg.experiment_id, "bessel_k0", worst <= 1e-10, 0);
}

void MomentAndDensityChecks(const ExperimentConfig& cfg, Rows& rows) {
  const OracleConfig& o = cfg.oracle;
  for (std::size_t i = 0; i < o.moment_sigmas.size(); ++i) {
    const double sigma = o.moment_sigmas[i];
    const uint64_t seed = MixSeed(cfg.seed, kTagMoments + (i << 16));
    const std::string id = Sub(cfg.experiment_id, "sigma_" + Compact(sigma));
    for (const IdentityCheck& c :
         CheckMomentIdentities(sigma, o.moment_replicas, seed, o.z_threshold)) {
      rows.AddCheck(id, c);
    }
  }
  const std::pair<double, double> scales[] = {{1.0, 1.0}, {0.5, 2.0}};
  for (std::size_t i = 0; i < std::size(scales); ++i) {
    const auto [sx, sy] = scales[i];
    const uint64_t seed = MixSeed(cfg.seed, kTagDensity + (i << 16));
    ProductDensityOptions opts;
    opts.max_z = o.density_max_z;
    const ProductDensityReport r =
        CheckProductDensity(sx, sy, o.density_replicas, o.density_bins, seed, opts);
    const std::string id =
        Sub(cfg.experiment_id, "sigma_" + Compact(sx) + "x" + Compact(sy));
    rows.Add(id, "product_density", "max_bin_z", r.max_abs_z, seed);
    rows.Add(id, "product_density", "chi_square", r.chi_square, seed);
    rows.Add(id, "product_density", "dof", static_cast<double>(r.degrees_of_freedom),
             seed);
    rows.Add(id, "product_density", "max_symmetry_z", r.max_symmetry_z, seed);
    rows.AddPass(id, "product_density", r.pass, seed);
  }
}

// --- attack ---------------------------------------------------------------

void AddSummary(Rows& rows, const std::string& id, const std::string& mech,
                const std::string& prefix, const AttackSummary& s, uint64_t seed) {
  rows.Add(id, mech, prefix + "_mse_mean", s.mean_mse, seed);
  rows.Add(id, mech, prefix + "_mse_median", s.median_mse, seed);
  rows.Add(id, mech, prefix + "_cosine_mean", s.mean_cosine, seed);
  rows.Add(id, mech, prefix + "_cosine_median", s.median_cosine, seed);
  rows.Add(id, mech, prefix + "_success_rate", s.success_rate, seed);
}

std::string TrainLabel(const TrainConfig& t) {
  std::string label = t.noise.mode == NoiseMode::kNone  ? "sgd"
                      : t.noise.mode == NoiseMode::kIid ? "dp-sgd"
                                                        : "pdp-sgd";
  if (t.reg.lambda != 0.0) label += "+l2";
  if (t.reg.kappa != 0.0 || t.reg.kappa_mode == KappaMode::kDerived) label += "+pdp-reg";
  if (t.reg.input_kappa != 0.0) label += "+input-reg";
  return label;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string IsoTimestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string Hex(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

Dataset LoadData(const ExperimentConfig& config) {
  if (!config.has_data) throw ConfigError("data", "missing section");
  const DataConfig& d = config.data;
  if (d.path) return ReadDatasetCsv(ResolvePath(config, *d.path));
  return GenerateDataset(d.kind, d.n, d.d, d.noise_level, d.seed);
}

std::vector<ResultRow> RunTrain(const ExperimentConfig& config) {
  if (!config.has_model) throw ConfigError("model", "missing section");
  const Dataset data = LoadData(config);
  RequireModelMatchesData(config, data);
  const TrainReport report = Train(config.model, data, config.train);
  std::vector<ResultRow> out;
  Rows rows(out);
  const std::string mech = TrainLabel(config.train);
  const uint64_t seed = config.train.seed;
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    rows.Add(Sub(config.experiment_id, "epoch_" + std::to_string(e + 1)), mech,
             "epoch_loss", report.epoch_loss[e], seed);
  }
  rows.Add(config.experiment_id, mech, "final_loss",
           MeanLoss(config.model, report.final_params, data.examples), seed);
  rows.Add(config.experiment_id, mech, "param_norm",
           Norm(report.final_params.values()), seed);
  const TrainConfig& t = config.train;
  if (config.model.IsLinearNeuron() && t.reg.lambda == 0.0) {
    // Only the data loss and the PDP term shape the minimizer here, so the
    // closed-form solution is the reference point.
    const double kappa = EffectiveKappa(t.reg, t.eta, t.noise.sigma);
    const ParameterSet oracle =
        RegularizedLeastSquaresOracle(data, kappa, config.model.include_bias);
    rows.Add(config.experiment_id, mech, "oracle_max_abs_diff",
             MaxAbsDiff(report.final_params.values(), oracle.values()), seed);
  }
  return out;
}

std::vector<ResultRow> RunVerify(const ExperimentConfig& config) {
  std::vector<ResultRow> out;
  Rows rows(out);
  VerifyPostUpdateIdentities(config, rows);
  VerifyZeroGradient(config, rows);
  VerifyExpectedStep(config, rows);
  VerifyGradients(config, rows);
  VerifyRegressionOracle(config, rows);
  VerifyBessel(config, rows);
  MomentAndDensityChecks(config, rows);
  return out;
}

std::vector<ResultRow> RunMoments(const ExperimentConfig& config) {
  std::vector<ResultRow> out;
  Rows rows(out);
  MomentAndDensityChecks(config, rows);
  return out;
}

std::vector<ResultRow> RunAttack(const ExperimentConfig& config) {
  if (config.attack.mechanisms.empty()) {
    throw ConfigError("attack.mechanisms", "missing section");
  }
  if (!config.has_model) throw ConfigError("model", "missing section");
  const Dataset data = LoadData(config);
  RequireModelMatchesData(config, data);
  const AttackConfig& a = config.attack;
  std::vector<ResultRow> out;
  Rows rows(out);

  const uint64_t sweep_seed = MixSeed(config.seed, kTagAttack);
  const std::vector<LeakageReport> reports = LeakageSweep(
      config.model, data, a.mechanisms, a.trials, sweep_seed, a.sweep);
  for (const LeakageReport& r : reports) {
    if (r.closed_form) {
      AddSummary(rows, config.experiment_id, r.mechanism, "closed_form",
                 *r.closed_form, sweep_seed);
    }
    AddSummary(rows, config.experiment_id, r.mechanism, "iterative", r.iterative,
               sweep_seed);
  }

  if (a.membership.enabled) {
    const MembershipConfig& m = a.membership;
    if (data.size() < 2 * m.members) {
      throw ConfigError("attack.membership.members",
                        "needs 2 * members <= dataset size");
    }
    auto [members, rest] = SplitDataset(data, m.members);
    Dataset held_out = SplitDataset(rest, m.members).first;
    const uint64_t seed = MixSeed(config.seed, kTagMembership);
    for (const Mechanism& mech : a.mechanisms) {
      TrainConfig train;
      train.eta = m.eta;
      train.batch_size = m.batch_size;
      train.epochs = m.epochs;
      train.seed = seed;
      train.noise = mech.noise;
      train.reg = mech.reg;
      const TrainReport report = Train(config.model, members, train);
      // The threshold is the median score over both sets, so the accuracy
      // reflects a balanced guess.
      const MembershipReport probe =
          MembershipInference(config.model, report.final_params, members, held_out, 0.0);
      std::vector<double> all = probe.member_scores;
      all.insert(all.end(), probe.non_member_scores.begin(),
                 probe.non_member_scores.end());
      const MembershipReport mia = MembershipInference(
          config.model, report.final_params, members, held_out, Median(all));
      rows.Add(config.experiment_id, mech.label, "mia_auc", mia.auc, seed);
      rows.Add(config.experiment_id, mech.label, "mia_accuracy", mia.accuracy, seed);
    }
  }
  return out;
}

std::vector<ResultRow> RunReport(const ExperimentConfig& config) {
  if (config.report_inputs.empty()) throw ConfigError("report.inputs", "missing section");
  using Key = std::tuple<std::string, std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::pair<RunningStats, ResultRow>> groups;
  for (const std::string& input : config.report_inputs) {
    for (const ResultRow& row : ReadResultsCsv(ResolvePath(config, input))) {
      const Key key{row.experiment_id, row.mechanism, row.metric};
      auto it = groups.find(key);
      if (it == groups.end()) {
        order.push_back(key);
        it = groups.emplace(key, std::make_pair(RunningStats{}, row)).first;
      }
      it->second.first.Add(row.value);
    }
  }
  std::vector<ResultRow> out;
  for (const Key& key : order) {
    const auto& [stats, first] = groups.at(key);
    ResultRow mean = first;
    mean.value = stats.mean();
    if (stats.count() > 1) mean.std_error = stats.StandardError();
    out.push_back(mean);
    ResultRow count = first;
    count.metric = "count";
    count.value = static_cast<double>(stats.count());
    count.std_error.reset();
    out.push_back(count);
  }
  return out;
}

std::vector<std::string> FailedChecks(const std::vector<ResultRow>& rows) {
  std::vector<std::string> failed;
  for (const ResultRow& r : rows) {
    if (r.metric == "pass" && r.value != 1.0) {
      failed.push_back(r.experiment_id + "/" + r.mechanism);
    }
  }
  return failed;
}

int Run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::system_clock::now();
  const auto report_error = [&](const json& j) { err << j.dump() << '\n'; };
  ExperimentConfig config;
  std::vector<ResultRow> rows;
  try {
    static const char* kSubcommands[] = {"train", "verify", "attack", "moments",
                                         "report"};
    if (std::find(std::begin(kSubcommands), std::end(kSubcommands),
                  options.subcommand) == std::end(kSubcommands)) {
      throw ConfigError("subcommand", "unknown subcommand '" + options.subcommand + "'");
    }
    config = LoadConfig(options.config_path, options.seed);
    if (options.subcommand == "train") {
      rows = RunTrain(config);
    } else if (options.subcommand == "verify") {
      rows = RunVerify(config);
    } else if (options.subcommand == "attack") {
      rows = RunAttack(config);
    } else if (options.subcommand == "moments") {
      rows = RunMoments(config);
    } else {
      rows = RunReport(config);
    }
  } catch (const ConfigError& e) {
    report_error({{"error", "config_error"}, {"field", e.field()}, {"message", e.what()}});
    return kExitConfig;
  } catch (const std::exception& e) {
    report_error({{"error", "runtime_error"}, {"message", e.what()}});
    return kExitRuntime;
  }

  std::string out_dir;
  if (options.out_dir) {
    out_dir = *options.out_dir;
  } else if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    out_dir = env;
  } else {
    out_dir = ResolvePath(config, config.output_dir);
  }
  const std::string file = options.subcommand == "report" ? "report.csv" : "results.csv";
  try {
    std::filesystem::create_directories(out_dir);
    const std::string csv_path = (std::filesystem::path(out_dir) / file).string();
    WriteResultsCsv(csv_path, rows);

    const auto finished = std::chrono::system_clock::now();
    json manifest = {
        {"experiment_id", config.experiment_id},
        {"subcommand", options.subcommand},
        {"config_path", options.config_path},
        {"config_hash", "fnv1a64:" + Hex(Fnv1a64(config.canonical))},
        {"seed", config.seed},
        {"version", kVersion},
        {"results", file},
        {"rows", rows.size()},
        {"hardware_threads", std::thread::hardware_concurrency()},
        {"started_at", IsoTimestamp(started)},
        {"finished_at", IsoTimestamp(finished)},
        {"wall_seconds", std::chrono::duration<double>(finished - started).count()},
    };
    if (config.has_data && !config.data.path) manifest["data_seed"] = config.data.seed;
    std::ofstream mf(std::filesystem::path(out_dir) / "manifest.json",
                     std::ios::binary | std::ios::trunc);
    mf << manifest.dump(2) << '\n';
    if (!mf) throw Error("failed writing manifest in '" + out_dir + "'");
  } catch (const std::exception& e) {
    report_error({{"error", "runtime_error"}, {"message", e.what()}});
    return kExitRuntime;
  }

  const std::vector<std::string> failed = FailedChecks(rows);
  std::size_t checks = 0;
  for (const ResultRow& r : rows) checks += r.metric == "pass" ? 1 : 0;
  out << options.subcommand << ": " << rows.size() << " rows";
  if (checks > 0) out << ", " << checks - failed.size() << "/" << checks << " checks passed";
  out << " -> " << (std::filesystem::path(out_dir) / file).string() << '\n';
  if (options.subcommand == "report") {
    char line[256];
    for (const ResultRow& r : rows) {
      if (r.metric == "count") continue;
      std::snprintf(line, sizeof(line), "  %-32s %-28s %-26s %14.6g %s\n",
                    r.experiment_id.c_str(), r.mechanism.c_str(), r.metric.c_str(),
                    r.value,
                    r.std_error ? ("+/- " + Compact(*r.std_error)).c_str() : "");
      out << line;
    }
  }
  if (!failed.empty()) {
    report_error({{"error", "checks_failed"},
                  {"message", std::to_string(failed.size()) + " checks failed"},
                  {"failed", failed}});
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace pdpreg
