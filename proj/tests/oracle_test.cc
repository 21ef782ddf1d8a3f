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

#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "pdpreg/dataset.h"
#include "pdpreg/errors.h"
#include "pdpreg/regularizers.h"

namespace pdpreg {
namespace {

struct HandCase {
  ModelSpec spec = ModelSpec::LinearNeuron(2, false);
  ParameterSet params = ParameterSet::FromValues(spec, {0.5, -1.0});
  Vector x = {2, 1};
  double t = 1.0;
  double eta = 0.1;
};

// Normal equations assembled and solved with Eigen, independently of the
// library's LU.
Vector EigenRegularizedLsq(const Dataset& data, double kappa, bool bias) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index d =
      static_cast<Eigen::Index>(data.feature_dim) + (bias ? 1 : 0);
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd t(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Example& ex = data.examples[static_cast<std::size_t>(r)];
    for (std::size_t j = 0; j < data.feature_dim; ++j) {
      x(r, static_cast<Eigen::Index>(j)) = ex.x[j];
    }
    if (bias) x(r, d - 1) = 1.0;
    t(r) = ex.t[0];
  }
  Eigen::MatrixXd a = x.transpose() * x;
  a.diagonal() += kappa * x.array().square().colwise().sum().matrix().transpose();
  const Eigen::VectorXd theta = a.colPivHouseholderQr().solve(x.transpose() * t);
  return Vector(theta.data(), theta.data() + theta.size());
}

TEST(PostUpdateLossTest, AnalyticHandValues) {
  const HandCase c;
  EXPECT_NEAR(AnalyticPostUpdateLoss(c.spec, c.params, c.x, c.t, c.eta,
                                     NoiseSpec{NoiseMode::kIid, 0.2, {}}),
              0.002, 1e-15);
  EXPECT_NEAR(AnalyticPostUpdateLoss(c.spec, c.params, c.x, c.t, c.eta,
                                     NoiseSpec{NoiseMode::kProportional, 0.2, {}}),
              0.0008, 1e-15);
  const double clean = CleanPostUpdateLoss(c.spec, c.params, c.x, c.t, c.eta);
  EXPECT_NEAR(clean, 0.0, 1e-15);
  EXPECT_EQ(AnalyticPostUpdateLoss(c.spec, c.params, c.x, c.t, c.eta,
                                   NoiseSpec{NoiseMode::kIid, 0.0, {}}),
            clean);
}

TEST(PostUpdateLossTest, MonteCarloHandValues) {
  const HandCase c;
  const McEstimate iid = McPostUpdateLoss(c.spec, c.params, c.x, c.t, c.eta,
                                          NoiseSpec{NoiseMode::kIid, 0.2, {}},
                                          1000000, 1);
  EXPECT_LE(std::abs(iid.mean - 0.002), 3 * iid.std_error);
  EXPECT_EQ(iid.replicas, 1000000u);
  const McEstimate prop = McPostUpdateLoss(
      c.spec, c.params, c.x, c.t, c.eta,
      NoiseSpec{NoiseMode::kProportional, 0.2, {}}, 1000000, 2);
  EXPECT_LE(std::abs(prop.mean - 0.0008), 3 * prop.std_error);
}

TEST(PostUpdateLossTest, ZeroSigmaIsExactWithZeroStderr) {
  HandCase c;
  c.t = 0.3;
  const McEstimate mc = McPostUpdateLoss(c.spec, c.params, c.x, c.t, c.eta,
                                         NoiseSpec{NoiseMode::kIid, 0.0, {}}, 1000, 3);
  EXPECT_EQ(mc.mean, CleanPostUpdateLoss(c.spec, c.params, c.x, c.t, c.eta));
  EXPECT_EQ(mc.std_error, 0.0);
}

TEST(PostUpdateLossTest, CleanLossMatchesOneExplicitStep) {
  const ModelSpec spec = ModelSpec::LinearNeuron(3, true);
  const ParameterSet p = ParameterSet::FromValues(spec, {0.2, -0.7, 1.1, 0.4});
  const Vector x = {1.5, -0.5, 0.25};
  const double t = 2.0;
  const double eta = 0.05;
  const ParameterSet next =
      SgdStep(p, Backward(spec, p, Forward(spec, p, x), Vector{t}), eta);
  const double y = Forward(spec, next, x).output()[0];
  EXPECT_NEAR(CleanPostUpdateLoss(spec, p, x, t, eta), (y - t) * (y - t), 1e-14);
}

TEST(PostUpdateLossTest, SeededEstimatesAreReproducible) {
  const HandCase c;
  const NoiseSpec noise{NoiseMode::kIid, 0.3, {}};
  const McEstimate a = McPostUpdateLoss(c.spec, c.params, c.x, c.t, c.eta, noise, 5000, 9);
  const McEstimate b = McPostUpdateLoss(c.spec, c.params, c.x, c.t, c.eta, noise, 5000, 9);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(PostUpdateLossTest, RejectsNonLinearModels) {
  const ModelSpec mlp{{2, 3, 1}, {Activation::kTanh}, true};
  EXPECT_THROW(McPostUpdateLoss(mlp, ParameterSet::Zeros(mlp), Vector{1, 2}, 0, 0.1,
                                NoiseSpec{}, 10, 1),
               UnsupportedError);
}

TEST(PostUpdateLossTest, RandomizedIdentitySuite) {
  for (uint64_t k = 0; k < 50; ++k) {
    RngStream rng(k, 123);
    const std::size_t d = 1 + rng.UniformIndex(6);
    const ModelSpec spec = ModelSpec::LinearNeuron(d, rng.Uniform01() < 0.5);
    const ParameterSet p = ParameterSet::RandomInit(spec, rng);
    const Vector x = GaussianSample(rng, 0, 1, d);
    const double t = rng.Normal();
    const double eta = 0.05 + 0.2 * rng.Uniform01();
    const double sigma = 0.2 + rng.Uniform01();
    for (NoiseMode mode : {NoiseMode::kIid, NoiseMode::kProportional}) {
      const NoiseSpec noise{mode, sigma, {}};
      const IdentityCheck check = MakeIdentityCheck(
          "post_update", AnalyticPostUpdateLoss(spec, p, x, t, eta, noise),
          McPostUpdateLoss(spec, p, x, t, eta, noise, 100000, MixSeed(k, 1 + (int)mode)));
      EXPECT_TRUE(check.pass) << "config " << k << " z=" << check.z;
    }
  }
}

TEST(EquivalenceChainTest, NoiseTermsEqualRegularizers) {
  for (uint64_t k = 0; k < 100; ++k) {
    RngStream rng(k, 321);
    const std::size_t d = 1 + rng.UniformIndex(6);
    const ModelSpec spec = ModelSpec::LinearNeuron(d, false);
    const ParameterSet p = ParameterSet::FromValues(spec, GaussianSample(rng, 0, 1, d));
    const Vector x = GaussianSample(rng, 0, 1, d);
    const double t = rng.Normal();
    const double eta = rng.Uniform01();
    const double sigma = rng.Uniform01();
    const double kappa = eta * eta * sigma * sigma;
    const double clean = CleanPostUpdateLoss(spec, p, x, t, eta);
    const double iid = AnalyticPostUpdateLoss(spec, p, x, t, eta,
                                              NoiseSpec{NoiseMode::kIid, sigma, {}});
    const double prop = AnalyticPostUpdateLoss(
        spec, p, x, t, eta, NoiseSpec{NoiseMode::kProportional, sigma, {}});
    EXPECT_NEAR(iid - clean, DpInputPenalty(x, kappa), 1e-12);
    EXPECT_NEAR(prop - clean, PdpPenalty(p.values(), x, kappa), 1e-12);
  }
}

TEST(CrossTermTest, VanishesStatistically) {
  for (NoiseMode mode : {NoiseMode::kIid, NoiseMode::kProportional}) {
    HandCase h;
    h.t = 0.0;  // nonzero residual so the statistic is not trivially 0
    const IdentityCheck check = CheckCrossTermVanishes(
        h.spec, h.params, h.x, h.t, h.eta, NoiseSpec{mode, 0.5, {}}, 1000000, 4);
    EXPECT_TRUE(check.pass) << check.z;
    EXPECT_EQ(check.analytic, 0.0);
  }
}

TEST(CrossTermTest, ExactZeroCases) {
  HandCase c;
  c.t = 3.0;
  const IdentityCheck no_noise = CheckCrossTermVanishes(
      c.spec, c.params, c.x, c.t, c.eta, NoiseSpec{NoiseMode::kIid, 0.0, {}}, 1000, 5);
  EXPECT_EQ(no_noise.mc.mean, 0.0);
  EXPECT_TRUE(no_noise.pass);
  const IdentityCheck no_input = CheckCrossTermVanishes(
      c.spec, c.params, Vector{0, 0}, c.t, c.eta, NoiseSpec{NoiseMode::kIid, 1.0, {}},
      1000, 5);
  EXPECT_EQ(no_input.mc.mean, 0.0);
  EXPECT_TRUE(no_input.pass);
}

TEST(MakeIdentityCheckTest, ZeroStderrRequiresExactAgreement) {
  EXPECT_TRUE(MakeIdentityCheck("a", 1.0, McEstimate{1.0, 0.0, 10, 0}).pass);
  const IdentityCheck off = MakeIdentityCheck("b", 1.0, McEstimate{1.5, 0.0, 10, 0});
  EXPECT_FALSE(off.pass);
  EXPECT_TRUE(std::isinf(off.z));
  const IdentityCheck z2 = MakeIdentityCheck("c", 1.0, McEstimate{1.2, 0.1, 10, 0});
  EXPECT_NEAR(z2.z, 2.0, 1e-12);
  EXPECT_TRUE(z2.pass);
}

TEST(MomentIdentitiesTest, AnalyticTriples) {
  const auto one = CheckMomentIdentities(1.0, 1000000, 6);
  ASSERT_EQ(one.size(), 3u);
  EXPECT_EQ(one[0].analytic, 1.0);
  EXPECT_EQ(one[1].analytic, 3.0);
  EXPECT_EQ(one[2].analytic, 2.0);
  const auto two = CheckMomentIdentities(2.0, 1000000, 7);
  EXPECT_EQ(two[0].analytic, 4.0);
  EXPECT_EQ(two[1].analytic, 48.0);
  EXPECT_EQ(two[2].analytic, 32.0);
}

TEST(MomentIdentitiesTest, PassAtMillionReplicas) {
  for (double sigma : {0.5, 1.0, 2.0}) {
    for (const IdentityCheck& c : CheckMomentIdentities(sigma, 1000000, 8)) {
      EXPECT_TRUE(c.pass) << c.name << " sigma=" << sigma << " z=" << c.z;
    }
  }
}

TEST(MomentIdentitiesTest, RejectsTooFewReplicas) {
  EXPECT_THROW(CheckMomentIdentities(1.0, 100, 1), ParameterError);
}

TEST(ProductDensityTest, ValueAtOne) {
  EXPECT_NEAR(ProductNormalDensity(1.0, 1.0, 1.0), 0.1340162, 1e-7);
  EXPECT_NEAR(ProductNormalDensity(1.0, 1.0, 1.0),
              std::cyl_bessel_k(0.0, 1.0) / std::numbers::pi, 1e-15);
  EXPECT_EQ(ProductNormalDensity(-2.0, 0.5, 3.0), ProductNormalDensity(2.0, 0.5, 3.0));
}

TEST(ProductDensityTest, IntegratesToOne) {
  // Split at 1 so the logarithmic singularity sits at an interval end.
  const auto f = [](double u) { return 2.0 * ProductNormalDensity(u, 1.0, 1.0); };
  const double mass = IntegrateGaussLegendre(f, 1e-12, 1.0, 64) +
                      IntegrateGaussLegendre(f, 1.0, 40.0, 64);
  EXPECT_NEAR(mass, 1.0, 1e-4);
}

TEST(ProductDensityTest, HistogramMatchesAtMillionReplicas) {
  const ProductDensityReport r = CheckProductDensity(1.0, 1.0, 1000000, 40, 9);
  EXPECT_TRUE(r.pass) << r.max_abs_z;
  EXPECT_LE(r.max_abs_z, 4.0);
  EXPECT_EQ(r.edges.size(), 41u);
  EXPECT_EQ(r.bin_z.size(), 40u);
  EXPECT_LT(r.max_symmetry_z, 4.5);
}

TEST(ProductDensityTest, ScaledSigmasMatch) {
  const ProductDensityReport r = CheckProductDensity(0.5, 3.0, 400000, 30, 10);
  EXPECT_TRUE(r.pass) << r.max_abs_z;
}

TEST(ProductDensityTest, RejectsBadBinning) {
  EXPECT_THROW(CheckProductDensity(1, 1, 1000, 5, 1), ParameterError);
}

TEST(RegularizedLsqTest, HandInstance) {
  const Dataset data{2, {{{1, 0}, {1}}, {{0, 1}, {1}}, {{1, 1}, {2}}}};
  const ParameterSet p = RegularizedLeastSquaresOracle(data, 0.5);
  EXPECT_NEAR(p[0], 0.75, 1e-14);
  EXPECT_NEAR(p[1], 0.75, 1e-14);
}

TEST(RegularizedLsqTest, ZeroKappaIsOls) {
  const Dataset data = GenerateDataset(DatasetKind::kLinearRegression, 30, 4, 0, 11);
  const ParameterSet p = RegularizedLeastSquaresOracle(data, 0.0);
  const Vector w = HiddenWeights(4, 11);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[i], w[i], 1e-10);
}

TEST(RegularizedLsqTest, MatchesIndependentSolver) {
  for (uint64_t s = 0; s < 10; ++s) {
    const Dataset data = GenerateDataset(DatasetKind::kNoisyLinear, 25, 3, 0.3, s);
    for (bool bias : {false, true}) {
      const double kappa = 0.1 * static_cast<double>(s);
      const ParameterSet p = RegularizedLeastSquaresOracle(data, kappa, bias);
      const Vector ref = EigenRegularizedLsq(data, kappa, bias);
      ASSERT_EQ(p.size(), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(p[i], ref[i], 1e-12);
    }
  }
}

TEST(RegularizedLsqTest, ShrinksMonotonicallyWithKappa) {
  const Dataset data = GenerateDataset(DatasetKind::kNoisyLinear, 40, 3, 0.1, 12);
  double prev = Norm(RegularizedLeastSquaresOracle(data, 0.0).values());
  for (double kappa : {1.0, 10.0, 100.0}) {
    const double norm = Norm(RegularizedLeastSquaresOracle(data, kappa).values());
    EXPECT_LT(norm, prev);
    prev = norm;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(GradCheckTest, AllKindsPassOnRandomInstances) {
  for (uint64_t s = 0; s < 100; ++s) {
    RngStream rng(s, 13);
    const std::size_t d = 1 + rng.UniformIndex(10);
    const Vector theta = GaussianSample(rng, 0, 1, d);
    const Vector x = GaussianSample(rng, 0, 1, d);
    const GradCheckCoefficients coeffs{rng.Uniform01(), rng.Uniform01(), rng.Normal()};
    EXPECT_LE(GradCheck(PenaltyKind::kL2, theta, x, coeffs, 1e-5), 1e-8);
    EXPECT_LE(GradCheck(PenaltyKind::kPdp, theta, x, coeffs, 1e-5), 1e-8);
    EXPECT_LE(GradCheck(PenaltyKind::kCombined, theta, x, coeffs, 1e-5), 1e-8);
    EXPECT_LE(GradCheck(PenaltyKind::kDpInput, theta, x, coeffs, 1e-6), 1e-10);
  }
}

TEST(GradCheckTest, BackwardOnMlp) {
  const ModelSpec spec{{3, 8, 4, 1}, {Activation::kTanh, Activation::kTanh}, true};
  RngStream rng(14, 0);
  const ParameterSet p = ParameterSet::RandomInit(spec, rng);
  EXPECT_LE(BackwardGradCheck(spec, p, Example{{0.3, -1.2, 0.8}, {0.5}}), 1e-6);
}

TEST(ExpectedStepTest, MeanStepMatchesNoiselessStep) {
  const Dataset data = GenerateDataset(DatasetKind::kNoisyLinear, 6, 3, 0.1, 15);
  const ModelSpec spec = ModelSpec::LinearNeuron(3, true);
  const ParameterSet p = ParameterSet::FromValues(spec, {0.3, -0.2, 0.9, 0.1});
  const double eta = 0.1;
  const double sigma = 0.5;
  const auto checks = CheckExpectedStep(spec, p, data, eta,
                                        NoiseSpec{NoiseMode::kIid, sigma, {}}, 10000, 16);
  ASSERT_EQ(checks.size(), 4u);
  for (const IdentityCheck& c : checks) {
    EXPECT_LE(std::abs(c.mc.mean - c.analytic), 3 * eta * sigma / 100) << c.name;
    EXPECT_NEAR(c.mc.std_error, eta * sigma / 100, 0.05 * eta * sigma / 100);
  }
}

TEST(InputPenaltyTrajectoryGapTest, IsExactlyZero) {
  const Dataset data = GenerateDataset(DatasetKind::kClusters, 100, 4, 0.7, 17);
  const ModelSpec spec{{4, 6, 1}, {Activation::kTanh}, true};
  TrainConfig config;
  config.epochs = 10;
  config.batch_size = 8;
  config.noise = NoiseSpec{NoiseMode::kProportional, 0.3, 1.0};
  config.reg.kappa = 0.05;
  EXPECT_EQ(InputPenaltyTrajectoryGap(spec, data, config, 2.5), 0.0);
}

}  // namespace
}  // namespace pdpreg
