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

#include "pdpreg/optimizers.h"

#include <cmath>

#include <gtest/gtest.h>

#include "pdpreg/dataset.h"
#include "pdpreg/errors.h"
#include "pdpreg/oracle.h"

namespace pdpreg {
namespace {

Dataset HandData() {
  return Dataset{2, {{{1, 0}, {1}}, {{0, 1}, {1}}, {{1, 1}, {2}}}};
}

TEST(ClipGradientTest, HandValues) {
  EXPECT_EQ(ClipGradient(Vector{3, 4}, 2.5), (Vector{1.5, 2.0}));
  EXPECT_EQ(ClipGradient(Vector{3, 4}, 10), (Vector{3, 4}));
  EXPECT_EQ(ClipGradient(Vector{0, 0}, 1), (Vector{0, 0}));
}

TEST(ClipGradientTest, NormNeverExceedsThreshold) {
  for (uint64_t s = 0; s < 500; ++s) {
    RngStream rng(s, 5);
    const Vector g = GaussianSample(rng, 0, 1 + 100 * rng.Uniform01(), 1 + rng.UniformIndex(20));
    const double c = 0.01 + 5 * rng.Uniform01();
    EXPECT_LE(Norm(ClipGradient(g, c)), c + 1e-12);
  }
}

TEST(IidNoiseTest, ZeroSigmaIsIdentity) {
  RngStream rng(1, 0);
  const Vector g = {0.3, -2.0, 5.0};
  EXPECT_EQ(AddIidNoise(g, 0.0, rng), g);
}

TEST(IidNoiseTest, MeanAndVarianceOverReplicas) {
  const double sigma = 0.7;
  const int n = 100000;
  const Vector g = {1.0, -3.0};
  RngStream rng(2, 0);
  RunningStats s0;
  RunningStats s1;
  for (int r = 0; r < n; ++r) {
    const Vector gt = AddIidNoise(g, sigma, rng);
    s0.Add(gt[0] - g[0]);
    s1.Add(gt[1] - g[1]);
  }
  for (const RunningStats* s : {&s0, &s1}) {
    EXPECT_LE(std::abs(s->mean()), 3 * sigma / std::sqrt(n));
    EXPECT_NEAR(s->SampleVariance(), sigma * sigma, 0.05 * sigma * sigma);
  }
}

TEST(ProportionalNoiseTest, ZeroParameterCoordinateIsExact) {
  RngStream rng(3, 0);
  const Vector g = {0.5, 0.25};
  const Vector theta = {0.0, 2.0};
  for (int r = 0; r < 100; ++r) {
    const Vector gt = AddProportionalNoise(g, theta, 0.5, rng);
    EXPECT_EQ(gt[0], g[0]);
    EXPECT_NE(gt[1], g[1]);
  }
}

TEST(ProportionalNoiseTest, StdScalesWithParameters) {
  RngStream rng(4, 0);
  const Vector g = {0, 0};
  const Vector theta = {1, 2};
  RunningStats s0;
  RunningStats s1;
  for (int r = 0; r < 100000; ++r) {
    const Vector gt = AddProportionalNoise(g, theta, 0.5, rng);
    s0.Add(gt[0]);
    s1.Add(gt[1]);
  }
  EXPECT_NEAR(std::sqrt(s0.SampleVariance()), 0.5, 0.025);
  EXPECT_NEAR(std::sqrt(s1.SampleVariance()), 1.0, 0.05);
}

TEST(ProportionalNoiseTest, ZeroSigmaIsIdentity) {
  RngStream rng(5, 0);
  const Vector g = {0.1, 0.2};
  EXPECT_EQ(AddProportionalNoise(g, Vector{3, 4}, 0.0, rng), g);
}

TEST(NoiseModesTest, OnlyIidNoiseMovesZeroParameters) {
  const Vector g = {0.1, 0.2, 0.3};
  const Vector zeros = {0, 0, 0};
  RngStream a(6, 0);
  RngStream b(6, 0);
  EXPECT_EQ(ApplyNoise(g, zeros, NoiseSpec{NoiseMode::kProportional, 1.0, {}}, a), g);
  EXPECT_NE(ApplyNoise(g, zeros, NoiseSpec{NoiseMode::kIid, 1.0, {}}, b), g);
}

TEST(SgdStepTest, HandValues) {
  const ModelSpec spec = ModelSpec::LinearNeuron(2, false);
  const ParameterSet p = ParameterSet::FromValues(spec, {0.5, -1.0});
  const ParameterSet next = SgdStep(p, Vector{-4, -2}, 0.1);
  EXPECT_DOUBLE_EQ(next[0], 0.9);
  EXPECT_DOUBLE_EQ(next[1], -0.8);
  EXPECT_EQ(SgdStep(p, Vector{0, 0}, 0.1), p);
}

TEST(SgdStepTest, OppositeStepsCancel) {
  const ModelSpec spec = ModelSpec::LinearNeuron(2, false);
  const ParameterSet p = ParameterSet::FromValues(spec, {0.5, -1.0});
  const Vector g = {0.25, -0.5};
  const Vector neg = {-0.25, 0.5};
  EXPECT_EQ(SgdStep(SgdStep(p, g, 0.5), neg, 0.5), p);
}

TEST(TrainTest, NoiselessSgdFitsRealizableData) {
  const Dataset data = GenerateDataset(DatasetKind::kLinearRegression, 50, 3, 0, 1);
  const ModelSpec spec = ModelSpec::LinearNeuron(3, false);
  TrainConfig config;
  config.eta = 0.05;
  config.batch_size = 5;
  config.epochs = 300;
  config.seed = 1;
  const TrainReport report = Train(spec, data, config);
  EXPECT_LE(MeanLoss(spec, report.final_params, data.examples), 1e-10);
  EXPECT_EQ(report.epoch_loss.size(), 300u);
}

TEST(TrainTest, PdpRegularizedTrainingReachesClosedForm) {
  const ModelSpec spec = ModelSpec::LinearNeuron(2, false);
  TrainConfig config;
  config.eta = 0.3;
  config.batch_size = 3;
  config.epochs = 200;
  config.reg.kappa = 0.5;
  const TrainReport report = Train(spec, HandData(), config);
  EXPECT_NEAR(report.final_params[0], 0.75, 1e-6);
  EXPECT_NEAR(report.final_params[1], 0.75, 1e-6);
}

TEST(TrainTest, SameSeedIsBitIdentical) {
  const Dataset data = GenerateDataset(DatasetKind::kNoisyLinear, 64, 4, 0.1, 2);
  const ModelSpec spec{{4, 8, 1}, {Activation::kTanh}, true};
  for (NoiseMode mode : {NoiseMode::kNone, NoiseMode::kIid, NoiseMode::kProportional}) {
    TrainConfig config;
    config.batch_size = 7;  // leaves a partial final batch
    config.epochs = 3;
    config.seed = 99;
    config.noise = NoiseSpec{mode, 0.3, 2.0};
    config.reg.kappa = 0.01;
    config.record_gradients = true;
    const TrainReport a = Train(spec, data, config);
    const TrainReport b = Train(spec, data, config);
    EXPECT_TRUE(a.SameOutcome(b));
    config.seed = 100;
    if (mode != NoiseMode::kNone) {
      EXPECT_FALSE(a.SameOutcome(Train(spec, data, config)));
    }
  }
}

TEST(TrainTest, InputOnlyPenaltyLeavesTrajectoryBitIdentical) {
  const Dataset data = GenerateDataset(DatasetKind::kNoisyLinear, 100, 5, 0.2, 3);
  const ModelSpec spec = ModelSpec::LinearNeuron(5, true);
  for (NoiseMode mode : {NoiseMode::kNone, NoiseMode::kIid, NoiseMode::kProportional}) {
    TrainConfig config;
    config.eta = 0.03;
    config.batch_size = 10;
    config.epochs = 10;
    config.seed = 4;
    config.noise = NoiseSpec{mode, 0.5, {}};
    TrainConfig shifted = config;
    shifted.reg.input_kappa = 1.7;
    const TrainReport a = Train(spec, data, config);
    const TrainReport b = Train(spec, data, shifted);
    EXPECT_EQ(a.epoch_params, b.epoch_params);
    EXPECT_EQ(a.final_params, b.final_params);
    // The loss itself moves by the input term.
    EXPECT_GT(b.epoch_loss.back(), a.epoch_loss.back());
  }
}

TEST(TrainTest, RecordedGradientsRespectClipAndCap) {
  const Dataset data = GenerateDataset(DatasetKind::kNoisyLinear, 30, 3, 0.5, 5);
  const ModelSpec spec = ModelSpec::LinearNeuron(3, true);
  TrainConfig config;
  config.epochs = 2;
  config.noise.clip_c = 0.1;
  config.record_gradients = true;
  config.record_cap = 40;
  const TrainReport report = Train(spec, data, config);
  ASSERT_EQ(report.records.size(), 40u);
  for (const GradientRecord& r : report.records) {
    EXPECT_LE(Norm(r.clean), 0.1 + 1e-12);
    EXPECT_EQ(r.clean, r.noisy);
    EXPECT_EQ(r.batch_indices.size(), 1u);
  }
  EXPECT_EQ(report.records[1].step, 1u);
}

TEST(TrainTest, OneDpStepIsUnbiased) {
  const Dataset data = GenerateDataset(DatasetKind::kNoisyLinear, 8, 3, 0.1, 6);
  const ModelSpec spec = ModelSpec::LinearNeuron(3, true);
  RngStream rng(6, 1);
  const ParameterSet theta0 = ParameterSet::RandomInit(spec, rng);
  const double eta = 0.1;
  const double sigma = 0.4;
  const int n = 10000;
  TrainConfig clean;
  clean.eta = eta;
  clean.batch_size = data.size();
  const ParameterSet expected = TrainFrom(spec, theta0, data, clean).final_params;
  std::vector<RunningStats> stats(theta0.size());
  for (int s = 0; s < n; ++s) {
    TrainConfig noisy = clean;
    noisy.seed = static_cast<uint64_t>(s);
    noisy.noise = NoiseSpec{NoiseMode::kIid, sigma, {}};
    const ParameterSet p = TrainFrom(spec, theta0, data, noisy).final_params;
    for (std::size_t i = 0; i < p.size(); ++i) stats[i].Add(p[i]);
  }
  for (std::size_t i = 0; i < theta0.size(); ++i) {
    EXPECT_NEAR(stats[i].mean(), expected[i], 3 * eta * sigma / std::sqrt(n));
  }
}

TEST(TrainTest, EtaScheduleRepeatsLastEntry) {
  TrainConfig config;
  config.eta_schedule = {0.5, 0.25};
  EXPECT_EQ(config.EtaAt(0), 0.5);
  EXPECT_EQ(config.EtaAt(1), 0.25);
  EXPECT_EQ(config.EtaAt(7), 0.25);
}

TEST(TrainTest, RejectsBadConfigsAndShapes) {
  const ModelSpec spec = ModelSpec::LinearNeuron(2, false);
  TrainConfig config;
  config.eta = 0.0;
  EXPECT_THROW(Train(spec, HandData(), config), ParameterError);
  config.eta = 0.1;
  config.batch_size = 4;
  EXPECT_THROW(Train(spec, HandData(), config), ParameterError);
  config.batch_size = 1;
  config.noise.sigma = -1;
  EXPECT_THROW(Train(spec, HandData(), config), ParameterError);
  config.noise.sigma = 0;
  EXPECT_THROW(Train(ModelSpec::LinearNeuron(3, false), HandData(), config),
               ParameterError);
}

}  // namespace
}  // namespace pdpreg
