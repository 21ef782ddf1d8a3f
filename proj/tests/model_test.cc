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

#include "pdpreg/model.h"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "pdpreg/errors.h"

namespace pdpreg {
namespace {

double LossAt(const ModelSpec& spec, const ParameterSet& p, const Example& ex) {
  return QuadraticLoss(Forward(spec, p, ex.x).output(), ex.t);
}

// Central differences written out here rather than borrowed from the
// library's own checker.
Vector NumericGradient(const ModelSpec& spec, const ParameterSet& p,
                       const Example& ex, double h) {
  Vector g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(p[i]));
    ParameterSet plus = p;
    ParameterSet minus = p;
    plus.mutable_values()[i] += step;
    minus.mutable_values()[i] -= step;
    g[i] = (LossAt(spec, plus, ex) - LossAt(spec, minus, ex)) / (2 * step);
  }
  return g;
}

TEST(ModelSpecTest, LinearNeuronShape) {
  const ModelSpec spec = ModelSpec::LinearNeuron(3, true);
  EXPECT_TRUE(spec.IsLinearNeuron());
  EXPECT_EQ(spec.num_layers(), 1u);
  EXPECT_EQ(ParameterSet::Zeros(spec).size(), 4u);
}

TEST(ModelSpecTest, ValidateRejectsBadSpecs) {
  EXPECT_THROW((ModelSpec{{3}, {}, false}.Validate()), ParameterError);
  EXPECT_THROW((ModelSpec{{3, 0}, {}, false}.Validate()), ParameterError);
  EXPECT_THROW((ModelSpec{{3, 4, 1}, {}, false}.Validate()), ParameterError);
  EXPECT_NO_THROW((ModelSpec{{3, 4, 1}, {Activation::kRelu}, true}.Validate()));
}

TEST(ParameterSetTest, LayoutPlacesBiasAfterWeights) {
  const ModelSpec spec{{3, 2, 1}, {Activation::kTanh}, true};
  const ParameterSet p = ParameterSet::Zeros(spec);
  ASSERT_EQ(p.blocks().size(), 2u);
  EXPECT_EQ(p.blocks()[0].weight_offset, 0u);
  EXPECT_EQ(p.blocks()[0].bias_offset, 6u);
  EXPECT_EQ(p.blocks()[1].weight_offset, 8u);
  EXPECT_EQ(p.size(), 3u * 2 + 2 + 2 + 1);
  EXPECT_EQ(p.Weights(1).size(), 2u);
  EXPECT_EQ(p.Bias(1).size(), 1u);
}

TEST(ParameterSetTest, RandomInitIsBoundedAndSeeded) {
  const ModelSpec spec{{4, 16, 1}, {Activation::kTanh}, true};
  RngStream a(1, 1);
  RngStream b(1, 1);
  const ParameterSet p = ParameterSet::RandomInit(spec, a);
  EXPECT_EQ(p, ParameterSet::RandomInit(spec, b));
  for (std::size_t i = 0; i < p.blocks()[0].bias_offset + 16; ++i) {
    EXPECT_LE(std::abs(p[i]), 0.5);
  }
  for (double w : p.Weights(1)) EXPECT_LE(std::abs(w), 0.25);
}

TEST(ParameterSetTest, FromValuesChecksLengthAndFiniteness) {
  const ModelSpec spec = ModelSpec::LinearNeuron(2, false);
  EXPECT_THROW(ParameterSet::FromValues(spec, {1.0}), ParameterError);
  EXPECT_THROW(ParameterSet::FromValues(spec, {1.0, NAN}), ParameterError);
  EXPECT_NO_THROW(ParameterSet::FromValues(spec, {1.0, 2.0}));
}

TEST(ForwardTest, LinearNeuronHandValue) {
  const ModelSpec spec = ModelSpec::LinearNeuron(2, false);
  const ParameterSet p = ParameterSet::FromValues(spec, {0.5, -1.0});
  const Vector x = {2, 1};
  EXPECT_EQ(Forward(spec, p, x).output()[0], 0.0);
}

TEST(ForwardTest, ZeroParametersGiveZero) {
  const ModelSpec spec{{3, 5, 1}, {Activation::kTanh}, true};
  const Vector x = {1.5, -2, 7};
  EXPECT_EQ(Forward(spec, ParameterSet::Zeros(spec), x).output()[0], 0.0);
}

TEST(ForwardTest, BasisVectorExtractsWeight) {
  const ModelSpec spec = ModelSpec::LinearNeuron(4, false);
  const ParameterSet p = ParameterSet::FromValues(spec, {0.1, -0.2, 0.3, -0.4});
  for (std::size_t i = 0; i < 4; ++i) {
    Vector e(4, 0.0);
    e[i] = 1.0;
    EXPECT_EQ(Forward(spec, p, e).output()[0], p[i]);
  }
}

TEST(ForwardTest, LinearNeuronMatchesDotProductWithBias) {
  const ModelSpec spec = ModelSpec::LinearNeuron(3, true);
  const ParameterSet p = ParameterSet::FromValues(spec, {0.3, -1.2, 2.5, 0.7});
  const Vector x = {1.1, 0.4, -0.9};
  const double expected = 0.3 * 1.1 - 1.2 * 0.4 + 2.5 * -0.9 + 0.7;
  EXPECT_NEAR(Forward(spec, p, x).output()[0], expected, 1e-15);
}

TEST(ForwardTest, HiddenActivationsApply) {
  const ModelSpec relu{{1, 1, 1}, {Activation::kRelu}, false};
  const ParameterSet p = ParameterSet::FromValues(relu, {1.0, 2.0});
  EXPECT_EQ(Forward(relu, p, Vector{-3.0}).output()[0], 0.0);
  EXPECT_EQ(Forward(relu, p, Vector{3.0}).output()[0], 6.0);
  const ModelSpec tanh_spec{{1, 1, 1}, {Activation::kTanh}, false};
  EXPECT_DOUBLE_EQ(Forward(tanh_spec, p, Vector{0.5}).output()[0],
                   2.0 * std::tanh(0.5));
}

TEST(ForwardTest, IsPure) {
  const ModelSpec spec{{3, 4, 2}, {Activation::kTanh}, true};
  RngStream rng(3, 0);
  const ParameterSet p = ParameterSet::RandomInit(spec, rng);
  const Vector x = {0.2, -0.1, 0.4};
  EXPECT_EQ(Forward(spec, p, x).output(), Forward(spec, p, x).output());
}

TEST(ForwardTest, RejectsWrongInputSize) {
  const ModelSpec spec = ModelSpec::LinearNeuron(2, false);
  EXPECT_THROW(Forward(spec, ParameterSet::Zeros(spec), Vector{1.0}),
               ParameterError);
}

TEST(QuadraticLossTest, HandValues) {
  EXPECT_EQ(QuadraticLoss(Vector{0.0}, Vector{1.0}), 1.0);
  EXPECT_EQ(QuadraticLoss(Vector{2.5}, Vector{2.5}), 0.0);
  EXPECT_EQ(QuadraticLoss(Vector{3.0}, Vector{1.0}), 4.0);
  EXPECT_EQ(QuadraticLoss(Vector{1.0, 2.0}, Vector{0.0, 0.0}), 5.0);
}

TEST(BackwardTest, LinearNeuronHandGradient) {
  const ModelSpec spec = ModelSpec::LinearNeuron(2, false);
  const ParameterSet p = ParameterSet::FromValues(spec, {0.5, -1.0});
  const Vector x = {2, 1};
  const Vector g = Backward(spec, p, Forward(spec, p, x), Vector{1.0});
  EXPECT_EQ(g, (Vector{-4.0, -2.0}));
}

TEST(BackwardTest, ZeroAtPerfectFit) {
  const ModelSpec spec = ModelSpec::LinearNeuron(2, true);
  const ParameterSet p = ParameterSet::FromValues(spec, {0.5, -1.0, 0.25});
  const Vector x = {2, 1};
  const double y = Forward(spec, p, x).output()[0];
  for (double g : Backward(spec, p, Forward(spec, p, x), Vector{y})) EXPECT_EQ(g, 0.0);
}

TEST(BackwardTest, MatchesFiniteDifferencesOnRandomMlps) {
  const Activation acts[] = {Activation::kTanh, Activation::kIdentity};
  for (uint64_t s = 0; s < 40; ++s) {
    RngStream rng(s, 77);
    ModelSpec spec;
    spec.include_bias = rng.Uniform01() < 0.5;
    const std::size_t layers = 1 + rng.UniformIndex(3);
    spec.layer_sizes.push_back(1 + rng.UniformIndex(6));
    for (std::size_t l = 0; l < layers; ++l) {
      spec.layer_sizes.push_back(1 + rng.UniformIndex(16));
      if (l + 1 < layers) spec.hidden_activations.push_back(acts[rng.UniformIndex(2)]);
    }
    const ParameterSet p = ParameterSet::RandomInit(spec, rng);
    const Example ex{GaussianSample(rng, 0, 1, spec.input_dim()),
                     GaussianSample(rng, 0, 1, spec.output_dim())};
    const Vector analytic = Backward(spec, p, Forward(spec, p, ex.x), ex.t);
    const Vector numeric = NumericGradient(spec, p, ex, 1e-6);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double scale =
          std::max({1.0, std::abs(analytic[i]), std::abs(numeric[i])});
      EXPECT_LE(std::abs(analytic[i] - numeric[i]) / scale, 1e-6)
          << "seed " << s << " coordinate " << i;
    }
  }
}

TEST(BackwardTest, ReluAwayFromKinkMatchesFiniteDifferences) {
  const ModelSpec spec{{2, 3, 1}, {Activation::kRelu}, true};
  const ParameterSet p = ParameterSet::FromValues(
      spec, {1.0, 0.5, -1.0, 0.25, 0.3, 0.3, 0.1, -0.2, 0.3, 0.7, -0.4, 0.2, 0.05});
  const Example ex{{0.8, -0.6}, {0.4}};
  const Vector analytic = Backward(spec, p, Forward(spec, p, ex.x), ex.t);
  const Vector numeric = NumericGradient(spec, p, ex, 1e-6);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(analytic[i], numeric[i], 1e-6);
}

TEST(PerExampleGradientsTest, SingletonMatchesBackward) {
  const ModelSpec spec{{3, 4, 1}, {Activation::kTanh}, true};
  RngStream rng(8, 0);
  const ParameterSet p = ParameterSet::RandomInit(spec, rng);
  const std::vector<Example> batch = {{{0.1, 0.2, 0.3}, {1.0}}};
  const auto grads = PerExampleGradients(spec, p, batch);
  ASSERT_EQ(grads.size(), 1u);
  EXPECT_EQ(grads[0], Backward(spec, p, Forward(spec, p, batch[0].x), batch[0].t));
}

TEST(PerExampleGradientsTest, IdenticalExamplesGiveIdenticalGradients) {
  const ModelSpec spec = ModelSpec::LinearNeuron(2, true);
  const ParameterSet p = ParameterSet::FromValues(spec, {0.5, -1.0, 0.1});
  const Example ex{{2, 1}, {1}};
  const std::vector<Example> batch = {ex, ex};
  const auto grads = PerExampleGradients(spec, p, batch);
  EXPECT_EQ(grads[0], grads[1]);
}

TEST(BatchGradientTest, EqualsMeanOfPerExampleGradients) {
  const ModelSpec spec{{3, 5, 2}, {Activation::kTanh}, true};
  RngStream rng(12, 0);
  const ParameterSet p = ParameterSet::RandomInit(spec, rng);
  std::vector<Example> batch;
  for (int i = 0; i < 7; ++i) {
    batch.push_back({GaussianSample(rng, 0, 1, 3), GaussianSample(rng, 0, 1, 2)});
  }
  const Vector mean_grad = BatchGradient(spec, p, batch);
  const auto per = PerExampleGradients(spec, p, batch);
  for (std::size_t i = 0; i < p.size(); ++i) {
    double m = 0.0;
    for (const Vector& g : per) m += g[i];
    EXPECT_NEAR(mean_grad[i], m / per.size(), 1e-12);
  }
}

TEST(MeanLossTest, AveragesQuadraticLoss) {
  const ModelSpec spec = ModelSpec::LinearNeuron(1, false);
  const ParameterSet p = ParameterSet::FromValues(spec, {1.0});
  const std::vector<Example> batch = {{{1.0}, {0.0}}, {{3.0}, {1.0}}};
  EXPECT_EQ(MeanLoss(spec, p, batch), (1.0 + 4.0) / 2);
}

TEST(DatasetTest, ValidateCatchesRaggedExamples) {
  Dataset d{2, {{{1.0, 2.0}, {1.0}}, {{1.0}, {1.0}}}};
  EXPECT_THROW(d.Validate(), ParameterError);
}

}  // namespace
}  // namespace pdpreg
