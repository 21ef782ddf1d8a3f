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

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "pdpreg/errors.h"

namespace pdpreg {

void NoiseSpec::Validate() const {
  if (!(sigma >= 0.0)) {
    throw ParameterError("noise sigma must be nonnegative, got " +
                         std::to_string(sigma));
  }
  if (clip_c.has_value() && !(*clip_c > 0.0)) {
    throw ParameterError("clip threshold must be positive, got " +
                         std::to_string(*clip_c));
  }
}

double TrainConfig::EtaAt(std::size_t step) const {
  if (eta_schedule.empty()) return eta;
  return eta_schedule[std::min(step, eta_schedule.size() - 1)];
}

void TrainConfig::Validate() const {
  if (eta_schedule.empty() && !(eta > 0.0)) {
    throw ParameterError("learning rate must be positive");
  }
  for (double e : eta_schedule) {
    if (!(e > 0.0)) {
      throw ParameterError("learning-rate schedule entries must be positive");
    }
  }
  if (batch_size < 1) throw ParameterError("batch_size must be at least 1");
  if (epochs < 1) throw ParameterError("epochs must be at least 1");
  noise.Validate();
  reg.Validate();
}

bool TrainReport::SameOutcome(const TrainReport& other) const {
  return epoch_loss == other.epoch_loss && final_params == other.final_params &&
         epoch_params == other.epoch_params && records == other.records;
}

Vector ClipGradient(std::span<const double> g, double c) {
  if (!(c > 0.0)) {
    throw ParameterError("ClipGradient: threshold must be positive, got " +
                         std::to_string(c));
  }
  const double scale = std::max(1.0, Norm(g) / c);
  Vector out(g.begin(), g.end());
  if (scale > 1.0) {
    for (double& v : out) v /= scale;
  }
  return out;
}

Vector AddIidNoise(std::span<const double> g, double sigma, RngStream& rng) {
  if (!(sigma >= 0.0)) {
    throw ParameterError("AddIidNoise: sigma must be nonnegative");
  }
  const Vector eps = GaussianSample(rng, 0.0, sigma, g.size());
  Vector out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] + eps[i];
  return out;
}

Vector AddProportionalNoise(std::span<const double> g,
                            std::span<const double> params, double sigma,
                            RngStream& rng) {
  if (!(sigma >= 0.0)) {
    throw ParameterError("AddProportionalNoise: sigma must be nonnegative");
  }
  if (params.size() != g.size()) {
    throw ParameterError("AddProportionalNoise: gradient has length " +
                         std::to_string(g.size()) + ", parameters have " +
                         std::to_string(params.size()));
  }
  Vector out(g.begin(), g.end());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double z = rng.Normal();
    const double scale = params[i] * sigma;
    if (scale != 0.0) out[i] += scale * z;
  }
  return out;
}

Vector ApplyNoise(std::span<const double> g, std::span<const double> params,
                  const NoiseSpec& noise, RngStream& rng) {
  switch (noise.mode) {
    case NoiseMode::kNone:
      return Vector(g.begin(), g.end());
    case NoiseMode::kIid:
      return AddIidNoise(g, noise.sigma, rng);
    case NoiseMode::kProportional:
      return AddProportionalNoise(g, params, noise.sigma, rng);
  }
  return Vector(g.begin(), g.end());
}

ParameterSet SgdStep(const ParameterSet& params, std::span<const double> g_tilde,
                     double eta) {
  if (!(eta > 0.0)) throw ParameterError("SgdStep: eta must be positive");
  if (g_tilde.size() != params.size()) {
    throw ParameterError("SgdStep: gradient has length " +
                         std::to_string(g_tilde.size()) + ", parameters have " +
                         std::to_string(params.size()));
  }
  ParameterSet next = params;
  Vector& v = next.mutable_values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= eta * g_tilde[i];
  return next;
}

TrainReport Train(const ModelSpec& spec, const Dataset& data,
                  const TrainConfig& config) {
  RngStream init_rng(config.seed, kInitStream);
  return TrainFrom(spec, ParameterSet::RandomInit(spec, init_rng), data, config);
}

TrainReport TrainFrom(const ModelSpec& spec, const ParameterSet& initial,
                      const Dataset& data, const TrainConfig& config) {
  spec.Validate();
  config.Validate();
  data.Validate();
  if (data.empty()) throw ParameterError("Train: empty dataset");
  if (data.feature_dim != spec.input_dim()) {
    throw ParameterError("Train: dataset has " +
                         std::to_string(data.feature_dim) +
                         " features, model expects " +
                         std::to_string(spec.input_dim()));
  }
  if (data.examples.front().t.size() != spec.output_dim()) {
    throw ParameterError("Train: target dimension does not match model output");
  }
  if (config.batch_size > data.size()) {
    throw ParameterError("Train: batch_size exceeds dataset size");
  }
  if (!initial.SameLayout(ParameterSet::Zeros(spec))) {
    throw ParameterError("Train: initial parameters do not match the model");
  }

  RngStream shuffle_rng(config.seed, kShuffleStream);
  RngStream noise_rng(config.seed, kNoiseStream);

  TrainReport report;
  ParameterSet params = initial;
  std::vector<std::size_t> order(data.size());
  std::vector<Example> batch;
  std::size_t step = 0;
  double kappa = EffectiveKappa(config.reg, config.EtaAt(0), config.noise.sigma);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.UniformIndex(i)]);
    }

    for (std::size_t begin = 0; begin < order.size();
         begin += config.batch_size, ++step) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double eta = config.EtaAt(step);
      kappa = EffectiveKappa(config.reg, eta, config.noise.sigma);
      const Vector& theta = params.values();

      Vector mean(params.size(), 0.0);
      for (std::size_t k = begin; k < end; ++k) {
        const Example& ex = data.examples[order[k]];
        Vector g = Backward(spec, params, Forward(spec, params, ex.x), ex.t);
        if (config.reg.lambda != 0.0 || kappa != 0.0) {
          g = CombinedGrad(theta, PairedInputs(spec, params, ex.x),
                           config.reg.lambda, kappa, g);
        }
        if (config.reg.input_kappa != 0.0) {
          const Vector zero = DpInputGrad(theta, config.reg.input_kappa);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += zero[i];
        }
        if (config.noise.clip_c.has_value()) {
          g = ClipGradient(g, *config.noise.clip_c);
        }
        for (std::size_t i = 0; i < g.size(); ++i) mean[i] += g[i];
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (double& v : mean) v *= inv;

      Vector noisy = ApplyNoise(mean, theta, config.noise, noise_rng);

      if (config.record_gradients && report.records.size() < config.record_cap) {
        GradientRecord rec;
        rec.step = step;
        rec.clean = mean;
        rec.noisy = noisy;
        rec.batch_indices.assign(order.begin() + begin, order.begin() + end);
        rec.params_before = params;
        report.records.push_back(std::move(rec));
      }
      params = SgdStep(params, noisy, eta);
    }

    const double loss = MeanLoss(spec, params, data.examples) +
                        RegularizationPenalty(spec, params, data.examples,
                                              config.reg, kappa);
    report.epoch_loss.push_back(loss);
    report.epoch_params.push_back(params);
    report.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count());
  }
  report.final_params = std::move(params);
  return report;
}

}  // namespace pdpreg
