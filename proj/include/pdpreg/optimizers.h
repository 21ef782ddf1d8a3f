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

#ifndef PDPREG_OPTIMIZERS_H_
#define PDPREG_OPTIMIZERS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pdpreg/model.h"
#include "pdpreg/numerics.h"
#include "pdpreg/regularizers.h"

namespace pdpreg {

enum class NoiseMode {
  kNone,
  // epsilon_i ~ N(0, sigma^2), shared scale for every coordinate.
  kIid,
  // epsilon_i ~ N(0, (theta_i sigma)^2), theta taken before the update.
  kProportional,
};

struct NoiseSpec {
  NoiseMode mode = NoiseMode::kNone;
  double sigma = 0.0;
  // Per-example l2 clipping threshold; disabled when empty.
  std::optional<double> clip_c;

  void Validate() const;
};

// Substream identifiers under TrainConfig::seed.
inline constexpr uint64_t kInitStream = 1;
inline constexpr uint64_t kShuffleStream = 2;
inline constexpr uint64_t kNoiseStream = 3;

struct TrainConfig {
  double eta = 0.01;
  // Per-step learning rates; the last entry repeats once exhausted. Empty
  // means a constant eta.
  std::vector<double> eta_schedule;
  std::size_t batch_size = 1;
  std::size_t epochs = 1;
  uint64_t seed = 0;
  NoiseSpec noise;
  RegSpec reg;
  bool record_gradients = false;
  std::size_t record_cap = 128;

  double EtaAt(std::size_t step) const;
  void Validate() const;
};

// One optimizer step as seen from outside: `clean` is the averaged (and
// optionally clipped) gradient including regularizer terms, `noisy` is what
// the update actually used.
struct GradientRecord {
  std::size_t step = 0;
  Vector clean;
  Vector noisy;
  std::vector<std::size_t> batch_indices;
  ParameterSet params_before;

  friend bool operator==(const GradientRecord&,
                         const GradientRecord&) = default;
};

struct TrainReport {
  // Mean data loss plus regularization penalty over the whole dataset,
  // evaluated after each epoch.
  std::vector<double> epoch_loss;
  ParameterSet final_params;
  // Parameters after each epoch.
  std::vector<ParameterSet> epoch_params;
  std::vector<GradientRecord> records;
  std::vector<double> epoch_seconds;

  // Equality on everything except wall-clock time.
  bool SameOutcome(const TrainReport& other) const;
};

// g / max(1, ||g|| / c).
Vector ClipGradient(std::span<const double> g, double c);

Vector AddIidNoise(std::span<const double> g, double sigma, RngStream& rng);

Vector AddProportionalNoise(std::span<const double> g,
                            std::span<const double> params, double sigma,
                            RngStream& rng);

// Dispatches on noise.mode. Clipping is not applied here.
Vector ApplyNoise(std::span<const double> g, std::span<const double> params,
                  const NoiseSpec& noise, RngStream& rng);

// theta - eta * g_tilde.
ParameterSet SgdStep(const ParameterSet& params, std::span<const double> g_tilde,
                     double eta);

// Trains from a seeded random initialization (stream kInitStream).
TrainReport Train(const ModelSpec& spec, const Dataset& data,
                  const TrainConfig& config);

// Trains from the given parameters. Each step: per-example data gradient,
// plus regularizer gradient, optional per-example clip, batch mean, noise
// once on the mean, then the SGD update.
TrainReport TrainFrom(const ModelSpec& spec, const ParameterSet& initial,
                      const Dataset& data, const TrainConfig& config);

}  // namespace pdpreg

#endif  // PDPREG_OPTIMIZERS_H_
