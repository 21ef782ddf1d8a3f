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

#ifndef PDPREG_MODEL_H_
#define PDPREG_MODEL_H_

#include <cstddef>
#include <span>
#include <vector>

#include "pdpreg/numerics.h"

namespace pdpreg {

enum class Activation { kIdentity, kTanh, kRelu };

// Fully connected network. layer_sizes[0] is the input dimension; each
// subsequent entry is a layer's output width. hidden_activations has one
// entry per hidden layer; the output layer is always identity.
struct ModelSpec {
  std::vector<std::size_t> layer_sizes;
  std::vector<Activation> hidden_activations;
  bool include_bias = false;

  std::size_t num_layers() const {
    return layer_sizes.empty() ? 0 : layer_sizes.size() - 1;
  }
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }

  // A single identity layer with scalar output: y = theta . x (+ b).
  bool IsLinearNeuron() const;

  // Throws ParameterError if the spec violates its invariants.
  void Validate() const;

  static ModelSpec LinearNeuron(std::size_t input_dim, bool include_bias);
};

// Location of one layer's parameters inside the flat vector. Weights are
// stored row-major as (fan_out x fan_in); the bias block follows them.
struct LayerBlock {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;  // == weight_offset + fan_in * fan_out
  bool has_bias = false;

  friend bool operator==(const LayerBlock&, const LayerBlock&) = default;
};

class ParameterSet {
 public:
  ParameterSet() = default;

  static ParameterSet Zeros(const ModelSpec& spec);
  // Uniform in [-r, r], r = 1 / sqrt(fan_in), for weights and biases alike.
  static ParameterSet RandomInit(const ModelSpec& spec, RngStream& rng);
  // Wraps explicit values; throws ParameterError if the length is wrong or
  // an entry is not finite.
  static ParameterSet FromValues(const ModelSpec& spec, Vector values);

  std::size_t size() const { return values_.size(); }
  const Vector& values() const { return values_; }
  Vector& mutable_values() { return values_; }
  const std::vector<LayerBlock>& blocks() const { return blocks_; }

  double operator[](std::size_t i) const { return values_[i]; }

  std::span<const double> Weights(std::size_t layer) const;
  std::span<const double> Bias(std::size_t layer) const;

  bool SameLayout(const ParameterSet& other) const;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  static std::vector<LayerBlock> Layout(const ModelSpec& spec);

  Vector values_;
  std::vector<LayerBlock> blocks_;
};

struct Example {
  Vector x;
  Vector t;
};

struct Dataset {
  std::size_t feature_dim = 0;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  // Throws ParameterError when examples disagree on dimensions.
  void Validate() const;
};

// activations[0] is the input; activations[l + 1] = act(pre_activations[l]).
struct ForwardTrace {
  std::vector<Vector> pre_activations;
  std::vector<Vector> activations;

  const Vector& output() const { return activations.back(); }
  std::size_t depth() const { return pre_activations.size(); }
};

ForwardTrace Forward(const ModelSpec& spec, const ParameterSet& params,
                     std::span<const double> x);

// Squared Euclidean distance ||y - t||^2.
double QuadraticLoss(std::span<const double> y, std::span<const double> t);

// Gradient of QuadraticLoss(Forward(x).output(), t) with respect to params.
Vector Backward(const ModelSpec& spec, const ParameterSet& params,
                const ForwardTrace& trace, std::span<const double> t);

std::vector<Vector> PerExampleGradients(const ModelSpec& spec,
                                        const ParameterSet& params,
                                        std::span<const Example> batch);

// Gradient of the mean loss over the batch, accumulated in one backward
// sweep per example with the 1/B factor folded into the output delta.
Vector BatchGradient(const ModelSpec& spec, const ParameterSet& params,
                     std::span<const Example> batch);

// Mean quadratic loss over the batch.
double MeanLoss(const ModelSpec& spec, const ParameterSet& params,
                std::span<const Example> batch);

}  // namespace pdpreg

#endif  // PDPREG_MODEL_H_
