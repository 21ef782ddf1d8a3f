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

#include <cmath>
#include <string>
#include <utility>

#include "pdpreg/errors.h"

namespace pdpreg {
namespace {

double Apply(Activation act, double z) {
  switch (act) {
    case Activation::kIdentity:
      return z;
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
  }
  return z;
}

// Derivative expressed through the pre-activation z and activation a.
double Derivative(Activation act, double z, double a) {
  switch (act) {
    case Activation::kIdentity:
      return 1.0;
    case Activation::kTanh:
      return 1.0 - a * a;
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

Activation LayerActivation(const ModelSpec& spec, std::size_t layer) {
  return layer + 1 < spec.num_layers() ? spec.hidden_activations[layer]
                                       : Activation::kIdentity;
}

void CheckShapes(const ModelSpec& spec, const ParameterSet& params) {
  if (params.blocks().size() != spec.num_layers()) {
    throw ParameterError("parameter set does not match model layer count");
  }
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const LayerBlock& b = params.blocks()[l];
    if (b.fan_in != spec.layer_sizes[l] ||
        b.fan_out != spec.layer_sizes[l + 1] ||
        b.has_bias != spec.include_bias) {
      throw ParameterError("parameter layout does not match model at layer " +
                           std::to_string(l));
    }
  }
}

// Adds scale * dLoss/dparams for one example into grad.
void AccumulateBackward(const ModelSpec& spec, const ParameterSet& params,
                        const ForwardTrace& trace, std::span<const double> t,
                        double scale, Vector& grad) {
  const std::size_t layers = spec.num_layers();
  if (trace.depth() != layers || trace.activations.size() != layers + 1) {
    throw ParameterError("Backward: trace depth does not match the model");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    if (trace.activations[l].size() != spec.layer_sizes[l] ||
        trace.pre_activations[l].size() != spec.layer_sizes[l + 1]) {
      throw ParameterError("Backward: trace shape does not match the model");
    }
  }
  const Vector& y = trace.output();
  if (t.size() != y.size()) {
    throw ParameterError("Backward: target has dimension " +
                         std::to_string(t.size()) + ", output has " +
                         std::to_string(y.size()));
  }

  Vector delta(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) delta[i] = scale * 2.0 * (y[i] - t[i]);

  const Vector& values = params.values();
  for (std::size_t l = layers; l-- > 0;) {
    const LayerBlock& block = params.blocks()[l];
    const Vector& input = trace.activations[l];
    for (std::size_t i = 0; i < block.fan_out; ++i) {
      double* row = grad.data() + block.weight_offset + i * block.fan_in;
      for (std::size_t j = 0; j < block.fan_in; ++j) row[j] += delta[i] * input[j];
      if (block.has_bias) grad[block.bias_offset + i] += delta[i];
    }
    if (l == 0) break;
    Vector prev(block.fan_in, 0.0);
    for (std::size_t i = 0; i < block.fan_out; ++i) {
      const double* row = values.data() + block.weight_offset + i * block.fan_in;
      for (std::size_t j = 0; j < block.fan_in; ++j) prev[j] += row[j] * delta[i];
    }
    const Activation act = LayerActivation(spec, l - 1);
    for (std::size_t j = 0; j < prev.size(); ++j) {
      prev[j] *= Derivative(act, trace.pre_activations[l - 1][j],
                            trace.activations[l][j]);
    }
    delta = std::move(prev);
  }
}

}  // namespace

bool ModelSpec::IsLinearNeuron() const {
  return layer_sizes.size() == 2 && layer_sizes[1] == 1;
}

void ModelSpec::Validate() const {
  if (layer_sizes.size() < 2) {
    throw ParameterError("model needs at least one layer transition");
  }
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ParameterError("model layer sizes must be positive");
  }
  if (hidden_activations.size() != layer_sizes.size() - 2) {
    throw ParameterError("model needs one activation per hidden layer (got " +
                         std::to_string(hidden_activations.size()) +
                         ", expected " + std::to_string(layer_sizes.size() - 2) +
                         ")");
  }
}

ModelSpec ModelSpec::LinearNeuron(std::size_t input_dim, bool include_bias) {
  return ModelSpec{{input_dim, 1}, {}, include_bias};
}

std::vector<LayerBlock> ParameterSet::Layout(const ModelSpec& spec) {
  spec.Validate();
  std::vector<LayerBlock> blocks;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    LayerBlock b;
    b.fan_in = spec.layer_sizes[l];
    b.fan_out = spec.layer_sizes[l + 1];
    b.weight_offset = offset;
    b.bias_offset = offset + b.fan_in * b.fan_out;
    b.has_bias = spec.include_bias;
    offset = b.bias_offset + (b.has_bias ? b.fan_out : 0);
    blocks.push_back(b);
  }
  return blocks;
}

ParameterSet ParameterSet::Zeros(const ModelSpec& spec) {
  ParameterSet p;
  p.blocks_ = Layout(spec);
  const LayerBlock& last = p.blocks_.back();
  p.values_.assign(last.bias_offset + (last.has_bias ? last.fan_out : 0), 0.0);
  return p;
}

ParameterSet ParameterSet::RandomInit(const ModelSpec& spec, RngStream& rng) {
  ParameterSet p = Zeros(spec);
  for (const LayerBlock& b : p.blocks_) {
    const double r = 1.0 / std::sqrt(static_cast<double>(b.fan_in));
    const std::size_t end = b.bias_offset + (b.has_bias ? b.fan_out : 0);
    for (std::size_t i = b.weight_offset; i < end; ++i) {
      p.values_[i] = r * (2.0 * rng.Uniform01() - 1.0);
    }
  }
  return p;
}

ParameterSet ParameterSet::FromValues(const ModelSpec& spec, Vector values) {
  ParameterSet p = Zeros(spec);
  if (values.size() != p.values_.size()) {
    throw ParameterError("parameter vector has length " +
                         std::to_string(values.size()) + ", model needs " +
                         std::to_string(p.values_.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ParameterError("parameter is not finite");
  }
  p.values_ = std::move(values);
  return p;
}

std::span<const double> ParameterSet::Weights(std::size_t layer) const {
  const LayerBlock& b = blocks_.at(layer);
  return {values_.data() + b.weight_offset, b.fan_in * b.fan_out};
}

std::span<const double> ParameterSet::Bias(std::size_t layer) const {
  const LayerBlock& b = blocks_.at(layer);
  if (!b.has_bias) return {};
  return {values_.data() + b.bias_offset, b.fan_out};
}

bool ParameterSet::SameLayout(const ParameterSet& other) const {
  if (blocks_.size() != other.blocks_.size() ||
      values_.size() != other.values_.size()) {
    return false;
  }
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const LayerBlock& a = blocks_[l];
    const LayerBlock& b = other.blocks_[l];
    if (a.fan_in != b.fan_in || a.fan_out != b.fan_out ||
        a.has_bias != b.has_bias) {
      return false;
    }
  }
  return true;
}

void Dataset::Validate() const {
  std::size_t target_dim = examples.empty() ? 0 : examples.front().t.size();
  for (std::size_t n = 0; n < examples.size(); ++n) {
    if (examples[n].x.size() != feature_dim) {
      throw ParameterError("example " + std::to_string(n) + " has " +
                           std::to_string(examples[n].x.size()) +
                           " features, dataset declares " +
                           std::to_string(feature_dim));
    }
    if (examples[n].t.size() != target_dim) {
      throw ParameterError("example " + std::to_string(n) +
                           " has inconsistent target dimension");
    }
  }
}

ForwardTrace Forward(const ModelSpec& spec, const ParameterSet& params,
                     std::span<const double> x) {
  CheckShapes(spec, params);
  if (x.size() != spec.input_dim()) {
    throw ParameterError("Forward: input has dimension " +
                         std::to_string(x.size()) + ", model expects " +
                         std::to_string(spec.input_dim()));
  }
  ForwardTrace trace;
  trace.activations.emplace_back(x.begin(), x.end());
  const Vector& values = params.values();
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const LayerBlock& block = params.blocks()[l];
    const Vector& input = trace.activations.back();
    Vector z(block.fan_out);
    for (std::size_t i = 0; i < block.fan_out; ++i) {
      const double* row = values.data() + block.weight_offset + i * block.fan_in;
      double acc = 0.0;
      for (std::size_t j = 0; j < block.fan_in; ++j) acc += row[j] * input[j];
      if (block.has_bias) acc += values[block.bias_offset + i];
      z[i] = acc;
    }
    const Activation act = LayerActivation(spec, l);
    Vector a(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = Apply(act, z[i]);
    trace.pre_activations.push_back(std::move(z));
    trace.activations.push_back(std::move(a));
  }
  return trace;
}

double QuadraticLoss(std::span<const double> y, std::span<const double> t) {
  if (y.size() != t.size()) {
    throw ParameterError("QuadraticLoss: output has dimension " +
                         std::to_string(y.size()) + ", target has " +
                         std::to_string(t.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - t[i]) * (y[i] - t[i]);
  return s;
}

Vector Backward(const ModelSpec& spec, const ParameterSet& params,
                const ForwardTrace& trace, std::span<const double> t) {
  CheckShapes(spec, params);
  Vector grad(params.size(), 0.0);
  AccumulateBackward(spec, params, trace, t, 1.0, grad);
  return grad;
}

std::vector<Vector> PerExampleGradients(const ModelSpec& spec,
                                        const ParameterSet& params,
                                        std::span<const Example> batch) {
  if (batch.empty()) throw ParameterError("PerExampleGradients: empty batch");
  std::vector<Vector> grads;
  grads.reserve(batch.size());
  for (const Example& ex : batch) {
    grads.push_back(Backward(spec, params, Forward(spec, params, ex.x), ex.t));
  }
  return grads;
}

Vector BatchGradient(const ModelSpec& spec, const ParameterSet& params,
                     std::span<const Example> batch) {
  if (batch.empty()) throw ParameterError("BatchGradient: empty batch");
  Vector grad(params.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const Example& ex : batch) {
    AccumulateBackward(spec, params, Forward(spec, params, ex.x), ex.t, scale,
                       grad);
  }
  return grad;
}

double MeanLoss(const ModelSpec& spec, const ParameterSet& params,
                std::span<const Example> batch) {
  if (batch.empty()) throw ParameterError("MeanLoss: empty batch");
  double total = 0.0;
  for (const Example& ex : batch) {
    total += QuadraticLoss(Forward(spec, params, ex.x).output(), ex.t);
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace pdpreg
