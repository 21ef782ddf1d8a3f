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

#include "pdpreg/regularizers.h"

#include <string>

#include "pdpreg/errors.h"

namespace pdpreg {
namespace {

void CheckCoefficient(const char* where, const char* name, double value) {
  if (!(value >= 0.0)) {
    throw ParameterError(std::string(where) + ": " + name +
                         " must be nonnegative, got " + std::to_string(value));
  }
}

void CheckPaired(const char* where, std::span<const double> params,
                 std::span<const double> paired) {
  if (params.size() != paired.size()) {
    throw ParameterError(std::string(where) + ": " +
                         std::to_string(params.size()) + " parameters but " +
                         std::to_string(paired.size()) + " paired inputs");
  }
}

}  // namespace

void RegSpec::Validate() const {
  CheckCoefficient("RegSpec", "lambda", lambda);
  CheckCoefficient("RegSpec", "kappa", kappa);
  CheckCoefficient("RegSpec", "input_kappa", input_kappa);
}

double EffectiveKappa(const RegSpec& reg, double eta, double sigma) {
  if (reg.kappa_mode == KappaMode::kExplicit) return reg.kappa;
  return eta * eta * sigma * sigma;
}

double L2Penalty(std::span<const double> params, double lambda) {
  CheckCoefficient("L2Penalty", "lambda", lambda);
  double s = 0.0;
  for (double v : params) s += v * v;
  return lambda * s;
}

Vector L2Grad(std::span<const double> params, double lambda) {
  CheckCoefficient("L2Grad", "lambda", lambda);
  Vector g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) g[i] = 2.0 * lambda * params[i];
  return g;
}

double DpInputPenalty(std::span<const double> x, double kappa) {
  CheckCoefficient("DpInputPenalty", "kappa", kappa);
  double s = 0.0;
  for (double v : x) s += v * v;
  return kappa * s;
}

Vector DpInputGrad(std::span<const double> params, double kappa) {
  CheckCoefficient("DpInputGrad", "kappa", kappa);
  return Vector(params.size(), 0.0);
}

double PdpPenalty(std::span<const double> params,
                  std::span<const double> paired_inputs, double kappa) {
  CheckCoefficient("PdpPenalty", "kappa", kappa);
  CheckPaired("PdpPenalty", params, paired_inputs);
  double s = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double px = params[i] * paired_inputs[i];
    s += px * px;
  }
  return kappa * s;
}

Vector PdpGrad(std::span<const double> params,
               std::span<const double> paired_inputs, double kappa) {
  CheckCoefficient("PdpGrad", "kappa", kappa);
  CheckPaired("PdpGrad", params, paired_inputs);
  Vector g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    g[i] = 2.0 * kappa * paired_inputs[i] * paired_inputs[i] * params[i];
  }
  return g;
}

Vector CombinedGrad(std::span<const double> params,
                    std::span<const double> paired_inputs, double lambda,
                    double kappa, std::span<const double> base_grad) {
  CheckCoefficient("CombinedGrad", "lambda", lambda);
  CheckCoefficient("CombinedGrad", "kappa", kappa);
  CheckPaired("CombinedGrad", params, paired_inputs);
  if (base_grad.size() != params.size()) {
    throw ParameterError("CombinedGrad: base gradient has length " +
                         std::to_string(base_grad.size()) + ", expected " +
                         std::to_string(params.size()));
  }
  Vector g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double x2 = paired_inputs[i] * paired_inputs[i];
    g[i] = base_grad[i] + 2.0 * (lambda + kappa * x2) * params[i];
  }
  return g;
}

Vector PairedInputs(const ModelSpec& spec, const ParameterSet& params,
                    std::span<const double> x) {
  const ForwardTrace trace = Forward(spec, params, x);
  Vector paired(params.size(), 1.0);
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const LayerBlock& b = params.blocks()[l];
    const Vector& input = trace.activations[l];
    for (std::size_t i = 0; i < b.fan_out; ++i) {
      for (std::size_t j = 0; j < b.fan_in; ++j) {
        paired[b.weight_offset + i * b.fan_in + j] = input[j];
      }
    }
  }
  return paired;
}

double PdpPenalty(const ModelSpec& spec, const ParameterSet& params,
                  std::span<const double> x, double kappa) {
  return PdpPenalty(params.values(), PairedInputs(spec, params, x), kappa);
}

Vector PdpGrad(const ModelSpec& spec, const ParameterSet& params,
               std::span<const double> x, double kappa) {
  return PdpGrad(params.values(), PairedInputs(spec, params, x), kappa);
}

double RegularizationPenalty(const ModelSpec& spec, const ParameterSet& params,
                             std::span<const Example> batch, const RegSpec& reg,
                             double kappa) {
  if (batch.empty()) throw ParameterError("RegularizationPenalty: empty batch");
  const double l2 = L2Penalty(params.values(), reg.lambda);
  double total = 0.0;
  for (const Example& ex : batch) {
    total += l2;
    if (kappa != 0.0) total += PdpPenalty(spec, params, ex.x, kappa);
    if (reg.input_kappa != 0.0) total += DpInputPenalty(ex.x, reg.input_kappa);
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace pdpreg
