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

#ifndef PDPREG_REGULARIZERS_H_
#define PDPREG_REGULARIZERS_H_

#include <span>

#include "pdpreg/model.h"
#include "pdpreg/numerics.h"

namespace pdpreg {

enum class KappaMode {
  kExplicit,
  // kappa = eta_t^2 * sigma^2, recomputed at every step from the current
  // learning rate and the configured noise scale.
  kDerived,
};

struct RegSpec {
  double lambda = 0.0;  // L2 weight
  double kappa = 0.0;   // proportional (theta^2 x^2) weight
  KappaMode kappa_mode = KappaMode::kExplicit;
  // Weight of the input-only term kappa * sum x^2. It shifts the loss but
  // never the parameters.
  double input_kappa = 0.0;

  bool enabled() const {
    return lambda != 0.0 || kappa != 0.0 || input_kappa != 0.0 ||
           kappa_mode == KappaMode::kDerived;
  }
  void Validate() const;
};

// kappa in effect for a step with learning rate eta and noise scale sigma.
double EffectiveKappa(const RegSpec& reg, double eta, double sigma);

// lambda * sum theta_i^2.
double L2Penalty(std::span<const double> params, double lambda);
// 2 lambda theta_i.
Vector L2Grad(std::span<const double> params, double lambda);

// kappa * sum x_i^2. Independent of the parameters.
double DpInputPenalty(std::span<const double> x, double kappa);
// Parameter gradient of DpInputPenalty: the zero vector of params' length.
Vector DpInputGrad(std::span<const double> params, double kappa);

// kappa * sum theta_i^2 x_i^2, where x_i is the input paired with theta_i.
double PdpPenalty(std::span<const double> params,
                  std::span<const double> paired_inputs, double kappa);
// 2 kappa x_i^2 theta_i.
Vector PdpGrad(std::span<const double> params,
               std::span<const double> paired_inputs, double kappa);

// base_grad_i + 2 (lambda + kappa x_i^2) theta_i.
Vector CombinedGrad(std::span<const double> params,
                    std::span<const double> paired_inputs, double lambda,
                    double kappa, std::span<const double> base_grad);

// The input each parameter multiplies on a forward pass of x: weight
// W(l)_ij pairs with the layer input a(l)_j, every bias pairs with 1. For a
// linear neuron without bias this is x itself.
Vector PairedInputs(const ModelSpec& spec, const ParameterSet& params,
                    std::span<const double> x);

// Model-level forms. Activations are treated as data: the gradient is the
// coordinate-wise 2 kappa a_j^2 W_ij and does not flow through a(l).
double PdpPenalty(const ModelSpec& spec, const ParameterSet& params,
                  std::span<const double> x, double kappa);
Vector PdpGrad(const ModelSpec& spec, const ParameterSet& params,
               std::span<const double> x, double kappa);

// Batch mean of lambda*|theta|^2 + kappa*sum theta^2 p^2 + input_kappa*|x|^2.
double RegularizationPenalty(const ModelSpec& spec, const ParameterSet& params,
                             std::span<const Example> batch, const RegSpec& reg,
                             double kappa);

}  // namespace pdpreg

#endif  // PDPREG_REGULARIZERS_H_
