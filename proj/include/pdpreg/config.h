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

#ifndef PDPREG_CONFIG_H_
#define PDPREG_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdpreg/attack.h"
#include "pdpreg/dataset.h"
#include "pdpreg/model.h"
#include "pdpreg/optimizers.h"
#include "pdpreg/oracle.h"

namespace pdpreg {

struct DataConfig {
  // Either a generator (kind, n, d, noise_level, seed) or a CSV path.
  DatasetKind kind = DatasetKind::kLinearRegression;
  std::size_t n = 100;
  std::size_t d = 5;
  double noise_level = 0.0;
  uint64_t seed = 0;
  std::optional<std::string> path;
};

struct OracleConfig {
  // Random linear-neuron configurations for the post-update identities.
  std::size_t configs = 50;
  std::size_t replicas = 1000000;
  double z_threshold = kDefaultZThreshold;

  std::vector<double> moment_sigmas = {0.5, 1.0, 2.0};
  std::size_t moment_replicas = 1000000;

  std::size_t density_replicas = 1000000;
  std::size_t density_bins = 40;
  double density_max_z = 4.0;

  std::size_t trajectory_epochs = 10;
  std::size_t trajectory_examples = 100;
  std::size_t step_seeds = 10000;

  std::size_t gradcheck_instances = 100;
  double gradcheck_tolerance = 1e-8;
  double backward_tolerance = 1e-6;

  double regression_tolerance = 1e-6;
};

struct MembershipConfig {
  bool enabled = false;
  // First `members` examples train the model; the next `members` are
  // held out.
  std::size_t members = 50;
  std::size_t epochs = 20;
  std::size_t batch_size = 1;
  double eta = 0.05;
};

struct AttackConfig {
  std::vector<Mechanism> mechanisms;
  std::size_t trials = 30;
  SweepOptions sweep;
  MembershipConfig membership;
};

struct ExperimentConfig {
  std::string experiment_id;
  uint64_t seed = 0;
  ModelSpec model;
  bool has_model = false;
  DataConfig data;
  bool has_data = false;
  TrainConfig train;
  OracleConfig oracle;
  AttackConfig attack;
  std::string output_dir = "out";
  std::vector<std::string> report_inputs;
  // Directory relative paths in the config are resolved against.
  std::string base_dir = ".";
  // Canonical (sorted, compact) JSON of the effective config.
  std::string canonical;
};

// Parses and validates a config. Unknown keys, wrong types and invalid
// values throw ConfigError naming the dotted field path. seed_override
// replaces the top-level seed before anything derives from it.
ExperimentConfig ParseConfig(const std::string& text,
                             std::optional<uint64_t> seed_override = {},
                             const std::string& base_dir = ".");
ExperimentConfig LoadConfig(const std::string& path,
                            std::optional<uint64_t> seed_override = {});

// Resolves `path` against the config's base_dir unless absolute.
std::string ResolvePath(const ExperimentConfig& config, const std::string& path);

// 64-bit FNV-1a.
uint64_t Fnv1a64(const std::string& bytes);

}  // namespace pdpreg

#endif  // PDPREG_CONFIG_H_
