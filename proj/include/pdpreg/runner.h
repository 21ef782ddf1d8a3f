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

#ifndef PDPREG_RUNNER_H_
#define PDPREG_RUNNER_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pdpreg/config.h"
#include "pdpreg/model.h"
#include "pdpreg/results.h"

namespace pdpreg {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutDirEnv = "PDPREG_OUT_DIR";

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// Loads data.path or runs the configured generator.
Dataset LoadData(const ExperimentConfig& config);

// Subcommand bodies. Each returns the rows written to the results CSV.
std::vector<ResultRow> RunTrain(const ExperimentConfig& config);
// Every identity check, one group of rows per check; each group carries a
// "pass" row with value 1 or 0.
std::vector<ResultRow> RunVerify(const ExperimentConfig& config);
std::vector<ResultRow> RunAttack(const ExperimentConfig& config);
std::vector<ResultRow> RunMoments(const ExperimentConfig& config);
// Groups the input rows by (experiment_id, mechanism, metric) in first-seen
// order. Each group becomes its mean (stderr = sample sd / sqrt(n) when
// n > 1) plus a "count" row.
std::vector<ResultRow> RunReport(const ExperimentConfig& config);

// The "pass" rows whose value is not 1, as "experiment_id/mechanism".
std::vector<std::string> FailedChecks(const std::vector<ResultRow>& rows);

struct RunOptions {
  std::string subcommand;
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<uint64_t> seed;
};

// Loads the config, runs the subcommand, writes <out>/results.csv (or
// report.csv) and <out>/manifest.json. Output directory precedence:
// --out, then $PDPREG_OUT_DIR, then output.dir. Errors go to `err` as one
// line of JSON. Returns kExitOk, kExitRuntime or kExitConfig.
int Run(const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace pdpreg

#endif  // PDPREG_RUNNER_H_
