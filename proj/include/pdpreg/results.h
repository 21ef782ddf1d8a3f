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

#ifndef PDPREG_RESULTS_H_
#define PDPREG_RESULTS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pdpreg {

inline constexpr const char* kResultsHeader =
    "experiment_id,mechanism,metric,value,stderr,seed";

struct ResultRow {
  std::string experiment_id;
  std::string mechanism;
  std::string metric;
  double value = 0.0;
  std::optional<double> std_error;
  uint64_t seed = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

// The fixed metric vocabulary, sorted. Documented in the README.
const std::vector<std::string>& MetricVocabulary();
bool IsKnownMetric(const std::string& metric);

// Shortest round-trip-safe rendering ("%.17g").
std::string FormatDouble(double v);

// Throws ParameterError on unknown metrics or identifiers containing
// ',', '"', CR or LF.
void ValidateRow(const ResultRow& row);

std::string ResultsToCsv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> ResultsFromCsv(const std::string& text);

void WriteResultsCsv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> ReadResultsCsv(const std::string& path);

}  // namespace pdpreg

#endif  // PDPREG_RESULTS_H_
