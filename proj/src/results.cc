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

#include "pdpreg/results.h"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pdpreg/errors.h"

namespace pdpreg {
namespace {

bool HasForbiddenChar(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

double ParseDouble(const std::string& field, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || *end != '\0') {
    throw ParameterError("results line " + std::to_string(line_no) +
                         ": bad number '" + field + "'");
  }
  return v;
}

uint64_t ParseSeed(const std::string& field, std::size_t line_no) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(field.c_str(), &end, 10);
  if (field.empty() || *end != '\0' || errno == ERANGE || field[0] == '-') {
    throw ParameterError("results line " + std::to_string(line_no) +
                         ": bad seed '" + field + "'");
  }
  return static_cast<uint64_t>(v);
}

}  // namespace

const std::vector<std::string>& MetricVocabulary() {
  static const std::vector<std::string> kVocabulary = [] {
    std::vector<std::string> v = {
        // Monte Carlo identity checks.
        "analytic", "mc_mean", "z", "effect_z", "pass",
        // Deterministic checks.
        "expected", "observed", "abs_error", "rel_error",
        // Density histogram.
        "max_bin_z", "chi_square", "dof", "max_symmetry_z",
        // Training.
        "epoch_loss", "final_loss", "param_norm", "oracle_max_abs_diff",
        // Attacks.
        "closed_form_mse_mean", "closed_form_mse_median",
        "closed_form_cosine_mean", "closed_form_cosine_median",
        "closed_form_success_rate",
        "iterative_mse_mean", "iterative_mse_median",
        "iterative_cosine_mean", "iterative_cosine_median",
        "iterative_success_rate",
        "mia_auc", "mia_accuracy",
        // Report aggregation.
        "count",
    };
    std::sort(v.begin(), v.end());
    return v;
  }();
  return kVocabulary;
}

bool IsKnownMetric(const std::string& metric) {
  const auto& v = MetricVocabulary();
  return std::binary_search(v.begin(), v.end(), metric);
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ValidateRow(const ResultRow& row) {
  if (!IsKnownMetric(row.metric)) {
    throw ParameterError("unknown metric '" + row.metric + "'");
  }
  if (HasForbiddenChar(row.experiment_id) || HasForbiddenChar(row.mechanism)) {
    throw ParameterError("result identifiers may not contain ',', '\"' or newlines");
  }
}

std::string ResultsToCsv(const std::vector<ResultRow>& rows) {
  std::string out = kResultsHeader;
  out += '\n';
  for (const ResultRow& row : rows) {
    ValidateRow(row);
    out += row.experiment_id;
    out += ',';
    out += row.mechanism;
    out += ',';
    out += row.metric;
    out += ',';
    out += FormatDouble(row.value);
    out += ',';
    if (row.std_error) out += FormatDouble(*row.std_error);
    out += ',';
    out += std::to_string(row.seed);
    out += '\n';
  }
  return out;
}

std::vector<ResultRow> ResultsFromCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw ParameterError(std::string("results header must be '") +
                         kResultsHeader + "'");
  }
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 6) {
      throw ParameterError("results line " + std::to_string(line_no) +
                           ": expected 6 fields");
    }
    ResultRow row;
    row.experiment_id = f[0];
    row.mechanism = f[1];
    row.metric = f[2];
    row.value = ParseDouble(f[3], line_no);
    if (!f[4].empty()) row.std_error = ParseDouble(f[4], line_no);
    row.seed = ParseSeed(f[5], line_no);
    ValidateRow(row);
    rows.push_back(std::move(row));
  }
  return rows;
}

void WriteResultsCsv(const std::string& path, const std::vector<ResultRow>& rows) {
  const std::string text = ResultsToCsv(rows);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write results file '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing results file '" + path + "'");
}

std::vector<ResultRow> ReadResultsCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open results file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ResultsFromCsv(ss.str());
}

}  // namespace pdpreg
