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

#include "pdpreg/dataset.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "pdpreg/errors.h"

namespace pdpreg {
namespace {

constexpr uint64_t kFeatureStream = 11;
constexpr uint64_t kWeightStream = 12;
constexpr uint64_t kTargetNoiseStream = 13;

void Standardize(std::vector<Vector>& rows, std::size_t d) {
  const double n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const Vector& r : rows) mean += r[j];
    mean /= n;
    double var = 0.0;
    for (const Vector& r : rows) var += (r[j] - mean) * (r[j] - mean);
    var /= n;
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (Vector& r : rows) r[j] = (r[j] - mean) * scale;
  }
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

DatasetKind ParseDatasetKind(const std::string& name) {
  if (name == "linear_regression") return DatasetKind::kLinearRegression;
  if (name == "noisy_linear") return DatasetKind::kNoisyLinear;
  if (name == "clusters") return DatasetKind::kClusters;
  throw ParameterError("unknown dataset kind '" + name +
                       "' (expected linear_regression, noisy_linear or "
                       "clusters)");
}

std::string DatasetKindName(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kLinearRegression:
      return "linear_regression";
    case DatasetKind::kNoisyLinear:
      return "noisy_linear";
    case DatasetKind::kClusters:
      return "clusters";
  }
  return "unknown";
}

Vector HiddenWeights(std::size_t d, uint64_t seed) {
  RngStream rng(seed, kWeightStream);
  return GaussianSample(rng, 0.0, 1.0, d);
}

Dataset GenerateDataset(DatasetKind kind, std::size_t n, std::size_t d,
                        double noise_level, uint64_t seed) {
  if (n < 1 || d < 1) throw ParameterError("GenerateDataset: n and d must be >= 1");
  if (!(noise_level >= 0.0)) {
    throw ParameterError("GenerateDataset: noise_level must be nonnegative");
  }
  RngStream features(seed, kFeatureStream);
  std::vector<Vector> rows(n);
  Vector labels(n, 0.0);
  if (kind == DatasetKind::kClusters) {
    const double offset = 2.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = i % 2 == 0 ? 1.0 : -1.0;
      rows[i] = GaussianSample(features, labels[i] * offset, noise_level, d);
    }
  } else {
    for (Vector& r : rows) r = GaussianSample(features, 0.0, 1.0, d);
  }
  Standardize(rows, d);

  Dataset data;
  data.feature_dim = d;
  data.examples.reserve(n);
  if (kind == DatasetKind::kClusters) {
    for (std::size_t i = 0; i < n; ++i) {
      data.examples.push_back({std::move(rows[i]), {labels[i]}});
    }
    return data;
  }
  const Vector w = HiddenWeights(d, seed);
  RngStream target_noise(seed, kTargetNoiseStream);
  for (Vector& r : rows) {
    double t = Dot(w, r);
    if (kind == DatasetKind::kNoisyLinear) t += noise_level * target_noise.Normal();
    data.examples.push_back({std::move(r), {t}});
  }
  return data;
}

Dataset ReadDatasetCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open dataset file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw ParameterError("dataset file '" + path + "' is empty");
  }
  const std::vector<std::string> header = SplitCsvLine(line);
  if (header.size() < 2 || header.back() != "t") {
    throw ParameterError("dataset header must be x0,...,x{d-1},t");
  }
  Dataset data;
  data.feature_dim = header.size() - 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = SplitCsvLine(line);
    if (fields.size() != header.size()) {
      throw ParameterError("dataset line " + std::to_string(line_no) +
                           " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(header.size()));
    }
    Example ex;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      char* end = nullptr;
      const double v = std::strtod(fields[j].c_str(), &end);
      if (fields[j].empty() || *end != '\0' || !std::isfinite(v)) {
        throw ParameterError("dataset line " + std::to_string(line_no) +
                             ": bad number '" + fields[j] + "'");
      }
      (j + 1 < fields.size() ? ex.x : ex.t).push_back(v);
    }
    data.examples.push_back(std::move(ex));
  }
  return data;
}

void WriteDatasetCsv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write dataset file '" + path + "'");
  for (std::size_t j = 0; j < data.feature_dim; ++j) out << 'x' << j << ',';
  out << "t\n";
  char buf[32];
  for (const Example& ex : data.examples) {
    for (double v : ex.x) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << ',';
    }
    std::snprintf(buf, sizeof(buf), "%.17g", ex.t.at(0));
    out << buf << '\n';
  }
}

std::pair<Dataset, Dataset> SplitDataset(const Dataset& data,
                                         std::size_t count) {
  if (count > data.size()) throw ParameterError("SplitDataset: count too large");
  Dataset head{data.feature_dim, {}};
  Dataset tail{data.feature_dim, {}};
  for (std::size_t i = 0; i < data.size(); ++i) {
    (i < count ? head : tail).examples.push_back(data.examples[i]);
  }
  return {std::move(head), std::move(tail)};
}

}  // namespace pdpreg
