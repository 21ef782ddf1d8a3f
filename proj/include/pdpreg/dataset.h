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

#ifndef PDPREG_DATASET_H_
#define PDPREG_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "pdpreg/model.h"
#include "pdpreg/numerics.h"

namespace pdpreg {

enum class DatasetKind {
  // t = w* . x with x standardized and w* hidden.
  kLinearRegression,
  // As kLinearRegression plus N(0, noise_level^2) on t.
  kNoisyLinear,
  // Two Gaussian blobs with targets +1 / -1, blob spread noise_level.
  kClusters,
};

// Throws ParameterError on an unknown name.
DatasetKind ParseDatasetKind(const std::string& name);
std::string DatasetKindName(DatasetKind kind);

// Features are standardized to mean 0 and (population) variance 1 per
// column before targets are formed.
Dataset GenerateDataset(DatasetKind kind, std::size_t n, std::size_t d,
                        double noise_level, uint64_t seed);

// The hidden weights used by the linear generators for (d, seed).
Vector HiddenWeights(std::size_t d, uint64_t seed);

// CSV with header x0,...,x{d-1},t and one scalar target per row.
Dataset ReadDatasetCsv(const std::string& path);
void WriteDatasetCsv(const std::string& path, const Dataset& data);

// Splits off the first `count` examples.
std::pair<Dataset, Dataset> SplitDataset(const Dataset& data, std::size_t count);

}  // namespace pdpreg

#endif  // PDPREG_DATASET_H_
