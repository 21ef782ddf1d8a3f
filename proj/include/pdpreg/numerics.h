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

#ifndef PDPREG_NUMERICS_H_
#define PDPREG_NUMERICS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pdpreg {

using Vector = std::vector<double>;

// Deterministic pseudo-random stream identified by (seed, stream_id).
//
// The generator is xoshiro256** whose 256-bit state is filled by SplitMix64
// from a key that mixes both identifiers. Gaussian variates use the
// Box-Muller transform; the second variate of each pair is cached, so the
// sequence of Normal() calls is a pure function of (seed, stream_id). This
// algorithm is part of the public contract: changing it changes every frozen
// sequence in the test suite.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t stream_id);

  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_id_; }

  uint64_t NextU64();
  // Uniform on [0, 1) with 53 random bits.
  double Uniform01();
  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformIndex(uint64_t n);
  // Standard normal variate.
  double Normal();

 private:
  uint64_t seed_;
  uint64_t stream_id_;
  uint64_t state_[4];
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// SplitMix64 finalizer. Used to derive child seeds from (seed, tag) pairs.
uint64_t MixSeed(uint64_t seed, uint64_t tag);

// n i.i.d. draws from N(mean, std^2). std == 0 yields the constant `mean`
// (the stream still advances by n normals).
Vector GaussianSample(RngStream& rng, double mean, double std, std::size_t n);

// Raw moments of a sample. variance is the population form m2 - mean^2,
// computed from centered sums so it stays nonnegative.
struct MomentSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
  double variance = 0.0;
};

MomentSummary Moments(std::span<const double> samples);

// Streaming mean and variance (Welford) with Chan's pairwise merge.
class RunningStats {
 public:
  void Add(double x);
  void Merge(const RunningStats& other);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  // Unbiased sample variance; 0 when count < 2.
  double SampleVariance() const;
  // Standard error of the mean; 0 when count < 2.
  double StandardError() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Modified Bessel function of the second kind, order zero. Throws
// DomainError for z <= 0.
double BesselK0(double z);

// exp(z) * K0(z), finite for large z.
double BesselK0Scaled(double z);

namespace internal {
// Trapezoidal evaluation of exp(z) K0(z) from its cosh integral form. Used by
// BesselK0 above z = 2; exposed so tests can compare the two routes.
double BesselK0ScaledIntegral(double z);
}  // namespace internal

// Integral of f over [a, b] by composite Gauss-Legendre (20 nodes per panel).
double IntegrateGaussLegendre(const std::function<double(double)>& f, double a,
                              double b, int panels);

// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static DenseMatrix FromRows(const std::vector<Vector>& rows);
  static DenseMatrix Identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<const double> Row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  Vector Multiply(std::span<const double> x) const;
  DenseMatrix Transpose() const;
  DenseMatrix Multiply(const DenseMatrix& other) const;
  double MaxAbs() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Solves a x = b by LU factorization with partial pivoting. Throws
// SingularityError when a pivot drops below 1e-12 * max|a_ij|, and
// ParameterError on shape mismatch.
Vector SolveLinearSystem(const DenseMatrix& a, std::span<const double> b);

double Dot(std::span<const double> a, std::span<const double> b);
double SquaredNorm(std::span<const double> a);
double Norm(std::span<const double> a);

}  // namespace pdpreg

#endif  // PDPREG_NUMERICS_H_
