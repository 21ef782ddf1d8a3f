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

#include "pdpreg/numerics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "pdpreg/errors.h"

namespace pdpreg {
namespace {

uint64_t SplitMix64(uint64_t& x) {
  uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t Rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// Nodes and weights of the 20-point Gauss-Legendre rule on [-1, 1], found by
// Newton iteration on P_20.
struct GaussLegendreRule {
  static constexpr int kOrder = 20;
  std::array<double, kOrder> nodes{};
  std::array<double, kOrder> weights{};

  GaussLegendreRule() {
    for (int i = 0; i < kOrder; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (kOrder + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= kOrder; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = kOrder * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

const GaussLegendreRule& Rule() {
  static const GaussLegendreRule rule;
  return rule;
}

// Ascending series, accurate for small z:
//   K0(z) = -(ln(z/2) + gamma) I0(z) + sum_{k>=1} (z^2/4)^k / (k!)^2 H_k.
double BesselK0Series(double z) {
  const double q = 0.25 * z * z;
  double term = 1.0;  // (z^2/4)^k / (k!)^2
  double i0 = 1.0;
  double harmonic = 0.0;
  double tail = 0.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    harmonic += 1.0 / k;
    i0 += term;
    tail += term * harmonic;
    if (term * harmonic < 1e-18 * std::abs(tail)) break;
  }
  return -(std::log(0.5 * z) + std::numbers::egamma) * i0 + tail;
}

}  // namespace

namespace internal {

// exp(z) K0(z) = int_0^inf exp(-z (cosh t - 1)) dt, by the trapezoidal rule.
// The integrand is analytic and decays doubly exponentially, so the rule
// converges geometrically in 1/h; h shrinks like 1/sqrt(z) to track the
// width of the peak at t = 0.
double BesselK0ScaledIntegral(double z) {
  const double h = 0.1 / std::max(1.0, std::sqrt(z) / 2.0);
  // exp(-45) is below double resolution relative to the t = 0 term.
  constexpr double kCutoff = 45.0;
  double sum = 0.5;
  for (int k = 1;; ++k) {
    const double t = k * h;
    const double exponent = z * (std::cosh(t) - 1.0);
    if (exponent > kCutoff) break;
    sum += std::exp(-exponent);
  }
  return h * sum;
}

}  // namespace internal

RngStream::RngStream(uint64_t seed, uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  uint64_t key = MixSeed(seed, stream_id);
  for (uint64_t& s : state_) s = SplitMix64(key);
}

uint64_t RngStream::NextU64() {
  const uint64_t result = Rotl(state_[1] * 5, 7) * 9;
  const uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = Rotl(state_[3], 45);
  return result;
}

double RngStream::Uniform01() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

uint64_t RngStream::UniformIndex(uint64_t n) {
  if (n == 0) throw ParameterError("UniformIndex: n must be positive");
  // Rejection sampling removes modulo bias.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = NextU64();
  } while (x >= limit);
  return x % n;
}

double RngStream::Normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // 1 - U lies in (0, 1], keeping the logarithm finite.
  const double u1 = 1.0 - Uniform01();
  const double u2 = Uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

uint64_t MixSeed(uint64_t seed, uint64_t tag) {
  uint64_t a = seed;
  uint64_t b = tag ^ 0x6a09e667f3bcc909ULL;
  const uint64_t ha = SplitMix64(a);
  const uint64_t hb = SplitMix64(b);
  uint64_t c = ha ^ Rotl(hb, 23);
  return SplitMix64(c);
}

Vector GaussianSample(RngStream& rng, double mean, double std, std::size_t n) {
  if (!(std >= 0.0)) {
    throw ParameterError("GaussianSample: std must be nonnegative, got " +
                         std::to_string(std));
  }
  Vector out(n);
  for (double& v : out) {
    const double z = rng.Normal();
    v = std == 0.0 ? mean : mean + std * z;
  }
  return out;
}

MomentSummary Moments(std::span<const double> samples) {
  if (samples.empty()) throw ParameterError("Moments: empty sample");
  MomentSummary s;
  s.n = samples.size();
  const double inv_n = 1.0 / static_cast<double>(s.n);
  double sum = 0.0;
  double sum2 = 0.0;
  double sum4 = 0.0;
  for (double x : samples) {
    const double x2 = x * x;
    sum += x;
    sum2 += x2;
    sum4 += x2 * x2;
  }
  s.mean = sum * inv_n;
  s.m2 = sum2 * inv_n;
  s.m4 = sum4 * inv_n;
  double centered = 0.0;
  for (double x : samples) centered += (x - s.mean) * (x - s.mean);
  s.variance = centered * inv_n;
  return s;
}

void RunningStats::Add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::Merge(const RunningStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  n_ += other.n_;
}

double RunningStats::SampleVariance() const {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::StandardError() const {
  return n_ < 2 ? 0.0 : std::sqrt(SampleVariance() / static_cast<double>(n_));
}

double BesselK0(double z) {
  if (!(z > 0.0)) {
    throw DomainError("BesselK0: argument must be positive, got " +
                      std::to_string(z));
  }
  if (z <= 2.0) return BesselK0Series(z);
  return std::exp(-z) * internal::BesselK0ScaledIntegral(z);
}

double BesselK0Scaled(double z) {
  if (!(z > 0.0)) {
    throw DomainError("BesselK0Scaled: argument must be positive, got " +
                      std::to_string(z));
  }
  if (z <= 2.0) return std::exp(z) * BesselK0Series(z);
  return internal::BesselK0ScaledIntegral(z);
}

double IntegrateGaussLegendre(const std::function<double(double)>& f, double a,
                              double b, int panels) {
  if (panels < 1) throw ParameterError("IntegrateGaussLegendre: panels < 1");
  const GaussLegendreRule& rule = Rule();
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double mid = lo + 0.5 * width;
    double panel = 0.0;
    for (int i = 0; i < GaussLegendreRule::kOrder; ++i) {
      panel += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
    }
    total += 0.5 * width * panel;
  }
  return total;
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix DenseMatrix::FromRows(const std::vector<Vector>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  DenseMatrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw ParameterError("DenseMatrix::FromRows: ragged rows");
    }
    std::copy(rows[r].begin(), rows[r].end(), m.data_.begin() + r * cols);
  }
  return m;
}

DenseMatrix DenseMatrix::Identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector DenseMatrix::Multiply(std::span<const double> x) const {
  if (x.size() != cols_) {
    throw ParameterError("DenseMatrix::Multiply: dimension mismatch");
  }
  Vector y(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) y[r] = Dot(Row(r), x);
  return y;
}

DenseMatrix DenseMatrix::Transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

DenseMatrix DenseMatrix::Multiply(const DenseMatrix& other) const {
  if (cols_ != other.rows_) {
    throw ParameterError("DenseMatrix::Multiply: dimension mismatch");
  }
  DenseMatrix out(rows_, other.cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(r, k);
      if (a == 0.0) continue;
      for (std::size_t c = 0; c < other.cols_; ++c) out(r, c) += a * other(k, c);
    }
  }
  return out;
}

double DenseMatrix::MaxAbs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Vector SolveLinearSystem(const DenseMatrix& a, std::span<const double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ParameterError("SolveLinearSystem: matrix not square");
  if (b.size() != n) {
    throw ParameterError("SolveLinearSystem: right-hand side has wrong size");
  }
  const double threshold = 1e-12 * a.MaxAbs();
  DenseMatrix lu = a;
  Vector x(b.begin(), b.end());
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(lu(r, col)) > std::abs(lu(pivot, col))) pivot = r;
    }
    if (!(std::abs(lu(pivot, col)) > threshold)) {
      throw SingularityError("SolveLinearSystem: matrix is singular at column " +
                             std::to_string(col));
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu(col, c), lu(pivot, c));
      std::swap(x[col], x[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = lu(r, col) / lu(col, col);
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) lu(r, c) -= factor * lu(col, c);
      x[r] -= factor * x[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double acc = x[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= lu(i, c) * x[c];
    x[i] = acc / lu(i, i);
  }
  return x;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("Dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double SquaredNorm(std::span<const double> a) { return Dot(a, a); }

double Norm(std::span<const double> a) { return std::sqrt(SquaredNorm(a)); }

}  // namespace pdpreg
