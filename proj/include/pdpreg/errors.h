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

#ifndef PDPREG_ERRORS_H_
#define PDPREG_ERRORS_H_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pdpreg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument: negative scale, dimension mismatch, empty input.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Pivot fell below the singularity threshold during factorization.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Operation requested on a model it does not cover (e.g. a nonlinear model
// handed to a linear-regime identity).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// The observed gradient carries no information about the input.
class NoLeakageError : public Error {
 public:
  using Error::Error;
};

// Iterative optimization diverged. Carries the best iterate seen so far.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> best,
                   double best_objective)
      : Error(what), best_(std::move(best)), best_objective_(best_objective) {}

  const std::vector<double>& best() const { return best_; }
  double best_objective() const { return best_objective_; }

 private:
  std::vector<double> best_;
  double best_objective_;
};

// Configuration rejected. `field` is the dotted path of the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace pdpreg

#endif  // PDPREG_ERRORS_H_
