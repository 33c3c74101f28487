/* Copyright 2026 The R3Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef R3LAB_COMMON_H_
#define R3LAB_COMMON_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace r3lab {

// Row-major so that one row is one sample.
using RealMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealVector = Eigen::VectorXd;

// All randomness flows through explicitly passed engines of this type.
using Rng = std::mt19937_64;

// Error taxonomy. Every module throws one of these; the CLI maps them to
// exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Mismatched matrix / network dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Violated operation precondition (empty batch, multi-output network, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Index or counter outside its allowed range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Unknown preset or other named lookup.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Dataset cannot be produced or used as requested.
class DataError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures, always carrying the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

// Numerically stable ln(1 + e^t).
inline double Softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

// Logistic function; the derivative of Softplus.
inline double Sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace r3lab

#endif  // R3LAB_COMMON_H_
