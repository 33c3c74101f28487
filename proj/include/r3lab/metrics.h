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

#ifndef R3LAB_METRICS_H_
#define R3LAB_METRICS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "r3lab/common.h"
#include "r3lab/testbeds.h"

namespace r3lab {

inline constexpr double kCovarianceRidge = 1e-6;

struct GaussianSummary {
  RealVector mean;
  Eigen::MatrixXd covariance;
};

// Sample mean, unbiased covariance plus kCovarianceRidge * I. Throws
// DataError for fewer than two rows.
GaussianSummary FitGaussian(const RealMatrix& samples);

// Symmetric PSD square root via eigendecomposition; negative eigenvalues are
// clamped to zero.
Eigen::MatrixXd SymmetricSqrt(const Eigen::MatrixXd& m);

// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_b^1/2 S_a S_b^1/2)^1/2).
double FrechetDistance(const GaussianSummary& a, const GaussianSummary& b);

enum class FeatureDomain { kPoints2d, kImage16 };

// Seed of the fixed 256 -> 16 image feature projection.
inline constexpr std::uint64_t kProjectionSeed = 0x52334741;
inline constexpr int kProjectionDim = 16;

// The fixed projection matrix (256 x 16), N(0, 1/256) entries.
const Eigen::MatrixXd& ImageProjection();

// Points: Frechet distance on raw coordinates (any width). Images: rows are
// projected through ImageProjection() first.
double ProxyFd(const RealMatrix& real_set, const RealMatrix& fake_set, FeatureDomain domain);

struct ModeCoverage {
  int modes_covered = 0;
  double hq_fraction = 0.0;
};

// A sample is high quality within 3 sigma of its nearest center.
ModeCoverage MeasureModeCoverage(const RealMatrix& samples, const RingGmmSpec& spec);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;
};

struct ClassReport {
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
};

// Never-predicted classes get precision 0, absent classes recall 0, and F1 is
// 0 when precision + recall is 0. Macro values are unweighted class means.
ClassReport MakeClassificationReport(const std::vector<int>& labels,
                                     const std::vector<int>& predictions, int num_classes);

// Macro-F1 of the given per-class F1 values.
double MacroMean(const std::vector<double>& values);

}  // namespace r3lab

#endif  // R3LAB_METRICS_H_
