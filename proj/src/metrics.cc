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

#include "r3lab/metrics.h"

#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

namespace r3lab {

GaussianSummary FitGaussian(const RealMatrix& samples) {
  if (samples.rows() < 2) {
    throw DataError(fmt::format("gaussian fit needs >= 2 rows, got {}", samples.rows()));
  }
  GaussianSummary g;
  g.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - g.mean.transpose();
  g.covariance = (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
  g.covariance.diagonal().array() += kCovarianceRidge;
  return g;
}

Eigen::MatrixXd SymmetricSqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const RealVector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

double FrechetDistance(const GaussianSummary& a, const GaussianSummary& b) {
  if (a.mean.size() != b.mean.size() || a.covariance.rows() != a.mean.size() ||
      b.covariance.rows() != b.mean.size()) {
    throw ShapeError(fmt::format("frechet distance: dimensions {} and {} differ",
                                 a.mean.size(), b.mean.size()));
  }
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const Eigen::MatrixXd sqrt_b = SymmetricSqrt(b.covariance);
  const Eigen::MatrixXd cross = SymmetricSqrt(sqrt_b * a.covariance * sqrt_b);
  const double trace_term =
      a.covariance.trace() + b.covariance.trace() - 2.0 * cross.trace();
  return std::max(0.0, mean_term + trace_term);
}

const Eigen::MatrixXd& ImageProjection() {
  static const Eigen::MatrixXd projection = [] {
    Rng rng(kProjectionSeed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(double{kImagePixels}));
    Eigen::MatrixXd p(kImagePixels, kProjectionDim);
    for (int r = 0; r < kImagePixels; ++r) {
      for (int c = 0; c < kProjectionDim; ++c) p(r, c) = normal(rng);
    }
    return p;
  }();
  return projection;
}

double ProxyFd(const RealMatrix& real_set, const RealMatrix& fake_set, FeatureDomain domain) {
  if (real_set.cols() != fake_set.cols()) {
    throw ShapeError(fmt::format("proxy fd: widths {} and {} differ", real_set.cols(),
                                 fake_set.cols()));
  }
  if (domain == FeatureDomain::kImage16) {
    if (real_set.cols() != kImagePixels) {
      throw ShapeError(fmt::format("proxy fd: image rows must have {} pixels", kImagePixels));
    }
    const RealMatrix real_features = real_set * ImageProjection();
    const RealMatrix fake_features = fake_set * ImageProjection();
    return FrechetDistance(FitGaussian(real_features), FitGaussian(fake_features));
  }
  return FrechetDistance(FitGaussian(real_set), FitGaussian(fake_set));
}

ModeCoverage MeasureModeCoverage(const RealMatrix& samples, const RingGmmSpec& spec) {
  ValidateRingGmm(spec);
  if (samples.rows() == 0) throw ContractError("mode coverage needs at least one sample");
  if (samples.cols() != 2) throw ShapeError("mode coverage needs 2-D points");
  std::vector<RealVector> centers;
  for (int m = 0; m < spec.k; ++m) centers.push_back(RingCenter(spec, m));
  std::vector<bool> covered(spec.k, false);
  const double threshold = 3.0 * spec.sigma;
  int high_quality = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int m = 0; m < spec.k; ++m) {
      const double d = std::hypot(samples(i, 0) - centers[m](0), samples(i, 1) - centers[m](1));
      if (d < best_dist) {
        best_dist = d;
        best = m;
      }
    }
    if (best_dist <= threshold) {
      ++high_quality;
      covered[best] = true;
    }
  }
  ModeCoverage out;
  out.modes_covered = static_cast<int>(std::count(covered.begin(), covered.end(), true));
  out.hq_fraction = static_cast<double>(high_quality) / static_cast<double>(samples.rows());
  return out;
}

double MacroMean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

ClassReport MakeClassificationReport(const std::vector<int>& labels,
                                     const std::vector<int>& predictions, int num_classes) {
  if (labels.size() != predictions.size()) {
    throw ContractError(fmt::format("labels ({}) and predictions ({}) differ in length",
                                    labels.size(), predictions.size()));
  }
  if (num_classes < 1) throw ContractError("num_classes must be >= 1");
  std::vector<int> true_pos(num_classes, 0), predicted(num_classes, 0), actual(num_classes, 0);
  int correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = predictions[i];
    if (y < 0 || y >= num_classes || p < 0 || p >= num_classes) {
      throw ContractError(fmt::format("label {} or prediction {} outside [0, {})", y, p,
                                      num_classes));
    }
    ++actual[y];
    ++predicted[p];
    if (y == p) {
      ++true_pos[y];
      ++correct;
    }
  }
  ClassReport report;
  std::vector<double> precisions, recalls, f1s;
  for (int c = 0; c < num_classes; ++c) {
    ClassMetrics m;
    m.support = actual[c];
    m.precision = predicted[c] > 0 ? static_cast<double>(true_pos[c]) / predicted[c] : 0.0;
    m.recall = actual[c] > 0 ? static_cast<double>(true_pos[c]) / actual[c] : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    precisions.push_back(m.precision);
    recalls.push_back(m.recall);
    f1s.push_back(m.f1);
    report.per_class.push_back(m);
  }
  report.macro_precision = MacroMean(precisions);
  report.macro_recall = MacroMean(recalls);
  report.macro_f1 = MacroMean(f1s);
  report.accuracy = labels.empty() ? 0.0 : static_cast<double>(correct) / labels.size();
  return report;
}

}  // namespace r3lab
