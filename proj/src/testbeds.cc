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

#include "r3lab/testbeds.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <fmt/core.h>

namespace r3lab {

DiracState DiracR3Step(const DiracState& s, double lr, double gamma) {
  DiracState next;
  const double score = s.psi * s.theta;
  next.psi = s.psi - lr * (s.theta * Sigmoid(score) + 2.0 * gamma * s.psi);
  next.theta = s.theta + lr * s.psi * Sigmoid(-score);
  return next;
}

DiracSummary SimulateDirac(const DiracState& start, double lr, double gamma, int steps) {
  if (steps < 1) throw DomainError("dirac simulation needs at least one step");
  DiracSummary summary;
  summary.trajectory.reserve(static_cast<std::size_t>(steps) + 1);
  summary.trajectory.push_back(start);
  summary.min_norm = summary.max_norm = start.Norm();
  DiracState s = start;
  for (int i = 0; i < steps; ++i) {
    s = DiracR3Step(s, lr, gamma);
    summary.trajectory.push_back(s);
    const double norm = s.Norm();
    summary.min_norm = std::min(summary.min_norm, norm);
    summary.max_norm = std::max(summary.max_norm, norm);
  }
  summary.final_norm = s.Norm();
  return summary;
}

void ValidateRingGmm(const RingGmmSpec& spec) {
  if (spec.k < 1 || !(spec.radius > 0.0) || !(spec.sigma >= 0.0)) {
    throw ConfigError(fmt::format("ring gmm needs k >= 1, radius > 0, sigma >= 0 (got {}, {}, {})",
                                  spec.k, spec.radius, spec.sigma));
  }
}

RealVector RingCenter(const RingGmmSpec& spec, int mode) {
  const double angle = 2.0 * std::numbers::pi * mode / spec.k;
  RealVector c(2);
  c << spec.radius * std::cos(angle), spec.radius * std::sin(angle);
  return c;
}

RealMatrix SampleRingGmm(const RingGmmSpec& spec, int n, Rng& rng) {
  ValidateRingGmm(spec);
  if (n < 1) throw DomainError("ring gmm sample count must be >= 1");
  std::uniform_int_distribution<int> mode(0, spec.k - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  RealMatrix out(n, 2);
  for (int i = 0; i < n; ++i) {
    const RealVector c = RingCenter(spec, mode(rng));
    const double dx = normal(rng);
    const double dy = normal(rng);
    out(i, 0) = c(0) + spec.sigma * dx;
    out(i, 1) = c(1) + spec.sigma * dy;
  }
  return out;
}

BlobLayout SampleBlobLayout(int num_blobs, const RingImageSpec& spec, Rng& rng) {
  constexpr int kMaxAttempts = 1000;
  const double mid = (spec.side - 1) / 2.0;
  const double min_sep = 2.0 * spec.blob_sigma;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> amp(spec.blob_amplitude_min, spec.blob_amplitude_max);
  BlobLayout layout;
  for (int b = 0; b < num_blobs; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const double dr = unit(rng) * spec.max_blob_center_radius;
      const double dc = unit(rng) * spec.max_blob_center_radius;
      if (std::hypot(dr, dc) > spec.max_blob_center_radius) continue;
      const std::array<double, 2> p = {mid + dr, mid + dc};
      bool clear = true;
      for (const auto& q : layout.centers) {
        if (std::hypot(p[0] - q[0], p[1] - q[1]) < min_sep) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      layout.centers.push_back(p);
      layout.amplitudes.push_back(amp(rng));
      placed = true;
    }
    if (!placed) {
      throw DataError(fmt::format("could not place blob {} of {} after {} attempts",
                                  b + 1, num_blobs, kMaxAttempts));
    }
  }
  return layout;
}

RealVector RenderLayout(const BlobLayout& layout, const RingImageSpec& spec, Rng& rng) {
  const double mid = (spec.side - 1) / 2.0;
  const double two_s2 = 2.0 * spec.blob_sigma * spec.blob_sigma;
  const double two_w2 = 2.0 * spec.ring_width * spec.ring_width;
  std::normal_distribution<double> normal(0.0, 1.0);
  RealVector img(spec.side * spec.side);
  for (int r = 0; r < spec.side; ++r) {
    for (int c = 0; c < spec.side; ++c) {
      const double d = std::hypot(r - mid, c - mid) - spec.outer_radius;
      double v = spec.ring_intensity * std::exp(-d * d / two_w2);
      for (std::size_t b = 0; b < layout.centers.size(); ++b) {
        const double dr = r - layout.centers[b][0];
        const double dc = c - layout.centers[b][1];
        v += layout.amplitudes[b] * std::exp(-(dr * dr + dc * dc) / two_s2);
      }
      if (spec.noise_sigma > 0.0) v += spec.noise_sigma * normal(rng);
      img(r * spec.side + c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

RealVector RenderCellImage(int class_id, Rng& rng, const RingImageSpec& spec) {
  if (class_id < 0 || class_id >= kNumCellClasses) {
    throw DomainError(fmt::format("cell class id {} outside {{0, 1, 2}}", class_id));
  }
  const auto layout = SampleBlobLayout(spec.cells_per_class[class_id], spec, rng);
  return RenderLayout(layout, spec, rng);
}

const char* SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

std::vector<int> LabeledDataset::Indices(Split split) const {
  std::vector<int> rows;
  for (int i = 0; i < size(); ++i) {
    if (splits[i] == split) rows.push_back(i);
  }
  return rows;
}

LabeledDataset LabeledDataset::Subset(const std::vector<int>& rows) const {
  LabeledDataset out;
  out.samples.resize(static_cast<Eigen::Index>(rows.size()), samples.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.samples.row(static_cast<Eigen::Index>(i)) = samples.row(rows[i]);
    out.labels.push_back(labels[rows[i]]);
    out.splits.push_back(splits[rows[i]]);
    out.synthetic.push_back(synthetic[rows[i]]);
  }
  return out;
}

std::array<int, kNumCellClasses> LabeledDataset::ClassCounts(Split split) const {
  std::array<int, kNumCellClasses> counts{};
  for (int i = 0; i < size(); ++i) {
    if (splits[i] == split && labels[i] >= 0 && labels[i] < kNumCellClasses) {
      ++counts[labels[i]];
    }
  }
  return counts;
}

LabeledDataset BuildImbalancedDataset(const std::array<int, kNumCellClasses>& counts,
                                      const SplitFractions& split, std::uint64_t seed,
                                      const RingImageSpec& spec) {
  if (split.train < 0 || split.val < 0 || split.test < 0 ||
      std::abs(split.train + split.val + split.test - 1.0) > 1e-9) {
    throw ConfigError(fmt::format("split fractions must be >= 0 and sum to 1 (got {}, {}, {})",
                                  split.train, split.val, split.test));
  }
  int total = 0;
  for (int c : counts) {
    if (c <= 0) throw ConfigError("class counts must be positive");
    total += c;
  }
  Rng rng(seed);
  LabeledDataset data;
  data.samples.resize(total, spec.side * spec.side);
  int row = 0;
  for (int cls = 0; cls < kNumCellClasses; ++cls) {
    const int n = counts[cls];
    const int n_train = static_cast<int>(std::lround(split.train * n));
    const int n_val = std::min(n - n_train, static_cast<int>(std::lround(split.val * n)));
    for (int i = 0; i < n; ++i, ++row) {
      data.samples.row(row) = RenderCellImage(cls, rng, spec).transpose();
      data.labels.push_back(cls);
      data.splits.push_back(i < n_train ? Split::kTrain
                                        : (i < n_train + n_val ? Split::kVal : Split::kTest));
      data.synthetic.push_back(false);
    }
  }
  return data;
}

void WritePointsCsv(const std::string& path, const RealMatrix& points,
                    const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path));
  out << "x,y,label\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int label = static_cast<std::size_t>(i) < labels.size() ? labels[i] : 0;
    out << fmt::format("{},{},{}\n", points(i, 0), points.cols() > 1 ? points(i, 1) : 0.0,
                       label);
  }
  if (!out) throw IoError(fmt::format("failed writing '{}'", path));
}

std::string EncodePgm(const RealVector& pixels, int side) {
  if (pixels.size() != side * side) {
    throw ShapeError(fmt::format("pgm: {} pixels for side {}", pixels.size(), side));
  }
  std::string bytes = fmt::format("P5\n{} {}\n255\n", side, side);
  for (Eigen::Index i = 0; i < pixels.size(); ++i) {
    const double v = std::clamp(pixels(i), 0.0, 1.0);
    bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  return bytes;
}

void WritePgm(const std::string& path, const RealVector& pixels, int side) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path));
  out << EncodePgm(pixels, side);
  if (!out) throw IoError(fmt::format("failed writing '{}'", path));
}

void ExportImageDataset(const std::string& dir, const LabeledDataset& data, int side) {
  std::filesystem::create_directories(dir);
  const std::string index_path = (std::filesystem::path(dir) / "index.csv").string();
  std::ofstream index(index_path);
  if (!index) throw IoError(fmt::format("cannot write '{}'", index_path));
  index << "filename,label,split\n";
  for (int i = 0; i < data.size(); ++i) {
    const std::string name = fmt::format("img_{:05d}.pgm", i);
    WritePgm((std::filesystem::path(dir) / name).string(), data.samples.row(i).transpose(),
             side);
    index << name << ',' << data.labels[i] << ',' << SplitName(data.splits[i]) << '\n';
  }
}

}  // namespace r3lab
