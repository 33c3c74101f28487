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

#ifndef R3LAB_TESTBEDS_H_
#define R3LAB_TESTBEDS_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "r3lab/common.h"

namespace r3lab {

// ---------------------------------------------------------------------------
// One-parameter adversarial system. Data is a point mass at 0, the generator
// is a point mass at theta, and the discriminator is D(x) = psi * x.

struct DiracState {
  double theta = 0.0;
  double psi = 0.0;

  double Norm() const { return std::hypot(theta, psi); }
};

// Simultaneous explicit step on the pairing loss with penalties weighted
// gamma/2 at both points:
//   psi'   = psi   - lr * (theta * sigmoid(psi * theta) + 2 * gamma * psi)
//   theta' = theta + lr * psi * sigmoid(-psi * theta)
DiracState DiracR3Step(const DiracState& s, double lr, double gamma);

struct DiracSummary {
  double final_norm = 0.0;
  double min_norm = 0.0;
  double max_norm = 0.0;
  std::vector<DiracState> trajectory;  // start state followed by every step
};

// Norm statistics cover the start state and all `steps` iterates.
DiracSummary SimulateDirac(const DiracState& start, double lr, double gamma, int steps);

// ---------------------------------------------------------------------------
// Ring of isotropic Gaussians.

struct RingGmmSpec {
  int k = 8;
  double radius = 1.0;
  double sigma = 0.05;
};

void ValidateRingGmm(const RingGmmSpec& spec);
RealVector RingCenter(const RingGmmSpec& spec, int mode);
RealMatrix SampleRingGmm(const RingGmmSpec& spec, int n, Rng& rng);

// ---------------------------------------------------------------------------
// 16x16 synthetic cell images: a boundary ring with 2, 3 or 4 Gaussian blobs
// inside, echoing the two-, three- and four-cell stages.

inline constexpr int kImageSide = 16;
inline constexpr int kImagePixels = kImageSide * kImageSide;
inline constexpr int kNumCellClasses = 3;

struct RingImageSpec {
  int side = kImageSide;
  double outer_radius = 7.0;
  std::array<int, kNumCellClasses> cells_per_class = {2, 3, 4};
  double blob_sigma = 1.2;
  double noise_sigma = 0.05;
  // Rendering details below are toy choices.
  double ring_width = 0.6;
  double ring_intensity = 0.5;
  double blob_amplitude_min = 0.7;
  double blob_amplitude_max = 1.0;
  double max_blob_center_radius = 4.5;
};

// Blob placements drawn for one image. Exposed so tests can render with
// controlled positions.
struct BlobLayout {
  std::vector<std::array<double, 2>> centers;  // (row, col) in pixels
  std::vector<double> amplitudes;
};

// Throws DataError after 1000 failed rejection attempts for one blob.
BlobLayout SampleBlobLayout(int num_blobs, const RingImageSpec& spec, Rng& rng);

// Renders a layout; noise is drawn from `rng` only when noise_sigma > 0.
RealVector RenderLayout(const BlobLayout& layout, const RingImageSpec& spec, Rng& rng);

// Throws DomainError for class ids outside {0, 1, 2}.
RealVector RenderCellImage(int class_id, Rng& rng, const RingImageSpec& spec = {});

// ---------------------------------------------------------------------------

enum class Split : std::uint8_t { kTrain, kVal, kTest };

const char* SplitName(Split split);

struct LabeledDataset {
  RealMatrix samples;
  std::vector<int> labels;
  std::vector<Split> splits;
  std::vector<bool> synthetic;  // rows produced by a generator

  int size() const { return static_cast<int>(labels.size()); }
  // Rows with the given split tag, in dataset order.
  std::vector<int> Indices(Split split) const;
  LabeledDataset Subset(const std::vector<int>& rows) const;
  std::array<int, kNumCellClasses> ClassCounts(Split split) const;
};

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

// Totals whose 70% training share is (309, 116, 318), one tenth of the
// reference training counts.
inline constexpr std::array<int, kNumCellClasses> kDefaultClassCounts = {441, 166, 454};

// Renders counts[c] images of class c and splits each class by the fractions:
// train gets round(train * n), val round(val * n), test the rest. Throws
// ConfigError when fractions do not sum to 1 or a count is not positive.
LabeledDataset BuildImbalancedDataset(const std::array<int, kNumCellClasses>& counts,
                                      const SplitFractions& split, std::uint64_t seed,
                                      const RingImageSpec& spec = {});

// ---------------------------------------------------------------------------
// Export formats.

// Header x,y,label.
void WritePointsCsv(const std::string& path, const RealMatrix& points,
                    const std::vector<int>& labels);

// Binary PGM (P5, maxval 255) of one side x side image with values in [0,1].
std::string EncodePgm(const RealVector& pixels, int side);
void WritePgm(const std::string& path, const RealVector& pixels, int side);

// Writes img_XXXXX.pgm files plus index.csv (filename,label,split) into dir.
void ExportImageDataset(const std::string& dir, const LabeledDataset& data, int side);

}  // namespace r3lab

#endif  // R3LAB_TESTBEDS_H_
