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

#ifndef R3LAB_REBALANCE_H_
#define R3LAB_REBALANCE_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "r3lab/metrics.h"
#include "r3lab/network.h"
#include "r3lab/testbeds.h"

namespace r3lab {

struct ClassifierSettings {
  int epochs = 300;
  double lr = 0.5;
  std::uint64_t seed = 0;
};

// Multinomial logistic regression on flattened pixels.
struct SoftmaxClassifier {
  RealMatrix weights;  // classes x features
  RealVector bias;

  // Argmax of the logits; ties go to the lowest class id.
  std::vector<int> Predict(const RealMatrix& samples) const;
};

// Full-batch gradient descent on the mean cross-entropy from zero weights.
// Throws DataError when a class in [0, num_classes) has no training row.
SoftmaxClassifier TrainClassifier(const LabeledDataset& train, const ClassifierSettings& settings,
                                  int num_classes = kNumCellClasses);

// `count` generator outputs clamped to [0, 1].
RealMatrix SynthesizeMinority(const MlpNetwork& g_ema, int count, Rng& rng);

struct RebalanceConfig {
  std::array<int, kNumCellClasses> counts = kDefaultClassCounts;
  SplitFractions split;
  std::uint64_t seed = 0;  // master seed; the per-stage seeds derive from it
  std::string gan_preset = "exp017";
  int synth_count = 200;
  int minority_class = 1;
  int gan_batch_size = 16;
  std::int64_t gan_total_images = 0;  // 0 keeps the preset budget
  ClassifierSettings classifier;
  std::string output_dir;  // empty: nothing is written

  std::uint64_t dataset_seed() const { return seed; }
  std::uint64_t gan_seed() const { return seed + 1; }
  std::uint64_t classifier_seed() const { return seed + 2; }
  std::uint64_t synth_seed() const { return seed + 3; }
};

// Throws ConfigError for unknown or invalid fields.
RebalanceConfig RebalanceConfigFromJson(const nlohmann::json& json);
nlohmann::json RebalanceConfigToJson(const RebalanceConfig& config);

struct RebalanceReport {
  ClassReport before;
  ClassReport after;
  std::array<int, kNumCellClasses> train_counts_before{};
  std::array<int, kNumCellClasses> train_counts_after{};
  int test_rows = 0;
  double synth_proxy_fd = 0.0;  // synthetic vs real minority training rows
  RebalanceConfig config;
};

// Builds the dataset, trains and scores a classifier, trains the GAN on the
// minority training rows, adds synthetic rows to the training split only,
// retrains, and scores again on the same test rows.
RebalanceReport RunRebalanceExperiment(const RebalanceConfig& config);

// Columns section,class,precision,recall,f1,support; sections before, after
// and delta, each with one row per class and a macro row.
std::string RebalanceReportCsv(const RebalanceReport& report);
nlohmann::json RebalanceSidecarJson(const RebalanceReport& report);

// Writes report.csv and report.json into config.output_dir.
void WriteRebalanceReport(const RebalanceReport& report);

}  // namespace r3lab

#endif  // R3LAB_REBALANCE_H_
