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

#include "r3lab/rebalance.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"

namespace r3lab {
namespace {

LabeledDataset TwoBlobs(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  LabeledDataset d;
  d.samples.resize(2 * n, 2);
  for (int i = 0; i < 2 * n; ++i) {
    const int y = i % 2;
    d.samples(i, 0) = (y == 0 ? -1.0 : 1.0) + noise(rng);
    d.samples(i, 1) = noise(rng);
    d.labels.push_back(y);
    d.splits.push_back(Split::kTrain);
    d.synthetic.push_back(false);
  }
  return d;
}

RebalanceConfig SmallConfig(std::uint64_t seed) {
  RebalanceConfig c;
  c.counts = {60, 24, 62};
  c.seed = seed;
  c.synth_count = 20;
  c.gan_total_images = 16000;
  c.classifier.epochs = 100;
  return c;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(ClassifierTest, SeparableDataIsLearned) {
  const auto data = TwoBlobs(50, 1);
  const auto model = TrainClassifier(data, {200, 0.5, 0}, 2);
  const auto pred = model.Predict(data.samples);
  EXPECT_TRUE(std::equal(pred.begin(), pred.end(), data.labels.begin()));
}

TEST(ClassifierTest, ZeroEpochsPredictsLowestClass) {
  const auto data = TwoBlobs(10, 2);
  const auto pred = TrainClassifier(data, {0, 0.5, 0}, 2).Predict(data.samples);
  for (int p : pred) EXPECT_EQ(p, 0);
}

TEST(ClassifierTest, Deterministic) {
  const auto data = TwoBlobs(20, 3);
  const auto a = TrainClassifier(data, {50, 0.5, 9}, 2);
  const auto b = TrainClassifier(data, {50, 0.5, 9}, 2);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
}

TEST(ClassifierTest, MissingClass) {
  const auto data = TwoBlobs(5, 4);
  EXPECT_THROW(TrainClassifier(data, {}, 3), DataError);
}

TEST(SynthesizeTest, EmptyAndClamped) {
  Rng rng(5);
  const auto g = MlpNetwork::Random({4, 32, kImagePixels}, Activation::kLeakyRelu,
                                    Activation::kIdentity, rng);
  EXPECT_EQ(SynthesizeMinority(g, 0, rng).rows(), 0);
  const RealMatrix x = SynthesizeMinority(g, 50, rng);
  EXPECT_EQ(x.rows(), 50);
  EXPECT_GE(x.minCoeff(), 0.0);
  EXPECT_LE(x.maxCoeff(), 1.0);
}

TEST(RebalanceTest, SplitHygieneAndRatio) {
  const auto report = RunRebalanceExperiment(SmallConfig(6));
  const auto& b = report.train_counts_before;
  const auto& a = report.train_counts_after;
  EXPECT_EQ(a[0], b[0]);
  EXPECT_EQ(a[2], b[2]);
  EXPECT_EQ(a[1], b[1] + 20);
  const double major = std::max(b[0], b[2]);
  EXPECT_GE(a[1] / major, b[1] / major);
  EXPECT_LE(a[1] / major, 1.05);
  int support_before = 0, support_after = 0;
  for (const auto& m : report.before.per_class) support_before += m.support;
  for (const auto& m : report.after.per_class) support_after += m.support;
  EXPECT_EQ(support_before, report.test_rows);
  EXPECT_EQ(support_after, report.test_rows);
  for (int c = 0; c < kNumCellClasses; ++c) {
    EXPECT_EQ(report.before.per_class[c].support, report.after.per_class[c].support);
  }
}

TEST(RebalanceTest, SyntheticBeatsNoise) {
  const auto config = SmallConfig(7);
  const auto report = RunRebalanceExperiment(config);
  const auto data = BuildImbalancedDataset(config.counts, config.split, config.dataset_seed());
  std::vector<int> rows;
  for (int i : data.Indices(Split::kTrain)) {
    if (data.labels[i] == config.minority_class) rows.push_back(i);
  }
  const RealMatrix minority = data.Subset(rows).samples;
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealMatrix noise(config.synth_count, kImagePixels);
  for (int i = 0; i < noise.size(); ++i) noise.data()[i] = u(rng);
  EXPECT_LT(report.synth_proxy_fd, ProxyFd(minority, noise, FeatureDomain::kImage16));
}

TEST(RebalanceTest, NoSynthesisLeavesReportUnchanged) {
  auto config = SmallConfig(9);
  config.synth_count = 0;
  const auto report = RunRebalanceExperiment(config);
  EXPECT_EQ(report.train_counts_before, report.train_counts_after);
  EXPECT_EQ(report.before.macro_f1, report.after.macro_f1);
  for (int c = 0; c < kNumCellClasses; ++c) {
    EXPECT_EQ(report.before.per_class[c].recall, report.after.per_class[c].recall);
  }
}

TEST(RebalanceTest, ReportFilesAreByteIdentical) {
  const auto root = std::filesystem::temp_directory_path() / "r3lab_rebalance_test";
  std::filesystem::remove_all(root);
  auto config = SmallConfig(10);
  config.output_dir = root.string();
  RunRebalanceExperiment(config);
  const auto csv = ReadFile(root / "report.csv");
  const auto json = ReadFile(root / "report.json");
  RunRebalanceExperiment(config);
  EXPECT_FALSE(csv.empty());
  EXPECT_EQ(csv, ReadFile(root / "report.csv"));
  EXPECT_EQ(json, ReadFile(root / "report.json"));
  EXPECT_EQ(csv.rfind("section,class,precision,recall,f1,support\nbefore,t2,", 0), 0u);
  EXPECT_NE(csv.find("\ndelta,macro,"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
  std::filesystem::remove_all(root);
}

TEST(RebalanceTest, ConfigJson) {
  auto config = SmallConfig(11);
  const auto back = RebalanceConfigFromJson(RebalanceConfigToJson(config));
  EXPECT_EQ(RebalanceConfigToJson(back).dump(), RebalanceConfigToJson(config).dump());
  EXPECT_THROW(RebalanceConfigFromJson({{"synth_count", -1}}), ConfigError);
  EXPECT_THROW(RebalanceConfigFromJson({{"counts", {1, 2}}}), ConfigError);
  EXPECT_THROW(RebalanceConfigFromJson({{"gan_preset", "exp999"}}), LookupError);
  EXPECT_THROW(RebalanceConfigFromJson({{"minority_class", 3}}), ConfigError);
}

TEST(RebalanceTest, StageLabelsOnFailure) {
  auto config = SmallConfig(12);
  config.counts = {10, 1, 10};
  try {
    RunRebalanceExperiment(config);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("rebalance stage"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace r3lab
