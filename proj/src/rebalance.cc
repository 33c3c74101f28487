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

#include <filesystem>
#include <fstream>

#include <fmt/core.h>

#include "r3lab/trainer.h"

namespace r3lab {
namespace {

template <typename Fn>
auto Stage(const char* name, Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(fmt::format("rebalance stage '{}': {}", name, e.what()));
  }
}

const char* kClassNames[kNumCellClasses] = {"t2", "t3", "t4"};

void AppendSection(std::string& out, const char* section, const ClassReport& r) {
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{}\n", section, kClassNames[c], m.precision,
                       m.recall, m.f1, m.support);
  }
  int total = 0;
  for (const auto& m : r.per_class) total += m.support;
  out += fmt::format("{},macro,{:.6f},{:.6f},{:.6f},{}\n", section, r.macro_precision,
                     r.macro_recall, r.macro_f1, total);
}

}  // namespace

std::vector<int> SoftmaxClassifier::Predict(const RealMatrix& samples) const {
  if (samples.cols() != weights.cols()) {
    throw ShapeError(fmt::format("classifier expects {} features, got {}", weights.cols(),
                                 samples.cols()));
  }
  RealMatrix logits = samples * weights.transpose();
  logits.rowwise() += bias.transpose();
  std::vector<int> out(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
    }
    out[i] = best;
  }
  return out;
}

SoftmaxClassifier TrainClassifier(const LabeledDataset& train, const ClassifierSettings& settings,
                                  int num_classes) {
  std::vector<int> per_class(num_classes, 0);
  for (int y : train.labels) {
    if (y < 0 || y >= num_classes) throw DataError(fmt::format("label {} out of range", y));
    ++per_class[y];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (per_class[c] == 0) throw DataError(fmt::format("class {} has no training rows", c));
  }
  if (settings.epochs < 0 || !(settings.lr > 0.0)) {
    throw ConfigError("classifier needs epochs >= 0 and lr > 0");
  }
  const Eigen::Index n = train.samples.rows();
  SoftmaxClassifier model;
  model.weights = RealMatrix::Zero(num_classes, train.samples.cols());
  model.bias = RealVector::Zero(num_classes);
  RealMatrix onehot = RealMatrix::Zero(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, train.labels[i]) = 1.0;

  for (int epoch = 0; epoch < settings.epochs; ++epoch) {
    RealMatrix probs = train.samples * model.weights.transpose();
    probs.rowwise() += model.bias.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = probs.row(i).maxCoeff();
      probs.row(i) = (probs.row(i).array() - m).exp().matrix();
      probs.row(i) /= probs.row(i).sum();
    }
    const RealMatrix residual = (probs - onehot) / static_cast<double>(n);
    model.weights -= settings.lr * residual.transpose() * train.samples;
    model.bias -= settings.lr * residual.colwise().sum().transpose();
  }
  return model;
}

RealMatrix SynthesizeMinority(const MlpNetwork& g_ema, int count, Rng& rng) {
  if (count < 0) throw DomainError("synthetic count must be >= 0");
  if (count == 0) return RealMatrix(0, g_ema.output_width());
  std::normal_distribution<double> normal(0.0, 1.0);
  RealMatrix noise(count, g_ema.input_width());
  for (Eigen::Index r = 0; r < noise.rows(); ++r) {
    for (Eigen::Index c = 0; c < noise.cols(); ++c) noise(r, c) = normal(rng);
  }
  return Forward(g_ema, noise).cwiseMax(0.0).cwiseMin(1.0);
}

RebalanceConfig RebalanceConfigFromJson(const nlohmann::json& json) {
  RebalanceConfig c;
  try {
    if (json.contains("counts")) {
      const auto v = json.at("counts").get<std::vector<int>>();
      if (v.size() != kNumCellClasses) throw ConfigError("counts needs three entries");
      std::copy(v.begin(), v.end(), c.counts.begin());
    }
    if (json.contains("split")) {
      const auto v = json.at("split").get<std::vector<double>>();
      if (v.size() != 3) throw ConfigError("split needs three fractions");
      c.split = {v[0], v[1], v[2]};
    }
    c.seed = json.value("seed", c.seed);
    c.gan_preset = json.value("gan_preset", c.gan_preset);
    c.synth_count = json.value("synth_count", c.synth_count);
    c.minority_class = json.value("minority_class", c.minority_class);
    c.gan_batch_size = json.value("gan_batch_size", c.gan_batch_size);
    c.gan_total_images = json.value("gan_total_images", c.gan_total_images);
    c.output_dir = json.value("output_dir", c.output_dir);
    if (json.contains("classifier")) {
      const auto& k = json.at("classifier");
      c.classifier.epochs = k.value("epochs", c.classifier.epochs);
      c.classifier.lr = k.value("lr", c.classifier.lr);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("rebalance config: {}", e.what()));
  }
  if (c.synth_count < 0) throw ConfigError("synth_count must be >= 0");
  if (c.gan_total_images < 0) throw ConfigError("gan_total_images must be >= 0");
  if (c.minority_class < 0 || c.minority_class >= kNumCellClasses) {
    throw ConfigError("minority_class must be 0, 1 or 2");
  }
  LoadPreset(c.gan_preset);
  return c;
}

nlohmann::json RebalanceConfigToJson(const RebalanceConfig& c) {
  nlohmann::json j;
  j["counts"] = std::vector<int>(c.counts.begin(), c.counts.end());
  j["split"] = {c.split.train, c.split.val, c.split.test};
  j["seed"] = c.seed;
  j["gan_preset"] = c.gan_preset;
  j["synth_count"] = c.synth_count;
  j["minority_class"] = c.minority_class;
  j["gan_batch_size"] = c.gan_batch_size;
  j["gan_total_images"] = c.gan_total_images;
  j["classifier"] = {{"epochs", c.classifier.epochs}, {"lr", c.classifier.lr}};
  j["output_dir"] = c.output_dir;
  return j;
}

RebalanceReport RunRebalanceExperiment(const RebalanceConfig& config) {
  RebalanceReport report;
  report.config = config;
  ClassifierSettings settings = config.classifier;
  settings.seed = config.classifier_seed();

  const LabeledDataset data = Stage("dataset", [&] {
    return BuildImbalancedDataset(config.counts, config.split, config.dataset_seed());
  });
  const LabeledDataset train = data.Subset(data.Indices(Split::kTrain));
  const LabeledDataset test = data.Subset(data.Indices(Split::kTest));
  report.test_rows = test.size();
  report.train_counts_before = data.ClassCounts(Split::kTrain);

  report.before = Stage("classify_before", [&] {
    const auto model = TrainClassifier(train, settings);
    return MakeClassificationReport(test.labels, model.Predict(test.samples), kNumCellClasses);
  });

  std::vector<int> minority_rows;
  for (int i = 0; i < train.size(); ++i) {
    if (train.labels[i] == config.minority_class) minority_rows.push_back(i);
  }
  const RealMatrix minority = train.Subset(minority_rows).samples;

  RealMatrix synthetic(0, train.samples.cols());
  if (config.synth_count > 0) {
    synthetic = Stage("gan", [&] {
      ExperimentConfig gan;
      gan.preset = config.gan_preset;
      gan.schedule = LoadPreset(config.gan_preset);
      if (config.gan_total_images > 0) gan.schedule.total_images = config.gan_total_images;
      gan.testbed = Testbed::kRingImage;
      gan.batch_size = config.gan_batch_size;
      gan.seed = config.gan_seed();
      gan.eval_interval_images = gan.schedule.total_images;
      gan.image_class = config.minority_class;
      const auto result = RunTraining(gan, minority);
      Rng rng(config.synth_seed());
      return SynthesizeMinority(result.final_state.g_ema, config.synth_count, rng);
    });
    if (synthetic.rows() >= 2 && minority.rows() >= 2) {
      report.synth_proxy_fd = ProxyFd(minority, synthetic, FeatureDomain::kImage16);
    }
  }

  LabeledDataset augmented = train;
  const Eigen::Index base_rows = augmented.samples.rows();
  augmented.samples.conservativeResize(base_rows + synthetic.rows(), Eigen::NoChange);
  for (Eigen::Index i = 0; i < synthetic.rows(); ++i) {
    augmented.samples.row(base_rows + i) = synthetic.row(i);
    augmented.labels.push_back(config.minority_class);
    augmented.splits.push_back(Split::kTrain);
    augmented.synthetic.push_back(true);
  }
  report.train_counts_after = augmented.ClassCounts(Split::kTrain);

  report.after = Stage("classify_after", [&] {
    const auto model = TrainClassifier(augmented, settings);
    return MakeClassificationReport(test.labels, model.Predict(test.samples), kNumCellClasses);
  });

  if (!config.output_dir.empty()) Stage("persist", [&] {
    WriteRebalanceReport(report);
    return 0;
  });
  return report;
}

std::string RebalanceReportCsv(const RebalanceReport& report) {
  std::string out = "section,class,precision,recall,f1,support\n";
  AppendSection(out, "before", report.before);
  AppendSection(out, "after", report.after);
  ClassReport delta;
  for (std::size_t c = 0; c < report.before.per_class.size(); ++c) {
    const auto& b = report.before.per_class[c];
    const auto& a = report.after.per_class[c];
    delta.per_class.push_back(
        {a.precision - b.precision, a.recall - b.recall, a.f1 - b.f1, a.support - b.support});
  }
  delta.macro_precision = report.after.macro_precision - report.before.macro_precision;
  delta.macro_recall = report.after.macro_recall - report.before.macro_recall;
  delta.macro_f1 = report.after.macro_f1 - report.before.macro_f1;
  AppendSection(out, "delta", delta);
  return out;
}

nlohmann::json RebalanceSidecarJson(const RebalanceReport& report) {
  nlohmann::json j;
  j["config"] = RebalanceConfigToJson(report.config);
  j["seeds"] = {{"dataset", report.config.dataset_seed()},
                {"gan", report.config.gan_seed()},
                {"classifier", report.config.classifier_seed()},
                {"synthesis", report.config.synth_seed()}};
  j["train_counts_before"] = report.train_counts_before;
  j["train_counts_after"] = report.train_counts_after;
  j["test_rows"] = report.test_rows;
  j["synth_proxy_fd"] = report.synth_proxy_fd;
  return j;
}

void WriteRebalanceReport(const RebalanceReport& report) {
  const std::filesystem::path dir(report.config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  for (const auto& [name, text] :
       {std::pair{"report.csv", RebalanceReportCsv(report)},
        std::pair{"report.json", RebalanceSidecarJson(report).dump(2) + "\n"}}) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << text;
    if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
  }
}

}  // namespace r3lab
