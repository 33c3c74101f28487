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

#ifndef R3LAB_TRAINER_H_
#define R3LAB_TRAINER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "r3lab/common.h"
#include "r3lab/metrics.h"
#include "r3lab/network.h"
#include "r3lab/objective.h"
#include "r3lab/schedule.h"
#include "r3lab/testbeds.h"

namespace r3lab {

inline constexpr double kAdamBeta1 = 0.5;
inline constexpr double kAdamEpsilon = 1e-8;

struct OptimizerState {
  GradientBundle first_moment;
  GradientBundle second_moment;
  std::int64_t step_count = 0;
  double beta1 = kAdamBeta1;

  static OptimizerState For(const MlpNetwork& net);
};

// One bias-corrected adaptive-moment step using the given (scheduled) beta2.
// Throws DomainError for lr < 0 or beta2 outside (0, 1), ShapeError when the
// gradient or moments do not match `net`.
void AdamStep(MlpNetwork& net, const GradientBundle& grads, OptimizerState& opt,
              double lr, double beta2);

// Blend factor 0.5^(images / (halflife_kimg * 1000)).
double EmaBeta(std::int64_t images_this_step, double halflife_kimg);

// g_ema <- beta * g_ema + (1 - beta) * g. Throws ConfigError for a
// non-positive half-life, ShapeError for mismatched networks.
void EmaUpdate(const MlpNetwork& g, MlpNetwork& g_ema, std::int64_t images_this_step,
               double halflife_kimg);

enum class AugmentDomain { kNone, kPoints2d, kImage16 };

struct AugmentationPolicy {
  AugmentDomain domain = AugmentDomain::kNone;
  double probability = 0.0;
};

inline constexpr double kPointJitterSigma = 0.01;

// Each row is transformed independently with the policy's probability.
// Points: uniform rotation about the origin plus N(0, 0.01^2) jitter. Images:
// one of horizontal flip, vertical flip, 90 degree rotation or a nonzero
// translation within +-2 pixels (zero fill), chosen uniformly.
RealMatrix ApplyAugmentation(const RealMatrix& batch, const AugmentationPolicy& policy,
                             Rng& rng, double point_jitter = kPointJitterSigma);

enum class ImageTransform { kFlipHorizontal, kFlipVertical, kRotate90, kTranslate };

// Deterministic image transforms used by ApplyAugmentation.
RealVector TransformImage(const RealVector& image, int side, ImageTransform transform,
                          int shift_rows = 0, int shift_cols = 0);

enum class Testbed { kDirac, kRingGmm, kRingImage };

const char* TestbedName(Testbed testbed);
Testbed ParseTestbed(const std::string& name);

struct NetworkShape {
  int noise_dim = 0;
  std::vector<int> g_hidden;
  std::vector<int> d_hidden;
};

NetworkShape DefaultNetworkShape(Testbed testbed);

struct ExperimentConfig {
  std::string preset;  // label only when the schedule is supplied inline
  TrainingSchedule schedule;
  Testbed testbed = Testbed::kRingGmm;
  int batch_size = 16;
  std::int64_t eval_interval_images = 2000;
  std::uint64_t seed = 0;
  std::string output_dir;  // empty: nothing is written
  int eval_samples = 1000;
  RingGmmSpec ring;
  // ring_image testbed: class rendered as training data and how many images.
  int image_class = 1;
  int image_count = 116;
  NetworkShape shape;  // noise_dim 0 selects DefaultNetworkShape(testbed)
};

// Preset names resolve through LoadPreset; an inline "schedule" object wins
// over "preset". Throws ConfigError / LookupError.
ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& json);
nlohmann::json ExperimentConfigToJson(const ExperimentConfig& config);

struct TrainState {
  MlpNetwork g;
  MlpNetwork d;
  MlpNetwork g_ema;
  OptimizerState opt_g;
  OptimizerState opt_d;
  std::int64_t images_seen = 0;
  Rng rng;
  TrainingSchedule schedule;
};

struct MetricLogRecord {
  std::int64_t images_seen = 0;
  double progress = 0.0;
  LossReport losses;
  HyperparamSnapshot snapshot;
  double proxy_fd = 0.0;
  std::optional<int> modes_covered;
  std::optional<double> hq_fraction;
};

// One JSON object per line with a fixed field order.
std::string MetricRecordToJsonLine(const MetricLogRecord& record);
MetricLogRecord MetricRecordFromJson(const nlohmann::json& json);

class Trainer {
 public:
  // `image_data` supplies the training rows for the ring_image testbed; when
  // empty they are rendered from the config.
  explicit Trainer(ExperimentConfig config, RealMatrix image_data = {});

  // Runs one D then one G update on `real_batch`. Returns nullopt, leaving
  // the state untouched, once another step would exceed the image budget.
  // Throws ShapeError for a batch of the wrong size.
  std::optional<LossReport> TrainStep(const RealMatrix& real_batch);

  // Draws the real batch from the testbed, then calls TrainStep.
  std::optional<LossReport> Step();

  RealMatrix DrawRealBatch();
  RealMatrix SampleGenerator(const MlpNetwork& g, int n, std::uint64_t noise_seed) const;

  // Evaluates g_ema on a fixed noise set against a fixed reference set.
  MetricLogRecord Evaluate(const LossReport& last) const;

  const TrainState& state() const { return state_; }
  TrainState& mutable_state() { return state_; }
  const ExperimentConfig& config() const { return config_; }
  const RealMatrix& image_data() const { return image_data_; }
  std::int64_t images_per_step() const { return 2 * config_.batch_size; }

 private:
  AugmentDomain augment_domain() const;
  FeatureDomain feature_domain() const;

  ExperimentConfig config_;
  RealMatrix image_data_;
  RealMatrix reference_;
  TrainState state_;
};

struct TrainingResult {
  std::vector<MetricLogRecord> log;
  TrainState final_state;
};

// Steps to the budget, logging whenever images_seen crosses a multiple of
// the eval interval and after the last step. Parameters are checked for
// finiteness at every eval. Writes metrics.jsonl, g.json, g_ema.json, d.json
// and a samples file when output_dir is set.
TrainingResult RunTraining(const ExperimentConfig& config, RealMatrix image_data = {});

}  // namespace r3lab

#endif  // R3LAB_TRAINER_H_
