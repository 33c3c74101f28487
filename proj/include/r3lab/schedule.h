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

#ifndef R3LAB_SCHEDULE_H_
#define R3LAB_SCHEDULE_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace r3lab {

enum class CurveShape { kCosine, kCosineSquared, kConstant };

std::string_view CurveShapeName(CurveShape shape);
CurveShape ParseCurveShape(std::string_view name);

// One scheduled hyperparameter. The value moves from `initial` toward `final`
// over the first `burn_in_fraction` of training. A fraction above 1 truncates
// the curve at the end of training, so `final` is never reached.
struct ScheduleSpec {
  double initial = 0.0;
  double final = 0.0;
  double burn_in_fraction = 1.0;
  CurveShape shape = CurveShape::kCosine;

  friend bool operator==(const ScheduleSpec&, const ScheduleSpec&) = default;
};

struct TrainingSchedule {
  ScheduleSpec lr;
  ScheduleSpec gamma;
  ScheduleSpec beta2;
  ScheduleSpec ema_halflife_kimg;
  ScheduleSpec aug_prob;
  // Counts real and generated images alike.
  std::int64_t total_images = 0;

  friend bool operator==(const TrainingSchedule&,
                         const TrainingSchedule&) = default;
};

struct HyperparamSnapshot {
  double lr = 0.0;
  double gamma = 0.0;
  double beta2 = 0.0;
  double ema_halflife_kimg = 0.0;
  double aug_prob = 0.0;
  double progress = 0.0;
};

// Remaining fraction of (initial - final) at normalized burn-in position x.
// Throws DomainError unless 0 <= x <= 1.
double CosineFraction(double x, CurveShape shape);

// Throws ConfigError for burn_in_fraction <= 0, DomainError for progress
// outside [0, 1].
double ScheduleValue(const ScheduleSpec& spec, double progress);

// Throws RangeError when images_seen is negative or exceeds the budget.
HyperparamSnapshot SnapshotAt(const TrainingSchedule& schedule,
                              std::int64_t images_seen);

// Snapshot at an arbitrary progress in [0, 1].
HyperparamSnapshot SnapshotAtProgress(const TrainingSchedule& schedule,
                                      double progress);

// Checks every field invariant; throws ConfigError naming the bad field.
void ValidateSchedule(const TrainingSchedule& schedule);

// Toy training budget shared by the preset ladder.
inline constexpr std::int64_t kBaseBudgetImages = 120'000;

struct PresetInfo {
  std::string name;
  std::string summary;
};

// Preset identifiers in ladder order with one-line descriptions.
const std::vector<PresetInfo>& PresetCatalog();

// Throws LookupError listing the available names.
TrainingSchedule LoadPreset(std::string_view name);

nlohmann::json ScheduleToJson(const TrainingSchedule& schedule);
TrainingSchedule ScheduleFromJson(const nlohmann::json& json);
TrainingSchedule LoadScheduleFile(const std::string& path);

// CSV with header progress,lr,gamma,beta2,ema_halflife_kimg,aug_prob and
// `points` evenly spaced rows from progress 0 to 1.
std::string ScheduleDumpCsv(const TrainingSchedule& schedule, int points);

}  // namespace r3lab

#endif  // R3LAB_SCHEDULE_H_
