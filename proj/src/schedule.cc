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

#include "r3lab/schedule.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/core.h>

#include "r3lab/common.h"

namespace r3lab {
namespace {

void CheckSpec(const ScheduleSpec& spec, std::string_view field) {
  if (!(spec.burn_in_fraction > 0.0) || !std::isfinite(spec.burn_in_fraction)) {
    throw ConfigError(fmt::format("schedule '{}': burn_in_fraction must be > 0, got {}",
                                  field, spec.burn_in_fraction));
  }
  if (!std::isfinite(spec.initial) || !std::isfinite(spec.final)) {
    throw ConfigError(fmt::format("schedule '{}': endpoints must be finite", field));
  }
}

void CheckRange(const ScheduleSpec& spec, std::string_view field, double lo,
                double hi, bool open) {
  for (double v : {spec.initial, spec.final}) {
    const bool ok = open ? (v > lo && v < hi) : (v >= lo && v <= hi);
    if (!ok) {
      throw ConfigError(fmt::format("schedule '{}': endpoint {} outside {}{}, {}{}",
                                    field, v, open ? "(" : "[", lo, hi,
                                    open ? ")" : "]"));
    }
  }
}

// Common toy endpoints for the non-gamma hyperparameters.
TrainingSchedule BaseSchedule(double burn_in, CurveShape shape) {
  TrainingSchedule s;
  s.lr = {2e-3, 5e-4, burn_in, shape};
  s.gamma = {150.0, 15.0, burn_in, shape};
  s.beta2 = {0.9, 0.99, burn_in, shape};
  s.ema_halflife_kimg = {0.5, 5.0, burn_in, shape};
  s.aug_prob = {0.0, 0.0, burn_in, shape};
  s.total_images = kBaseBudgetImages;
  return s;
}

struct PresetEntry {
  PresetInfo info;
  TrainingSchedule schedule;
};

const std::vector<PresetEntry>& PresetTable() {
  static const std::vector<PresetEntry> table = [] {
    std::vector<PresetEntry> t;
    auto add = [&t](std::string name, std::string summary, TrainingSchedule s) {
      t.push_back({{std::move(name), std::move(summary)}, s});
    };
    add("exp003",
        "gamma 150->15, burn-in sized for a 2 Mimg run (666.7%), effectively no decay",
        BaseSchedule(20.0 / 3.0, CurveShape::kCosine));
    add("exp004", "gamma 150->15, 100% burn-in",
        BaseSchedule(1.0, CurveShape::kCosine));
    add("exp006", "gamma 150->15, 20% burn-in (large-dataset default)",
        BaseSchedule(0.2, CurveShape::kCosine));
    add("exp007", "gamma 150->15, 50% burn-in",
        BaseSchedule(0.5, CurveShape::kCosine));
    add("exp008", "gamma 150->15, 100% burn-in, squared-cosine delayed decay",
        BaseSchedule(1.0, CurveShape::kCosineSquared));
    add("exp009", "gamma 150->15, 150% burn-in delayed decay",
        BaseSchedule(1.5, CurveShape::kCosine));
    add("exp010", "seed replicate of exp009",
        BaseSchedule(1.5, CurveShape::kCosine));
    add("exp011", "seed replicate of exp009",
        BaseSchedule(1.5, CurveShape::kCosine));
    {
      auto s = BaseSchedule(1.5, CurveShape::kCosine);
      s.gamma = {75.0, 75.0, 1.5, CurveShape::kConstant};
      add("exp012", "fixed gamma 75, 150% burn-in for the rest", s);
    }
    {
      auto s = BaseSchedule(1.5, CurveShape::kCosine);
      s.gamma = {15.0, 150.0, 1.5, CurveShape::kCosine};
      add("exp013", "increasing gamma 15->150, 150% burn-in", s);
    }
    {
      auto s = BaseSchedule(1.5, CurveShape::kCosine);
      s.gamma = {7.0, 75.0, 1.5, CurveShape::kCosine};
      s.total_images = kBaseBudgetImages * 5 / 3;
      add("exp014", "increasing gamma 7->75, 150% burn-in, 5/3 budget", s);
    }
    {
      auto s = BaseSchedule(1.5, CurveShape::kCosine);
      s.gamma = {5.0, 40.0, 1.5, CurveShape::kCosine};
      s.aug_prob = {0.0, 0.6, 1.5, CurveShape::kCosine};
      s.total_images = kBaseBudgetImages * 5 / 2;
      add("exp017",
          "increasing gamma 5->40, augmentation 0->0.6, 150% burn-in, 2.5x budget",
          s);
    }
    return t;
  }();
  return table;
}

std::string FormatNumber(double v) { return fmt::format("{}", v); }

}  // namespace

std::string_view CurveShapeName(CurveShape shape) {
  switch (shape) {
    case CurveShape::kCosine:
      return "cosine";
    case CurveShape::kCosineSquared:
      return "cosine_squared";
    case CurveShape::kConstant:
      return "constant";
  }
  return "cosine";
}

CurveShape ParseCurveShape(std::string_view name) {
  if (name == "cosine") return CurveShape::kCosine;
  if (name == "cosine_squared") return CurveShape::kCosineSquared;
  if (name == "constant") return CurveShape::kConstant;
  throw ConfigError(fmt::format(
      "unknown schedule shape '{}' (expected cosine, cosine_squared, constant)", name));
}

double CosineFraction(double x, CurveShape shape) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError(fmt::format("cosine fraction: x={} outside [0, 1]", x));
  }
  switch (shape) {
    case CurveShape::kCosine:
      return 0.5 * (1.0 + std::cos(std::numbers::pi * x));
    case CurveShape::kCosineSquared:
      return 0.5 * (1.0 + std::cos(std::numbers::pi * x * x));
    case CurveShape::kConstant:
      return 1.0;
  }
  return 1.0;
}

double ScheduleValue(const ScheduleSpec& spec, double progress) {
  CheckSpec(spec, "spec");
  if (!(progress >= 0.0 && progress <= 1.0)) {
    throw DomainError(fmt::format("schedule progress {} outside [0, 1]", progress));
  }
  const double x = std::min(progress / spec.burn_in_fraction, 1.0);
  const double value = std::lerp(spec.final, spec.initial, CosineFraction(x, spec.shape));
  // Rounding must not leave the closed endpoint interval.
  return std::clamp(value, std::min(spec.initial, spec.final),
                    std::max(spec.initial, spec.final));
}

HyperparamSnapshot SnapshotAtProgress(const TrainingSchedule& schedule,
                                      double progress) {
  HyperparamSnapshot s;
  s.progress = progress;
  s.lr = ScheduleValue(schedule.lr, progress);
  s.gamma = ScheduleValue(schedule.gamma, progress);
  s.beta2 = ScheduleValue(schedule.beta2, progress);
  s.ema_halflife_kimg = ScheduleValue(schedule.ema_halflife_kimg, progress);
  s.aug_prob = ScheduleValue(schedule.aug_prob, progress);
  return s;
}

HyperparamSnapshot SnapshotAt(const TrainingSchedule& schedule,
                              std::int64_t images_seen) {
  if (schedule.total_images <= 0) {
    throw ConfigError("schedule total_images must be > 0");
  }
  if (images_seen < 0 || images_seen > schedule.total_images) {
    throw RangeError(fmt::format("images_seen {} outside [0, {}]", images_seen,
                                 schedule.total_images));
  }
  return SnapshotAtProgress(schedule, static_cast<double>(images_seen) /
                                          static_cast<double>(schedule.total_images));
}

void ValidateSchedule(const TrainingSchedule& schedule) {
  CheckSpec(schedule.lr, "lr");
  CheckSpec(schedule.gamma, "gamma");
  CheckSpec(schedule.beta2, "beta2");
  CheckSpec(schedule.ema_halflife_kimg, "ema_halflife_kimg");
  CheckSpec(schedule.aug_prob, "aug_prob");
  if (schedule.total_images <= 0) {
    throw ConfigError("schedule total_images must be > 0");
  }
  CheckRange(schedule.aug_prob, "aug_prob", 0.0, 1.0, /*open=*/false);
  CheckRange(schedule.beta2, "beta2", 0.0, 1.0, /*open=*/true);
  for (double v : {schedule.gamma.initial, schedule.gamma.final}) {
    if (v < 0.0) throw ConfigError(fmt::format("schedule 'gamma': endpoint {} < 0", v));
  }
  for (double v : {schedule.lr.initial, schedule.lr.final}) {
    if (v < 0.0) throw ConfigError(fmt::format("schedule 'lr': endpoint {} < 0", v));
  }
  for (double v : {schedule.ema_halflife_kimg.initial, schedule.ema_halflife_kimg.final}) {
    if (v <= 0.0) {
      throw ConfigError(fmt::format("schedule 'ema_halflife_kimg': endpoint {} <= 0", v));
    }
  }
}

const std::vector<PresetInfo>& PresetCatalog() {
  static const std::vector<PresetInfo> catalog = [] {
    std::vector<PresetInfo> c;
    for (const auto& e : PresetTable()) c.push_back(e.info);
    return c;
  }();
  return catalog;
}

TrainingSchedule LoadPreset(std::string_view name) {
  for (const auto& e : PresetTable()) {
    if (e.info.name == name) return e.schedule;
  }
  std::string names;
  for (const auto& e : PresetTable()) {
    if (!names.empty()) names += ", ";
    names += e.info.name;
  }
  throw LookupError(fmt::format("unknown preset '{}'; available: {}", name, names));
}

nlohmann::json ScheduleToJson(const TrainingSchedule& schedule) {
  auto spec_json = [](const ScheduleSpec& s) {
    return nlohmann::json{{"initial", s.initial},
                          {"final", s.final},
                          {"burn_in_fraction", s.burn_in_fraction},
                          {"shape", std::string(CurveShapeName(s.shape))}};
  };
  nlohmann::json j;
  j["lr"] = spec_json(schedule.lr);
  j["gamma"] = spec_json(schedule.gamma);
  j["beta2"] = spec_json(schedule.beta2);
  j["ema_halflife_kimg"] = spec_json(schedule.ema_halflife_kimg);
  j["aug_prob"] = spec_json(schedule.aug_prob);
  j["total_images"] = schedule.total_images;
  return j;
}

TrainingSchedule ScheduleFromJson(const nlohmann::json& json) {
  auto spec_from = [&json](const char* key) {
    if (!json.contains(key) || !json[key].is_object()) {
      throw ConfigError(fmt::format("schedule config: missing object '{}'", key));
    }
    const auto& o = json[key];
    try {
      ScheduleSpec s;
      s.initial = o.at("initial").get<double>();
      s.final = o.at("final").get<double>();
      s.burn_in_fraction = o.at("burn_in_fraction").get<double>();
      s.shape = ParseCurveShape(o.at("shape").get<std::string>());
      return s;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("schedule config '{}': {}", key, e.what()));
    }
  };
  TrainingSchedule s;
  s.lr = spec_from("lr");
  s.gamma = spec_from("gamma");
  s.beta2 = spec_from("beta2");
  s.ema_halflife_kimg = spec_from("ema_halflife_kimg");
  s.aug_prob = spec_from("aug_prob");
  if (!json.contains("total_images") || !json["total_images"].is_number_integer()) {
    throw ConfigError("schedule config: missing integer 'total_images'");
  }
  s.total_images = json["total_images"].get<std::int64_t>();
  ValidateSchedule(s);
  return s;
}

TrainingSchedule LoadScheduleFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open schedule file '{}'", path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("schedule file '{}': {}", path, e.what()));
  }
  return ScheduleFromJson(j);
}

std::string ScheduleDumpCsv(const TrainingSchedule& schedule, int points) {
  if (points < 2) throw DomainError("schedule dump needs at least 2 points");
  std::ostringstream out;
  out << "progress,lr,gamma,beta2,ema_halflife_kimg,aug_prob\n";
  for (int i = 0; i < points; ++i) {
    const double p = (i == points - 1) ? 1.0 : static_cast<double>(i) / (points - 1);
    const auto s = SnapshotAtProgress(schedule, p);
    out << FormatNumber(p) << ',' << FormatNumber(s.lr) << ',' << FormatNumber(s.gamma)
        << ',' << FormatNumber(s.beta2) << ',' << FormatNumber(s.ema_halflife_kimg)
        << ',' << FormatNumber(s.aug_prob) << '\n';
  }
  return out.str();
}

}  // namespace r3lab
