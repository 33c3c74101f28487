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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "r3lab/common.h"

namespace r3lab {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(CosineFractionTest, Endpoints) {
  EXPECT_DOUBLE_EQ(CosineFraction(0.0, CurveShape::kCosine), 1.0);
  EXPECT_NEAR(CosineFraction(0.5, CurveShape::kCosine), 0.5, 1e-15);
  EXPECT_NEAR(CosineFraction(1.0, CurveShape::kCosineSquared), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(CosineFraction(0.3, CurveShape::kConstant), 1.0);
}

TEST(CosineFractionTest, SquaredMidpoint) {
  // 0.5 * (1 + cos(pi / 4)) = 0.5 + sqrt(2) / 4
  EXPECT_NEAR(CosineFraction(0.5, CurveShape::kCosineSquared), 0.8535534, 1e-7);
}

TEST(CosineFractionTest, RejectsOutOfDomain) {
  EXPECT_THROW(CosineFraction(-0.01, CurveShape::kCosine), DomainError);
  EXPECT_THROW(CosineFraction(1.01, CurveShape::kCosineSquared), DomainError);
  EXPECT_THROW(CosineFraction(std::nan(""), CurveShape::kCosine), DomainError);
}

TEST(CosineFractionTest, SquaredRetainsMoreInTheInterior) {
  for (int i = 1; i < 1000; ++i) {
    const double x = i / 1000.0;
    EXPECT_GT(CosineFraction(x, CurveShape::kCosineSquared),
              CosineFraction(x, CurveShape::kCosine))
        << "x=" << x;
  }
}

TEST(ScheduleValueTest, FastGammaDecay) {
  const ScheduleSpec gamma{150.0, 15.0, 0.2, CurveShape::kCosine};
  EXPECT_NEAR(ScheduleValue(gamma, 0.1), 82.5, 1e-12);
  EXPECT_DOUBLE_EQ(ScheduleValue(gamma, 0.5), 15.0);
  EXPECT_DOUBLE_EQ(ScheduleValue(gamma, 0.0), 150.0);
}

TEST(ScheduleValueTest, ExtendedBurnInNeverReachesFinal) {
  const ScheduleSpec gamma{5.0, 40.0, 1.5, CurveShape::kCosine};
  // x = 2/3, 0.5 * (1 + cos(2 pi / 3)) = 0.25
  EXPECT_NEAR(ScheduleValue(gamma, 1.0), 31.25, 1e-12);
}

TEST(ScheduleValueTest, Errors) {
  EXPECT_THROW(ScheduleValue({1.0, 0.0, 0.0, CurveShape::kCosine}, 0.5), ConfigError);
  EXPECT_THROW(ScheduleValue({1.0, 0.0, -1.0, CurveShape::kCosine}, 0.5), ConfigError);
  EXPECT_THROW(ScheduleValue({1.0, 0.0, 1.0, CurveShape::kCosine}, 1.5), DomainError);
}

TEST(ScheduleValueTest, ConstantShapeHoldsInitial) {
  const ScheduleSpec spec{75.0, 10.0, 1.5, CurveShape::kConstant};
  for (int i = 0; i <= 100; ++i) EXPECT_EQ(ScheduleValue(spec, i / 100.0), 75.0);
}

// Random specs: endpoint identity, range, monotonicity and burn-in dominance.
TEST(ScheduleValueTest, Properties) {
  Rng rng(7);
  std::uniform_real_distribution<double> value(-10.0, 200.0);
  std::uniform_real_distribution<double> burn(0.05, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    for (CurveShape shape : {CurveShape::kCosine, CurveShape::kCosineSquared}) {
      const ScheduleSpec spec{value(rng), value(rng), burn(rng), shape};
      const double lo = std::min(spec.initial, spec.final);
      const double hi = std::max(spec.initial, spec.final);
      EXPECT_EQ(ScheduleValue(spec, 0.0), spec.initial);
      double prev = spec.initial;
      for (int i = 1; i <= 200; ++i) {
        const double p = i / 200.0;
        const double v = ScheduleValue(spec, p);
        ASSERT_GE(v, lo);
        ASSERT_LE(v, hi);
        if (spec.initial > spec.final) {
          ASSERT_LE(v, prev + 1e-12);
        } else {
          ASSERT_GE(v, prev - 1e-12);
        }
        if (spec.burn_in_fraction <= 1.0 && p >= spec.burn_in_fraction) {
          ASSERT_NEAR(v, spec.final, 1e-12 * std::max(1.0, std::abs(spec.final)));
        }
        prev = v;
      }
      if (spec.initial > spec.final) {
        ScheduleSpec longer = spec;
        longer.burn_in_fraction = spec.burn_in_fraction * 1.7;
        for (int i = 1; i <= 50; ++i) {
          ASSERT_GE(ScheduleValue(longer, i / 50.0), ScheduleValue(spec, i / 50.0) - 1e-12);
        }
      }
    }
  }
}

TEST(SnapshotTest, StartIsInitialEverywhere) {
  for (const auto& info : PresetCatalog()) {
    const auto s = LoadPreset(info.name);
    const auto snap = SnapshotAt(s, 0);
    EXPECT_EQ(snap.lr, s.lr.initial);
    EXPECT_EQ(snap.gamma, s.gamma.initial);
    EXPECT_EQ(snap.beta2, s.beta2.initial);
    EXPECT_EQ(snap.ema_halflife_kimg, s.ema_halflife_kimg.initial);
    EXPECT_EQ(snap.aug_prob, s.aug_prob.initial);
    EXPECT_EQ(snap.progress, 0.0);
  }
}

TEST(SnapshotTest, Exp017AtEnd) {
  const auto s = LoadPreset("exp017");
  const auto snap = SnapshotAt(s, s.total_images);
  EXPECT_NEAR(snap.gamma, 31.25, 1e-12);
  EXPECT_NEAR(snap.aug_prob, 0.45, 1e-12);
  EXPECT_EQ(snap.progress, 1.0);
}

TEST(SnapshotTest, Exp006ReachesFinalGammaAtBurnInEnd) {
  const auto s = LoadPreset("exp006");
  EXPECT_NEAR(SnapshotAt(s, s.total_images / 5).gamma, 15.0, 1e-12);
}

TEST(SnapshotTest, RangeErrors) {
  const auto s = LoadPreset("exp004");
  EXPECT_THROW(SnapshotAt(s, s.total_images + 1), RangeError);
  EXPECT_THROW(SnapshotAt(s, -1), RangeError);
}

TEST(PresetTest, GammaEndpoints) {
  const auto e13 = LoadPreset("exp013");
  EXPECT_EQ(e13.gamma, (ScheduleSpec{15.0, 150.0, 1.5, CurveShape::kCosine}));
  const auto e12 = LoadPreset("exp012");
  EXPECT_EQ(e12.gamma.shape, CurveShape::kConstant);
  EXPECT_EQ(e12.gamma.initial, 75.0);
  const auto e14 = LoadPreset("exp014");
  EXPECT_EQ(e14.gamma.initial, 7.0);
  EXPECT_EQ(e14.gamma.final, 75.0);
  EXPECT_EQ(e14.total_images, 200'000);
  const auto e17 = LoadPreset("exp017");
  EXPECT_EQ(e17.gamma.initial, 5.0);
  EXPECT_EQ(e17.gamma.final, 40.0);
  EXPECT_EQ(e17.aug_prob.final, 0.6);
  EXPECT_EQ(e17.total_images, 300'000);
  EXPECT_NEAR(LoadPreset("exp003").gamma.burn_in_fraction, 2000.0 / 300.0, 1e-12);
  EXPECT_EQ(LoadPreset("exp008").gamma.shape, CurveShape::kCosineSquared);
}

TEST(PresetTest, AllPresetsValidate) {
  for (const auto& info : PresetCatalog()) {
    EXPECT_NO_THROW(ValidateSchedule(LoadPreset(info.name))) << info.name;
  }
}

TEST(PresetTest, UnknownNameListsAvailable) {
  try {
    LoadPreset("exp999");
    FAIL() << "expected LookupError";
  } catch (const LookupError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("exp017"), std::string::npos);
    EXPECT_NE(msg.find("exp006"), std::string::npos);
  }
}

TEST(PresetTest, JsonRoundTripAgreesEverywhere) {
  for (const auto& info : PresetCatalog()) {
    const auto original = LoadPreset(info.name);
    const auto text = ScheduleToJson(original).dump();
    const auto reloaded = ScheduleFromJson(nlohmann::json::parse(text));
    for (int i = 0; i < 100; ++i) {
      const std::int64_t images = original.total_images * i / 99;
      const auto a = SnapshotAt(original, images);
      const auto b = SnapshotAt(reloaded, images);
      ASSERT_NEAR(a.lr, b.lr, 1e-12);
      ASSERT_NEAR(a.gamma, b.gamma, 1e-12);
      ASSERT_NEAR(a.beta2, b.beta2, 1e-12);
      ASSERT_NEAR(a.ema_halflife_kimg, b.ema_halflife_kimg, 1e-12);
      ASSERT_NEAR(a.aug_prob, b.aug_prob, 1e-12);
    }
  }
}

// The preset files shipped in presets/ must match the built-in table.
TEST(PresetTest, ShippedFilesMatchBuiltIns) {
  const std::filesystem::path dir = R3LAB_PRESET_DIR;
  for (const auto& info : PresetCatalog()) {
    const auto path = dir / (info.name + ".json");
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_EQ(LoadScheduleFile(path.string()), LoadPreset(info.name)) << info.name;
  }
}

TEST(ScheduleJsonTest, RejectsInvalid) {
  auto j = ScheduleToJson(LoadPreset("exp017"));
  j["beta2"]["final"] = 1.0;
  EXPECT_THROW(ScheduleFromJson(j), ConfigError);
  j = ScheduleToJson(LoadPreset("exp017"));
  j["aug_prob"]["final"] = 1.2;
  EXPECT_THROW(ScheduleFromJson(j), ConfigError);
  j = ScheduleToJson(LoadPreset("exp017"));
  j["gamma"]["initial"] = -1.0;
  EXPECT_THROW(ScheduleFromJson(j), ConfigError);
  j = ScheduleToJson(LoadPreset("exp017"));
  j["gamma"]["shape"] = "linear";
  EXPECT_THROW(ScheduleFromJson(j), ConfigError);
  j = ScheduleToJson(LoadPreset("exp017"));
  j.erase("total_images");
  EXPECT_THROW(ScheduleFromJson(j), ConfigError);
}

TEST(ScheduleDumpTest, TwoPointsGiveEndpoints) {
  const auto csv = ScheduleDumpCsv(LoadPreset("exp013"), 2);
  std::istringstream in(csv);
  std::string header, first, last, extra;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, last);
  EXPECT_FALSE(std::getline(in, extra));
  EXPECT_EQ(header, "progress,lr,gamma,beta2,ema_halflife_kimg,aug_prob");
  EXPECT_EQ(first.substr(0, 2), "0,");
  EXPECT_EQ(last.substr(0, 2), "1,");
  EXPECT_THROW(ScheduleDumpCsv(LoadPreset("exp013"), 1), DomainError);
}

}  // namespace
}  // namespace r3lab
