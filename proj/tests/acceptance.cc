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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "oracles.h"
#include "r3lab/metrics.h"
#include "r3lab/network.h"
#include "r3lab/rebalance.h"
#include "r3lab/schedule.h"
#include "r3lab/testbeds.h"
#include "r3lab/trainer.h"

namespace r3lab {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <typename T>
T Median(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Closed form written out independently of ScheduleValue.
double ClosedForm(const ScheduleSpec& s, double p) {
  const double x = std::min(p / s.burn_in_fraction, 1.0);
  double frac = 1.0;
  if (s.shape == CurveShape::kCosine) frac = 0.5 * (1.0 + std::cos(std::numbers::pi * x));
  if (s.shape == CurveShape::kCosineSquared) {
    frac = 0.5 * (1.0 + std::cos(std::numbers::pi * x * x));
  }
  return s.final + (s.initial - s.final) * frac;
}

Outcome ScheduleExactness() {
  double worst = 0.0;
  for (const auto& info : PresetCatalog()) {
    const auto s = LoadPreset(info.name);
    for (const ScheduleSpec* spec : {&s.lr, &s.gamma, &s.beta2, &s.ema_halflife_kimg, &s.aug_prob}) {
      for (int i = 0; i < 1000; ++i) {
        const double p = i / 999.0;
        worst = std::max(worst, std::abs(ScheduleValue(*spec, p) - ClosedForm(*spec, p)));
      }
    }
  }
  const auto plain = LoadPreset("exp004").gamma;
  const auto squared = LoadPreset("exp008").gamma;
  const auto long_burn = LoadPreset("exp009").gamma;
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const double p = i / 999.0;
    if (ScheduleValue(squared, p) < ScheduleValue(plain, p)) ++violations;
    if (ScheduleValue(long_burn, p) < ScheduleValue(plain, p)) ++violations;
  }
  return {worst <= 1e-12 && violations == 0,
          fmt::format("max |error| {:.3g} over 1000 points x {} presets, {} ordering violations",
                      worst, PresetCatalog().size(), violations)};
}

Outcome GradientOracle() {
  Rng rng(20260101);
  std::uniform_int_distribution<int> depth(1, 3), width(1, 16), rows(1, 4);
  constexpr double kRel = 1e-4, kAbs = 1e-6;
  int passed = 0;
  double worst = 0.0;
  auto track = [&](double a, double b) {
    const double diff = std::abs(a - b);
    worst = std::max(worst, diff / std::max({std::abs(a), std::abs(b), kAbs / kRel}));
    return oracle::Close(a, b, kRel, kAbs);
  };
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> widths = {width(rng)};
    const int layers = depth(rng);
    for (int l = 1; l < layers; ++l) widths.push_back(width(rng));
    widths.push_back(1);
    const Activation hidden = trial % 2 == 0 ? Activation::kTanh : Activation::kLeakyRelu;
    const MlpNetwork net = oracle::RandomNet(widths, hidden, Activation::kIdentity, rng);
    const MlpNetwork smooth = oracle::RandomNet(widths, Activation::kTanh, Activation::kIdentity, rng);
    const RealMatrix x = oracle::RandomMatrix(rows(rng), widths.front(), rng);
    RealVector upstream = oracle::RandomMatrix(static_cast<int>(x.rows()), 1, rng).col(0);

    bool ok = true;
    const auto analytic = ParamGradients(net, x, upstream).Flatten();
    const auto numeric = oracle::NumericParamGradient(
        net,
        [&](const MlpNetwork& n) {
          double s = 0.0;
          for (Eigen::Index r = 0; r < x.rows(); ++r) {
            s += upstream(r) * oracle::ForwardRow(n, oracle::Row(x, r))[0];
          }
          return s;
        },
        1e-5);
    for (std::size_t i = 0; i < numeric.size(); ++i) ok = track(analytic[i], numeric[i]) && ok;

    const RealMatrix gx = InputGradient(net, x);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const auto g = oracle::NumericInputGradient(net, oracle::Row(x, r), 1e-5);
      for (std::size_t c = 0; c < g.size(); ++c) ok = track(gx(r, c), g[c]) && ok;
    }

    const auto penalty = PenaltyParamGradients(smooth, x);
    ok = track(penalty.value, oracle::NumericPenalty(smooth, x, 1e-5)) && ok;
    const auto pa = penalty.grads.Flatten();
    const auto pn = oracle::NumericParamGradient(
        smooth, [&](const MlpNetwork& n) { return oracle::NumericPenalty(n, x, 1e-5); }, 1e-4);
    for (std::size_t i = 0; i < pn.size(); ++i) ok = track(pa[i], pn[i]) && ok;
    passed += ok ? 1 : 0;
  }
  return {passed == 200, fmt::format("{}/200 random networks pass, worst scaled error {:.3g}",
                                     passed, worst)};
}

Outcome DiracDichotomy() {
  const auto reg = SimulateDirac({1.0, 1.0}, 0.05, 1.0, 5000);
  const auto free = SimulateDirac({1.0, 1.0}, 0.05, 0.0, 5000);
  return {reg.final_norm < 0.05 && free.min_norm > 0.2,
          fmt::format("gamma=1 final norm {:.3g}, gamma=0 min norm {:.4f}", reg.final_norm,
                      free.min_norm)};
}

GaussianSummary Summary(std::initializer_list<double> mean, const Eigen::MatrixXd& cov) {
  GaussianSummary s{RealVector(static_cast<Eigen::Index>(mean.size())), cov};
  int i = 0;
  for (double m : mean) s.mean(i++) = m;
  return s;
}

Outcome FrechetCases() {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const Eigen::MatrixXd four = Eigen::MatrixXd::Constant(1, 1, 4.0);
  const double same = FrechetDistance(Summary({0.5}, one), Summary({0.5}, one));
  const double shift = FrechetDistance(Summary({0.0}, one), Summary({3.0}, one));
  const double spread = FrechetDistance(Summary({0.0}, one), Summary({0.0}, four));
  bool ok = std::abs(same) <= 1e-9 && std::abs(shift - 9.0) <= 1e-9 && std::abs(spread - 1.0) <= 1e-9;

  Rng rng(4);
  double worst_shift = 0.0, worst_scale = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    auto random_summary = [&] {
      const RealMatrix a = oracle::RandomMatrix(4, 4, rng);
      GaussianSummary s{oracle::RandomMatrix(4, 1, rng).col(0), a * a.transpose()};
      s.covariance += 0.1 * Eigen::MatrixXd::Identity(4, 4);
      return s;
    };
    GaussianSummary a = random_summary(), b = random_summary();
    const double base = FrechetDistance(a, b);
    const RealVector t = oracle::RandomMatrix(4, 1, rng, 3.0).col(0);
    GaussianSummary at = a, bt = b;
    at.mean += t;
    bt.mean += t;
    worst_shift = std::max(worst_shift, std::abs(FrechetDistance(at, bt) - base));
    const double k = 0.5 + trial * 0.05;
    GaussianSummary as = a, bs = b;
    as.mean *= k;
    bs.mean *= k;
    as.covariance *= k * k;
    bs.covariance *= k * k;
    worst_scale = std::max(worst_scale, std::abs(FrechetDistance(as, bs) - k * k * base));
  }
  ok = ok && worst_shift <= 1e-8 && worst_scale <= 1e-8;
  return {ok, fmt::format("identical {:.2g}, shift {:.12g}, spread {:.12g}, translation drift "
                          "{:.2g}, scaling drift {:.2g}",
                          same, shift, spread, worst_shift, worst_scale)};
}

ModeCoverage FinalCoverage(const TrainingSchedule& schedule, std::uint64_t seed) {
  ExperimentConfig c;
  c.preset = "exp017";
  c.schedule = schedule;
  c.testbed = Testbed::kRingGmm;
  c.seed = seed;
  c.eval_interval_images = schedule.total_images;
  const auto log = RunTraining(c).log;
  return {*log.back().modes_covered, *log.back().hq_fraction};
}

Outcome AntiCollapse() {
  const TrainingSchedule regularized = LoadPreset("exp017");
  TrainingSchedule ablated = regularized;
  ablated.gamma = {0.0, 0.0, 1.0, CurveShape::kConstant};
  std::vector<int> modes_reg, modes_abl;
  std::vector<double> hq_reg, hq_abl;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = FinalCoverage(regularized, seed);
    const auto a = FinalCoverage(ablated, seed);
    modes_reg.push_back(r.modes_covered);
    hq_reg.push_back(r.hq_fraction);
    modes_abl.push_back(a.modes_covered);
    hq_abl.push_back(a.hq_fraction);
  }
  const int m_reg = Median(modes_reg), m_abl = Median(modes_abl);
  const double h_reg = Median(hq_reg), h_abl = Median(hq_abl);
  const bool regularized_ok = m_reg >= 7 && h_reg >= 0.6;
  const bool ablation_ok = m_abl < m_reg;
  return {regularized_ok && ablation_ok,
          fmt::format("exp017 median modes {} hq {:.3f} ({}); gamma=0 median modes {} hq {:.3f} "
                      "({})",
                      m_reg, h_reg, regularized_ok ? "ok" : "below threshold", m_abl, h_abl,
                      ablation_ok ? "fewer modes" : "not fewer modes")};
}

Outcome RebalancePattern() {
  std::vector<double> recall_gain, f1_t2, f1_t4, macro_gain;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RebalanceConfig c;
    c.seed = seed;
    const auto r = RunRebalanceExperiment(c);
    const int minority = c.minority_class;
    recall_gain.push_back(r.after.per_class[minority].recall - r.before.per_class[minority].recall);
    f1_t2.push_back(r.after.per_class[0].f1 - r.before.per_class[0].f1);
    f1_t4.push_back(r.after.per_class[2].f1 - r.before.per_class[2].f1);
    macro_gain.push_back(r.after.macro_f1 - r.before.macro_f1);
  }
  const double dr = Median(recall_gain), d2 = Median(f1_t2), d4 = Median(f1_t4),
               dm = Median(macro_gain);
  return {dr >= 0.15 && d2 >= -0.05 && d4 >= -0.05 && dm >= 0.0,
          fmt::format("median minority recall {:+.3f}, t2 F1 {:+.3f}, t4 F1 {:+.3f}, macro-F1 "
                      "{:+.3f}",
                      dr, d2, d4, dm)};
}

Outcome TableMetrics() {
  // Confusion counts chosen so per-class rates round to the first table.
  const int counts[3][3] = {{792, 0, 8}, {22, 12, 166}, {2, 3, 495}};
  std::vector<int> labels, preds;
  for (int y = 0; y < 3; ++y) {
    for (int p = 0; p < 3; ++p) {
      for (int n = 0; n < counts[y][p]; ++n) {
        labels.push_back(y);
        preds.push_back(p);
      }
    }
  }
  const auto r = MakeClassificationReport(labels, preds, 3);
  const double table[3][3] = {{0.97, 0.99, 0.98}, {0.80, 0.06, 0.11}, {0.74, 0.99, 0.85}};
  bool rows_match = true;
  auto round2 = [](double v) { return std::round(v * 100.0) / 100.0; };
  for (int c = 0; c < 3; ++c) {
    const auto& m = r.per_class[c];
    rows_match = rows_match && round2(m.precision) == table[c][0] &&
                 round2(m.recall) == table[c][1] && round2(m.f1) == table[c][2];
  }
  const double table_macro_f1 = MacroMean({table[0][2], table[1][2], table[2][2]});
  const bool ok = rows_match && std::abs(table_macro_f1 - 0.6467) < 5e-5 &&
                  std::abs(r.macro_recall - 0.68) < 1e-12 && round2(r.macro_f1) == 0.65;
  return {ok, fmt::format("per-class rows match: {}, macro-F1 of table column {:.4f}, report "
                          "macro-recall {:.4f}, report macro-F1 {:.4f}",
                          rows_match ? "yes" : "no", table_macro_f1, r.macro_recall, r.macro_f1)};
}

int RunCli(const std::string& args, const fs::path& stdout_path) {
  const std::string cmd =
      fmt::format("\"{}\" {} > \"{}\" 2>&1", R3LAB_CLI_PATH, args, stdout_path.string());
  return std::system(cmd.c_str());
}

Outcome Determinism() {
  const fs::path root = fs::temp_directory_path() / "r3lab_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream cfg(root / "rebalance.json");
    cfg << R"({"counts": [60, 24, 62], "synth_count": 20, "gan_total_images": 16000,
              "classifier": {"epochs": 100}})";
  }
  std::vector<std::string> mismatches;
  int failures = 0;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir);
    failures += RunCli(fmt::format("train --preset exp006 --testbed ring_gmm --seed 3 --out \"{}\"",
                                   (dir / "train").string()),
                       dir / "train.log") != 0;
    failures += RunCli(fmt::format("train --preset exp017 --testbed ring_image --seed 3 "
                                   "--eval-interval 100000 --out \"{}\"",
                                   (dir / "image").string()),
                       dir / "image.log") != 0;
    failures += RunCli(fmt::format("rebalance --config \"{}\" --seed 3 --out \"{}\"",
                                   (root / "rebalance.json").string(), (root / "reb").string()),
                       dir / "rebalance.log") != 0;
    for (const char* f : {"report.csv", "report.json"}) {
      fs::copy_file(root / "reb" / f, dir / f, fs::copy_options::overwrite_existing);
    }
    failures += RunCli("schedule --preset exp017 --points 101", dir / "schedule.csv") != 0;
    failures += RunCli(fmt::format("dirac --gamma 1 --out \"{}\"", (dir / "dirac.csv").string()),
                       dir / "dirac.log") != 0;
  }
  const std::vector<std::string> files = {
      "train/metrics.jsonl", "train/g.json",       "train/g_ema.json", "train/d.json",
      "train/samples.csv",   "image/metrics.jsonl", "image/g_ema.json", "image/samples.pgm",
      "report.csv",          "report.json",        "schedule.csv",     "dirac.csv"};
  for (const auto& f : files) {
    const std::string a = ReadFile(root / "a" / f);
    if (a.empty() || a != ReadFile(root / "b" / f)) mismatches.push_back(f);
  }
  fs::remove_all(root);
  return {failures == 0 && mismatches.empty(),
          fmt::format("{} artifacts compared, {} differ, {} command failures", files.size(),
                      mismatches.size(), failures)};
}

}  // namespace
}  // namespace r3lab

int main() {
  using namespace r3lab;
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "schedule exactness", ScheduleExactness},
      {2, "gradient oracle", GradientOracle},
      {3, "dirac stabilization dichotomy", DiracDichotomy},
      {4, "frechet analytic cases", FrechetCases},
      {5, "anti-collapse on ring gmm", AntiCollapse},
      {6, "rebalance pattern", RebalancePattern},
      {7, "metrics table cross-check", TableMetrics},
      {8, "determinism", Determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("[{}] criterion {}: {} | {} | {:.1f} s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
               o.detail, secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
