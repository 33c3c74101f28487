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

// r3lab: train, compare, schedule, dirac, rebalance and presets commands.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "r3lab/rebalance.h"
#include "r3lab/schedule.h"
#include "r3lab/testbeds.h"
#include "r3lab/trainer.h"

namespace r3lab {
namespace {

constexpr int kExitRuntime = 2;

nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("'{}': {}", path, e.what()));
  }
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct TrainArgs {
  std::string config_path;
  std::string preset;
  std::string testbed;
  int batch_size = 0;
  std::int64_t eval_interval = 0;
  std::uint64_t seed = 0;
  std::string out;
};

// File values first, then flags.
ExperimentConfig BuildExperiment(const TrainArgs& a) {
  nlohmann::json j = a.config_path.empty() ? nlohmann::json::object() : ReadJsonFile(a.config_path);
  if (!a.preset.empty()) {
    j.erase("schedule");
    j["preset"] = a.preset;
  }
  if (!j.contains("preset") && !j.contains("schedule")) j["preset"] = "exp017";
  if (!a.testbed.empty()) j["testbed"] = a.testbed;
  if (a.batch_size > 0) j["batch_size"] = a.batch_size;
  if (a.eval_interval > 0) j["eval_interval"] = a.eval_interval;
  j["seed"] = a.seed;
  ExperimentConfig c = ExperimentConfigFromJson(j);
  c.output_dir = !a.out.empty() ? a.out
                                : fmt::format("runs/{}_{}_s{}", c.preset, TestbedName(c.testbed),
                                              c.seed);
  return c;
}

int CmdTrain(const TrainArgs& a) {
  const ExperimentConfig c = BuildExperiment(a);
  const auto result = RunTraining(c);
  const auto& last = result.log.back();
  fmt::print("{} {} seed {}: {} images, proxy_fd {:.6f}", c.preset, TestbedName(c.testbed),
             c.seed, last.images_seen, last.proxy_fd);
  if (last.modes_covered) {
    fmt::print(", modes {}/{}, hq {:.4f}", *last.modes_covered, c.ring.k, *last.hq_fraction);
  }
  fmt::print("\nwrote {}\n", c.output_dir);
  return 0;
}

struct CompareArgs {
  std::vector<std::string> presets;
  std::string testbed = "ring_gmm";
  std::uint64_t seed = 0;
  int runs = 5;
  int threads = 1;
  std::string out = "runs/compare";
};

struct CompareCell {
  std::string preset;
  std::uint64_t seed = 0;
  std::optional<MetricLogRecord> final;
  std::string error;
};

int CmdCompare(const CompareArgs& a) {
  if (a.presets.size() < 2) throw ConfigError("compare needs at least two presets");
  if (a.runs < 1) throw ConfigError("compare needs --runs >= 1");
  for (const auto& p : a.presets) LoadPreset(p);

  std::vector<CompareCell> cells;
  for (const auto& p : a.presets) {
    for (int r = 0; r < a.runs; ++r) cells.push_back({p, a.seed + r, std::nullopt, {}});
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      CompareCell& cell = cells[i];
      try {
        TrainArgs t;
        t.preset = cell.preset;
        t.testbed = a.testbed;
        t.seed = cell.seed;
        t.out = (std::filesystem::path(a.out) / cell.preset / fmt::format("seed_{}", cell.seed))
                    .string();
        cell.final = RunTraining(BuildExperiment(t)).log.back();
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(a.threads, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  struct Row {
    std::string preset;
    double fd = 0.0;
    std::optional<double> modes;
    std::optional<double> hq;
    int done = 0;
    int failed = 0;
  };
  std::vector<Row> rows;
  for (const auto& p : a.presets) {
    Row row{p};
    std::vector<double> fd, modes, hq;
    for (const auto& cell : cells) {
      if (cell.preset != p) continue;
      if (!cell.final) {
        ++row.failed;
        fmt::print(stderr, "{} seed {} failed: {}\n", cell.preset, cell.seed, cell.error);
        continue;
      }
      ++row.done;
      fd.push_back(cell.final->proxy_fd);
      if (cell.final->modes_covered) modes.push_back(*cell.final->modes_covered);
      if (cell.final->hq_fraction) hq.push_back(*cell.final->hq_fraction);
    }
    if (row.done == 0) continue;
    row.fd = Median(fd);
    if (!modes.empty()) row.modes = Median(modes);
    if (!hq.empty()) row.hq = Median(hq);
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& x, const Row& y) { return x.fd < y.fd; });

  auto opt = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.6f}", *v) : std::string();
  };
  std::string csv = "rank,preset,median_proxy_fd,median_modes_covered,median_hq_fraction,runs,failed\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    csv += fmt::format("{},{},{:.6f},{},{},{},{}\n", i + 1, r.preset, r.fd, opt(r.modes), opt(r.hq),
                       r.done, r.failed);
  }
  WriteText(std::filesystem::path(a.out) / "summary.csv", csv);
  std::cout << csv;
  const bool any_failed =
      std::any_of(cells.begin(), cells.end(), [](const CompareCell& c) { return !c.final; });
  return any_failed ? kExitRuntime : 0;
}

int CmdSchedule(const std::string& preset, const std::string& file, int points) {
  if (points < 2) throw ConfigError("--points must be >= 2");
  const TrainingSchedule s = file.empty() ? LoadPreset(preset) : LoadScheduleFile(file);
  std::cout << ScheduleDumpCsv(s, points);
  return 0;
}

int CmdDirac(double lr, double gamma, int steps, double theta, double psi,
             const std::string& out) {
  if (steps < 1) throw ConfigError("--steps must be >= 1");
  const auto summary = SimulateDirac({theta, psi}, lr, gamma, steps);
  std::string csv = "step,theta,psi,norm\n";
  for (std::size_t i = 0; i < summary.trajectory.size(); ++i) {
    const auto& s = summary.trajectory[i];
    csv += fmt::format("{},{},{},{}\n", i, s.theta, s.psi, s.Norm());
  }
  WriteText(out, csv);
  fmt::print("lr {} gamma {} steps {}: final_norm {:.6g} min_norm {:.6g} max_norm {:.6g}\n", lr,
             gamma, steps, summary.final_norm, summary.min_norm, summary.max_norm);
  return 0;
}

int CmdRebalance(const std::string& config_path, std::uint64_t seed, const std::string& out) {
  nlohmann::json j = config_path.empty() ? nlohmann::json::object() : ReadJsonFile(config_path);
  j["seed"] = seed;
  if (!out.empty()) j["output_dir"] = out;
  if (!j.contains("output_dir") || j["output_dir"].get<std::string>().empty()) {
    j["output_dir"] = fmt::format("runs/rebalance_s{}", seed);
  }
  const RebalanceConfig config = RebalanceConfigFromJson(j);
  const RebalanceReport report = RunRebalanceExperiment(config);
  std::istringstream csv(RebalanceReportCsv(report));
  std::string line;
  while (std::getline(csv, line)) {
    if (line.rfind("section", 0) == 0 || line.find(",macro,") != std::string::npos) {
      std::cout << line << "\n";
    }
  }
  fmt::print("wrote {}\n", config.output_dir);
  return 0;
}

int CmdPresets() {
  for (const auto& p : PresetCatalog()) {
    const auto s = LoadPreset(p.name);
    fmt::print("{:<8} {:>7} images  {}\n", p.name, s.total_images, p.summary);
  }
  return 0;
}

}  // namespace
}  // namespace r3lab

int main(int argc, char** argv) {
  using namespace r3lab;
  CLI::App app{"r3lab: GAN schedule and penalty lab"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "train one experiment");
  cmd_train->add_option("--config", train.config_path, "experiment JSON file")
      ->check(CLI::ExistingFile);
  cmd_train->add_option("--preset", train.preset, "preset name");
  cmd_train->add_option("--testbed", train.testbed, "dirac, ring_gmm or ring_image");
  cmd_train->add_option("--batch-size", train.batch_size, "real rows per step");
  cmd_train->add_option("--eval-interval", train.eval_interval, "images between log records");
  cmd_train->add_option("--seed", train.seed, "master seed")->required();
  cmd_train->add_option("--out", train.out, "output directory");

  CompareArgs compare;
  auto* cmd_compare = app.add_subcommand("compare", "run presets over seeds and rank them");
  cmd_compare->add_option("--presets", compare.presets, "two or more preset names")
      ->required()
      ->delimiter(',');
  cmd_compare->add_option("--testbed", compare.testbed, "ring_gmm or ring_image");
  cmd_compare->add_option("--seed", compare.seed, "first seed")->required();
  cmd_compare->add_option("--runs", compare.runs, "seeds per preset");
  cmd_compare->add_option("--threads", compare.threads, "concurrent runs");
  cmd_compare->add_option("--out", compare.out, "output directory");

  std::string sched_preset = "exp017", sched_file;
  int points = 101;
  auto* cmd_schedule = app.add_subcommand("schedule", "dump a schedule as CSV");
  cmd_schedule->add_option("--preset", sched_preset, "preset name");
  cmd_schedule->add_option("--file", sched_file, "schedule JSON file")->check(CLI::ExistingFile);
  cmd_schedule->add_option("--points", points, "grid points");

  double lr = 0.05, gamma = 1.0, theta = 1.0, psi = 1.0;
  int steps = 5000;
  std::string dirac_out = "dirac_trajectory.csv";
  auto* cmd_dirac = app.add_subcommand("dirac", "simulate the two-parameter game");
  cmd_dirac->add_option("--lr", lr, "step size");
  cmd_dirac->add_option("--gamma", gamma, "penalty strength");
  cmd_dirac->add_option("--steps", steps, "number of steps");
  cmd_dirac->add_option("--theta", theta, "initial generator parameter");
  cmd_dirac->add_option("--psi", psi, "initial discriminator parameter");
  cmd_dirac->add_option("--out", dirac_out, "trajectory CSV path");

  std::string reb_config, reb_out;
  std::uint64_t reb_seed = 0;
  auto* cmd_rebalance = app.add_subcommand("rebalance", "run the rebalancing pipeline");
  cmd_rebalance->add_option("--config", reb_config, "rebalance JSON file")
      ->check(CLI::ExistingFile);
  cmd_rebalance->add_option("--seed", reb_seed, "master seed")->required();
  cmd_rebalance->add_option("--out", reb_out, "output directory");

  auto* cmd_presets = app.add_subcommand("presets", "list the preset ladder");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*cmd_compare && compare.presets.size() < 2) {
    fmt::print(stderr, "compare needs at least two presets\n");
    return 1;
  }

  try {
    if (*cmd_train) return CmdTrain(train);
    if (*cmd_compare) return CmdCompare(compare);
    if (*cmd_schedule) return CmdSchedule(sched_preset, sched_file, points);
    if (*cmd_dirac) return CmdDirac(lr, gamma, steps, theta, psi, dirac_out);
    if (*cmd_rebalance) return CmdRebalance(reb_config, reb_seed, reb_out);
    if (*cmd_presets) return CmdPresets();
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return 1;
}
