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

#include "r3lab/trainer.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <fmt/core.h>

#include "r3lab/metrics.h"

namespace r3lab {
namespace {

constexpr std::uint64_t kEvalNoiseSalt = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kReferenceSalt = 0xD1B54A32D192ED03ULL;
constexpr std::uint64_t kImageDataSalt = 0x8CB92BA72F3D8DD7ULL;

void CheckNetworkMatch(const GradientBundle& g, const MlpNetwork& net, const char* what) {
  if (!g.ShapeMatches(net)) throw ShapeError(fmt::format("{} does not match network", what));
}

RealMatrix GaussianMatrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RealMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
  }
  return m;
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

// Square grid of images tiled into one PGM.
RealVector TileImages(const RealMatrix& images, int side, int per_row) {
  const int grid = side * per_row;
  RealVector canvas = RealVector::Zero(grid * grid);
  const int count = std::min<int>(static_cast<int>(images.rows()), per_row * per_row);
  for (int i = 0; i < count; ++i) {
    const int r0 = (i / per_row) * side;
    const int c0 = (i % per_row) * side;
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        canvas((r0 + r) * grid + c0 + c) = std::clamp(images(i, r * side + c), 0.0, 1.0);
      }
    }
  }
  return canvas;
}

}  // namespace

OptimizerState OptimizerState::For(const MlpNetwork& net) {
  OptimizerState s;
  s.first_moment = GradientBundle::ZerosLike(net);
  s.second_moment = GradientBundle::ZerosLike(net);
  return s;
}

void AdamStep(MlpNetwork& net, const GradientBundle& grads, OptimizerState& opt, double lr,
              double beta2) {
  if (!(lr >= 0.0)) throw DomainError(fmt::format("learning rate must be >= 0, got {}", lr));
  if (!(beta2 > 0.0 && beta2 < 1.0)) {
    throw DomainError(fmt::format("beta2 must lie in (0, 1), got {}", beta2));
  }
  CheckNetworkMatch(grads, net, "gradient");
  CheckNetworkMatch(opt.first_moment, net, "first moment");
  CheckNetworkMatch(opt.second_moment, net, "second moment");
  ++opt.step_count;
  const double t = static_cast<double>(opt.step_count);
  const double correction1 = 1.0 - std::pow(opt.beta1, t);
  const double correction2 = 1.0 - std::pow(beta2, t);
  const double beta1 = opt.beta1;
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    const auto m_hat = m / correction1;
    const auto v_hat = v / correction2;
    param.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + kAdamEpsilon);
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.mutable_layers()[l];
    auto& m = opt.first_moment.layers()[l];
    auto& v = opt.second_moment.layers()[l];
    const auto& g = grads.layers()[l];
    update(layer.weights, g.weights, m.weights, v.weights);
    update(layer.bias, g.bias, m.bias, v.bias);
  }
}

double EmaBeta(std::int64_t images_this_step, double halflife_kimg) {
  if (!(halflife_kimg > 0.0)) {
    throw ConfigError(fmt::format("EMA half-life must be > 0, got {}", halflife_kimg));
  }
  if (images_this_step <= 0) throw DomainError("EMA step must cover at least one image");
  return std::pow(0.5, static_cast<double>(images_this_step) / (halflife_kimg * 1000.0));
}

void EmaUpdate(const MlpNetwork& g, MlpNetwork& g_ema, std::int64_t images_this_step,
               double halflife_kimg) {
  const double beta = EmaBeta(images_this_step, halflife_kimg);
  if (g.layers().size() != g_ema.layers().size()) {
    throw ShapeError("EMA network has a different layer count");
  }
  for (std::size_t l = 0; l < g.layers().size(); ++l) {
    const auto& src = g.layers()[l];
    auto& dst = g_ema.mutable_layers()[l];
    if (src.weights.rows() != dst.weights.rows() || src.weights.cols() != dst.weights.cols()) {
      throw ShapeError(fmt::format("EMA network differs in shape at layer {}", l));
    }
    // Written as g + beta * (ema - g) so that ema == g stays exact.
    dst.weights = src.weights + beta * (dst.weights - src.weights);
    dst.bias = src.bias + beta * (dst.bias - src.bias);
  }
}

RealVector TransformImage(const RealVector& image, int side, ImageTransform transform,
                          int shift_rows, int shift_cols) {
  if (image.size() != side * side) {
    throw ShapeError(fmt::format("image has {} pixels, expected {}", image.size(), side * side));
  }
  RealVector out = RealVector::Zero(image.size());
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      int sr = r;
      int sc = c;
      switch (transform) {
        case ImageTransform::kFlipHorizontal:
          sc = side - 1 - c;
          break;
        case ImageTransform::kFlipVertical:
          sr = side - 1 - r;
          break;
        case ImageTransform::kRotate90:
          sr = c;
          sc = side - 1 - r;
          break;
        case ImageTransform::kTranslate:
          sr = r - shift_rows;
          sc = c - shift_cols;
          break;
      }
      if (sr >= 0 && sr < side && sc >= 0 && sc < side) {
        out(r * side + c) = image(sr * side + sc);
      }
    }
  }
  return out;
}

RealMatrix ApplyAugmentation(const RealMatrix& batch, const AugmentationPolicy& policy,
                             Rng& rng, double point_jitter) {
  if (!(policy.probability >= 0.0 && policy.probability <= 1.0)) {
    throw DomainError(fmt::format("augmentation probability {} outside [0, 1]",
                                  policy.probability));
  }
  if (policy.domain == AugmentDomain::kPoints2d && batch.cols() != 2) {
    throw ShapeError(fmt::format("points augmentation needs width 2, got {}", batch.cols()));
  }
  if (policy.domain == AugmentDomain::kImage16 && batch.cols() != kImagePixels) {
    throw ShapeError(fmt::format("image augmentation needs width {}, got {}", kImagePixels,
                                 batch.cols()));
  }
  RealMatrix out = batch;
  if (policy.domain == AugmentDomain::kNone || policy.probability == 0.0) return out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick_transform(0, 3);
  std::uniform_int_distribution<int> pick_shift(0, 23);  // 5x5 grid minus the origin
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (unit(rng) >= policy.probability) continue;
    if (policy.domain == AugmentDomain::kPoints2d) {
      const double angle = 2.0 * std::numbers::pi * unit(rng);
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      const double x = out(i, 0);
      const double y = out(i, 1);
      const double jx = normal(rng);
      const double jy = normal(rng);
      out(i, 0) = c * x - s * y + point_jitter * jx;
      out(i, 1) = s * x + c * y + point_jitter * jy;
    } else {
      const auto transform = static_cast<ImageTransform>(pick_transform(rng));
      int dr = 0;
      int dc = 0;
      if (transform == ImageTransform::kTranslate) {
        int k = pick_shift(rng);
        if (k >= 12) ++k;  // skip (0, 0)
        dr = k / 5 - 2;
        dc = k % 5 - 2;
      }
      out.row(i) =
          TransformImage(out.row(i).transpose(), kImageSide, transform, dr, dc).transpose();
    }
  }
  return out;
}

const char* TestbedName(Testbed testbed) {
  switch (testbed) {
    case Testbed::kDirac:
      return "dirac";
    case Testbed::kRingGmm:
      return "ring_gmm";
    case Testbed::kRingImage:
      return "ring_image";
  }
  return "ring_gmm";
}

Testbed ParseTestbed(const std::string& name) {
  if (name == "dirac") return Testbed::kDirac;
  if (name == "ring_gmm") return Testbed::kRingGmm;
  if (name == "ring_image") return Testbed::kRingImage;
  throw ConfigError(
      fmt::format("unknown testbed '{}' (expected dirac, ring_gmm, ring_image)", name));
}

NetworkShape DefaultNetworkShape(Testbed testbed) {
  switch (testbed) {
    case Testbed::kDirac:
      return {1, {}, {}};
    case Testbed::kRingGmm:
      return {4, {64, 64, 64, 64}, {64, 64, 64}};
    case Testbed::kRingImage:
      return {16, {128}, {128}};
  }
  return {4, {64, 64, 64, 64}, {64, 64, 64}};
}

ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& json) {
  ExperimentConfig c;
  try {
    if (json.contains("schedule")) {
      c.schedule = ScheduleFromJson(json.at("schedule"));
      c.preset = json.value("preset", std::string("inline"));
    } else if (json.contains("preset")) {
      c.preset = json.at("preset").get<std::string>();
      c.schedule = LoadPreset(c.preset);
    } else {
      throw ConfigError("experiment config needs 'preset' or 'schedule'");
    }
    if (json.contains("testbed")) c.testbed = ParseTestbed(json.at("testbed").get<std::string>());
    c.batch_size = json.value("batch_size", c.batch_size);
    c.eval_interval_images = json.value("eval_interval", c.eval_interval_images);
    c.seed = json.value("seed", c.seed);
    c.output_dir = json.value("output_dir", c.output_dir);
    c.eval_samples = json.value("eval_samples", c.eval_samples);
    c.image_class = json.value("image_class", c.image_class);
    c.image_count = json.value("image_count", c.image_count);
    if (json.contains("ring")) {
      const auto& r = json.at("ring");
      c.ring.k = r.value("k", c.ring.k);
      c.ring.radius = r.value("radius", c.ring.radius);
      c.ring.sigma = r.value("sigma", c.ring.sigma);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("experiment config: {}", e.what()));
  }
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.eval_interval_images < 1) throw ConfigError("eval_interval must be >= 1");
  if (c.eval_samples < 2) throw ConfigError("eval_samples must be >= 2");
  ValidateRingGmm(c.ring);
  return c;
}

nlohmann::json ExperimentConfigToJson(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["preset"] = c.preset;
  j["schedule"] = ScheduleToJson(c.schedule);
  j["testbed"] = TestbedName(c.testbed);
  j["batch_size"] = c.batch_size;
  j["eval_interval"] = c.eval_interval_images;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["eval_samples"] = c.eval_samples;
  j["ring"] = {{"k", c.ring.k}, {"radius", c.ring.radius}, {"sigma", c.ring.sigma}};
  j["image_class"] = c.image_class;
  j["image_count"] = c.image_count;
  return nlohmann::json::parse(j.dump());
}

std::string MetricRecordToJsonLine(const MetricLogRecord& r) {
  nlohmann::ordered_json j;
  j["images_seen"] = r.images_seen;
  j["progress"] = r.progress;
  j["d_loss"] = r.losses.d_loss;
  j["g_loss"] = r.losses.g_loss;
  j["r1"] = r.losses.r1;
  j["r2"] = r.losses.r2;
  j["gamma"] = r.losses.gamma;
  j["lr"] = r.snapshot.lr;
  j["beta2"] = r.snapshot.beta2;
  j["aug_prob"] = r.snapshot.aug_prob;
  j["ema_halflife_kimg"] = r.snapshot.ema_halflife_kimg;
  j["proxy_fd"] = r.proxy_fd;
  j["modes_covered"] = r.modes_covered ? nlohmann::ordered_json(*r.modes_covered) : nullptr;
  j["hq_fraction"] = r.hq_fraction ? nlohmann::ordered_json(*r.hq_fraction) : nullptr;
  return j.dump();
}

MetricLogRecord MetricRecordFromJson(const nlohmann::json& j) {
  MetricLogRecord r;
  r.images_seen = j.at("images_seen").get<std::int64_t>();
  r.progress = j.at("progress").get<double>();
  r.snapshot.progress = r.progress;
  r.losses.d_loss = j.at("d_loss").get<double>();
  r.losses.g_loss = j.at("g_loss").get<double>();
  r.losses.r1 = j.at("r1").get<double>();
  r.losses.r2 = j.at("r2").get<double>();
  r.losses.gamma = j.at("gamma").get<double>();
  r.losses.d_total = r.losses.d_loss + 0.5 * r.losses.gamma * (r.losses.r1 + r.losses.r2);
  r.snapshot.gamma = r.losses.gamma;
  r.snapshot.lr = j.at("lr").get<double>();
  r.snapshot.beta2 = j.at("beta2").get<double>();
  r.snapshot.aug_prob = j.at("aug_prob").get<double>();
  r.snapshot.ema_halflife_kimg = j.at("ema_halflife_kimg").get<double>();
  r.proxy_fd = j.at("proxy_fd").get<double>();
  if (!j.at("modes_covered").is_null()) r.modes_covered = j.at("modes_covered").get<int>();
  if (!j.at("hq_fraction").is_null()) r.hq_fraction = j.at("hq_fraction").get<double>();
  return r;
}

Trainer::Trainer(ExperimentConfig config, RealMatrix image_data)
    : config_(std::move(config)), image_data_(std::move(image_data)) {
  ValidateSchedule(config_.schedule);
  if (config_.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (config_.shape.noise_dim <= 0) config_.shape = DefaultNetworkShape(config_.testbed);
  state_.schedule = config_.schedule;
  state_.rng.seed(config_.seed);

  switch (config_.testbed) {
    case Testbed::kDirac: {
      // G(z) = 0 * z + theta with theta = 1; D(x) = psi * x with psi = 1.
      DenseLayer g_layer{RealMatrix::Zero(1, 1), RealVector::Ones(1), Activation::kIdentity};
      DenseLayer d_layer{RealMatrix::Ones(1, 1), RealVector::Zero(1), Activation::kIdentity};
      state_.g = MlpNetwork({g_layer});
      state_.d = MlpNetwork({d_layer});
      reference_ = RealMatrix::Zero(config_.eval_samples, 1);
      break;
    }
    case Testbed::kRingGmm: {
      std::vector<int> g_widths{config_.shape.noise_dim};
      g_widths.insert(g_widths.end(), config_.shape.g_hidden.begin(), config_.shape.g_hidden.end());
      g_widths.push_back(2);
      std::vector<int> d_widths{2};
      d_widths.insert(d_widths.end(), config_.shape.d_hidden.begin(), config_.shape.d_hidden.end());
      d_widths.push_back(1);
      state_.g = MlpNetwork::Random(g_widths, Activation::kLeakyRelu, Activation::kIdentity,
                                    state_.rng);
      state_.d = MlpNetwork::Random(d_widths, Activation::kLeakyRelu, Activation::kIdentity,
                                    state_.rng);
      Rng ref_rng(config_.seed ^ kReferenceSalt);
      reference_ = SampleRingGmm(config_.ring, config_.eval_samples, ref_rng);
      break;
    }
    case Testbed::kRingImage: {
      if (image_data_.size() == 0) {
        if (config_.image_count < 2) throw ConfigError("image_count must be >= 2");
        Rng data_rng(config_.seed ^ kImageDataSalt);
        image_data_.resize(config_.image_count, kImagePixels);
        for (int i = 0; i < config_.image_count; ++i) {
          image_data_.row(i) = RenderCellImage(config_.image_class, data_rng).transpose();
        }
      }
      if (image_data_.cols() != kImagePixels || image_data_.rows() < 2) {
        throw ShapeError("image training data must have >= 2 rows of 256 pixels");
      }
      std::vector<int> g_widths{config_.shape.noise_dim};
      g_widths.insert(g_widths.end(), config_.shape.g_hidden.begin(), config_.shape.g_hidden.end());
      g_widths.push_back(kImagePixels);
      std::vector<int> d_widths{kImagePixels};
      d_widths.insert(d_widths.end(), config_.shape.d_hidden.begin(), config_.shape.d_hidden.end());
      d_widths.push_back(1);
      state_.g = MlpNetwork::Random(g_widths, Activation::kLeakyRelu, Activation::kIdentity,
                                    state_.rng);
      state_.d = MlpNetwork::Random(d_widths, Activation::kLeakyRelu, Activation::kIdentity,
                                    state_.rng);
      reference_ = image_data_;
      break;
    }
  }
  state_.g_ema = state_.g;
  state_.opt_g = OptimizerState::For(state_.g);
  state_.opt_d = OptimizerState::For(state_.d);
}

AugmentDomain Trainer::augment_domain() const {
  switch (config_.testbed) {
    case Testbed::kDirac:
      return AugmentDomain::kNone;
    case Testbed::kRingGmm:
      return AugmentDomain::kPoints2d;
    case Testbed::kRingImage:
      return AugmentDomain::kImage16;
  }
  return AugmentDomain::kNone;
}

FeatureDomain Trainer::feature_domain() const {
  return config_.testbed == Testbed::kRingImage ? FeatureDomain::kImage16
                                                : FeatureDomain::kPoints2d;
}

RealMatrix Trainer::DrawRealBatch() {
  const int b = config_.batch_size;
  switch (config_.testbed) {
    case Testbed::kDirac:
      return RealMatrix::Zero(b, 1);
    case Testbed::kRingGmm:
      return SampleRingGmm(config_.ring, b, state_.rng);
    case Testbed::kRingImage: {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(image_data_.rows()) - 1);
      RealMatrix batch(b, image_data_.cols());
      for (int i = 0; i < b; ++i) batch.row(i) = image_data_.row(pick(state_.rng));
      return batch;
    }
  }
  return {};
}

std::optional<LossReport> Trainer::TrainStep(const RealMatrix& real_batch) {
  const int b = config_.batch_size;
  if (real_batch.rows() != b || real_batch.cols() != state_.d.input_width()) {
    throw ShapeError(fmt::format("real batch is {}x{}, expected {}x{}", real_batch.rows(),
                                 real_batch.cols(), b, state_.d.input_width()));
  }
  if (state_.images_seen + images_per_step() > state_.schedule.total_images) {
    return std::nullopt;
  }
  const auto snap = SnapshotAt(state_.schedule, state_.images_seen);
  const int noise_dim = state_.g.input_width();

  PairedBatch pair;
  pair.fake = Forward(state_.g, GaussianMatrix(b, noise_dim, state_.rng));
  const AugmentationPolicy policy{augment_domain(), snap.aug_prob};
  pair.real = ApplyAugmentation(real_batch, policy, state_.rng);
  pair.fake = ApplyAugmentation(pair.fake, policy, state_.rng);
  auto d_step = DiscriminatorStepGradients(state_.d, pair, snap.gamma);
  AdamStep(state_.d, d_step.grads, state_.opt_d, snap.lr, snap.beta2);

  const RealMatrix noise = GaussianMatrix(b, noise_dim, state_.rng);
  auto g_step = GeneratorStepGradients(state_.g, state_.d, noise, real_batch);
  AdamStep(state_.g, g_step.grads, state_.opt_g, snap.lr, snap.beta2);

  EmaUpdate(state_.g, state_.g_ema, images_per_step(), snap.ema_halflife_kimg);
  state_.images_seen += images_per_step();

  LossReport report = d_step.report;
  report.g_loss = g_step.g_loss;
  return report;
}

std::optional<LossReport> Trainer::Step() {
  if (state_.images_seen + images_per_step() > state_.schedule.total_images) {
    return std::nullopt;
  }
  return TrainStep(DrawRealBatch());
}

RealMatrix Trainer::SampleGenerator(const MlpNetwork& g, int n,
                                    std::uint64_t noise_seed) const {
  Rng rng(noise_seed);
  return Forward(g, GaussianMatrix(n, g.input_width(), rng));
}

MetricLogRecord Trainer::Evaluate(const LossReport& last) const {
  MetricLogRecord r;
  r.images_seen = state_.images_seen;
  r.progress = static_cast<double>(state_.images_seen) /
               static_cast<double>(state_.schedule.total_images);
  r.losses = last;
  r.snapshot = SnapshotAt(state_.schedule, state_.images_seen);
  const RealMatrix samples =
      SampleGenerator(state_.g_ema, config_.eval_samples, config_.seed ^ kEvalNoiseSalt);
  r.proxy_fd = ProxyFd(reference_, samples, feature_domain());
  if (config_.testbed == Testbed::kRingGmm) {
    const auto coverage = MeasureModeCoverage(samples, config_.ring);
    r.modes_covered = coverage.modes_covered;
    r.hq_fraction = coverage.hq_fraction;
  }
  return r;
}

TrainingResult RunTraining(const ExperimentConfig& config, RealMatrix image_data) {
  Trainer trainer(config, std::move(image_data));
  TrainingResult result;
  const std::int64_t interval = config.eval_interval_images;
  LossReport last;
  bool logged_last = false;
  while (auto report = trainer.Step()) {
    last = *report;
    const std::int64_t seen = trainer.state().images_seen;
    logged_last = false;
    if (seen / interval != (seen - trainer.images_per_step()) / interval) {
      const auto& s = trainer.state();
      if (!s.g.AllFinite() || !s.d.AllFinite() || !s.g_ema.AllFinite()) {
        throw Error(fmt::format("parameters became non-finite at {} images", seen));
      }
      result.log.push_back(trainer.Evaluate(last));
      logged_last = true;
    }
  }
  if (!logged_last && trainer.state().images_seen > 0) {
    result.log.push_back(trainer.Evaluate(last));
  }
  result.final_state = trainer.state();

  if (!config.output_dir.empty()) {
    const std::filesystem::path dir(config.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
    std::string lines;
    for (const auto& rec : result.log) lines += MetricRecordToJsonLine(rec) + "\n";
    WriteTextFile(dir / "metrics.jsonl", lines);
    const auto& s = result.final_state;
    WriteTextFile(dir / "g.json", NetworkToJson(s.g).dump(1) + "\n");
    WriteTextFile(dir / "g_ema.json", NetworkToJson(s.g_ema).dump(1) + "\n");
    WriteTextFile(dir / "d.json", NetworkToJson(s.d).dump(1) + "\n");
    const RealMatrix samples =
        trainer.SampleGenerator(s.g_ema, config.eval_samples, config.seed ^ kEvalNoiseSalt);
    if (config.testbed == Testbed::kRingImage) {
      WritePgm((dir / "samples.pgm").string(), TileImages(samples, kImageSide, 8),
               kImageSide * 8);
    } else {
      WritePointsCsv((dir / "samples.csv").string(), samples,
                     std::vector<int>(samples.rows(), 0));
    }
  }
  return result;
}

}  // namespace r3lab
