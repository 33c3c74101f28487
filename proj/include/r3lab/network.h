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

#ifndef R3LAB_NETWORK_H_
#define R3LAB_NETWORK_H_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "r3lab/common.h"

namespace r3lab {

enum class Activation { kLeakyRelu, kTanh, kIdentity };

inline constexpr double kLeakySlope = 0.2;

std::string_view ActivationName(Activation act);
Activation ParseActivation(std::string_view name);

// Fully connected layer computing act(W x + b). `weights` is out x in.
struct DenseLayer {
  RealMatrix weights;
  RealVector bias;
  Activation activation = Activation::kIdentity;

  int in_width() const { return static_cast<int>(weights.cols()); }
  int out_width() const { return static_cast<int>(weights.rows()); }
};

// Small multilayer perceptron. Networks are plain values; copying one gives
// an independent network.
class MlpNetwork {
 public:
  MlpNetwork() = default;
  // Throws ShapeError if consecutive layer widths do not chain.
  explicit MlpNetwork(std::vector<DenseLayer> layers);

  // Layers sized by `widths` (input first), hidden activation on every layer
  // but the last. Weights are He-style Gaussian, biases zero.
  static MlpNetwork Random(const std::vector<int>& widths, Activation hidden,
                           Activation output, Rng& rng);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  int input_width() const;
  int output_width() const;
  int num_layers() const { return static_cast<int>(layers_.size()); }
  std::size_t num_parameters() const;
  bool AllFinite() const;

 private:
  std::vector<DenseLayer> layers_;
};

// Per-layer parameter gradients, shape-matched to the owning network.
struct LayerGradient {
  RealMatrix weights;
  RealVector bias;
};

class GradientBundle {
 public:
  GradientBundle() = default;
  static GradientBundle ZerosLike(const MlpNetwork& net);

  std::vector<LayerGradient>& layers() { return layers_; }
  const std::vector<LayerGradient>& layers() const { return layers_; }

  // Throws ShapeError when shapes differ.
  GradientBundle& AddScaled(const GradientBundle& other, double scale);
  GradientBundle& Scale(double factor);
  bool ShapeMatches(const MlpNetwork& net) const;
  double MaxAbs() const;

  // Flattened copy in layer order: weights row-major, then bias.
  std::vector<double> Flatten() const;

 private:
  std::vector<LayerGradient> layers_;
};

// Row i of the result is net(batch row i).
RealMatrix Forward(const MlpNetwork& net, const RealMatrix& batch);

struct BackwardResult {
  GradientBundle params;
  RealMatrix inputs;  // d/dx of the upstream-weighted output, per row
};

// Gradients of sum_i <upstream_i, net(x_i)> with respect to parameters and
// inputs. `upstream` has one row per sample and one column per output.
BackwardResult Backward(const MlpNetwork& net, const RealMatrix& batch,
                        const RealMatrix& upstream);

// Scalar-output convenience: gradient of sum_i upstream_i * net(x_i).
GradientBundle ParamGradients(const MlpNetwork& net, const RealMatrix& batch,
                              const RealVector& upstream);

// Row i holds grad_x net(x_i). Throws ContractError for multi-output nets.
RealMatrix InputGradient(const MlpNetwork& net, const RealMatrix& batch);

struct PenaltyResult {
  double value = 0.0;
  GradientBundle grads;
};

// value = (1/n) sum_i |grad_x net(x_i)|^2 together with its parameter
// gradient, obtained by differentiating the input-gradient pass itself.
PenaltyResult PenaltyParamGradients(const MlpNetwork& net, const RealMatrix& batch);

struct FiniteDifferenceReport {
  double param_rel_error = 0.0;
  double input_rel_error = 0.0;
  double penalty_rel_error = 0.0;

  double Max() const;
};

// Compares the analytic gradients against central differences. Relative
// errors use |a - b| / max(|a|, |b|, abs_floor). Throws DomainError for
// step <= 0.
FiniteDifferenceReport FiniteDifferenceCheck(const MlpNetwork& net,
                                             const RealMatrix& batch, double step,
                                             double abs_floor = 1e-6);

nlohmann::json NetworkToJson(const MlpNetwork& net);
MlpNetwork NetworkFromJson(const nlohmann::json& json);

}  // namespace r3lab

#endif  // R3LAB_NETWORK_H_
