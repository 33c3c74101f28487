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

#include "r3lab/network.h"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

namespace r3lab {
namespace {

RealMatrix Activate(const RealMatrix& a, Activation act) {
  switch (act) {
    case Activation::kLeakyRelu:
      return a.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
    case Activation::kTanh:
      return a.array().tanh().matrix();
    case Activation::kIdentity:
      return a;
  }
  return a;
}

// The kink of leaky ReLU takes the positive-side slope.
RealMatrix Derivative(const RealMatrix& a, Activation act) {
  switch (act) {
    case Activation::kLeakyRelu:
      return a.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : kLeakySlope; });
    case Activation::kTanh:
      return a.unaryExpr([](double v) {
        const double t = std::tanh(v);
        return 1.0 - t * t;
      });
    case Activation::kIdentity:
      return RealMatrix::Ones(a.rows(), a.cols());
  }
  return RealMatrix::Ones(a.rows(), a.cols());
}

// Zero for the piecewise-linear activations.
RealMatrix SecondDerivative(const RealMatrix& a, Activation act) {
  if (act == Activation::kTanh) {
    return a.unaryExpr([](double v) {
      const double t = std::tanh(v);
      return -2.0 * t * (1.0 - t * t);
    });
  }
  return RealMatrix::Zero(a.rows(), a.cols());
}

struct ForwardCache {
  std::vector<RealMatrix> pre;   // pre[l] = H[l] W_l^T + b_l
  std::vector<RealMatrix> post;  // post[0] = input, post[l+1] = act(pre[l])
};

ForwardCache RunForward(const MlpNetwork& net, const RealMatrix& batch) {
  if (net.num_layers() == 0) throw ShapeError("network has no layers");
  if (batch.cols() != net.input_width()) {
    throw ShapeError(fmt::format("batch has {} columns, network expects {}",
                                 batch.cols(), net.input_width()));
  }
  ForwardCache cache;
  cache.post.push_back(batch);
  for (const auto& layer : net.layers()) {
    RealMatrix a = cache.post.back() * layer.weights.transpose();
    a.rowwise() += layer.bias.transpose();
    cache.post.push_back(Activate(a, layer.activation));
    cache.pre.push_back(std::move(a));
  }
  return cache;
}

// Standard reverse pass. `injected[l]`, when non-empty, is an extra adjoint
// added directly to pre-activation l; the penalty gradient uses this to feed
// in terms that come from differentiating the input-gradient pass.
BackwardResult ReversePass(const MlpNetwork& net, const ForwardCache& cache,
                           const RealMatrix& upstream,
                           const std::vector<RealMatrix>* injected) {
  const int num_layers = net.num_layers();
  BackwardResult out;
  out.params = GradientBundle::ZerosLike(net);
  RealMatrix adj_post = upstream;
  for (int l = num_layers - 1; l >= 0; --l) {
    const auto& layer = net.layers()[l];
    RealMatrix adj_pre =
        adj_post.cwiseProduct(Derivative(cache.pre[l], layer.activation));
    if (injected != nullptr && (*injected)[l].size() > 0) adj_pre += (*injected)[l];
    auto& g = out.params.layers()[l];
    g.weights = adj_pre.transpose() * cache.post[l];
    g.bias = adj_pre.colwise().sum().transpose();
    adj_post = adj_pre * layer.weights;
  }
  out.inputs = std::move(adj_post);
  return out;
}

void RequireScalarOutput(const MlpNetwork& net, std::string_view what) {
  if (net.output_width() != 1) {
    throw ContractError(fmt::format("{} needs a scalar-output network, got width {}",
                                    what, net.output_width()));
  }
}

}  // namespace

std::string_view ActivationName(Activation act) {
  switch (act) {
    case Activation::kLeakyRelu:
      return "leaky_relu_0.2";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "identity";
}

Activation ParseActivation(std::string_view name) {
  if (name == "leaky_relu_0.2") return Activation::kLeakyRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw ConfigError(fmt::format("unknown activation '{}'", name));
}

MlpNetwork::MlpNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (layer.bias.size() != layer.weights.rows()) {
      throw ShapeError(fmt::format("layer {}: bias length {} != output width {}", i,
                                   layer.bias.size(), layer.weights.rows()));
    }
    if (i > 0 && layer.in_width() != layers_[i - 1].out_width()) {
      throw ShapeError(fmt::format("layer {}: input width {} != previous output {}", i,
                                   layer.in_width(), layers_[i - 1].out_width()));
    }
  }
}

MlpNetwork MlpNetwork::Random(const std::vector<int>& widths, Activation hidden,
                              Activation output, Rng& rng) {
  if (widths.size() < 2) throw ShapeError("network needs at least two widths");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    DenseLayer layer;
    const int in = widths[i];
    const int out = widths[i + 1];
    const double scale = std::sqrt(2.0 / in);
    layer.weights.resize(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) layer.weights(r, c) = scale * normal(rng);
    }
    layer.bias = RealVector::Zero(out);
    layer.activation = (i + 2 == widths.size()) ? output : hidden;
    layers.push_back(std::move(layer));
  }
  return MlpNetwork(std::move(layers));
}

int MlpNetwork::input_width() const {
  return layers_.empty() ? 0 : layers_.front().in_width();
}

int MlpNetwork::output_width() const {
  return layers_.empty() ? 0 : layers_.back().out_width();
}

std::size_t MlpNetwork::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

bool MlpNetwork::AllFinite() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
    return l.weights.allFinite() && l.bias.allFinite();
  });
}

GradientBundle GradientBundle::ZerosLike(const MlpNetwork& net) {
  GradientBundle g;
  for (const auto& l : net.layers()) {
    g.layers_.push_back({RealMatrix::Zero(l.weights.rows(), l.weights.cols()),
                         RealVector::Zero(l.bias.size())});
  }
  return g;
}

GradientBundle& GradientBundle::AddScaled(const GradientBundle& other, double scale) {
  if (other.layers_.size() != layers_.size()) {
    throw ShapeError("gradient bundles have different layer counts");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& a = layers_[i];
    const auto& b = other.layers_[i];
    if (a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols() ||
        a.bias.size() != b.bias.size()) {
      throw ShapeError(fmt::format("gradient bundles differ in shape at layer {}", i));
    }
    a.weights += scale * b.weights;
    a.bias += scale * b.bias;
  }
  return *this;
}

GradientBundle& GradientBundle::Scale(double factor) {
  for (auto& l : layers_) {
    l.weights *= factor;
    l.bias *= factor;
  }
  return *this;
}

bool GradientBundle::ShapeMatches(const MlpNetwork& net) const {
  if (layers_.size() != net.layers().size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& g = layers_[i];
    const auto& l = net.layers()[i];
    if (g.weights.rows() != l.weights.rows() || g.weights.cols() != l.weights.cols() ||
        g.bias.size() != l.bias.size()) {
      return false;
    }
  }
  return true;
}

double GradientBundle::MaxAbs() const {
  double m = 0.0;
  for (const auto& l : layers_) {
    if (l.weights.size() > 0) m = std::max(m, l.weights.cwiseAbs().maxCoeff());
    if (l.bias.size() > 0) m = std::max(m, l.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

std::vector<double> GradientBundle::Flatten() const {
  std::vector<double> flat;
  for (const auto& l : layers_) {
    flat.insert(flat.end(), l.weights.data(), l.weights.data() + l.weights.size());
    flat.insert(flat.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return flat;
}

RealMatrix Forward(const MlpNetwork& net, const RealMatrix& batch) {
  return RunForward(net, batch).post.back();
}

BackwardResult Backward(const MlpNetwork& net, const RealMatrix& batch,
                        const RealMatrix& upstream) {
  const auto cache = RunForward(net, batch);
  if (upstream.rows() != batch.rows() || upstream.cols() != net.output_width()) {
    throw ShapeError(fmt::format("upstream is {}x{}, expected {}x{}", upstream.rows(),
                                 upstream.cols(), batch.rows(), net.output_width()));
  }
  return ReversePass(net, cache, upstream, nullptr);
}

GradientBundle ParamGradients(const MlpNetwork& net, const RealMatrix& batch,
                              const RealVector& upstream) {
  RequireScalarOutput(net, "ParamGradients");
  if (upstream.size() != batch.rows()) {
    throw ShapeError(fmt::format("upstream length {} != batch rows {}", upstream.size(),
                                 batch.rows()));
  }
  RealMatrix up = upstream;
  return Backward(net, batch, up).params;
}

RealMatrix InputGradient(const MlpNetwork& net, const RealMatrix& batch) {
  RequireScalarOutput(net, "InputGradient");
  return Backward(net, batch, RealMatrix::Ones(batch.rows(), 1)).inputs;
}

// The input gradient is computed by the recurrence
//   E_L = 1,  D_l = E_l .* f_l'(A_l),  E_{l-1} = D_l W_l,  G = D_1 W_1,
// where A_l are the forward pre-activations. The penalty (1/n) sum |G_i|^2 is
// then differentiated through this recurrence in reverse. Terms that reach a
// pre-activation A_l (through f_l' and f_l'') are injected into an ordinary
// reverse pass over the forward network.
PenaltyResult PenaltyParamGradients(const MlpNetwork& net, const RealMatrix& batch) {
  RequireScalarOutput(net, "PenaltyParamGradients");
  if (batch.rows() == 0) throw ContractError("penalty needs a non-empty batch");
  const auto cache = RunForward(net, batch);
  const int num_layers = net.num_layers();
  const double n = static_cast<double>(batch.rows());

  std::vector<RealMatrix> upstream_adj(num_layers);  // E_l
  std::vector<RealMatrix> deltas(num_layers);        // D_l
  std::vector<RealMatrix> slopes(num_layers);        // f_l'(A_l)
  upstream_adj[num_layers - 1] = RealMatrix::Ones(batch.rows(), 1);
  for (int l = num_layers - 1; l >= 0; --l) {
    const auto& layer = net.layers()[l];
    slopes[l] = Derivative(cache.pre[l], layer.activation);
    deltas[l] = upstream_adj[l].cwiseProduct(slopes[l]);
    if (l > 0) upstream_adj[l - 1] = deltas[l] * layer.weights;
  }
  const RealMatrix input_grad = deltas[0] * net.layers()[0].weights;

  PenaltyResult result;
  result.value = input_grad.squaredNorm() / n;
  result.grads = GradientBundle::ZerosLike(net);

  const RealMatrix adj_input_grad = (2.0 / n) * input_grad;
  result.grads.layers()[0].weights += deltas[0].transpose() * adj_input_grad;
  RealMatrix adj_delta = adj_input_grad * net.layers()[0].weights.transpose();

  std::vector<RealMatrix> injected(num_layers);
  for (int l = 0; l < num_layers; ++l) {
    const auto& layer = net.layers()[l];
    const RealMatrix adj_upstream = adj_delta.cwiseProduct(slopes[l]);
    injected[l] = adj_delta.cwiseProduct(upstream_adj[l])
                      .cwiseProduct(SecondDerivative(cache.pre[l], layer.activation));
    if (l + 1 < num_layers) {
      const auto& next = net.layers()[l + 1];
      result.grads.layers()[l + 1].weights += deltas[l + 1].transpose() * adj_upstream;
      adj_delta = adj_upstream * next.weights.transpose();
    }
  }

  const RealMatrix zero_upstream = RealMatrix::Zero(batch.rows(), 1);
  const auto through_forward = ReversePass(net, cache, zero_upstream, &injected);
  result.grads.AddScaled(through_forward.params, 1.0);
  return result;
}

double FiniteDifferenceReport::Max() const {
  return std::max({param_rel_error, input_rel_error, penalty_rel_error});
}

namespace {

double RelativeError(double analytic, double numeric, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return 0.0;
  return diff / std::max(std::abs(analytic), std::abs(numeric));
}

// Fixed, non-uniform weights so that every sample contributes differently.
RealMatrix ProbeUpstream(Eigen::Index rows, Eigen::Index cols) {
  RealMatrix u(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      u(r, c) = 1.0 + 0.25 * static_cast<double>((r * 7 + c * 3) % 5) - 0.5;
    }
  }
  return u;
}

template <typename Fn>
double MaxParamError(const MlpNetwork& net, const GradientBundle& analytic,
                     double step, double abs_floor, Fn scalar_fn) {
  MlpNetwork probe = net;
  double worst = 0.0;
  for (std::size_t l = 0; l < probe.layers().size(); ++l) {
    auto& layer = probe.mutable_layers()[l];
    auto visit = [&](double& param, double grad) {
      const double saved = param;
      param = saved + step;
      const double up = scalar_fn(probe);
      param = saved - step;
      const double down = scalar_fn(probe);
      param = saved;
      worst = std::max(worst, RelativeError(grad, (up - down) / (2.0 * step), abs_floor));
    };
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        visit(layer.weights(r, c), analytic.layers()[l].weights(r, c));
      }
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      visit(layer.bias(i), analytic.layers()[l].bias(i));
    }
  }
  return worst;
}

}  // namespace

FiniteDifferenceReport FiniteDifferenceCheck(const MlpNetwork& net,
                                             const RealMatrix& batch, double step,
                                             double abs_floor) {
  if (!(step > 0.0)) {
    throw DomainError(fmt::format("finite-difference step must be > 0, got {}", step));
  }
  FiniteDifferenceReport report;
  const RealMatrix upstream = ProbeUpstream(batch.rows(), net.output_width());
  auto weighted_output = [&](const MlpNetwork& n, const RealMatrix& x) {
    return Forward(n, x).cwiseProduct(upstream).sum();
  };
  const auto backward = Backward(net, batch, upstream);
  report.param_rel_error =
      MaxParamError(net, backward.params, step, abs_floor,
                    [&](const MlpNetwork& n) { return weighted_output(n, batch); });

  RealMatrix probe = batch;
  for (Eigen::Index r = 0; r < probe.rows(); ++r) {
    for (Eigen::Index c = 0; c < probe.cols(); ++c) {
      const double saved = probe(r, c);
      probe(r, c) = saved + step;
      const double up = weighted_output(net, probe);
      probe(r, c) = saved - step;
      const double down = weighted_output(net, probe);
      probe(r, c) = saved;
      report.input_rel_error =
          std::max(report.input_rel_error,
                   RelativeError(backward.inputs(r, c), (up - down) / (2.0 * step),
                                 abs_floor));
    }
  }

  // Penalty gradients only exist for scalar-output networks.
  if (net.output_width() == 1 && batch.rows() > 0) {
    const auto penalty = PenaltyParamGradients(net, batch);
    report.penalty_rel_error = MaxParamError(
        net, penalty.grads, step, abs_floor, [&](const MlpNetwork& n) {
          return InputGradient(n, batch).squaredNorm() / static_cast<double>(batch.rows());
        });
  }
  return report;
}

nlohmann::json NetworkToJson(const MlpNetwork& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    nlohmann::json j;
    j["in"] = l.in_width();
    j["out"] = l.out_width();
    j["activation"] = std::string(ActivationName(l.activation));
    j["weights"] = std::vector<double>(l.weights.data(), l.weights.data() + l.weights.size());
    j["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back(std::move(j));
  }
  return nlohmann::json{{"layers", std::move(layers)}};
}

MlpNetwork NetworkFromJson(const nlohmann::json& json) {
  std::vector<DenseLayer> layers;
  try {
    for (const auto& j : json.at("layers")) {
      const int in = j.at("in").get<int>();
      const int out = j.at("out").get<int>();
      const auto weights = j.at("weights").get<std::vector<double>>();
      const auto bias = j.at("bias").get<std::vector<double>>();
      if (in <= 0 || out <= 0 || weights.size() != static_cast<std::size_t>(in) * out ||
          bias.size() != static_cast<std::size_t>(out)) {
        throw ShapeError("network json: entry counts do not match layer dims");
      }
      DenseLayer layer;
      layer.weights = Eigen::Map<const RealMatrix>(weights.data(), out, in);
      layer.bias = Eigen::Map<const RealVector>(bias.data(), out);
      layer.activation = ParseActivation(j.at("activation").get<std::string>());
      layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("network json: {}", e.what()));
  }
  MlpNetwork net(std::move(layers));
  if (!net.AllFinite()) throw ConfigError("network json: non-finite entries");
  return net;
}

}  // namespace r3lab
