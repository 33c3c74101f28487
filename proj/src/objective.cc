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

#include "r3lab/objective.h"

#include <fmt/core.h>

namespace r3lab {
namespace {

void CheckPairing(Eigen::Index a, Eigen::Index b) {
  if (a != b) {
    throw ContractError(fmt::format("pairing needs equal lengths, got {} and {}", a, b));
  }
  if (a == 0) throw ContractError("pairing needs at least one pair");
}

RealVector Scores(const MlpNetwork& d, const RealMatrix& x) {
  return Forward(d, x).col(0);
}

}  // namespace

double RpganDiscriminatorLoss(const RealVector& d_real, const RealVector& d_fake) {
  CheckPairing(d_real.size(), d_fake.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < d_real.size(); ++i) sum += Softplus(d_fake(i) - d_real(i));
  return sum / static_cast<double>(d_real.size());
}

double RpganGeneratorLoss(const RealVector& d_real, const RealVector& d_fake) {
  return RpganDiscriminatorLoss(d_fake, d_real);
}

PenaltyResult ZeroCenteredPenalty(const MlpNetwork& d, const RealMatrix& batch) {
  return PenaltyParamGradients(d, batch);
}

DiscriminatorStep DiscriminatorStepGradients(const MlpNetwork& d,
                                             const PairedBatch& pair, double gamma) {
  if (!(gamma >= 0.0)) throw DomainError(fmt::format("gamma must be >= 0, got {}", gamma));
  CheckPairing(pair.real.rows(), pair.fake.rows());
  if (pair.real.cols() != pair.fake.cols()) {
    throw ContractError(fmt::format("paired batches differ in width: {} vs {}",
                                    pair.real.cols(), pair.fake.cols()));
  }
  const RealVector d_real = Scores(d, pair.real);
  const RealVector d_fake = Scores(d, pair.fake);
  const double n = static_cast<double>(d_real.size());

  DiscriminatorStep step;
  step.report.gamma = gamma;
  step.report.d_loss = RpganDiscriminatorLoss(d_real, d_fake);
  step.report.g_loss = RpganGeneratorLoss(d_real, d_fake);

  RealVector weights(d_real.size());
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    weights(i) = Sigmoid(d_fake(i) - d_real(i)) / n;
  }
  step.grads = ParamGradients(d, pair.fake, weights);
  step.grads.AddScaled(ParamGradients(d, pair.real, -weights), 1.0);

  const auto r1 = ZeroCenteredPenalty(d, pair.real);
  const auto r2 = ZeroCenteredPenalty(d, pair.fake);
  step.report.r1 = r1.value;
  step.report.r2 = r2.value;
  step.report.d_total = step.report.d_loss + 0.5 * gamma * (r1.value + r2.value);
  if (gamma > 0.0) {
    step.grads.AddScaled(r1.grads, 0.5 * gamma);
    step.grads.AddScaled(r2.grads, 0.5 * gamma);
  }
  return step;
}

GeneratorStep GeneratorStepGradients(const MlpNetwork& g, const MlpNetwork& d,
                                     const RealMatrix& noise,
                                     const RealMatrix& real_samples) {
  if (noise.rows() != real_samples.rows()) {
    throw ShapeError(fmt::format("noise rows {} != real rows {}", noise.rows(),
                                 real_samples.rows()));
  }
  if (g.output_width() != d.input_width()) {
    throw ShapeError(fmt::format("generator width {} != discriminator input {}",
                                 g.output_width(), d.input_width()));
  }
  if (d.output_width() != 1) throw ContractError("discriminator must have one output");
  const RealMatrix fake = Forward(g, noise);
  const RealVector d_real = Scores(d, real_samples);
  const RealVector d_fake = Scores(d, fake);
  const double n = static_cast<double>(d_real.size());

  GeneratorStep step;
  step.g_loss = RpganGeneratorLoss(d_real, d_fake);
  // dL/dD(fake_i) = -sigmoid(d_real_i - d_fake_i) / n
  RealMatrix weights(d_fake.size(), 1);
  for (Eigen::Index i = 0; i < d_fake.size(); ++i) {
    weights(i, 0) = -Sigmoid(d_real(i) - d_fake(i)) / n;
  }
  const RealMatrix adj_fake = Backward(d, fake, weights).inputs;
  step.grads = Backward(g, noise, adj_fake).params;
  return step;
}

}  // namespace r3lab
