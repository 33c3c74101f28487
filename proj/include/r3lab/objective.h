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

#ifndef R3LAB_OBJECTIVE_H_
#define R3LAB_OBJECTIVE_H_

#include "r3lab/common.h"
#include "r3lab/network.h"

namespace r3lab {

// Row i of `real` is paired with row i of `fake`.
struct PairedBatch {
  RealMatrix real;
  RealMatrix fake;
};

// Column names match the trainer's metric log.
struct LossReport {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double gamma = 0.0;
  double d_total = 0.0;  // d_loss + gamma/2 * (r1 + r2)
};

// mean_i softplus(d_fake_i - d_real_i). Throws ContractError on length
// mismatch or empty input.
double RpganDiscriminatorLoss(const RealVector& d_real, const RealVector& d_fake);

// mean_i softplus(d_real_i - d_fake_i).
double RpganGeneratorLoss(const RealVector& d_real, const RealVector& d_fake);

// R1 when `batch` holds real samples, R2 when it holds generated ones.
PenaltyResult ZeroCenteredPenalty(const MlpNetwork& d, const RealMatrix& batch);

struct DiscriminatorStep {
  LossReport report;
  GradientBundle grads;  // of report.d_total
};

// g_loss is also filled in, evaluated on the same pairs.
DiscriminatorStep DiscriminatorStepGradients(const MlpNetwork& d,
                                             const PairedBatch& pair, double gamma);

struct GeneratorStep {
  double g_loss = 0.0;
  GradientBundle grads;
};

// Gradient of the pairing generator loss over (real_samples, g(noise)) with
// respect to g, with d held fixed.
GeneratorStep GeneratorStepGradients(const MlpNetwork& g, const MlpNetwork& d,
                                     const RealMatrix& noise,
                                     const RealMatrix& real_samples);

}  // namespace r3lab

#endif  // R3LAB_OBJECTIVE_H_
