// Copyright 2026 The AdLM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADLM_APPROX_LOSS_H_
#define ADLM_APPROX_LOSS_H_

#include <cstddef>
#include <span>

#include "absl/status/statusor.h"
#include "adlm/tensor.h"

namespace adlm {

// Per (example i, class l) coefficients of the second-order expansion of the
// sigmoid cross-entropy around z = 0: c0 + c1 z + c2 z^2. Each is n x M.
struct LossCoefficients {
  Tensor c0;
  Tensor c1;
  Tensor c2;

  size_t size() const { return c0.rows(); }
  size_t num_classes() const { return c0.row_size(); }
  LossCoefficients GatherRows(std::span<const size_t> rows) const;
  bool operator==(const LossCoefficients&) const = default;
};

// c0 = log 2, c1 = 1/2 - y, c2 = 1/8 from an n x M one-hot label matrix.
LossCoefficients TaylorCoefficients(const Tensor& labels);

struct LossValue {
  double value = 0.0;
  Tensor grad_logits;   // N x M
  Tensor grad_weights;  // M x K (only when hidden states were given)
  Tensor grad_hidden;   // N x K (only when hidden states were given)
};

// Sum over i, l of c0 + c1 z_il + c2 z_il^2 with dz = c1 + 2 c2 z.
absl::StatusOr<LossValue> TaylorLossFromLogits(const Tensor& logits,
                                               const LossCoefficients& coeffs);

// The same loss with z = hidden W^T, also returning the gradients with
// respect to W (M x K) and the hidden states (N x K). Perturbed coefficients
// are used the same way.
absl::StatusOr<LossValue> TaylorLoss(const Tensor& hidden,
                                     const Tensor& weights,
                                     const LossCoefficients& coeffs);

// -sum y log s(z) + (1 - y) log(1 - s(z)), s(z) clamped to
// [1e-12, 1 - 1e-12]. For diagnostics and the noiseless baseline only.
absl::StatusOr<LossValue> CrossEntropyFromLogits(const Tensor& logits,
                                                 const Tensor& labels);
absl::StatusOr<LossValue> ExactCrossEntropy(const Tensor& hidden,
                                            const Tensor& weights,
                                            const Tensor& labels);

// M (e^2 + 2e - 1) / (e (1 + e)^2).
double ApproximationErrorBound(size_t num_classes);

}  // namespace adlm

#endif  // ADLM_APPROX_LOSS_H_
