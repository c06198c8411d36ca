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

#include "adlm/approx_loss.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "Eigen/Core"
#include "absl/strings/str_cat.h"

namespace adlm {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;

constexpr double kProbabilityClamp = 1e-12;

absl::StatusOr<Tensor> Logits(const Tensor& hidden, const Tensor& weights) {
  if (hidden.rank() < 1 || weights.rank() != 2 ||
      hidden.row_size() != weights.dim(1)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "hidden ", ShapeToString(hidden.shape()), " does not match weights ",
        ShapeToString(weights.shape())));
  }
  const size_t n = hidden.rows();
  const size_t k = weights.dim(1);
  const size_t m = weights.dim(0);
  Tensor z({n, m});
  MatMap(z.data().data(), n, m).noalias() =
      ConstMatMap(hidden.data().data(), n, k) *
      ConstMatMap(weights.data().data(), m, k).transpose();
  return z;
}

// Fills grad_weights = G^T H and grad_hidden = G W from grad_logits G.
void ChainToLayer(const Tensor& hidden, const Tensor& weights,
                  LossValue& loss) {
  const size_t n = hidden.rows();
  const size_t k = weights.dim(1);
  const size_t m = weights.dim(0);
  ConstMatMap g(loss.grad_logits.data().data(), n, m);
  loss.grad_weights = Tensor({m, k});
  loss.grad_hidden = Tensor({n, k});
  MatMap(loss.grad_weights.data().data(), m, k).noalias() =
      g.transpose() * ConstMatMap(hidden.data().data(), n, k);
  MatMap(loss.grad_hidden.data().data(), n, k).noalias() =
      g * ConstMatMap(weights.data().data(), m, k);
}

}  // namespace

LossCoefficients LossCoefficients::GatherRows(
    std::span<const size_t> rows) const {
  return {c0.GatherRows(rows), c1.GatherRows(rows), c2.GatherRows(rows)};
}

LossCoefficients TaylorCoefficients(const Tensor& labels) {
  LossCoefficients c{Tensor(labels.shape(), std::numbers::ln2),
                     Tensor(labels.shape()), Tensor(labels.shape(), 0.125)};
  for (size_t i = 0; i < labels.size(); ++i) c.c1[i] = 0.5 - labels[i];
  return c;
}

absl::StatusOr<LossValue> TaylorLossFromLogits(const Tensor& logits,
                                               const LossCoefficients& coeffs) {
  if (coeffs.c0.shape() != logits.shape() ||
      coeffs.c1.shape() != logits.shape() ||
      coeffs.c2.shape() != logits.shape()) {
    return absl::InvalidArgumentError(
        absl::StrCat("coefficients ", ShapeToString(coeffs.c0.shape()),
                     " do not match logits ", ShapeToString(logits.shape())));
  }
  LossValue out;
  out.grad_logits = Tensor(logits.shape());
  for (size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    out.value += coeffs.c0[i] + coeffs.c1[i] * z + coeffs.c2[i] * z * z;
    out.grad_logits[i] = coeffs.c1[i] + 2.0 * coeffs.c2[i] * z;
  }
  return out;
}

absl::StatusOr<LossValue> TaylorLoss(const Tensor& hidden,
                                     const Tensor& weights,
                                     const LossCoefficients& coeffs) {
  auto z = Logits(hidden, weights);
  if (!z.ok()) return z.status();
  auto out = TaylorLossFromLogits(*z, coeffs);
  if (!out.ok()) return out.status();
  ChainToLayer(hidden, weights, *out);
  return out;
}

absl::StatusOr<LossValue> CrossEntropyFromLogits(const Tensor& logits,
                                                 const Tensor& labels) {
  if (labels.shape() != logits.shape()) {
    return absl::InvalidArgumentError(
        absl::StrCat("labels ", ShapeToString(labels.shape()),
                     " do not match logits ", ShapeToString(logits.shape())));
  }
  LossValue out;
  out.grad_logits = Tensor(logits.shape());
  for (size_t i = 0; i < logits.size(); ++i) {
    const double y = labels[i];
    const double s = 1.0 / (1.0 + std::exp(-logits[i]));
    const double p = std::clamp(s, kProbabilityClamp, 1.0 - kProbabilityClamp);
    out.value -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    // Exact derivative of the unclamped loss; the clamp only guards logs.
    out.grad_logits[i] = s - y;
  }
  return out;
}

absl::StatusOr<LossValue> ExactCrossEntropy(const Tensor& hidden,
                                            const Tensor& weights,
                                            const Tensor& labels) {
  auto z = Logits(hidden, weights);
  if (!z.ok()) return z.status();
  auto out = CrossEntropyFromLogits(*z, labels);
  if (!out.ok()) return out.status();
  ChainToLayer(hidden, weights, *out);
  return out;
}

double ApproximationErrorBound(size_t num_classes) {
  const double e = std::numbers::e;
  return static_cast<double>(num_classes) * (e * e + 2 * e - 1) /
         (e * (1 + e) * (1 + e));
}

}  // namespace adlm
