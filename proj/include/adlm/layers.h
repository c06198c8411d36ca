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

#ifndef ADLM_LAYERS_H_
#define ADLM_LAYERS_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>

#include "absl/status/statusor.h"
#include "adlm/tensor.h"

namespace adlm {

// Affine layer z = x W^T + b with W of shape out x in.
struct DenseSpec {
  size_t in = 0;
  size_t out = 0;
  bool bias = true;
  bool operator==(const DenseSpec&) const = default;
};

struct Conv2DSpec {
  size_t in_channels = 0;
  size_t out_channels = 0;
  size_t kernel = 0;
  size_t stride = 1;
  size_t padding = 0;  // valid convolution by default
  bool bias = true;
  bool operator==(const Conv2DSpec&) const = default;
};

struct ReluSpec {
  bool operator==(const ReluSpec&) const = default;
};
struct SigmoidSpec {
  bool operator==(const SigmoidSpec&) const = default;
};

// Per-neuron min-max normalization over the batch; outputs in [0, 1].
struct LrnDenseSpec {
  bool operator==(const LrnDenseSpec&) const = default;
};

// Cross-map normalization h / max(h, (q + alpha * sum h_m^2)^beta).
struct LrnConvSpec {
  double q = 2.0;
  size_t window = 5;
  double alpha = 1e-4;
  double beta = 0.75;
  bool operator==(const LrnConvSpec&) const = default;
};

struct FlattenSpec {
  bool operator==(const FlattenSpec&) const = default;
};

using LayerSpec = std::variant<DenseSpec, Conv2DSpec, ReluSpec, SigmoidSpec,
                               LrnDenseSpec, LrnConvSpec, FlattenSpec>;

bool IsParameterized(const LayerSpec& spec);
bool IsLrn(const LayerSpec& spec);

// Text form used by configs and checkpoints, e.g. "dense:784:64",
// "dense:25:10:nobias", "conv:1:32:5:1:0", "relu", "lrn",
// "lrnconv:2:5:0.0001:0.75", "flatten".
std::string LayerSpecToString(const LayerSpec& spec);
absl::StatusOr<LayerSpec> ParseLayerSpec(std::string_view text);

// Per-example output shape, or an error if `input` cannot feed `spec`.
absl::StatusOr<Shape> OutputShape(const LayerSpec& spec, const Shape& input);

absl::Status ValidateLayerSpec(const LayerSpec& spec);

// Min-max normalization of each column of a [batch x width] tensor (any
// trailing shape is treated as the width). Constant columns map to zero.
Tensor LrnDense(const Tensor& activations);

// Cross-map normalization of [batch x channels x height x width] maps.
Tensor LrnConv(const Tensor& feature_maps, const LrnConvSpec& spec);

}  // namespace adlm

#endif  // ADLM_LAYERS_H_
