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

#ifndef ADLM_NETWORK_H_
#define ADLM_NETWORK_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "adlm/layers.h"
#include "adlm/tensor.h"

namespace adlm {

struct Layer {
  LayerSpec spec;
  Shape input_shape;   // per example
  Shape output_shape;  // per example
  Tensor weights;      // Dense: out x in; Conv2D: out x in x k x k
  Tensor bias;         // out (empty when the layer has no bias)
  // Frozen additive term on the affine output, per example output shape.
  // Holds the bias perturbation of the first affine layer during private
  // training; empty otherwise.
  Tensor bias_offset;
  // Frozen per-neuron normalization range for LRNDense at inference.
  Tensor lrn_min;
  Tensor lrn_max;
};

enum class ForwardMode {
  // LRNDense uses the min/max of the current batch.
  kTrain,
  // LRNDense uses the frozen range (clamped to [0, 1]) when one is stored,
  // so every example is processed independently of its batch.
  kInference,
};

struct ActivationTrace {
  ForwardMode mode = ForwardMode::kTrain;
  // values[0] is the input batch; values[i + 1] is the output of layer i.
  std::vector<Tensor> values;

  const Tensor& input() const { return values.front(); }
  const Tensor& output() const { return values.back(); }
  // Input to the output layer, i.e. the top normalized hidden state.
  const Tensor& top_hidden() const { return values[values.size() - 2]; }
};

// One gradient tensor per parameter tensor, in Network::Parameters() order,
// plus the gradient with respect to the input batch.
struct GradientSet {
  std::vector<Tensor> params;
  Tensor input;
};

class Network {
 public:
  // Validates that the layer shapes compose starting from the per-example
  // `input_shape`. Parameters are zero until InitializeWeights().
  static absl::StatusOr<Network> Create(Shape input_shape,
                                        std::vector<LayerSpec> specs);

  // Uniform(-sqrt(6 / (fan_in + fan_out)), +...) weights, zero biases.
  void InitializeWeights(uint64_t seed);

  absl::StatusOr<ActivationTrace> Forward(
      const Tensor& batch, ForwardMode mode = ForwardMode::kTrain) const;

  absl::StatusOr<GradientSet> Backward(const ActivationTrace& trace,
                                       const Tensor& output_grad) const;

  // theta <- theta - learning_rate * gradient for every parameter.
  absl::Status ApplySgd(const GradientSet& grads, double learning_rate);

  // Running LRN ranges: range <- momentum * range + (1 - momentum) * batch
  // range, seeded with the first batch.
  void UpdateLrnStatistics(const ActivationTrace& trace, double momentum);

  std::vector<Tensor*> Parameters();
  std::vector<const Tensor*> Parameters() const;
  size_t NumParameters() const;

  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return layers_.back().output_shape; }
  size_t input_width() const { return NumElements(input_shape_); }
  size_t output_width() const { return NumElements(output_shape()); }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  // The first parameterized layer (the affine layer h0).
  size_t h0_index() const { return h0_index_; }
  // Neuron count of h0 for one example.
  size_t h0_width() const;
  const Layer& output_layer() const { return layers_.back(); }

 private:
  Network() = default;

  Shape input_shape_;
  std::vector<Layer> layers_;
  size_t h0_index_ = 0;
};

// Value-semantics wrapper around Network::ApplySgd.
absl::StatusOr<Network> SgdStep(Network net, const GradientSet& grads,
                                double learning_rate);

}  // namespace adlm

#endif  // ADLM_NETWORK_H_
