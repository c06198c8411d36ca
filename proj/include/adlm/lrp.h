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

#ifndef ADLM_LRP_H_
#define ADLM_LRP_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "adlm/dataset.h"
#include "adlm/network.h"
#include "adlm/tensor.h"

namespace adlm {

// How per-example input relevances are rescaled by their min chi and max phi.
enum class RelevanceScale {
  kSymmetric,  // 2 (R - chi) / (phi - chi) - 1, in [-1, 1]
  kUnit,       // (R - chi) / (phi - chi), in [0, 1]
};

struct LrpOptions {
  double mu = 1e-9;
  RelevanceScale scale = RelevanceScale::kSymmetric;
};

// Denominator below which an unstabilized message is a singularity.
inline constexpr double kSingularDenominator = 1e-12;

// R_p = sum_m z_pm / (z_m + sign(z_m) mu) * R_m, where z_pm is P x U.
// Upper neurons with R_m = 0 send nothing. With mu = 0, a nonzero R_m over
// |z_m| < 1e-12 is an error.
absl::StatusOr<std::vector<double>> PropagateLayer(
    std::span<const double> r_upper, const Tensor& z_pm,
    std::span<const double> z_m, double mu);

// Relevance of the last hidden layer from one output neuron o:
// R_m = z_mo / (z_o + sign(z_o) mu) * class_score.
absl::StatusOr<std::vector<double>> OutputRelevance(
    std::span<const double> z_mo, double z_o, double class_score, double mu);

// Relevance of one example at every layer boundary, unnormalized.
struct RelevanceTrace {
  double mu = 0.0;
  // Pre-sigmoid score of the explained class.
  double class_score = 0.0;
  // layers[i] is the relevance of the input to layer i (per-example shape
  // flattened); layers.back() is the relevance at the network output, which
  // is class_score on the explained class and zero elsewhere.
  std::vector<std::vector<double>> layers;

  const std::vector<double>& input() const { return layers.front(); }
};

// Explains row `row` of a forward trace for output class `cls`. The network
// must end in an affine layer.
absl::StatusOr<RelevanceTrace> ExplainExample(const Network& net,
                                              const ActivationTrace& trace,
                                              size_t row, uint32_t cls,
                                              double mu);

// Affine rescale by min/max; a constant vector maps to all zeros.
std::vector<double> NormalizeRelevance(std::span<const double> raw,
                                       RelevanceScale scale);

// Normalized input relevances of one example for its true class, with the
// network in inference mode.
absl::StatusOr<std::vector<double>> InputRelevance(const Network& net,
                                                   std::span<const double> x,
                                                   uint32_t cls,
                                                   const LrpOptions& options);

// R_j(D): the mean over the dataset of normalized input relevances.
absl::StatusOr<std::vector<double>> AverageRelevance(const Network& net,
                                                     const Dataset& data,
                                                     const LrpOptions& options);

}  // namespace adlm

#endif  // ADLM_LRP_H_
