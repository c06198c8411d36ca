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

#ifndef ADLM_MECHANISM_H_
#define ADLM_MECHANISM_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "adlm/approx_loss.h"
#include "adlm/dataset.h"
#include "adlm/random.h"
#include "adlm/tensor.h"

namespace adlm {

enum class Mechanism { kAdlm, kIlm, kNoiseless };

std::string MechanismName(Mechanism m);
absl::StatusOr<Mechanism> ParseMechanism(std::string_view name);

// Laplace(0, scale) from u in (-1/2, 1/2): -scale sign(u) ln(1 - 2|u|).
double LaplaceFromUniform(double u, double scale);

// One draw from the next counter of `rng`. Fails for scale <= 0.
absl::StatusOr<double> SampleLaplace(double scale, CounterRng& rng);

// Draw at an absolute counter position; `scale` must already be validated.
double LaplaceAt(const CounterRng& rng, uint64_t counter, double scale);

// Total Laplace draws made by this process. Lets callers prove that a code
// region drew no fresh noise.
uint64_t LaplaceDrawCount();

struct PrivacyBudget {
  double epsilon1 = 0.0;  // relevance release
  double epsilon2 = 0.0;  // features and h0 bias
  double epsilon3 = 0.0;  // loss coefficients

  double total() const { return epsilon1 + epsilon2 + epsilon3; }
  // epsilon split by fractions that sum to 1.
  static absl::StatusOr<PrivacyBudget> Split(
      double epsilon, const std::array<double, 3>& fractions);
  // Budget actually consumed by `m`: AdLM all three, ILM epsilon2 +
  // epsilon3, noiseless infinity.
  double Spent(Mechanism m) const;
  // Refuses non-positive or non-finite parts that `m` needs.
  absl::Status Validate(Mechanism m) const;
};

struct Sensitivities {
  double relevance = 0.0;  // 2 d / |D|
  double h0 = 0.0;         // 2 |h0| d
  double loss = 0.0;       // M (K + K^2 / 4)

  static Sensitivities Compute(size_t d, size_t dataset_size, size_t h0_width,
                               size_t num_classes, size_t top_hidden);
};

double RelevanceSensitivity(size_t d, size_t dataset_size);
double H0Sensitivity(size_t h0_width, size_t d);
double LossSensitivity(size_t num_classes, size_t top_hidden);

// Multiplies every noise scale. 0 switches noise off entirely (no draws);
// 0.5 is the under-scaled mutation used by the audit.
struct NoiseOptions {
  double multiplier = 1.0;
};

// Laplace scales the perturbation functions below draw with. Feature, bias
// and coefficient draws are further divided by |L|.
double RelevanceNoiseScale(size_t d, size_t dataset_size, double epsilon1,
                           const NoiseOptions& noise = {});
double FeatureNoiseScale(double h0_sensitivity, double epsilon_j,
                         const NoiseOptions& noise = {});
double CoefficientNoiseScale(double loss_sensitivity, double epsilon3,
                             const NoiseOptions& noise = {});

struct PrivateRelevance {
  std::vector<double> values;
  double scale = 0.0;
  uint64_t stream_id = 0;
};

// R_j(D) + Lap(Delta_R / epsilon1), one draw per feature.
absl::StatusOr<PrivateRelevance> PrivatizeRelevance(
    std::span<const double> relevance, double epsilon1, size_t dataset_size,
    uint64_t seed, const NoiseOptions& noise = {});

struct BudgetAllocation {
  std::vector<double> beta;
  std::vector<double> epsilon;  // beta_j * epsilon2
  bool uniform_fallback = false;
  size_t floored = 0;
};

inline constexpr double kBetaFloor = 1e-3;

// beta_j = d |R_j| / sum |R|, floored at `floor` and renormalized so the sum
// stays d. All-zero or all-equal magnitudes give exactly beta_j = 1.
BudgetAllocation AllocateBudget(std::span<const double> private_relevance,
                                double epsilon2, double floor = kBetaFloor);
BudgetAllocation UniformAllocation(size_t d, double epsilon2);

// x_ij + (1 / |L|) Lap(Delta_h0 / epsilon_j). The draw for (i, j) sits at
// counter i * d + j of the feature-noise substream.
absl::StatusOr<Tensor> PerturbFeatures(const Tensor& features,
                                       std::span<const double> epsilon,
                                       double h0_sensitivity, size_t batch_size,
                                       uint64_t seed,
                                       const NoiseOptions& noise = {});

// Appendix-style baseline: one common scale Delta_h0 / (|L| epsilon2).
absl::StatusOr<Tensor> IlmPerturbFeatures(const Tensor& features,
                                          double epsilon2,
                                          double h0_sensitivity,
                                          size_t batch_size, uint64_t seed,
                                          const NoiseOptions& noise = {});

// (1 / |L|) Lap(Delta_h0 / epsilon2) for each of the `h0_shape` neurons;
// added to the learnable h0 bias as a frozen offset.
absl::StatusOr<Tensor> PerturbBias(const Shape& h0_shape, double epsilon2,
                                   double h0_sensitivity, size_t batch_size,
                                   uint64_t seed,
                                   const NoiseOptions& noise = {});

// c + (1 / |L|) Lap(Delta_F / epsilon3) for all three coefficient tensors.
absl::StatusOr<LossCoefficients> PerturbCoefficients(
    const LossCoefficients& coeffs, double epsilon3, double loss_sensitivity,
    size_t batch_size, uint64_t seed, const NoiseOptions& noise = {});

// Everything the private training loop may read. Built once; the raw
// dataset is not consulted again.
struct PerturbedDataset {
  Mechanism mechanism = Mechanism::kNoiseless;
  uint64_t seed = 0;
  size_t batch_size = 0;
  PrivacyBudget budget;
  Sensitivities sensitivities;
  double noise_multiplier = 1.0;
  std::vector<double> private_relevance;  // AdLM only
  std::vector<double> feature_epsilon;
  Shape example_shape;
  Tensor features;    // n x d
  Tensor bias_noise;  // per-example h0 shape
  LossCoefficients coefficients;
  // One-hot labels, kept only by the noiseless baseline for its exact loss.
  Tensor clean_labels;
  // Process-unique id assigned when the noise was drawn.
  uint64_t draw_serial = 0;

  size_t size() const { return features.rows(); }
};

// Returns a fresh draw serial; used by the builder of a PerturbedDataset.
uint64_t NextDrawSerial();

absl::Status SavePerturbedDataset(const PerturbedDataset& data,
                                  const std::string& path);
absl::StatusOr<PerturbedDataset> LoadPerturbedDataset(const std::string& path);

}  // namespace adlm

#endif  // ADLM_MECHANISM_H_
