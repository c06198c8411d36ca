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

#include "adlm/mechanism.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "adlm/serialize.h"
#include "json.hpp"

namespace adlm {
namespace {

constexpr char kPerturbedMagic[] = "ADLMPDS1";
constexpr uint32_t kPerturbedVersion = 1;

std::atomic<uint64_t> laplace_draws{0};
std::atomic<uint64_t> draw_serials{0};

absl::Status CheckScale(double scale, const char* what) {
  if (!(scale > 0) || !std::isfinite(scale)) {
    return absl::InvalidArgumentError(absl::StrCat(
        what, " noise scale must be positive and finite, got ", scale));
  }
  return absl::OkStatus();
}

absl::Status CheckEpsilon(double epsilon, const char* what) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat(what, " must be positive and finite, got ", epsilon));
  }
  return absl::OkStatus();
}

absl::Status CheckBatchSize(size_t batch_size) {
  if (batch_size == 0) {
    return absl::InvalidArgumentError("batch size must be positive");
  }
  return absl::OkStatus();
}

// Adds (1/|L|) Lap(scale) to every entry of `t`, entry k at counter k.
// `b` already includes the noise multiplier.
absl::Status AddScaledNoise(Tensor& t, double b, size_t batch_size,
                            const CounterRng& rng, const NoiseOptions& noise,
                            const char* what) {
  if (noise.multiplier == 0.0) return absl::OkStatus();
  if (absl::Status s = CheckScale(b, what); !s.ok()) return s;
  const double inv_batch = static_cast<double>(batch_size);
  for (size_t k = 0; k < t.size(); ++k) {
    t[k] += LaplaceAt(rng, k, b) / inv_batch;
  }
  return absl::OkStatus();
}

}  // namespace

std::string MechanismName(Mechanism m) {
  switch (m) {
    case Mechanism::kAdlm:
      return "adlm";
    case Mechanism::kIlm:
      return "ilm";
    case Mechanism::kNoiseless:
      return "noiseless";
  }
  return "unknown";
}

absl::StatusOr<Mechanism> ParseMechanism(std::string_view name) {
  if (name == "adlm") return Mechanism::kAdlm;
  if (name == "ilm") return Mechanism::kIlm;
  if (name == "noiseless") return Mechanism::kNoiseless;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown mechanism '", std::string(name),
                   "' (expected adlm, ilm or noiseless)"));
}

double LaplaceFromUniform(double u, double scale) {
  if (u == 0.0) return 0.0;
  const double sign = u > 0 ? 1.0 : -1.0;
  return -scale * sign * std::log1p(-2.0 * std::abs(u));
}

double LaplaceAt(const CounterRng& rng, uint64_t counter, double scale) {
  laplace_draws.fetch_add(1, std::memory_order_relaxed);
  const double u = CounterRng::UniformOpenFromBits(rng.At(counter)) - 0.5;
  return LaplaceFromUniform(u, scale);
}

absl::StatusOr<double> SampleLaplace(double scale, CounterRng& rng) {
  if (absl::Status s = CheckScale(scale, "Laplace"); !s.ok()) return s;
  const uint64_t counter = rng.counter();
  rng.Seek(counter + 1);
  return LaplaceAt(rng, counter, scale);
}

uint64_t LaplaceDrawCount() {
  return laplace_draws.load(std::memory_order_relaxed);
}

absl::StatusOr<PrivacyBudget> PrivacyBudget::Split(
    double epsilon, const std::array<double, 3>& fractions) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive and finite, got ", epsilon));
  }
  const double sum = fractions[0] + fractions[1] + fractions[2];
  for (double f : fractions) {
    if (!(f >= 0) || !std::isfinite(f)) {
      return absl::InvalidArgumentError("budget fractions must be >= 0");
    }
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    return absl::InvalidArgumentError(
        absl::StrCat("budget fractions sum to ", sum, ", expected 1"));
  }
  return PrivacyBudget{epsilon * fractions[0], epsilon * fractions[1],
                       epsilon * fractions[2]};
}

double PrivacyBudget::Spent(Mechanism m) const {
  switch (m) {
    case Mechanism::kAdlm:
      return total();
    case Mechanism::kIlm:
      return epsilon2 + epsilon3;
    case Mechanism::kNoiseless:
      break;
  }
  return std::numeric_limits<double>::infinity();
}

absl::Status PrivacyBudget::Validate(Mechanism m) const {
  if (m == Mechanism::kNoiseless) return absl::OkStatus();
  if (m == Mechanism::kAdlm) {
    if (absl::Status s = CheckEpsilon(epsilon1, "epsilon1"); !s.ok()) return s;
  }
  if (absl::Status s = CheckEpsilon(epsilon2, "epsilon2"); !s.ok()) return s;
  return CheckEpsilon(epsilon3, "epsilon3");
}

double RelevanceSensitivity(size_t d, size_t dataset_size) {
  return 2.0 * static_cast<double>(d) / static_cast<double>(dataset_size);
}

double H0Sensitivity(size_t h0_width, size_t d) {
  return 2.0 * static_cast<double>(h0_width) * static_cast<double>(d);
}

double LossSensitivity(size_t num_classes, size_t top_hidden) {
  const double k = static_cast<double>(top_hidden);
  return static_cast<double>(num_classes) * (k + k * k / 4.0);
}

Sensitivities Sensitivities::Compute(size_t d, size_t dataset_size,
                                     size_t h0_width, size_t num_classes,
                                     size_t top_hidden) {
  return {RelevanceSensitivity(d, dataset_size), H0Sensitivity(h0_width, d),
          LossSensitivity(num_classes, top_hidden)};
}

absl::StatusOr<PrivateRelevance> PrivatizeRelevance(
    std::span<const double> relevance, double epsilon1, size_t dataset_size,
    uint64_t seed, const NoiseOptions& noise) {
  if (absl::Status s = CheckEpsilon(epsilon1, "epsilon1"); !s.ok()) return s;
  if (dataset_size == 0) {
    return absl::InvalidArgumentError("dataset size must be positive");
  }
  const CounterRng rng(seed, Substream::kRelevanceNoise);
  PrivateRelevance out;
  out.values.assign(relevance.begin(), relevance.end());
  out.scale = RelevanceSensitivity(relevance.size(), dataset_size) / epsilon1;
  out.stream_id = rng.stream_id();
  if (noise.multiplier == 0.0) return out;
  const double b =
      RelevanceNoiseScale(relevance.size(), dataset_size, epsilon1, noise);
  if (absl::Status s = CheckScale(b, "relevance"); !s.ok()) return s;
  for (size_t j = 0; j < out.values.size(); ++j) {
    out.values[j] += LaplaceAt(rng, j, b);
  }
  return out;
}

double RelevanceNoiseScale(size_t d, size_t dataset_size, double epsilon1,
                           const NoiseOptions& noise) {
  return RelevanceSensitivity(d, dataset_size) / epsilon1 * noise.multiplier;
}

double FeatureNoiseScale(double h0_sensitivity, double epsilon_j,
                         const NoiseOptions& noise) {
  return h0_sensitivity / epsilon_j * noise.multiplier;
}

double CoefficientNoiseScale(double loss_sensitivity, double epsilon3,
                             const NoiseOptions& noise) {
  return loss_sensitivity / epsilon3 * noise.multiplier;
}

BudgetAllocation UniformAllocation(size_t d, double epsilon2) {
  BudgetAllocation a;
  a.beta.assign(d, 1.0);
  a.epsilon.assign(d, epsilon2);
  return a;
}

BudgetAllocation AllocateBudget(std::span<const double> private_relevance,
                                double epsilon2, double floor) {
  const size_t d = private_relevance.size();
  std::vector<double> mag(d);
  for (size_t j = 0; j < d; ++j) mag[j] = std::abs(private_relevance[j]);
  const double total = std::accumulate(mag.begin(), mag.end(), 0.0);
  const bool all_equal =
      d > 0 && std::all_of(mag.begin(), mag.end(),
                           [&](double v) { return v == mag[0]; });
  if (!(total > 0) || all_equal) {
    BudgetAllocation a = UniformAllocation(d, epsilon2);
    a.uniform_fallback = !(total > 0);
    return a;
  }
  BudgetAllocation a;
  a.beta.resize(d);
  const double dd = static_cast<double>(d);
  for (size_t j = 0; j < d; ++j) a.beta[j] = dd * mag[j] / total;
  // Raise entries below the floor to it and shrink the rest proportionally;
  // shrinking can push more entries under the floor, so repeat.
  std::vector<bool> pinned(d, false);
  for (size_t round = 0; round <= d; ++round) {
    size_t newly = 0;
    for (size_t j = 0; j < d; ++j) {
      if (!pinned[j] && a.beta[j] < floor) {
        pinned[j] = true;
        ++newly;
      }
    }
    if (newly == 0) break;
    a.floored =
        static_cast<size_t>(std::count(pinned.begin(), pinned.end(), true));
    const double free_budget = dd - floor * static_cast<double>(a.floored);
    double free_mass = 0.0;
    for (size_t j = 0; j < d; ++j) {
      if (!pinned[j]) free_mass += mag[j];
    }
    for (size_t j = 0; j < d; ++j) {
      a.beta[j] = pinned[j] ? floor : free_budget * mag[j] / free_mass;
    }
  }
  a.epsilon.resize(d);
  for (size_t j = 0; j < d; ++j) a.epsilon[j] = a.beta[j] * epsilon2;
  return a;
}

absl::StatusOr<Tensor> PerturbFeatures(const Tensor& features,
                                       std::span<const double> epsilon,
                                       double h0_sensitivity, size_t batch_size,
                                       uint64_t seed,
                                       const NoiseOptions& noise) {
  const size_t d = features.row_size();
  if (epsilon.size() != d) {
    return absl::InvalidArgumentError(absl::StrCat(
        "allocation has ", epsilon.size(), " budgets for ", d, " features"));
  }
  if (absl::Status s = CheckBatchSize(batch_size); !s.ok()) return s;
  for (double e : epsilon) {
    if (absl::Status s = CheckEpsilon(e, "feature budget"); !s.ok()) return s;
  }
  Tensor out = features;
  if (noise.multiplier == 0.0) return out;
  std::vector<double> scale(d);
  for (size_t j = 0; j < d; ++j) {
    scale[j] = FeatureNoiseScale(h0_sensitivity, epsilon[j], noise);
    if (absl::Status s = CheckScale(scale[j], "feature"); !s.ok()) return s;
  }
  const CounterRng rng(seed, Substream::kFeatureNoise);
  const double inv_batch = static_cast<double>(batch_size);
  for (size_t i = 0; i < features.rows(); ++i) {
    for (size_t j = 0; j < d; ++j) {
      out[i * d + j] += LaplaceAt(rng, i * d + j, scale[j]) / inv_batch;
    }
  }
  return out;
}

absl::StatusOr<Tensor> IlmPerturbFeatures(const Tensor& features,
                                          double epsilon2,
                                          double h0_sensitivity,
                                          size_t batch_size, uint64_t seed,
                                          const NoiseOptions& noise) {
  if (absl::Status s = CheckBatchSize(batch_size); !s.ok()) return s;
  if (absl::Status s = CheckEpsilon(epsilon2, "epsilon2"); !s.ok()) return s;
  Tensor out = features;
  if (noise.multiplier == 0.0) return out;
  const double scale = FeatureNoiseScale(h0_sensitivity, epsilon2, noise);
  if (absl::Status s = CheckScale(scale, "feature"); !s.ok()) return s;
  const CounterRng rng(seed, Substream::kFeatureNoise);
  const double inv_batch = static_cast<double>(batch_size);
  for (size_t k = 0; k < out.size(); ++k) {
    out[k] += LaplaceAt(rng, k, scale) / inv_batch;
  }
  return out;
}

absl::StatusOr<Tensor> PerturbBias(const Shape& h0_shape, double epsilon2,
                                   double h0_sensitivity, size_t batch_size,
                                   uint64_t seed, const NoiseOptions& noise) {
  if (absl::Status s = CheckBatchSize(batch_size); !s.ok()) return s;
  if (absl::Status s = CheckEpsilon(epsilon2, "epsilon2"); !s.ok()) return s;
  Tensor out(h0_shape);
  if (absl::Status s = AddScaledNoise(
          out, FeatureNoiseScale(h0_sensitivity, epsilon2, noise), batch_size,
          CounterRng(seed, Substream::kBiasNoise), noise, "bias");
      !s.ok()) {
    return s;
  }
  return out;
}

absl::StatusOr<LossCoefficients> PerturbCoefficients(
    const LossCoefficients& coeffs, double epsilon3, double loss_sensitivity,
    size_t batch_size, uint64_t seed, const NoiseOptions& noise) {
  if (absl::Status s = CheckBatchSize(batch_size); !s.ok()) return s;
  if (absl::Status s = CheckEpsilon(epsilon3, "epsilon3"); !s.ok()) return s;
  LossCoefficients out = coeffs;
  const double scale = CoefficientNoiseScale(loss_sensitivity, epsilon3, noise);
  Tensor* parts[] = {&out.c0, &out.c1, &out.c2};
  for (uint64_t r = 0; r < 3; ++r) {
    if (absl::Status s =
            AddScaledNoise(*parts[r], scale, batch_size,
                           CounterRng(seed, Substream::kCoefficientNoise, r),
                           noise, "coefficient");
        !s.ok()) {
      return s;
    }
  }
  return out;
}

uint64_t NextDrawSerial() {
  return draw_serials.fetch_add(1, std::memory_order_relaxed) + 1;
}

absl::Status SavePerturbedDataset(const PerturbedDataset& data,
                                  const std::string& path) {
  nlohmann::json meta;
  meta["mechanism"] = MechanismName(data.mechanism);
  meta["batch_size"] = data.batch_size;
  meta["epsilon"] = {data.budget.epsilon1, data.budget.epsilon2,
                     data.budget.epsilon3};
  meta["sensitivity"] = {data.sensitivities.relevance, data.sensitivities.h0,
                         data.sensitivities.loss};
  meta["noise_multiplier"] = data.noise_multiplier;
  meta["example_shape"] = data.example_shape;
  BinaryWriter w;
  w.Raw(kPerturbedMagic);
  w.U32(kPerturbedVersion);
  w.U64(data.seed);
  w.String(meta.dump());
  // Doubles that matter bit-for-bit travel as raw float64, not JSON text.
  w.F64(data.budget.epsilon1);
  w.F64(data.budget.epsilon2);
  w.F64(data.budget.epsilon3);
  w.F64(data.sensitivities.relevance);
  w.F64(data.sensitivities.h0);
  w.F64(data.sensitivities.loss);
  w.F64(data.noise_multiplier);
  w.WriteTensor(
      Tensor({data.private_relevance.size()}, data.private_relevance));
  w.WriteTensor(Tensor({data.feature_epsilon.size()}, data.feature_epsilon));
  w.WriteTensor(data.features);
  w.WriteTensor(data.bias_noise);
  w.WriteTensor(data.coefficients.c0);
  w.WriteTensor(data.coefficients.c1);
  w.WriteTensor(data.coefficients.c2);
  w.WriteTensor(data.clean_labels);
  return WriteFileAtomically(path, w.data());
}

absl::StatusOr<PerturbedDataset> LoadPerturbedDataset(const std::string& path) {
  auto bytes = ReadFileBytes(path);
  if (!bytes.ok()) return bytes.status();
  BinaryReader r(*bytes, path);
  if (absl::Status s = r.Expect(kPerturbedMagic); !s.ok()) return s;
  auto version = r.U32();
  if (!version.ok()) return version.status();
  if (*version != kPerturbedVersion) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": unsupported version ", *version));
  }
  PerturbedDataset out;
  auto seed = r.U64();
  auto meta_text = r.String();
  if (!seed.ok()) return seed.status();
  if (!meta_text.ok()) return meta_text.status();
  out.seed = *seed;
  nlohmann::json meta =
      nlohmann::json::parse(*meta_text, nullptr, /*allow_exceptions=*/false);
  if (meta.is_discarded() || !meta.contains("mechanism")) {
    return absl::DataLossError(absl::StrCat(path, ": corrupt metadata"));
  }
  auto mech = ParseMechanism(meta["mechanism"].get<std::string>());
  if (!mech.ok()) return mech.status();
  out.mechanism = *mech;
  out.batch_size = meta.value("batch_size", size_t{0});
  out.example_shape = meta.value("example_shape", Shape{});
  double* scalars[] = {&out.budget.epsilon1,  &out.budget.epsilon2,
                       &out.budget.epsilon3,  &out.sensitivities.relevance,
                       &out.sensitivities.h0, &out.sensitivities.loss,
                       &out.noise_multiplier};
  for (double* v : scalars) {
    auto x = r.F64();
    if (!x.ok()) return x.status();
    *v = *x;
  }
  Tensor* tensors[8];
  Tensor relevance, epsilon;
  tensors[0] = &relevance;
  tensors[1] = &epsilon;
  tensors[2] = &out.features;
  tensors[3] = &out.bias_noise;
  tensors[4] = &out.coefficients.c0;
  tensors[5] = &out.coefficients.c1;
  tensors[6] = &out.coefficients.c2;
  tensors[7] = &out.clean_labels;
  for (Tensor* t : tensors) {
    auto x = r.ReadTensor();
    if (!x.ok()) return x.status();
    *t = *std::move(x);
  }
  if (!r.AtEnd()) {
    return absl::DataLossError(
        absl::StrCat(path, ": trailing bytes at offset ", r.offset()));
  }
  out.private_relevance = relevance.vec();
  out.feature_epsilon = epsilon.vec();
  out.draw_serial = NextDrawSerial();
  return out;
}

}  // namespace adlm
