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

#ifndef ADLM_TRAINER_H_
#define ADLM_TRAINER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "adlm/dataset.h"
#include "adlm/lrp.h"
#include "adlm/mechanism.h"
#include "adlm/network.h"

namespace adlm {

enum class NoiselessLoss { kCrossEntropy, kTaylor };

struct TrainConfig {
  Mechanism mechanism = Mechanism::kAdlm;
  double epsilon = 1.0;
  std::array<double, 3> epsilon_split = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  size_t batch_size = 300;
  size_t epochs = 50;
  double learning_rate = 1.0;
  // eta_t = learning_rate * lr_decay^epoch.
  double lr_decay = 1.0;
  uint64_t seed = 1;
  // Layer text forms; "dense:OUT" infers its input width.
  std::vector<std::string> architecture = {
      "dense:64", "relu", "lrn", "dense:25", "relu", "lrn", "dense:10:nobias"};
  // Empty means: same as `architecture`.
  std::vector<std::string> pretrain_architecture;
  size_t pretrain_epochs = 12;
  double mu = 1e-9;
  RelevanceScale relevance_scale = RelevanceScale::kSymmetric;
  double lrn_momentum = 0.9;
  NoiselessLoss noiseless_loss = NoiselessLoss::kCrossEntropy;
  // Multiplies every noise scale; 0 turns noise off (testing only).
  double noise_multiplier = 1.0;
  // Evaluate on the test set after every `eval_every` epochs (and the last).
  size_t eval_every = 1;
  // One metrics row per step instead of per epoch.
  bool log_every_step = false;

  PrivacyBudget Budget() const;
};

absl::Status ValidateTrainConfig(const TrainConfig& config);

// Builds the network for data with the given per-example shape and class
// count. Dense-first architectures see the flattened input.
absl::StatusOr<Network> BuildNetwork(const std::vector<std::string>& layers,
                                     const Shape& example_shape,
                                     size_t num_classes);

struct MetricsRow {
  size_t step = 0;
  size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> test_accuracy;
  double epsilon_spent = 0.0;
  double wall_ms = 0.0;
};

class MetricsLog {
 public:
  static constexpr char kSchemaVersion[] = "1";

  void Add(MetricsRow row) { rows_.push_back(row); }
  const std::vector<MetricsRow>& rows() const { return rows_; }
  void SetLastAccuracy(double accuracy) {
    rows_.back().test_accuracy = accuracy;
  }

  // Columns: step,epoch,loss,test_accuracy,epsilon_spent,wall_ms.
  std::string ToCsv() const;
  // Same rows without the wall-clock column, for run-to-run comparison.
  std::string DeterministicCsv() const;

 private:
  std::vector<MetricsRow> rows_;
};

// Fraction of argmax-correct predictions; every example is evaluated on its
// own (inference mode).
absl::StatusOr<double> Evaluate(const Network& net, const Dataset& test);

// Seed of the relevance model's initialization and batch order.
uint64_t PretrainSeed(uint64_t seed);

// Noiseless training of the relevance model; never released.
absl::StatusOr<Network> Pretrain(const TrainConfig& config,
                                 const Dataset& train);

// Hooks for equivalence tests.
struct TrainOptions {
  // Pretrained relevance model; trained inline when absent (AdLM only).
  const Network* pretrained = nullptr;
  // Replaces the privatized relevance vector (AdLM only).
  std::optional<std::vector<double>> private_relevance_override;
};

// Steps 1, 2 and 4: relevance release, feature and bias perturbation and
// coefficient perturbation. `net` supplies the h0 and top-layer widths.
absl::StatusOr<PerturbedDataset> Preprocess(const TrainConfig& config,
                                            const Dataset& train,
                                            const Network& net,
                                            const TrainOptions& options = {});

struct TrainResult {
  Network net;
  MetricsLog metrics;
  std::shared_ptr<const PerturbedDataset> perturbed;
  std::vector<double> private_relevance;  // empty unless AdLM
  // Instrumentation of the loop: raw-data reads, fresh Laplace draws, and
  // whether the perturbed data kept its draw serial.
  uint64_t raw_reads_during_loop = 0;
  uint64_t laplace_draws_during_loop = 0;
  bool perturbed_untouched = true;
};

// Step 5 on an already perturbed dataset. The raw training data is not an
// argument, so the loop cannot read it.
absl::StatusOr<TrainResult> RunTrainingLoop(
    const TrainConfig& config, std::shared_ptr<const PerturbedDataset> data,
    Network net, const Dataset* test);

// Full pipeline. `test` may be null (no accuracy column).
absl::StatusOr<TrainResult> Train(const TrainConfig& config,
                                  const Dataset& train, const Dataset* test,
                                  const TrainOptions& options = {});

}  // namespace adlm

#endif  // ADLM_TRAINER_H_
