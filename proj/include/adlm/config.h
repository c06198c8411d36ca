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

// Run configuration: the training config plus data and output locations.
// Stored as a JSON object; unknown keys are rejected.

#ifndef ADLM_CONFIG_H_
#define ADLM_CONFIG_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "adlm/trainer.h"

namespace adlm {

// Environment variable naming the default data directory.
inline constexpr char kDataDirEnv[] = "ADLM_DATA_DIR";

struct RunConfig {
  TrainConfig train;
  // "mnist" reads IDX files from data_dir; "synthetic" generates toy data.
  std::string dataset = "mnist";
  std::string data_dir;
  std::string out_dir = "runs/latest";
  // 0 keeps the whole split.
  size_t train_limit = 0;
  size_t test_limit = 0;
  // Synthetic data shape.
  size_t synthetic_dim = 64;
  size_t synthetic_classes = 10;
  // Checkpoint read by eval/relevance; empty means <out_dir>/model.ckpt.
  std::string checkpoint;
  // Pretrained relevance model for AdLM training; empty trains one inline.
  std::string pretrained;
  // Monte Carlo trials per audit check.
  size_t audit_trials = 200000;

  // data_dir, or $ADLM_DATA_DIR, or "data/mnist".
  std::string ResolvedDataDir() const;
  std::string ResolvedCheckpoint() const;
};

struct ConfigKey {
  std::string name;
  std::string type;
  std::string help;
};

// Every accepted key, in serialization order.
const std::vector<ConfigKey>& ConfigKeys();

// Accepts a config object or a run manifest (its "config" member).
absl::StatusOr<RunConfig> ParseRunConfig(std::string_view json_text);
absl::StatusOr<RunConfig> LoadRunConfig(const std::string& path);
// Pretty-printed JSON with every key; parses back to an equal config.
std::string RunConfigToJson(const RunConfig& config);

// Sets one key from command-line text. The text is read as JSON when it
// parses, else as a string; list-valued keys also accept "a,b,c".
absl::Status ApplyOverride(std::string_view key, std::string_view text,
                           RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

std::string RelevanceScaleName(RelevanceScale s);
absl::StatusOr<RelevanceScale> ParseRelevanceScale(std::string_view name);
std::string NoiselessLossName(NoiselessLoss l);
absl::StatusOr<NoiselessLoss> ParseNoiselessLoss(std::string_view name);

}  // namespace adlm

#endif  // ADLM_CONFIG_H_
