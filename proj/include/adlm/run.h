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

// Subcommand implementations shared by the CLI and the Python module. Each
// writes its artifacts under config.out_dir with atomic renames.

#ifndef ADLM_RUN_H_
#define ADLM_RUN_H_

#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "adlm/config.h"
#include "adlm/dataset.h"

namespace adlm {

struct InputFile {
  std::string role;  // e.g. "train_images"
  std::string path;
  std::string git_blob;
};

struct RunData {
  Dataset train;
  Dataset test;  // scaled with the training bounds
  std::vector<InputFile> inputs;
};

// Loads (or generates) both splits, applies the limits and scales features
// into [0, 1/sqrt(d)] with bounds taken from the training split.
absl::StatusOr<RunData> LoadRunData(const RunConfig& config);

// Refuses budgets the configured mechanism cannot run with.
absl::Status CheckBudget(const RunConfig& config);

// Each returns a short JSON summary of what it wrote.
absl::StatusOr<std::string> CmdPretrain(const RunConfig& config);
absl::StatusOr<std::string> CmdRelevance(const RunConfig& config);
absl::StatusOr<std::string> CmdTrain(const RunConfig& config);
absl::StatusOr<std::string> CmdEval(const RunConfig& config);

struct AuditOutcome {
  std::string json;
  bool passed = false;
};
absl::StatusOr<AuditOutcome> CmdAudit(const RunConfig& config);

// Binary PGM (P5) of `values` min-max scaled to 0..255; a constant image is
// mid-gray.
std::string EncodePgm(const std::vector<double>& values, size_t width,
                      size_t height);

}  // namespace adlm

#endif  // ADLM_RUN_H_
