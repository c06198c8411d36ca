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

// Model checkpoint file.
//
// Layout (little-endian):
//   "ADLMCKPT"  magic
//   u32         format version (1)
//   u64         run seed
//   string      JSON header: {"input_shape": [...], "layers": ["dense:784:64",
//               ...], "metadata": {...}}
//   per layer, five tensors: weights, bias, bias_offset, lrn_min, lrn_max
//   (an absent tensor is written with rank 0)
// Strings are u64 length + bytes; tensors are u32 rank, u64 dims, f64 data.

#ifndef ADLM_CHECKPOINT_H_
#define ADLM_CHECKPOINT_H_

#include <cstdint>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "adlm/network.h"

namespace adlm {

inline constexpr char kCheckpointMagic[] = "ADLMCKPT";
inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Network net;
  uint64_t seed = 0;
  // JSON object text with training metadata.
  std::string metadata = "{}";
};

std::string EncodeCheckpoint(const Network& net, uint64_t seed,
                             const std::string& metadata_json);
absl::StatusOr<Checkpoint> DecodeCheckpoint(std::string_view bytes,
                                            const std::string& source);

absl::Status SaveCheckpoint(const Network& net, uint64_t seed,
                            const std::string& metadata_json,
                            const std::string& path);
absl::StatusOr<Checkpoint> LoadCheckpoint(const std::string& path);

}  // namespace adlm

#endif  // ADLM_CHECKPOINT_H_
