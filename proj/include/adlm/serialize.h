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

// Little binary container used by checkpoints and perturbed datasets:
// fixed-width little-endian scalars, length-prefixed strings, and tensors
// stored as rank, dims and raw float64 data.

#ifndef ADLM_SERIALIZE_H_
#define ADLM_SERIALIZE_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "adlm/tensor.h"

namespace adlm {

class BinaryWriter {
 public:
  void Raw(std::string_view bytes) { out_.append(bytes); }
  void U32(uint32_t v);
  void U64(uint64_t v);
  void F64(double v);
  void String(std::string_view s);
  void WriteTensor(const Tensor& t);

  const std::string& data() const { return out_; }

 private:
  std::string out_;
};

class BinaryReader {
 public:
  // `source` names the input in error messages.
  BinaryReader(std::string_view data, std::string source)
      : data_(data), source_(std::move(source)) {}

  absl::Status Expect(std::string_view magic);
  absl::StatusOr<uint32_t> U32();
  absl::StatusOr<uint64_t> U64();
  absl::StatusOr<double> F64();
  absl::StatusOr<std::string> String();
  absl::StatusOr<Tensor> ReadTensor();
  bool AtEnd() const { return offset_ == data_.size(); }
  size_t offset() const { return offset_; }

 private:
  absl::Status Take(size_t n, const char* what, const char** out);

  std::string_view data_;
  std::string source_;
  size_t offset_ = 0;
};

absl::StatusOr<std::string> ReadFileBytes(const std::string& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partial file.
absl::Status WriteFileAtomically(const std::string& path,
                                 std::string_view bytes);

// Git blob id: SHA-1 of "blob <size>\0" followed by the bytes, in hex.
std::string GitBlobHash(std::string_view bytes);

}  // namespace adlm

#endif  // ADLM_SERIALIZE_H_
