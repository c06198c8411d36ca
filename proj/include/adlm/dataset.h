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

#ifndef ADLM_DATASET_H_
#define ADLM_DATASET_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "adlm/tensor.h"

namespace adlm {

// Per-feature range (alpha_j, beta_j) estimated on the training split.
struct FeatureBounds {
  std::vector<double> lo;
  std::vector<double> hi;
};

// Labelled examples: n x d features, n x M one-hot labels. Every read of the
// raw features or labels goes through an accessor that bumps a counter, so a
// caller can prove a code region never touched them.
class Dataset {
 public:
  Dataset() = default;
  // `classes[i]` must be < num_classes.
  Dataset(Tensor features, std::vector<uint32_t> classes, size_t num_classes);

  size_t size() const { return features_.rows(); }
  size_t dim() const { return features_.row_size(); }
  size_t num_classes() const { return num_classes_; }

  const Tensor& features() const;
  // n x M one-hot matrix.
  const Tensor& labels() const;
  const std::vector<uint32_t>& classes() const;
  Tensor FeatureRows(std::span<const size_t> rows) const;
  Tensor LabelRows(std::span<const size_t> rows) const;

  uint64_t access_count() const { return accesses_; }

  // Shape of one example for the network input (defaults to {d}).
  const Shape& example_shape() const { return example_shape_; }
  void set_example_shape(Shape shape) { example_shape_ = std::move(shape); }

 private:
  Tensor features_;
  Tensor labels_;
  std::vector<uint32_t> classes_;
  size_t num_classes_ = 0;
  Shape example_shape_;
  mutable uint64_t accesses_ = 0;
};

// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
// Gzip-compressed files are accepted. Raw pixel values stay in [0, 255];
// labels become one-hot over 10 classes. Any malformed input is an error
// naming the file and byte offset.
absl::StatusOr<Dataset> LoadIdx(const std::string& images_path,
                                const std::string& labels_path);

// Image and label paths of a split, preferring the uncompressed file.
std::array<std::string, 2> MnistSplitFiles(const std::string& dir,
                                           const std::string& split);

// Loads "<split>-images-idx3-ubyte" / "<split>-labels-idx1-ubyte" (with or
// without ".gz") from `dir`, where split is "train" or "t10k".
absl::StatusOr<Dataset> LoadMnistSplit(const std::string& dir,
                                       const std::string& split);

FeatureBounds ComputeBounds(const Dataset& data);

// x_ij -> (clip(x_ij) - alpha_j) / ((beta_j - alpha_j) sqrt(d)). Values are
// clipped into [alpha_j, beta_j] first; constant features map to 0.
Dataset ScaleFeatures(const Dataset& data, const FeatureBounds& bounds);

// Deterministic, learnable toy data already satisfying the scaled-feature
// invariants: x in [0, 1/sqrt(d)]^d, labels balanced over M classes.
Dataset SyntheticDataset(size_t n, size_t d, size_t num_classes, uint64_t seed);

// First `count` examples (for subsetting a loaded split).
Dataset Head(const Dataset& data, size_t count);

// Epoch-wise shuffled mini-batches of a fixed size; the n mod |L| remainder
// of every shuffled epoch is dropped.
class BatchPlan {
 public:
  BatchPlan(size_t num_examples, size_t batch_size, uint64_t seed);

  size_t batch_size() const { return batch_size_; }
  size_t steps_per_epoch() const;
  // A permutation of [0, n) unique to (seed, epoch).
  std::vector<size_t> EpochOrder(size_t epoch) const;
  // Row indices of batch `step` (0-based within the epoch) of `order`.
  std::span<const size_t> Batch(const std::vector<size_t>& order,
                                size_t step) const;

 private:
  size_t num_examples_;
  size_t batch_size_;
  uint64_t seed_;
};

}  // namespace adlm

#endif  // ADLM_DATASET_H_
