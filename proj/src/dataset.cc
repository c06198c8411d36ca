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

#include "adlm/dataset.h"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "absl/strings/str_cat.h"
#include "adlm/random.h"

namespace adlm {
namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;
constexpr size_t kMnistClasses = 10;

// Sequential reader over a plain or gzip file that tracks the byte offset.
class IdxReader {
 public:
  static absl::StatusOr<IdxReader> Open(const std::string& path) {
    if (!std::filesystem::exists(path)) {
      return absl::NotFoundError(absl::StrCat(path, ": no such file"));
    }
    gzFile f = gzopen(path.c_str(), "rb");
    if (f == nullptr) {
      return absl::NotFoundError(absl::StrCat(path, ": cannot open"));
    }
    return IdxReader(path, f);
  }

  absl::Status Read(void* out, size_t n, const char* what) {
    size_t done = 0;
    auto* bytes = static_cast<unsigned char*>(out);
    while (done < n) {
      const unsigned chunk =
          static_cast<unsigned>(std::min<size_t>(n - done, 1u << 30));
      const int got = gzread(file_.get(), bytes + done, chunk);
      if (got <= 0) {
        int errnum = 0;
        const char* msg = gzerror(file_.get(), &errnum);
        if (errnum != Z_OK && errnum != Z_BUF_ERROR) {
          return absl::DataLossError(
              absl::StrCat(path_, ": offset ", offset_ + done, ": ", msg));
        }
        return absl::DataLossError(absl::StrCat(
            path_, ": truncated at offset ", offset_ + done, " while reading ",
            what, " (needed ", n - done, " more bytes)"));
      }
      done += static_cast<size_t>(got);
    }
    offset_ += n;
    return absl::OkStatus();
  }

  absl::StatusOr<uint32_t> ReadBigEndian32(const char* what) {
    std::array<unsigned char, 4> b{};
    if (absl::Status s = Read(b.data(), 4, what); !s.ok()) return s;
    return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) |
           (uint32_t{b[2]} << 8) | uint32_t{b[3]};
  }

  absl::Status Error(const std::string& message, size_t offset) const {
    return absl::InvalidArgumentError(
        absl::StrCat(path_, ": offset ", offset, ": ", message));
  }

  size_t offset() const { return offset_; }

 private:
  struct Closer {
    void operator()(gzFile f) const { gzclose(f); }
  };
  IdxReader(std::string path, gzFile f) : path_(std::move(path)), file_(f) {}

  std::string path_;
  std::unique_ptr<gzFile_s, Closer> file_;
  size_t offset_ = 0;
};

absl::StatusOr<uint32_t> ReadMagic(IdxReader& reader, uint32_t expected) {
  auto magic = reader.ReadBigEndian32("magic number");
  if (!magic.ok()) return magic.status();
  if (*magic != expected) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "0x%08x, expected 0x%08x", *magic,
                  expected);
    return reader.Error(absl::StrCat("bad magic ", buf), 0);
  }
  return *magic;
}

std::string FirstExisting(const std::string& dir, const std::string& name) {
  const std::filesystem::path base = std::filesystem::path(dir) / name;
  for (const std::string& candidate : {base.string(), base.string() + ".gz"}) {
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return base.string() + ".gz";
}

}  // namespace

Dataset::Dataset(Tensor features, std::vector<uint32_t> classes,
                 size_t num_classes)
    : features_(std::move(features)),
      labels_({features_.rows(), num_classes}),
      classes_(std::move(classes)),
      num_classes_(num_classes),
      example_shape_({features_.row_size()}) {
  if (classes_.size() != features_.rows()) {
    throw std::invalid_argument("dataset: one class index per row required");
  }
  for (size_t i = 0; i < classes_.size(); ++i) {
    labels_[i * num_classes + classes_[i]] = 1.0;
  }
}

const Tensor& Dataset::features() const {
  ++accesses_;
  return features_;
}

const Tensor& Dataset::labels() const {
  ++accesses_;
  return labels_;
}

const std::vector<uint32_t>& Dataset::classes() const {
  ++accesses_;
  return classes_;
}

Tensor Dataset::FeatureRows(std::span<const size_t> rows) const {
  ++accesses_;
  return features_.GatherRows(rows);
}

Tensor Dataset::LabelRows(std::span<const size_t> rows) const {
  ++accesses_;
  return labels_.GatherRows(rows);
}

absl::StatusOr<Dataset> LoadIdx(const std::string& images_path,
                                const std::string& labels_path) {
  auto images = IdxReader::Open(images_path);
  if (!images.ok()) return images.status();
  if (auto m = ReadMagic(*images, kImageMagic); !m.ok()) return m.status();
  auto count = images->ReadBigEndian32("image count");
  if (!count.ok()) return count.status();
  auto rows = images->ReadBigEndian32("row count");
  if (!rows.ok()) return rows.status();
  auto cols = images->ReadBigEndian32("column count");
  if (!cols.ok()) return cols.status();
  if (*rows == 0 || *cols == 0) {
    return images->Error("zero image dimension", 8);
  }
  const size_t n = *count;
  const size_t d = size_t{*rows} * *cols;
  std::vector<unsigned char> pixels(n * d);
  if (absl::Status s = images->Read(pixels.data(), pixels.size(), "pixels");
      !s.ok()) {
    return s;
  }

  auto labels = IdxReader::Open(labels_path);
  if (!labels.ok()) return labels.status();
  if (auto m = ReadMagic(*labels, kLabelMagic); !m.ok()) return m.status();
  auto label_count = labels->ReadBigEndian32("label count");
  if (!label_count.ok()) return label_count.status();
  if (*label_count != *count) {
    return labels->Error(absl::StrCat("label count ", *label_count,
                                      " does not match image count ", *count,
                                      " in ", images_path),
                         4);
  }
  std::vector<unsigned char> raw_labels(n);
  if (absl::Status s =
          labels->Read(raw_labels.data(), raw_labels.size(), "labels");
      !s.ok()) {
    return s;
  }
  std::vector<uint32_t> classes(n);
  for (size_t i = 0; i < n; ++i) {
    if (raw_labels[i] >= kMnistClasses) {
      return labels->Error(
          absl::StrCat("label ", int{raw_labels[i]}, " out of range"), 8 + i);
    }
    classes[i] = raw_labels[i];
  }
  Tensor features({n, d});
  std::copy(pixels.begin(), pixels.end(), features.data().begin());
  Dataset out(std::move(features), std::move(classes), kMnistClasses);
  out.set_example_shape({1, *rows, *cols});
  return out;
}

std::array<std::string, 2> MnistSplitFiles(const std::string& dir,
                                           const std::string& split) {
  return {FirstExisting(dir, split + "-images-idx3-ubyte"),
          FirstExisting(dir, split + "-labels-idx1-ubyte")};
}

absl::StatusOr<Dataset> LoadMnistSplit(const std::string& dir,
                                       const std::string& split) {
  const auto files = MnistSplitFiles(dir, split);
  return LoadIdx(files[0], files[1]);
}

FeatureBounds ComputeBounds(const Dataset& data) {
  const Tensor& x = data.features();
  const size_t d = data.dim();
  FeatureBounds b{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  if (data.size() == 0) return b;
  for (size_t j = 0; j < d; ++j) b.lo[j] = b.hi[j] = x[j];
  for (size_t i = 1; i < data.size(); ++i) {
    for (size_t j = 0; j < d; ++j) {
      b.lo[j] = std::min(b.lo[j], x[i * d + j]);
      b.hi[j] = std::max(b.hi[j], x[i * d + j]);
    }
  }
  return b;
}

Dataset ScaleFeatures(const Dataset& data, const FeatureBounds& bounds) {
  const Tensor& x = data.features();
  const size_t d = data.dim();
  const double root_d = std::sqrt(static_cast<double>(d));
  Tensor scaled(x.shape());
  for (size_t i = 0; i < data.size(); ++i) {
    for (size_t j = 0; j < d; ++j) {
      const double lo = bounds.lo[j];
      const double hi = bounds.hi[j];
      if (!(hi > lo)) continue;
      const double v = std::clamp(x[i * d + j], lo, hi);
      scaled[i * d + j] = (v - lo) / ((hi - lo) * root_d);
    }
  }
  Dataset out(std::move(scaled), data.classes(), data.num_classes());
  out.set_example_shape(data.example_shape());
  return out;
}

Dataset SyntheticDataset(size_t n, size_t d, size_t num_classes,
                         uint64_t seed) {
  CounterRng rng(seed, Substream::kSynthetic);
  std::vector<double> prototypes(num_classes * d);
  for (double& p : prototypes) p = rng.UniformOpen();
  const double root_d = std::sqrt(static_cast<double>(d));
  Tensor x({n, d});
  std::vector<uint32_t> classes(n);
  for (size_t i = 0; i < n; ++i) {
    classes[i] = static_cast<uint32_t>(i % num_classes);
    const double* proto = prototypes.data() + classes[i] * d;
    for (size_t j = 0; j < d; ++j) {
      const double v = proto[j] + 0.5 * (rng.UniformOpen() - 0.5);
      x[i * d + j] = std::clamp(v, 0.0, 1.0) / root_d;
    }
  }
  return Dataset(std::move(x), std::move(classes), num_classes);
}

Dataset Head(const Dataset& data, size_t count) {
  count = std::min(count, data.size());
  std::vector<size_t> rows(count);
  std::iota(rows.begin(), rows.end(), 0);
  const std::vector<uint32_t>& all = data.classes();
  Dataset out(data.FeatureRows(rows),
              std::vector<uint32_t>(all.begin(), all.begin() + count),
              data.num_classes());
  out.set_example_shape(data.example_shape());
  return out;
}

BatchPlan::BatchPlan(size_t num_examples, size_t batch_size, uint64_t seed)
    : num_examples_(num_examples), batch_size_(batch_size), seed_(seed) {}

size_t BatchPlan::steps_per_epoch() const {
  return batch_size_ == 0 ? 0 : num_examples_ / batch_size_;
}

std::vector<size_t> BatchPlan::EpochOrder(size_t epoch) const {
  std::vector<size_t> order(num_examples_);
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(seed_, Substream::kShuffle, epoch);
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[UniformBelow(rng, i)]);
  }
  return order;
}

std::span<const size_t> BatchPlan::Batch(const std::vector<size_t>& order,
                                         size_t step) const {
  return std::span<const size_t>(order).subspan(step * batch_size_,
                                                batch_size_);
}

}  // namespace adlm
