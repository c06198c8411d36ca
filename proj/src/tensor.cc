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

#include "adlm/tensor.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace adlm {

size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), size_t{1},
                         std::multiplies<size_t>());
}

std::string ShapeToString(const Shape& shape) {
  return absl::StrCat("[", absl::StrJoin(shape, "x"), "]");
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != NumElements(shape_)) {
    throw std::invalid_argument(
        absl::StrCat("tensor data length ", data_.size(),
                     " does not match shape ", ShapeToString(shape_)));
  }
}

Tensor Tensor::Reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::GatherRows(std::span<const size_t> rows) const {
  Shape shape = shape_;
  shape[0] = rows.size();
  Tensor out(shape);
  const size_t width = row_size();
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= this->rows()) {
      throw std::out_of_range(absl::StrCat("row ", rows[r], " out of range"));
    }
    std::copy_n(data_.begin() + rows[r] * width, width,
                out.data_.begin() + r * width);
  }
  return out;
}

void Tensor::Fill(double value) {
  std::fill(data_.begin(), data_.end(), value);
}

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace adlm
