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

#ifndef ADLM_TENSOR_H_
#define ADLM_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace adlm {

using Shape = std::vector<size_t>;

size_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

// Dense row-major array of doubles. The first dimension is the batch
// dimension wherever a tensor holds per-example values.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  // Throws std::invalid_argument if data.size() != NumElements(shape).
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Matrix(size_t rows, size_t cols, std::vector<double> data) {
    return Tensor({rows, cols}, std::move(data));
  }

  const Shape& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t dim(size_t i) const { return shape_.at(i); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rows of the leading dimension and the per-row element count.
  size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  size_t row_size() const { return rows() == 0 ? 0 : size() / rows(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }
  double& at(size_t r, size_t c) { return data_[r * row_size() + c]; }
  double at(size_t r, size_t c) const { return data_[r * row_size() + c]; }

  std::span<double> row(size_t r) {
    return std::span<double>(data_).subspan(r * row_size(), row_size());
  }
  std::span<const double> row(size_t r) const {
    return std::span<const double>(data_).subspan(r * row_size(), row_size());
  }

  // Same data, new shape with the same element count.
  Tensor Reshaped(Shape shape) const;
  // Copies the given rows of the leading dimension, in order.
  Tensor GatherRows(std::span<const size_t> rows) const;

  void Fill(double value);
  bool AllFinite() const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace adlm

#endif  // ADLM_TENSOR_H_
