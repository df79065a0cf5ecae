// Copyright 2026 The fingerloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FINGERLOC_NUMERIC_TENSOR_H_
#define FINGERLOC_NUMERIC_TENSOR_H_

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fingerloc/error.h"

namespace fingerloc::numeric {

std::string shape_string(const std::vector<size_t>& shape);

inline size_t shape_size(const std::vector<size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), size_t{1},
                         std::multiplies<size_t>());
}

// Dense row-major tensor. Rank 1 and rank 2 are what the models use; the
// shape is kept general so checkpoints can record it verbatim.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(std::vector<size_t> shape, T fill = T{})
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  Tensor(size_t rows, size_t cols, T fill = T{})
      : Tensor(std::vector<size_t>{rows, cols}, fill) {}

  static Tensor from(std::vector<size_t> shape, std::vector<T> data) {
    if (shape_size(shape) != data.size()) {
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_string(shape));
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  size_t rows() const {
    require_rank2();
    return shape_[0];
  }
  size_t cols() const {
    require_rank2();
    return shape_[1];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  std::span<T> row(size_t r) { return {data_.data() + r * shape_[1], shape_[1]}; }
  std::span<const T> row(size_t r) const {
    return {data_.data() + r * shape_[1], shape_[1]};
  }

  T& operator()(size_t r, size_t c) { return data_[r * shape_[1] + c]; }
  const T& operator()(size_t r, size_t c) const { return data_[r * shape_[1] + c]; }
  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>::from(shape_, std::move(out));
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  void require_rank2() const {
    if (shape_.size() != 2) {
      throw ShapeError("expected rank-2 tensor, got shape " + shape_string(shape_));
    }
  }

  std::vector<size_t> shape_;
  std::vector<T> data_;
};

template <typename T>
void require_shape(const Tensor<T>& t, const std::vector<size_t>& shape,
                   const char* what) {
  if (t.shape() != shape) {
    throw ShapeError(std::string(what) + ": expected shape " + shape_string(shape) +
                     ", got " + shape_string(t.shape()));
  }
}

// Copies the listed rows of `src` into a new [ids.size() x cols] tensor.
template <typename T, typename Index>
Tensor<T> gather_rows(const Tensor<T>& src, std::span<const Index> ids) {
  const size_t cols = src.cols();
  Tensor<T> out(ids.size(), cols);
  for (size_t i = 0; i < ids.size(); ++i) {
    auto from = src.row(static_cast<size_t>(ids[i]));
    std::copy(from.begin(), from.end(), out.row(i).begin());
  }
  return out;
}

// Horizontal concatenation of two matrices with equal row counts.
template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: row count mismatch");
  }
  Tensor<T> out(a.rows(), a.cols() + b.cols());
  for (size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + a.cols());
  }
  return out;
}

// Vertical concatenation of two matrices with equal column counts.
template <typename T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.cols() != b.cols()) {
    throw ShapeError("concat_rows: column count mismatch");
  }
  Tensor<T> out(a.rows() + b.rows(), a.cols());
  std::copy(a.values().begin(), a.values().end(), out.values().begin());
  std::copy(b.values().begin(), b.values().end(), out.values().begin() + a.size());
  return out;
}

// First `n` rows of `t`.
template <typename T>
Tensor<T> head_rows(const Tensor<T>& t, size_t n) {
  Tensor<T> out(n, t.cols());
  std::copy(t.values().begin(), t.values().begin() + n * t.cols(), out.values().begin());
  return out;
}

// Splits the columns of `t` at `left_cols`.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_cols(const Tensor<T>& t, size_t left_cols) {
  Tensor<T> a(t.rows(), left_cols);
  Tensor<T> b(t.rows(), t.cols() - left_cols);
  for (size_t r = 0; r < t.rows(); ++r) {
    auto src = t.row(r);
    std::copy(src.begin(), src.begin() + left_cols, a.row(r).begin());
    std::copy(src.begin() + left_cols, src.end(), b.row(r).begin());
  }
  return {std::move(a), std::move(b)};
}

}  // namespace fingerloc::numeric

#endif  // FINGERLOC_NUMERIC_TENSOR_H_
