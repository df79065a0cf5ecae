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

#ifndef FINGERLOC_NUMERIC_OPS_H_
#define FINGERLOC_NUMERIC_OPS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fingerloc/numeric/tensor.h"
#include "fingerloc/rng.h"

namespace fingerloc::numeric {

template <typename T>
struct Parameter {
  Parameter() = default;
  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T{0}); }

  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

// Weights uniform in +-sqrt(6 / (fan_in + fan_out)).
template <typename T>
Tensor<T> glorot_uniform(size_t fan_in, size_t fan_out, Rng& rng);

// Per-destination member lists in CSR form. Row d of the output reads the
// source rows members[offsets[d] .. offsets[d+1]); self is always a member.
struct Neighborhoods {
  size_t num_src = 0;
  std::vector<uint32_t> offsets{0};
  std::vector<uint32_t> members;

  size_t num_dst() const { return offsets.size() - 1; }
  std::span<const uint32_t> of(size_t d) const {
    return {members.data() + offsets[d], members.data() + offsets[d + 1]};
  }
  void validate() const;
};

// out = x W + b. b may be empty for a bias-free product.
template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b);

// Accumulates dW (+= x^T dy) and db (+= column sums of dy), returns dx.
template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy,
                          Tensor<T>& dw, Tensor<T>* db, bool need_dx = true);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);
// Subgradient at 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy);

template <typename T>
Tensor<T> leaky_relu_forward(const Tensor<T>& x, T slope);
// Subgradient at 0 is `slope`.
template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& dy, T slope);

// Inverted dropout. The returned mask holds the per-element multiplier
// (0 or 1/(1-rate)); an empty mask means identity.
template <typename T>
struct DropoutResult {
  Tensor<T> out;
  std::vector<T> mask;
};
template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& x, double rate, bool training, Rng& rng);
template <typename T>
Tensor<T> dropout_backward(const std::vector<T>& mask, const Tensor<T>& dy);

template <typename T>
Tensor<T> mean_aggregate(const Tensor<T>& x, const Neighborhoods& nb);
template <typename T>
Tensor<T> mean_aggregate_backward(const Neighborhoods& nb, const Tensor<T>& dy);

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  // d loss / d input
};

// Mean negative log-likelihood of the true class under softmax(logits).
template <typename T>
LossResult<T> cross_entropy(const Tensor<T>& logits, std::span<const int32_t> labels);

// Mean over rows of the squared euclidean distance between pred and target.
template <typename T>
LossResult<T> mse(const Tensor<T>& pred, const Tensor<T>& target);

// lambda * sum |w| over the given parameters; adds lambda * sign(w) to grads.
template <typename T>
double l1_penalty(std::span<Parameter<T>* const> params, double lambda,
                  bool accumulate_grad = true);

}  // namespace fingerloc::numeric

#endif  // FINGERLOC_NUMERIC_OPS_H_
