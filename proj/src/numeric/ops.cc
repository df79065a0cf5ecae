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

#include "fingerloc/numeric/ops.h"

#include <cmath>
#include <sstream>

#include "fingerloc/numeric/kernels.h"

namespace fingerloc::numeric {

std::string shape_string(const std::vector<size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T> glorot_uniform(size_t fan_in, size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> w(fan_in, fan_out);
  for (auto& v : w.values()) v = static_cast<T>((2.0 * uniform_unit(rng) - 1.0) * bound);
  return w;
}

void Neighborhoods::validate() const {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != members.size()) {
    throw ShapeError("neighborhoods: malformed offsets");
  }
  for (size_t d = 0; d + 1 < offsets.size(); ++d) {
    if (offsets[d + 1] <= offsets[d]) {
      throw ShapeError("neighborhoods: empty member set for row " + std::to_string(d));
    }
  }
  for (uint32_t m : members) {
    if (m >= num_src) throw ShapeError("neighborhoods: member index out of range");
  }
}

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b) {
  if (x.cols() != w.rows()) {
    throw ShapeError("linear: input " + shape_string(x.shape()) + " vs weight " +
                     shape_string(w.shape()));
  }
  Tensor<T> out(x.rows(), w.cols());
  kernels::parallel::gemm_nn(x.rows(), x.cols(), w.cols(), x.data(), w.data(), out.data());
  if (b != nullptr && !b->empty()) {
    require_shape(*b, {w.cols()}, "linear bias");
    for (size_t r = 0; r < out.rows(); ++r) {
      auto row = out.row(r);
      for (size_t c = 0; c < row.size(); ++c) row[c] += (*b)[c];
    }
  }
  return out;
}

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy,
                          Tensor<T>& dw, Tensor<T>* db, bool need_dx) {
  if (dy.rows() != x.rows() || dy.cols() != w.cols()) {
    throw ShapeError("linear backward: gradient " + shape_string(dy.shape()));
  }
  kernels::parallel::gemm_tn_acc(x.rows(), x.cols(), w.cols(), x.data(), dy.data(),
                                 dw.data());
  if (db != nullptr && !db->empty()) {
    for (size_t c = 0; c < dy.cols(); ++c) {
      double s = 0.0;
      for (size_t r = 0; r < dy.rows(); ++r) s += dy(r, c);
      (*db)[c] = static_cast<T>(static_cast<double>((*db)[c]) + s);
    }
  }
  if (!need_dx) return {};
  Tensor<T> dx(x.rows(), x.cols());
  kernels::parallel::gemm_nt(dy.rows(), dy.cols(), w.rows(), dy.data(), w.data(),
                             dx.data());
  return dx;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (auto& v : out.values()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  Tensor<T> dx = dy;
  auto xs = x.values();
  auto ds = dx.values();
  for (size_t i = 0; i < ds.size(); ++i) {
    if (!(xs[i] > T{0})) ds[i] = T{0};
  }
  return dx;
}

template <typename T>
Tensor<T> leaky_relu_forward(const Tensor<T>& x, T slope) {
  Tensor<T> out = x;
  for (auto& v : out.values()) v = v > T{0} ? v : slope * v;
  return out;
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& dy, T slope) {
  Tensor<T> dx = dy;
  auto xs = x.values();
  auto ds = dx.values();
  for (size_t i = 0; i < ds.size(); ++i) {
    if (!(xs[i] > T{0})) ds[i] *= slope;
  }
  return dx;
}

template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ShapeError("dropout rate must lie in [0, 1)");
  }
  DropoutResult<T> r;
  if (!training || rate == 0.0) {
    r.out = x;
    return r;
  }
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  r.mask.resize(x.size());
  r.out = x;
  auto out = r.out.values();
  for (size_t i = 0; i < out.size(); ++i) {
    r.mask[i] = uniform_unit(rng) < rate ? T{0} : scale;
    out[i] *= r.mask[i];
  }
  return r;
}

template <typename T>
Tensor<T> dropout_backward(const std::vector<T>& mask, const Tensor<T>& dy) {
  if (mask.empty()) return dy;
  Tensor<T> dx = dy;
  auto ds = dx.values();
  for (size_t i = 0; i < ds.size(); ++i) ds[i] *= mask[i];
  return dx;
}

template <typename T>
Tensor<T> mean_aggregate(const Tensor<T>& x, const Neighborhoods& nb) {
  if (x.rows() != nb.num_src) {
    throw ShapeError("mean_aggregate: " + std::to_string(x.rows()) +
                     " input rows for " + std::to_string(nb.num_src) + " sources");
  }
  Tensor<T> out(nb.num_dst(), x.cols());
  kernels::parallel::mean_aggregate<T>(nb.offsets, nb.members, x.cols(), x.data(),
                                       out.data());
  return out;
}

template <typename T>
Tensor<T> mean_aggregate_backward(const Neighborhoods& nb, const Tensor<T>& dy) {
  Tensor<T> dx(nb.num_src, dy.cols());
  kernels::parallel::mean_aggregate_backward<T>(nb.offsets, nb.members, dy.cols(),
                                                nb.num_src, dy.data(), dx.data());
  return dx;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  Tensor<T> p(logits.rows(), logits.cols());
  for (size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto out = p.row(r);
    double mx = in[0];
    for (T v : in) mx = std::max<double>(mx, v);
    double z = 0.0;
    for (size_t c = 0; c < in.size(); ++c) z += std::exp(static_cast<double>(in[c]) - mx);
    for (size_t c = 0; c < in.size(); ++c) {
      out[c] = static_cast<T>(std::exp(static_cast<double>(in[c]) - mx) / z);
    }
  }
  return p;
}

template <typename T>
LossResult<T> cross_entropy(const Tensor<T>& logits, std::span<const int32_t> labels) {
  const size_t n = logits.rows();
  const size_t k = logits.cols();
  if (labels.size() != n) throw ShapeError("cross_entropy: label count mismatch");
  LossResult<T> r;
  r.grad = Tensor<T>(n, k);
  if (n == 0) return r;
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<size_t>(labels[i]) >= k) {
      throw DataError("cross_entropy: label " + std::to_string(labels[i]) +
                      " outside [0, " + std::to_string(k) + ")");
    }
    auto in = logits.row(i);
    double mx = in[0];
    for (T v : in) mx = std::max<double>(mx, v);
    double z = 0.0;
    for (T v : in) z += std::exp(static_cast<double>(v) - mx);
    const double log_z = std::log(z) + mx;
    total += log_z - static_cast<double>(in[labels[i]]);
    auto g = r.grad.row(i);
    for (size_t c = 0; c < k; ++c) {
      const double pc = std::exp(static_cast<double>(in[c]) - log_z);
      const double onehot = static_cast<size_t>(labels[i]) == c ? 1.0 : 0.0;
      g[c] = static_cast<T>((pc - onehot) / static_cast<double>(n));
    }
  }
  r.loss = total / static_cast<double>(n);
  return r;
}

template <typename T>
LossResult<T> mse(const Tensor<T>& pred, const Tensor<T>& target) {
  if (!pred.same_shape(target)) {
    throw ShapeError("mse: " + shape_string(pred.shape()) + " vs " +
                     shape_string(target.shape()));
  }
  LossResult<T> r;
  r.grad = Tensor<T>(pred.shape());
  const size_t n = pred.rows();
  if (n == 0) return r;
  double total = 0.0;
  auto p = pred.values();
  auto t = target.values();
  auto g = r.grad.values();
  for (size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
    total += d * d;
    g[i] = static_cast<T>(2.0 * d / static_cast<double>(n));
  }
  r.loss = total / static_cast<double>(n);
  return r;
}

template <typename T>
double l1_penalty(std::span<Parameter<T>* const> params, double lambda,
                  bool accumulate_grad) {
  if (lambda < 0.0) throw ShapeError("l1_penalty: lambda must be non-negative");
  double total = 0.0;
  for (Parameter<T>* p : params) {
    auto w = p->value.values();
    auto g = p->grad.values();
    for (size_t i = 0; i < w.size(); ++i) {
      total += std::abs(static_cast<double>(w[i]));
      if (accumulate_grad && lambda != 0.0) {
        const double s = w[i] > T{0} ? 1.0 : (w[i] < T{0} ? -1.0 : 0.0);
        g[i] = static_cast<T>(static_cast<double>(g[i]) + lambda * s);
      }
    }
  }
  return lambda * total;
}

#define FINGERLOC_INSTANTIATE_OPS(T)                                                  \
  template Tensor<T> glorot_uniform<T>(size_t, size_t, Rng&);                         \
  template Tensor<T> linear_forward<T>(const Tensor<T>&, const Tensor<T>&,            \
                                       const Tensor<T>*);                             \
  template Tensor<T> linear_backward<T>(const Tensor<T>&, const Tensor<T>&,           \
                                        const Tensor<T>&, Tensor<T>&, Tensor<T>*,     \
                                        bool);                                        \
  template Tensor<T> relu_forward<T>(const Tensor<T>&);                               \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> leaky_relu_forward<T>(const Tensor<T>&, T);                      \
  template Tensor<T> leaky_relu_backward<T>(const Tensor<T>&, const Tensor<T>&, T);   \
  template DropoutResult<T> dropout_forward<T>(const Tensor<T>&, double, bool, Rng&); \
  template Tensor<T> dropout_backward<T>(const std::vector<T>&, const Tensor<T>&);    \
  template Tensor<T> mean_aggregate<T>(const Tensor<T>&, const Neighborhoods&);       \
  template Tensor<T> mean_aggregate_backward<T>(const Neighborhoods&,                 \
                                                const Tensor<T>&);                    \
  template Tensor<T> softmax<T>(const Tensor<T>&);                                    \
  template LossResult<T> cross_entropy<T>(const Tensor<T>&,                           \
                                          std::span<const int32_t>);                  \
  template LossResult<T> mse<T>(const Tensor<T>&, const Tensor<T>&);                  \
  template double l1_penalty<T>(std::span<Parameter<T>* const>, double, bool);

FINGERLOC_INSTANTIATE_OPS(float)
FINGERLOC_INSTANTIATE_OPS(double)

#undef FINGERLOC_INSTANTIATE_OPS

}  // namespace fingerloc::numeric
