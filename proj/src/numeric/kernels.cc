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

#include "fingerloc/numeric/kernels.h"

#include <omp.h>

#include <algorithm>
#include <vector>

namespace fingerloc::kernels {

namespace {

// One output row of a = b * c, shared by both variants so the summation
// order is identical. Zero entries of `a_row` are skipped; the RSSI inputs
// are mostly zeros after normalisation.
template <typename T>
inline void gemm_row(size_t k, size_t n, const T* a_row, const T* b, T* c_row,
                     double* acc) {
  std::fill(acc, acc + n, 0.0);
  for (size_t p = 0; p < k; ++p) {
    const double a = a_row[p];
    if (a == 0.0) continue;
    const T* b_row = b + p * n;
    for (size_t j = 0; j < n; ++j) acc[j] += a * static_cast<double>(b_row[j]);
  }
  for (size_t j = 0; j < n; ++j) c_row[j] = static_cast<T>(acc[j]);
}

template <typename T>
inline void gemm_nt_row(size_t n, size_t k, const T* a_row, const T* b, T* c_row) {
  for (size_t p = 0; p < k; ++p) {
    const T* b_row = b + p * n;
    double s = 0.0;
    for (size_t j = 0; j < n; ++j) s += static_cast<double>(a_row[j]) * b_row[j];
    c_row[p] = static_cast<T>(s);
  }
}

template <typename T>
inline void aggregate_row(const uint32_t* begin, const uint32_t* end, size_t cols,
                          const T* src, T* dst_row, double* acc) {
  std::fill(acc, acc + cols, 0.0);
  for (const uint32_t* it = begin; it != end; ++it) {
    const T* s = src + static_cast<size_t>(*it) * cols;
    for (size_t c = 0; c < cols; ++c) acc[c] += s[c];
  }
  const double inv = 1.0 / static_cast<double>(end - begin);
  for (size_t c = 0; c < cols; ++c) dst_row[c] = static_cast<T>(acc[c] * inv);
}

template <typename T>
inline void distance_row(size_t np, size_t dim, const T* q, const T* points,
                         double* out_row) {
  for (size_t p = 0; p < np; ++p) {
    const T* x = points + p * dim;
    double s = 0.0;
    for (size_t d = 0; d < dim; ++d) {
      const double diff = static_cast<double>(q[d]) - static_cast<double>(x[d]);
      s += diff * diff;
    }
    out_row[p] = s;
  }
}

// Transposed view of a membership list: for each source row, the
// destination rows that read it, in ascending destination order.
struct Reverse {
  std::vector<uint32_t> offsets;
  std::vector<uint32_t> dsts;
};

Reverse reverse_members(std::span<const uint32_t> offsets,
                        std::span<const uint32_t> members, size_t num_src) {
  Reverse r;
  r.offsets.assign(num_src + 1, 0);
  for (uint32_t m : members) ++r.offsets[m + 1];
  for (size_t i = 0; i < num_src; ++i) r.offsets[i + 1] += r.offsets[i];
  r.dsts.resize(members.size());
  std::vector<uint32_t> cursor(r.offsets.begin(), r.offsets.end() - 1);
  const size_t num_dst = offsets.size() - 1;
  for (size_t d = 0; d < num_dst; ++d) {
    for (uint32_t j = offsets[d]; j < offsets[d + 1]; ++j) {
      r.dsts[cursor[members[j]]++] = static_cast<uint32_t>(d);
    }
  }
  return r;
}

}  // namespace

namespace serial {

template <typename T>
void gemm_nn(size_t m, size_t k, size_t n, const T* a, const T* b, T* c) {
  std::vector<double> acc(n);
  for (size_t i = 0; i < m; ++i) gemm_row(k, n, a + i * k, b, c + i * n, acc.data());
}

template <typename T>
void gemm_tn_acc(size_t m, size_t k, size_t n, const T* a, const T* b, T* c) {
  for (size_t p = 0; p < k; ++p) {
    for (size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (size_t i = 0; i < m; ++i) {
        s += static_cast<double>(a[i * k + p]) * static_cast<double>(b[i * n + j]);
      }
      c[p * n + j] = static_cast<T>(static_cast<double>(c[p * n + j]) + s);
    }
  }
}

template <typename T>
void gemm_nt(size_t m, size_t n, size_t k, const T* a, const T* b, T* c) {
  for (size_t i = 0; i < m; ++i) gemm_nt_row(n, k, a + i * n, b, c + i * k);
}

template <typename T>
void mean_aggregate(std::span<const uint32_t> offsets,
                    std::span<const uint32_t> members, size_t cols, const T* src,
                    T* dst) {
  std::vector<double> acc(cols);
  const size_t num_dst = offsets.size() - 1;
  for (size_t d = 0; d < num_dst; ++d) {
    aggregate_row(members.data() + offsets[d], members.data() + offsets[d + 1], cols,
                  src, dst + d * cols, acc.data());
  }
}

template <typename T>
void mean_aggregate_backward(std::span<const uint32_t> offsets,
                             std::span<const uint32_t> members, size_t cols,
                             size_t /*num_src*/, const T* d_dst, T* d_src) {
  const size_t num_dst = offsets.size() - 1;
  for (size_t d = 0; d < num_dst; ++d) {
    const double inv = 1.0 / static_cast<double>(offsets[d + 1] - offsets[d]);
    for (uint32_t j = offsets[d]; j < offsets[d + 1]; ++j) {
      T* out = d_src + static_cast<size_t>(members[j]) * cols;
      const T* g = d_dst + d * cols;
      for (size_t c = 0; c < cols; ++c) {
        out[c] = static_cast<T>(static_cast<double>(out[c]) + g[c] * inv);
      }
    }
  }
}

template <typename T>
void squared_distances(size_t nq, size_t np, size_t dim, const T* queries,
                       const T* points, double* out) {
  for (size_t q = 0; q < nq; ++q) {
    distance_row(np, dim, queries + q * dim, points, out + q * np);
  }
}

}  // namespace serial

namespace parallel {

template <typename T>
void gemm_nn(size_t m, size_t k, size_t n, const T* a, const T* b, T* c) {
#pragma omp parallel
  {
    std::vector<double> acc(n);
#pragma omp for schedule(static)
    for (size_t i = 0; i < m; ++i) gemm_row(k, n, a + i * k, b, c + i * n, acc.data());
  }
}

template <typename T>
void gemm_tn_acc(size_t m, size_t k, size_t n, const T* a, const T* b, T* c) {
  // Row p of the result sums a[i][p] * b[i][:] over i in ascending order,
  // exactly like the serial loop, but over a transposed copy of `a`.
  std::vector<T> at(k * m);
#pragma omp parallel for schedule(static)
  for (size_t p = 0; p < k; ++p) {
    for (size_t i = 0; i < m; ++i) at[p * m + i] = a[i * k + p];
  }
#pragma omp parallel
  {
    std::vector<double> acc(n);
#pragma omp for schedule(static)
    for (size_t p = 0; p < k; ++p) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const T* a_row = at.data() + p * m;
      for (size_t i = 0; i < m; ++i) {
        const double av = a_row[i];
        if (av == 0.0) continue;
        const T* b_row = b + i * n;
        for (size_t j = 0; j < n; ++j) acc[j] += av * static_cast<double>(b_row[j]);
      }
      T* c_row = c + p * n;
      for (size_t j = 0; j < n; ++j) {
        c_row[j] = static_cast<T>(static_cast<double>(c_row[j]) + acc[j]);
      }
    }
  }
}

template <typename T>
void gemm_nt(size_t m, size_t n, size_t k, const T* a, const T* b, T* c) {
#pragma omp parallel for schedule(static)
  for (size_t i = 0; i < m; ++i) gemm_nt_row(n, k, a + i * n, b, c + i * k);
}

template <typename T>
void mean_aggregate(std::span<const uint32_t> offsets,
                    std::span<const uint32_t> members, size_t cols, const T* src,
                    T* dst) {
  const size_t num_dst = offsets.size() - 1;
#pragma omp parallel
  {
    std::vector<double> acc(cols);
#pragma omp for schedule(dynamic, 64)
    for (size_t d = 0; d < num_dst; ++d) {
      aggregate_row(members.data() + offsets[d], members.data() + offsets[d + 1], cols,
                    src, dst + d * cols, acc.data());
    }
  }
}

template <typename T>
void mean_aggregate_backward(std::span<const uint32_t> offsets,
                             std::span<const uint32_t> members, size_t cols,
                             size_t num_src, const T* d_dst, T* d_src) {
  // Gather form: each source row pulls from the destinations that read it,
  // in ascending destination order (the serial scatter order).
  const Reverse rev = reverse_members(offsets, members, num_src);
#pragma omp parallel for schedule(dynamic, 64)
  for (size_t s = 0; s < num_src; ++s) {
    T* out = d_src + s * cols;
    for (uint32_t j = rev.offsets[s]; j < rev.offsets[s + 1]; ++j) {
      const uint32_t d = rev.dsts[j];
      const double inv = 1.0 / static_cast<double>(offsets[d + 1] - offsets[d]);
      const T* g = d_dst + static_cast<size_t>(d) * cols;
      for (size_t c = 0; c < cols; ++c) {
        out[c] = static_cast<T>(static_cast<double>(out[c]) + g[c] * inv);
      }
    }
  }
}

template <typename T>
void squared_distances(size_t nq, size_t np, size_t dim, const T* queries,
                       const T* points, double* out) {
#pragma omp parallel for schedule(static)
  for (size_t q = 0; q < nq; ++q) {
    distance_row(np, dim, queries + q * dim, points, out + q * np);
  }
}

}  // namespace parallel

int max_threads() { return omp_get_max_threads(); }
void set_num_threads(int n) { omp_set_num_threads(n); }

#define FINGERLOC_INSTANTIATE_KERNELS(NS, T)                                        \
  template void NS::gemm_nn<T>(size_t, size_t, size_t, const T*, const T*, T*);     \
  template void NS::gemm_tn_acc<T>(size_t, size_t, size_t, const T*, const T*, T*); \
  template void NS::gemm_nt<T>(size_t, size_t, size_t, const T*, const T*, T*);     \
  template void NS::mean_aggregate<T>(std::span<const uint32_t>,                    \
                                      std::span<const uint32_t>, size_t, const T*,  \
                                      T*);                                          \
  template void NS::mean_aggregate_backward<T>(std::span<const uint32_t>,           \
                                               std::span<const uint32_t>, size_t,   \
                                               size_t, const T*, T*);               \
  template void NS::squared_distances<T>(size_t, size_t, size_t, const T*,          \
                                         const T*, double*);

FINGERLOC_INSTANTIATE_KERNELS(serial, float)
FINGERLOC_INSTANTIATE_KERNELS(serial, double)
FINGERLOC_INSTANTIATE_KERNELS(parallel, float)
FINGERLOC_INSTANTIATE_KERNELS(parallel, double)

#undef FINGERLOC_INSTANTIATE_KERNELS

}  // namespace fingerloc::kernels
