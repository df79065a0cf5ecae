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

#ifndef FINGERLOC_NUMERIC_KERNELS_H_
#define FINGERLOC_NUMERIC_KERNELS_H_

#include <cstddef>
#include <cstdint>
#include <span>

// Raw row-major kernels. Every kernel exists twice: `serial` is the plain
// reference kept for testing, `parallel` splits independent output rows
// across OpenMP threads. Both sum in the same order with double
// accumulators, so their results are bit-identical for any thread count.
namespace fingerloc::kernels {

namespace serial {

// c[m x n] = a[m x k] * b[k x n]
template <typename T>
void gemm_nn(size_t m, size_t k, size_t n, const T* a, const T* b, T* c);

// c[k x n] += a[m x k]^T * b[m x n]
template <typename T>
void gemm_tn_acc(size_t m, size_t k, size_t n, const T* a, const T* b, T* c);

// c[m x k] = a[m x n] * b[k x n]^T
template <typename T>
void gemm_nt(size_t m, size_t n, size_t k, const T* a, const T* b, T* c);

// dst row d = mean of src rows members[offsets[d] .. offsets[d+1]).
template <typename T>
void mean_aggregate(std::span<const uint32_t> offsets,
                    std::span<const uint32_t> members, size_t cols,
                    const T* src, T* dst);

// d_src[members[j]] += d_dst[d] / |set(d)| for every member j of d.
// d_src must be zero-initialised by the caller.
template <typename T>
void mean_aggregate_backward(std::span<const uint32_t> offsets,
                             std::span<const uint32_t> members, size_t cols,
                             size_t num_src, const T* d_dst, T* d_src);

// out[q x p] = squared euclidean distance between query row q and point row p.
template <typename T>
void squared_distances(size_t nq, size_t np, size_t dim, const T* queries,
                       const T* points, double* out);

}  // namespace serial

namespace parallel {

template <typename T>
void gemm_nn(size_t m, size_t k, size_t n, const T* a, const T* b, T* c);

template <typename T>
void gemm_tn_acc(size_t m, size_t k, size_t n, const T* a, const T* b, T* c);

template <typename T>
void gemm_nt(size_t m, size_t n, size_t k, const T* a, const T* b, T* c);

template <typename T>
void mean_aggregate(std::span<const uint32_t> offsets,
                    std::span<const uint32_t> members, size_t cols,
                    const T* src, T* dst);

template <typename T>
void mean_aggregate_backward(std::span<const uint32_t> offsets,
                             std::span<const uint32_t> members, size_t cols,
                             size_t num_src, const T* d_dst, T* d_src);

template <typename T>
void squared_distances(size_t nq, size_t np, size_t dim, const T* queries,
                       const T* points, double* out);

}  // namespace parallel

// Number of OpenMP threads the parallel kernels will use.
int max_threads();
void set_num_threads(int n);

}  // namespace fingerloc::kernels

#endif  // FINGERLOC_NUMERIC_KERNELS_H_
