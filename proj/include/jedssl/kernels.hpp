// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel inner loops. Each kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp. Both compute every
// output element on one thread with the same summation order, so their
// results are bit-identical for any thread count.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace jedssl::kernels {

enum class Trans { kNo, kYes };

// C (M x N) = op(A) * op(B), or C += op(A) * op(B) when accumulate is set.
// op(A) is M x K, op(B) is K x N. Storage is row-major; a transposed operand
// is stored in its untransposed layout.
struct GemmShape {
    std::size_t m;
    std::size_t k;
    std::size_t n;
};

// Nearest centroid by squared Euclidean distance; ties go to the lowest index.
// points: n x d, centroids: k x d. Writes ids[n] and the per-point distance.
struct AssignShape {
    std::size_t n;
    std::size_t d;
    std::size_t k;
};

namespace serial {
template <class T>
void gemm(Trans ta, Trans tb, GemmShape s, const T* a, const T* b, T* c, bool accumulate);
void assign_nearest(AssignShape s, const double* points, const double* centroids, std::int32_t* ids,
                    double* dist);
}  // namespace serial

namespace omp {
template <class T>
void gemm(Trans ta, Trans tb, GemmShape s, const T* a, const T* b, T* c, bool accumulate);
void assign_nearest(AssignShape s, const double* points, const double* centroids, std::int32_t* ids,
                    double* dist);
}  // namespace omp

// Dispatchers used by the rest of the library. They pick the OpenMP path when
// the problem is large enough to amortize the parallel region.
template <class T>
void gemm(Trans ta, Trans tb, GemmShape s, const T* a, const T* b, T* c, bool accumulate);
void assign_nearest(AssignShape s, const double* points, const double* centroids, std::int32_t* ids,
                    double* dist);

// Applies the JEDSSL_THREADS environment cap, if set. Returns the thread count in effect.
int configure_threads_from_env();

}  // namespace jedssl::kernels
