// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <omp.h>

#include <cstdlib>
#include <string>

#include "kernels_detail.hpp"

namespace jedssl::kernels {

namespace omp {

template <class T>
void gemm(Trans ta, Trans tb, GemmShape s, const T* a, const T* b, T* c, bool accumulate) {
    const auto m = static_cast<std::ptrdiff_t>(s.m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
        if (!accumulate) {
            T* crow = c + i * s.n;
            for (std::size_t j = 0; j < s.n; ++j) crow[j] = T(0);
        }
        serial::gemm_row(ta, tb, s, a, b, c, static_cast<std::size_t>(i));
    }
}

void assign_nearest(AssignShape s, const double* points, const double* centroids, std::int32_t* ids,
                    double* dist) {
    const auto n = static_cast<std::ptrdiff_t>(s.n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        serial::assign_point(s, points, centroids, ids, dist, static_cast<std::size_t>(i));
    }
}

template void gemm<float>(Trans, Trans, GemmShape, const float*, const float*, float*, bool);
template void gemm<double>(Trans, Trans, GemmShape, const double*, const double*, double*, bool);

}  // namespace omp

namespace {
// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelGemmWork = 1u << 16;
constexpr std::size_t kParallelAssignWork = 1u << 14;
}  // namespace

template <class T>
void gemm(Trans ta, Trans tb, GemmShape s, const T* a, const T* b, T* c, bool accumulate) {
    if (s.m * s.k * s.n >= kParallelGemmWork && omp_get_max_threads() > 1) {
        omp::gemm(ta, tb, s, a, b, c, accumulate);
    } else {
        serial::gemm(ta, tb, s, a, b, c, accumulate);
    }
}

void assign_nearest(AssignShape s, const double* points, const double* centroids, std::int32_t* ids,
                    double* dist) {
    if (s.n * s.k * s.d >= kParallelAssignWork && omp_get_max_threads() > 1) {
        omp::assign_nearest(s, points, centroids, ids, dist);
    } else {
        serial::assign_nearest(s, points, centroids, ids, dist);
    }
}

int configure_threads_from_env() {
    if (const char* env = std::getenv("JEDSSL_THREADS")) {
        try {
            int n = std::stoi(env);
            if (n >= 1) omp_set_num_threads(n);
        } catch (const std::exception&) {
            // ignored: malformed values leave the OpenMP default in place
        }
    }
    return omp_get_max_threads();
}

template void gemm<float>(Trans, Trans, GemmShape, const float*, const float*, float*, bool);
template void gemm<double>(Trans, Trans, GemmShape, const double*, const double*, double*, bool);

}  // namespace jedssl::kernels
