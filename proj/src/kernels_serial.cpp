// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <limits>

#include "kernels_detail.hpp"

namespace jedssl::kernels::serial {

// Row i of C is produced by one of four loop nests depending on operand layout.
// The omp variants run the same nests with the i loop distributed.
template <class T>
void gemm_row(Trans ta, Trans tb, GemmShape s, const T* a, const T* b, T* c, std::size_t i) {
    T* crow = c + i * s.n;
    if (tb == Trans::kNo) {
        for (std::size_t p = 0; p < s.k; ++p) {
            const T av = (ta == Trans::kNo) ? a[i * s.k + p] : a[p * s.m + i];
            const T* brow = b + p * s.n;
            for (std::size_t j = 0; j < s.n; ++j) crow[j] += av * brow[j];
        }
    } else {
        for (std::size_t j = 0; j < s.n; ++j) {
            const T* brow = b + j * s.k;
            T acc = 0;
            if (ta == Trans::kNo) {
                const T* arow = a + i * s.k;
                for (std::size_t p = 0; p < s.k; ++p) acc += arow[p] * brow[p];
            } else {
                for (std::size_t p = 0; p < s.k; ++p) acc += a[p * s.m + i] * brow[p];
            }
            crow[j] += acc;
        }
    }
}

template <class T>
void gemm(Trans ta, Trans tb, GemmShape s, const T* a, const T* b, T* c, bool accumulate) {
    if (!accumulate) {
        for (std::size_t i = 0; i < s.m * s.n; ++i) c[i] = T(0);
    }
    for (std::size_t i = 0; i < s.m; ++i) gemm_row(ta, tb, s, a, b, c, i);
}

void assign_point(AssignShape s, const double* points, const double* centroids, std::int32_t* ids,
                  double* dist, std::size_t i) {
    const double* x = points + i * s.d;
    double best = std::numeric_limits<double>::infinity();
    std::int32_t best_id = 0;
    for (std::size_t c = 0; c < s.k; ++c) {
        const double* mu = centroids + c * s.d;
        double d2 = 0.0;
        for (std::size_t j = 0; j < s.d; ++j) {
            const double diff = x[j] - mu[j];
            d2 += diff * diff;
        }
        if (d2 < best) {
            best = d2;
            best_id = static_cast<std::int32_t>(c);
        }
    }
    ids[i] = best_id;
    dist[i] = best;
}

void assign_nearest(AssignShape s, const double* points, const double* centroids, std::int32_t* ids,
                    double* dist) {
    for (std::size_t i = 0; i < s.n; ++i) assign_point(s, points, centroids, ids, dist, i);
}

template void gemm_row<float>(Trans, Trans, GemmShape, const float*, const float*, float*, std::size_t);
template void gemm_row<double>(Trans, Trans, GemmShape, const double*, const double*, double*, std::size_t);
template void gemm<float>(Trans, Trans, GemmShape, const float*, const float*, float*, bool);
template void gemm<double>(Trans, Trans, GemmShape, const double*, const double*, double*, bool);

}  // namespace jedssl::kernels::serial
