// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "jedssl/kernels.hpp"

namespace jedssl::kernels::serial {

template <class T>
void gemm_row(Trans ta, Trans tb, GemmShape s, const T* a, const T* b, T* c, std::size_t i);

void assign_point(AssignShape s, const double* points, const double* centroids, std::int32_t* ids,
                  double* dist, std::size_t i);

}  // namespace jedssl::kernels::serial
