// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Every op validates shapes, throws ShapeError with
// the op name and offending shapes on mismatch, and throws NumericalError if a
// finite input produces a non-finite output.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "jedssl/tensor.hpp"

namespace jedssl::ad {

// [m, k] x [k, n] -> [m, n]
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// Elementwise, identical shapes.
template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> scale(const Tensor<T>& x, T factor);

// x[..., n] + row[n], broadcast over all leading axes.
template <class T>
Tensor<T> add_row(const Tensor<T>& x, const Tensor<T>& row);

template <class T>
Tensor<T> transpose(const Tensor<T>& x);
template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// Normalizations over the last axis.
template <class T>
Tensor<T> softmax(const Tensor<T>& x);
template <class T>
Tensor<T> log_softmax(const Tensor<T>& x);

inline constexpr double kLayerNormEps = 1e-5;

// (x - mean) / sqrt(var + eps) * gain + bias over the last axis. A zero-variance
// row normalizes to 0 and the output is the bias.
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     double eps = kLayerNormEps);

// Exact (erf) GELU.
template <class T>
Tensor<T> gelu(const Tensor<T>& x);

// table [V, d], ids in [0, V) -> [ids.size(), d]
template <class T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const std::int32_t> ids);

// Axis 0 concatenates along the leading axis for any rank; axis 1 joins the
// columns of 2-D tensors.
template <class T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis);

// Half-open [begin, end) along axis 0 (any rank) or axis 1 (2-D).
template <class T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end);

// Reductions to a [1] tensor.
template <class T>
Tensor<T> sum(const Tensor<T>& x);
template <class T>
Tensor<T> mean(const Tensor<T>& x);

// x [rows, V], one index per row -> [rows] with x[r, index[r]].
template <class T>
Tensor<T> pick(const Tensor<T>& x, std::span<const std::int32_t> index);

// Strided windows over time: x [L, C] -> [T, kernel * C] where
// T = (L - kernel) / stride + 1 and row t holds x[t*stride .. t*stride+kernel).
template <class T>
Tensor<T> unfold_frames(const Tensor<T>& x, std::size_t kernel, std::size_t stride);

// Rows where mask is true are replaced by `row` ([d] or [1, d]); others pass
// through untouched.
template <class T>
Tensor<T> replace_rows(const Tensor<T>& x, const std::vector<bool>& mask, const Tensor<T>& row);

// Inverted dropout; identity when p == 0.
template <class T>
Tensor<T> dropout(const Tensor<T>& x, double p, std::mt19937_64& rng);

}  // namespace jedssl::ad
