// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <random>
#include <string_view>

#include "jedssl/rng.hpp"
#include "jedssl/tensor.hpp"

namespace jedssl {

// Trainable tensor with N(0, stddev^2) entries; the stream is keyed by name.
template <class T>
ad::Tensor<T> normal_param(ad::Shape shape, double stddev, std::uint64_t seed, std::string_view name) {
    auto rng = make_rng(derive_seed(seed, name));
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<T> data(ad::numel(shape));
    for (auto& v : data) v = static_cast<T>(dist(rng));
    return ad::Tensor<T>::from(std::move(shape), std::move(data), true);
}

template <class T>
ad::Tensor<T> constant_param(ad::Shape shape, T value) {
    return ad::Tensor<T>::full(std::move(shape), value, true);
}

}  // namespace jedssl
