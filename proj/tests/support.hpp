// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Helpers shared by the unit tests and the acceptance runner: random
// tensors, a central-difference gradient checker, and small brute-force
// oracles.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "jedssl/tensor.hpp"

namespace jedssl::testing {

inline ad::Tensor<double> random_tensor(ad::Shape shape, std::mt19937_64& rng, double scale = 1.0,
                                        bool requires_grad = true) {
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<double> v(ad::numel(shape));
    for (auto& x : v) x = dist(rng);
    return ad::Tensor<double>::from(std::move(shape), std::move(v), requires_grad);
}

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t coordinates = 0;
    std::string worst;  // "input i[j]: analytic vs numeric"
};

// Compares reverse-mode gradients of the scalar `loss(inputs)` with central
// differences of step h. Checks at most `max_coords` coordinates per input,
// chosen at random when the input is larger.
inline GradCheck gradcheck(const std::function<ad::Tensor<double>(const std::vector<ad::Tensor<double>>&)>& loss,
                           std::vector<ad::Tensor<double>> inputs, std::mt19937_64& rng, double h = 1e-5,
                           std::size_t max_coords = 64) {
    for (auto& t : inputs) t.zero_grad();
    auto out = loss(inputs);
    out.backward();
    GradCheck result;
    ad::NoGradGuard no_grad;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto& t = inputs[i];
        if (!t.requires_grad()) continue;
        std::vector<double> analytic(t.numel(), 0.0);
        if (t.has_grad()) analytic.assign(t.grad().begin(), t.grad().end());
        std::vector<std::size_t> coords(t.numel());
        for (std::size_t j = 0; j < coords.size(); ++j) coords[j] = j;
        if (coords.size() > max_coords) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(max_coords);
        }
        auto data = t.mutable_data();
        for (auto j : coords) {
            const double saved = data[j];
            data[j] = saved + h;
            const double up = loss(inputs).item();
            data[j] = saved - h;
            const double down = loss(inputs).item();
            data[j] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double err = relative_error(analytic[j], numeric);
            ++result.coordinates;
            if (err > result.max_rel_error || result.worst.empty()) {
                result.max_rel_error = std::max(result.max_rel_error, err);
                result.worst = "input " + std::to_string(i) + "[" + std::to_string(j) + "]: analytic " +
                               std::to_string(analytic[j]) + " numeric " + std::to_string(numeric);
            }
        }
    }
    return result;
}

// Fixed random weights turn any tensor into a scalar with a generic gradient.
inline ad::Tensor<double> probe_weights(const ad::Shape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random_tensor(shape, rng, 1.0, false);
}

// -log P(label) by summing the probability of every frame path that collapses
// to `label` (merge repeats, drop blank 0). log_probs is [frames, classes].
inline double ctc_brute_force(const std::vector<double>& log_probs, std::size_t frames, std::size_t classes,
                              const std::vector<std::int32_t>& label) {
    std::vector<std::size_t> path(frames, 0);
    double total = 0.0;
    while (true) {
        std::vector<std::int32_t> collapsed;
        std::int32_t prev = -1;
        double lp = 0.0;
        for (std::size_t t = 0; t < frames; ++t) {
            const auto c = static_cast<std::int32_t>(path[t]);
            lp += log_probs[t * classes + path[t]];
            if (c != prev && c != 0) collapsed.push_back(c);
            prev = c;
        }
        if (collapsed == label) total += std::exp(lp);
        std::size_t pos = 0;
        while (pos < frames && ++path[pos] == classes) path[pos++] = 0;
        if (pos == frames) break;
    }
    return -std::log(total);
}

// Naive recursive Levenshtein distance.
inline std::size_t edit_distance_recursive(const std::string& a, const std::string& b) {
    if (a.empty()) return b.size();
    if (b.empty()) return a.size();
    const std::string ra = a.substr(1), rb = b.substr(1);
    if (a[0] == b[0]) return edit_distance_recursive(ra, rb);
    return 1 + std::min({edit_distance_recursive(ra, b), edit_distance_recursive(a, rb), edit_distance_recursive(ra, rb)});
}

}  // namespace jedssl::testing
