// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "jedssl/init.hpp"
#include "jedssl/ops.hpp"

namespace jedssl::frontend {

namespace {
std::string layer_name(std::size_t i, const char* what) {
    return "frontend.conv" + std::to_string(i) + "." + what;
}
}  // namespace

std::size_t receptive_field(const FrontendConfig& cfg) {
    // Walk back from one output frame to the samples it covers.
    std::size_t span = 1;
    for (auto it = cfg.layers.rbegin(); it != cfg.layers.rend(); ++it) span = (span - 1) * it->stride + it->kernel;
    return span;
}

std::size_t total_stride(const FrontendConfig& cfg) {
    std::size_t s = 1;
    for (const auto& l : cfg.layers) s *= l.stride;
    return s;
}

double frame_rate(const FrontendConfig& cfg, std::uint32_t sample_rate) {
    return static_cast<double>(sample_rate) / static_cast<double>(total_stride(cfg));
}

std::size_t frame_count(const FrontendConfig& cfg, std::size_t samples) {
    if (cfg.layers.empty()) throw std::invalid_argument("frontend: at least one conv layer is required");
    std::size_t len = samples;
    for (const auto& l : cfg.layers) {
        if (l.kernel == 0 || l.stride == 0) throw std::invalid_argument("frontend: kernel and stride must be positive");
        if (len < l.kernel) {
            throw std::invalid_argument("frontend: waveform of " + std::to_string(samples) +
                                        " samples is shorter than the receptive field; need at least " +
                                        std::to_string(receptive_field(cfg)) + " samples");
        }
        len = (len - l.kernel) / l.stride + 1;
    }
    return len;
}

namespace {

// Filterbank starting point. Channels come in pairs (2j, 2j + 1) for band j.
// Layer 0 holds +g_j and -g_j, a Hann-windowed cosine at the band centre.
// Layer 1 adds each pair, GELU(a) + GELU(-a) ~ |a|, and averages over its
// kernel, giving a band magnitude in 2j and its negation in 2j + 1. Later
// layers average GELU(e) - GELU(-e) = e, so the magnitude passes through.
template <class T>
void add_filterbank(std::vector<T>& w, std::size_t layer, std::size_t kernel, std::size_t channels) {
    const std::size_t bands = channels / 2;
    if (layer == 0) {
        for (std::size_t j = 0; j < bands; ++j) {
            const double freq = (static_cast<double>(j) + 0.5) / static_cast<double>(bands) * 0.5;
            std::vector<double> g(kernel);
            double norm = 0.0;
            for (std::size_t n = 0; n < kernel; ++n) {
                const double hann = kernel > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (n + 0.5) / kernel) : 1.0;
                g[n] = hann * std::cos(2.0 * std::numbers::pi * freq * static_cast<double>(n));
                norm += g[n] * g[n];
            }
            norm = norm > 0.0 ? std::sqrt(norm) : 1.0;
            for (std::size_t n = 0; n < kernel; ++n) {
                w[n * channels + 2 * j] += static_cast<T>(g[n] / norm);
                w[n * channels + 2 * j + 1] -= static_cast<T>(g[n] / norm);
            }
        }
        return;
    }
    const double pair_sign = layer == 1 ? 1.0 : -1.0;
    const double share = 1.0 / static_cast<double>(kernel);
    for (std::size_t pos = 0; pos < kernel; ++pos) {
        for (std::size_t j = 0; j < bands; ++j) {
            const std::size_t row_pos = (pos * channels + 2 * j) * channels;
            const std::size_t row_neg = (pos * channels + 2 * j + 1) * channels;
            w[row_pos + 2 * j] += static_cast<T>(share);
            w[row_neg + 2 * j] += static_cast<T>(pair_sign * share);
            w[row_pos + 2 * j + 1] -= static_cast<T>(share);
            w[row_neg + 2 * j + 1] -= static_cast<T>(pair_sign * share);
        }
    }
}

}  // namespace

template <class T>
void init_frontend_params(ad::ParamStore<T>& params, const FrontendConfig& cfg, std::uint64_t seed) {
    std::size_t c_in = 1;
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const std::size_t fan_in = cfg.layers[i].kernel * c_in;
        auto w = normal_param<T>({fan_in, cfg.channels}, kFilterbankJitter / std::sqrt(static_cast<double>(fan_in)), seed,
                                 layer_name(i, "weight"));
        std::vector<T> values(w.data().begin(), w.data().end());
        add_filterbank(values, i, cfg.layers[i].kernel, cfg.channels);
        std::copy(values.begin(), values.end(), w.mutable_data().begin());
        params.add(layer_name(i, "weight"), w);
        params.add(layer_name(i, "bias"), ad::Tensor<T>::zeros({cfg.channels}, true));
        c_in = cfg.channels;
    }
}

template <class T>
FeatureFrames<T> conv_feature_extractor(const Waveform& wave, const ad::ParamStore<T>& params,
                                        const FrontendConfig& cfg) {
    frame_count(cfg, wave.samples.size());  // validates length
    const std::size_t n = wave.samples.size();
    auto x = ad::Tensor<T>::from({n, 1}, std::vector<T>(wave.samples.begin(), wave.samples.end()));
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        auto windows = ad::unfold_frames(x, cfg.layers[i].kernel, cfg.layers[i].stride);
        auto y = ad::add_row(ad::matmul(windows, params.get(layer_name(i, "weight"))), params.get(layer_name(i, "bias")));
        x = ad::gelu(y);
    }
    return {x, frame_rate(cfg, wave.sample_rate)};
}

template void init_frontend_params<float>(ad::ParamStore<float>&, const FrontendConfig&, std::uint64_t);
template void init_frontend_params<double>(ad::ParamStore<double>&, const FrontendConfig&, std::uint64_t);
template FeatureFrames<float> conv_feature_extractor<float>(const Waveform&, const ad::ParamStore<float>&,
                                                            const FrontendConfig&);
template FeatureFrames<double> conv_feature_extractor<double>(const Waveform&, const ad::ParamStore<double>&,
                                                              const FrontendConfig&);

}  // namespace jedssl::frontend
