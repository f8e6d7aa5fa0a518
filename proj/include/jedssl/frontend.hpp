// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Strided convolutional feature extractor: raw samples -> frame features.

#pragma once

#include <cstdint>
#include <vector>

#include "jedssl/optim.hpp"
#include "jedssl/tensor.hpp"

namespace jedssl::frontend {

struct ConvLayerSpec {
    std::size_t kernel = 10;
    std::size_t stride = 5;
};

struct FrontendConfig {
    std::vector<ConvLayerSpec> layers{{10, 10}, {4, 4}, {8, 8}};
    std::size_t channels = 64;
};

struct Waveform {
    std::vector<float> samples;
    std::uint32_t sample_rate = 16000;
};

template <class T>
struct FeatureFrames {
    ad::Tensor<T> frames;  // [T, channels]
    double frame_rate = 0.0;
};

std::size_t receptive_field(const FrontendConfig& cfg);
std::size_t total_stride(const FrontendConfig& cfg);
double frame_rate(const FrontendConfig& cfg, std::uint32_t sample_rate);

// Output frames for a waveform of `samples` samples. Throws std::invalid_argument
// naming the required minimum length when the input is too short.
std::size_t frame_count(const FrontendConfig& cfg, std::size_t samples);

// Registers frontend.conv{i}.weight [kernel * c_in, channels] and
// frontend.conv{i}.bias [channels]. Weights start as a band-magnitude
// filterbank (channel pairs per band) plus Gaussian jitter of relative scale
// kFilterbankJitter, seeded per tensor name.
inline constexpr double kFilterbankJitter = 0.05;
template <class T>
void init_frontend_params(ad::ParamStore<T>& params, const FrontendConfig& cfg, std::uint64_t seed);

// conv -> GELU per layer. Gradients flow into the conv parameters only when
// they require grad; a frozen extractor contributes nothing to the tape.
template <class T>
FeatureFrames<T> conv_feature_extractor(const Waveform& wave, const ad::ParamStore<T>& params,
                                        const FrontendConfig& cfg);

}  // namespace jedssl::frontend
