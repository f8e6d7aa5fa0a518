// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Span masking of encoder inputs and decoder target preparation.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "jedssl/tensor.hpp"

namespace jedssl::targets {

inline constexpr double kDefaultSelectionProb = 0.08;
inline constexpr std::size_t kDefaultSpanLength = 10;

struct MaskSpec {
    std::vector<bool> masked;         // one flag per frame
    std::vector<std::size_t> starts;  // selected frames, ascending
    double selection_prob = kDefaultSelectionProb;
    std::size_t span_length = kDefaultSpanLength;

    std::size_t frames() const { return masked.size(); }
    std::size_t masked_count() const;
};

// Union of spans [s, min(s + span_length, T)) for every start s.
MaskSpec mask_from_starts(std::size_t frames, std::span<const std::size_t> starts, std::size_t span_length);

// Each frame is selected independently with probability p and starts a span.
MaskSpec sample_mask_spans(std::size_t frames, double p, std::size_t span_length, std::mt19937_64& rng);

template <class T>
struct MaskedBatch {
    ad::Tensor<T> features;  // masked rows replaced by the mask embedding
    MaskSpec mask;
    std::vector<std::int32_t> targets;  // cluster id per frame
};

template <class T>
MaskedBatch<T> apply_mask(const ad::Tensor<T>& features, const MaskSpec& spec, const ad::Tensor<T>& mask_embedding,
                          std::vector<std::int32_t> targets = {});

// Keeps the first element of every run of equal adjacent ids.
std::vector<std::int32_t> collapse_repetitions(std::span<const std::int32_t> ids);
std::vector<std::size_t> run_lengths(std::span<const std::int32_t> ids);

// Sentinels sit after the K cluster ids: SOS = K, EOS = K + 1.
struct DecoderTargetSeq {
    std::vector<std::int32_t> ids;  // SOS, units..., EOS
    std::int32_t sos = 0;
    std::int32_t eos = 0;

    // Teacher forcing: input drops the final EOS, target drops the leading SOS.
    std::vector<std::int32_t> input() const { return {ids.begin(), ids.end() - 1}; }
    std::vector<std::int32_t> target() const { return {ids.begin() + 1, ids.end()}; }
};

DecoderTargetSeq add_sos_eos(std::span<const std::int32_t> seq, std::int32_t num_units);
std::vector<std::int32_t> strip_sos_eos(const DecoderTargetSeq& seq);

// Built from the cluster ids of all frames; the mask plays no part.
DecoderTargetSeq prepare_decoder_targets(std::span<const std::int32_t> frame_ids, std::int32_t num_units);

}  // namespace jedssl::targets
