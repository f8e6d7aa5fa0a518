// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/targets.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "jedssl/ops.hpp"

namespace jedssl::targets {

std::size_t MaskSpec::masked_count() const { return static_cast<std::size_t>(std::count(masked.begin(), masked.end(), true)); }

MaskSpec mask_from_starts(std::size_t frames, std::span<const std::size_t> starts, std::size_t span_length) {
    if (span_length == 0) throw std::invalid_argument("mask: span_length must be positive");
    MaskSpec spec;
    spec.span_length = span_length;
    spec.masked.assign(frames, false);
    spec.starts.assign(starts.begin(), starts.end());
    std::sort(spec.starts.begin(), spec.starts.end());
    for (auto s : spec.starts) {
        if (s >= frames) throw std::out_of_range("mask: start " + std::to_string(s) + " beyond " + std::to_string(frames));
        const std::size_t end = std::min(s + span_length, frames);
        for (std::size_t t = s; t < end; ++t) spec.masked[t] = true;
    }
    return spec;
}

MaskSpec sample_mask_spans(std::size_t frames, double p, std::size_t span_length, std::mt19937_64& rng) {
    if (frames == 0) throw std::invalid_argument("sample_mask_spans: need at least one frame");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("sample_mask_spans: p must lie in (0, 1)");
    std::bernoulli_distribution select(p);
    std::vector<std::size_t> starts;
    for (std::size_t t = 0; t < frames; ++t) {
        if (select(rng)) starts.push_back(t);
    }
    auto spec = mask_from_starts(frames, starts, span_length);
    spec.selection_prob = p;
    return spec;
}

template <class T>
MaskedBatch<T> apply_mask(const ad::Tensor<T>& features, const MaskSpec& spec, const ad::Tensor<T>& mask_embedding,
                          std::vector<std::int32_t> targets) {
    if (features.rank() != 2 || mask_embedding.numel() != features.dim(1)) {
        throw ad::ShapeError("apply_mask: mask embedding " + ad::to_string(mask_embedding.shape()) +
                             " does not match feature dimension of " + ad::to_string(features.shape()));
    }
    if (spec.frames() != features.dim(0)) {
        throw ad::ShapeError("apply_mask: mask covers " + std::to_string(spec.frames()) + " frames, features have " +
                             std::to_string(features.dim(0)));
    }
    return {ad::replace_rows(features, spec.masked, mask_embedding), spec, std::move(targets)};
}

std::vector<std::int32_t> collapse_repetitions(std::span<const std::int32_t> ids) {
    if (ids.empty()) throw std::invalid_argument("collapse_repetitions: empty id sequence");
    std::vector<std::int32_t> out;
    out.push_back(ids[0]);
    for (std::size_t i = 1; i < ids.size(); ++i) {
        if (ids[i] != ids[i - 1]) out.push_back(ids[i]);
    }
    return out;
}

std::vector<std::size_t> run_lengths(std::span<const std::int32_t> ids) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i == 0 || ids[i] != ids[i - 1]) {
            out.push_back(1);
        } else {
            out.back() += 1;
        }
    }
    return out;
}

DecoderTargetSeq add_sos_eos(std::span<const std::int32_t> seq, std::int32_t num_units) {
    DecoderTargetSeq out;
    out.sos = num_units;
    out.eos = num_units + 1;
    out.ids.reserve(seq.size() + 2);
    out.ids.push_back(out.sos);
    for (auto id : seq) {
        if (id < 0 || id >= num_units) {
            throw std::out_of_range("add_sos_eos: id " + std::to_string(id) + " is not one of " +
                                    std::to_string(num_units) + " units");
        }
        out.ids.push_back(id);
    }
    out.ids.push_back(out.eos);
    return out;
}

std::vector<std::int32_t> strip_sos_eos(const DecoderTargetSeq& seq) {
    if (seq.ids.size() < 2 || seq.ids.front() != seq.sos || seq.ids.back() != seq.eos) {
        throw std::invalid_argument("strip_sos_eos: sequence is not framed by SOS/EOS");
    }
    return {seq.ids.begin() + 1, seq.ids.end() - 1};
}

DecoderTargetSeq prepare_decoder_targets(std::span<const std::int32_t> frame_ids, std::int32_t num_units) {
    return add_sos_eos(collapse_repetitions(frame_ids), num_units);
}

template MaskedBatch<float> apply_mask<float>(const ad::Tensor<float>&, const MaskSpec&, const ad::Tensor<float>&,
                                              std::vector<std::int32_t>);
template MaskedBatch<double> apply_mask<double>(const ad::Tensor<double>&, const MaskSpec&, const ad::Tensor<double>&,
                                                std::vector<std::int32_t>);

}  // namespace jedssl::targets
