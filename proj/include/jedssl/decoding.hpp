// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Greedy CTC decoding, beam search over the attention decoder, and character
// error rate.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "jedssl/corpus.hpp"
#include "jedssl/model.hpp"

namespace jedssl::decoding {

// Per-frame argmax, merge repeats, drop blanks. logits is row-major [frames, classes].
std::vector<std::int32_t> ctc_greedy_decode(std::span<const double> logits, std::size_t classes,
                                            std::int32_t blank = 0);

template <class T>
std::vector<std::int32_t> ctc_greedy_decode(const ad::Tensor<T>& logits, std::int32_t blank = 0);

struct Hypothesis {
    std::vector<std::int32_t> tokens;  // no SOS, no EOS
    double score = 0.0;                // sum of log-probabilities, EOS included when terminated
    bool terminated = true;
};

// Next-token log-probabilities given a prefix that starts with SOS.
using PrefixScorer = std::function<std::vector<double>(const std::vector<std::int32_t>& prefix)>;

struct BeamSpec {
    std::size_t beam_size = 4;
    std::size_t max_len = 64;  // tokens before EOS
    std::int32_t sos = 0;
    std::int32_t eos = 1;
};

// Hypotheses close on EOS and SOS is never emitted. Among equal scores the
// shorter (earlier EOS) wins, then the lexicographically smaller sequence.
// The greedy path is always kept as a candidate, so a wider beam never
// returns a lower score than beam 1. Without any EOS within max_len, the best
// capped hypothesis is returned with terminated = false.
Hypothesis beam_search(const PrefixScorer& scorer, std::size_t vocab, const BeamSpec& spec);

// Orders hypotheses by the rule above; true when a ranks before b.
bool better(const Hypothesis& a, const Hypothesis& b);

template <class T>
Hypothesis attention_decode(const ad::ParamStore<T>& params, const model::ModelConfig& cfg,
                            const model::DecoderHeads& heads, const ad::Tensor<T>& encoder_states,
                            std::size_t vocab, const BeamSpec& spec);

std::size_t edit_distance(std::string_view ref, std::string_view hyp);
std::size_t edit_distance(std::span<const std::int32_t> ref, std::span<const std::int32_t> hyp);

// Total distance over total reference length.
double cer(std::span<const std::string> refs, std::span<const std::string> hyps);

enum class DecoderKind { kCtc, kAttention };

std::string to_string(DecoderKind kind);
DecoderKind parse_decoder_kind(const std::string& name);

struct UtteranceResult {
    std::string id;
    std::string ref;
    std::string hyp;
    std::size_t distance = 0;
    bool terminated = true;
};

struct EvalReport {
    std::string model_tag;
    std::string split;
    DecoderKind decoder = DecoderKind::kCtc;
    double cer = 0.0;
    std::size_t total_distance = 0;
    std::size_t total_ref_chars = 0;
    std::vector<UtteranceResult> utterances;
};

nlohmann::json to_json(const EvalReport& report);

struct EvalOptions {
    DecoderKind decoder = DecoderKind::kCtc;
    std::size_t beam_size = 4;
    std::size_t max_len = 64;
    std::string model_tag;
    std::string split;
};

// Decodes every utterance with a finetuned parameter set (frontend, encoder,
// finetune heads). Utterances are decoded in parallel.
template <class T>
EvalReport evaluate(const ad::ParamStore<T>& params, const model::ModelConfig& cfg, std::size_t n_chars,
                    const std::vector<const corpus::Utterance*>& utts, const EvalOptions& opts);

}  // namespace jedssl::decoding
