// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pre-norm transformer encoder, causal decoder with source attention, and the
// classification heads used by pre-training and finetuning.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "jedssl/frontend.hpp"
#include "jedssl/optim.hpp"
#include "jedssl/tensor.hpp"

namespace jedssl::model {

struct EncoderConfig {
    std::size_t n_layers = 4;
    std::size_t n_heads = 4;
    std::size_t d_model = 64;
    std::size_t d_ff = 256;
    double dropout = 0.1;
};

struct DecoderConfig {
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t d_model = 64;
    std::size_t d_ff = 128;
    double dropout = 0.1;
};

struct ModelConfig {
    frontend::FrontendConfig frontend;
    EncoderConfig encoder;
    DecoderConfig decoder;
    std::size_t num_units = 8;  // K; decoder unit vocabulary is K + 2

    std::size_t unit_vocab() const { return num_units + 2; }
};

// Throws std::invalid_argument on any violated invariant.
void validate(const ModelConfig& cfg);

// Human-readable list of fields where two configs disagree on the encoder
// side (frontend, encoder, K). Empty when compatible.
std::vector<std::string> encoder_config_diff(const ModelConfig& expected, const ModelConfig& found);

// Which embedding/head pair the decoder reads and writes through.
struct DecoderHeads {
    std::string embedding = "decoder.unit_embedding";
    std::string head = "decoder.unit_head";
};

struct FinetuneHeads {
    static constexpr const char* kCtcHead = "finetune.ctc_head";
    static constexpr const char* kCharEmbedding = "finetune.char_embedding";
    static constexpr const char* kAttentionHead = "finetune.attention_head";
    static DecoderHeads decoder() { return {kCharEmbedding, kAttentionHead}; }
};

enum class InitMode { kScratch, kEncoderFromCheckpointDecoderRandom };

template <class T>
ad::ParamStore<T> init_params(const ModelConfig& cfg, std::uint64_t seed);

// Frontend and encoder tensors copied from `source`, decoder freshly drawn.
// Throws std::invalid_argument listing diverging fields when configs differ.
template <class T>
ad::ParamStore<T> init_params(const ModelConfig& cfg, std::uint64_t seed, InitMode mode,
                              const ad::ParamStore<T>* source, const ModelConfig* source_cfg);

// Drops every decoder.* tensor and draws new ones from `seed`.
template <class T>
void reinit_decoder(ad::ParamStore<T>& params, const ModelConfig& cfg, std::uint64_t seed);

// Adds randomly initialized CTC and attention heads for `n_chars` characters
// (CTC width n_chars + 1 with blank 0; attention vocabulary n_chars + 2).
template <class T>
void add_finetune_heads(ad::ParamStore<T>& params, const ModelConfig& cfg, std::size_t n_chars, std::uint64_t seed);

std::size_t parameter_count(const ModelConfig& cfg);

struct ForwardOptions {
    bool training = false;  // enables dropout
    std::mt19937_64* rng = nullptr;
    bool keep_attention = false;
};

template <class T>
struct EncoderOutput {
    ad::Tensor<T> states;                  // [T, d_model]
    std::vector<ad::Tensor<T>> hidden;     // hidden[0] = input projection, hidden[i] = after layer i
    std::vector<std::vector<ad::Tensor<T>>> attention;  // [layer][head] -> [T, T]
};

// features: [T, channels], already masked. With zero layers the output is the
// input projection itself.
template <class T>
EncoderOutput<T> encoder_forward(const ad::Tensor<T>& features, const ad::ParamStore<T>& params,
                                 const ModelConfig& cfg, const ForwardOptions& opts = {});

template <class T>
struct DecoderOutput {
    ad::Tensor<T> logits;  // [L, vocab]
    std::vector<std::vector<ad::Tensor<T>>> self_attention;
    std::vector<std::vector<ad::Tensor<T>>> cross_attention;
};

// Causal: position i sees tokens 0..i and every encoder state.
template <class T>
DecoderOutput<T> decoder_forward(std::span<const std::int32_t> tokens, const ad::Tensor<T>& encoder_states,
                                 const ad::ParamStore<T>& params, const ModelConfig& cfg,
                                 const DecoderHeads& heads = {}, const ForwardOptions& opts = {});

// x W + b for the `prefix`.weight / `prefix`.bias pair.
template <class T>
ad::Tensor<T> linear(const ad::Tensor<T>& x, const ad::ParamStore<T>& params, const std::string& prefix);

template <class T>
ad::Tensor<T> sinusoidal_positions(std::size_t length, std::size_t d_model);

}  // namespace jedssl::model
