// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/model.hpp"

#include <cmath>
#include <stdexcept>

#include "jedssl/init.hpp"
#include "jedssl/ops.hpp"

namespace jedssl::model {

namespace {

std::string layer_prefix(const char* stack, std::size_t i) { return std::string(stack) + ".layer" + std::to_string(i); }

template <class T>
void add_linear(ad::ParamStore<T>& p, const std::string& prefix, std::size_t in, std::size_t out, std::uint64_t seed) {
    p.add(prefix + ".weight",
          normal_param<T>({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), seed, prefix + ".weight"));
    p.add(prefix + ".bias", ad::Tensor<T>::zeros({out}, true));
}

template <class T>
void add_norm(ad::ParamStore<T>& p, const std::string& prefix, std::size_t d) {
    p.add(prefix + ".gain", constant_param<T>({d}, T(1)));
    p.add(prefix + ".bias", ad::Tensor<T>::zeros({d}, true));
}

template <class T>
void add_attention(ad::ParamStore<T>& p, const std::string& prefix, std::size_t d, std::uint64_t seed) {
    for (const char* m : {".q", ".k", ".v", ".o"}) add_linear(p, prefix + m, d, d, seed);
}

template <class T>
void add_ffn(ad::ParamStore<T>& p, const std::string& prefix, std::size_t d, std::size_t ff, std::uint64_t seed) {
    add_linear(p, prefix + ".fc1", d, ff, seed);
    add_linear(p, prefix + ".fc2", ff, d, seed);
}

template <class T>
void init_encoder(ad::ParamStore<T>& p, const ModelConfig& cfg, std::uint64_t seed) {
    const auto c = cfg.frontend.channels;
    const auto d = cfg.encoder.d_model;
    p.add("encoder.mask_embedding", normal_param<T>({c}, 1.0, seed, "encoder.mask_embedding"));
    add_norm(p, "encoder.input_norm", c);
    add_linear(p, "encoder.input_proj", c, d, seed);
    for (std::size_t i = 0; i < cfg.encoder.n_layers; ++i) {
        const auto lp = layer_prefix("encoder", i);
        add_norm(p, lp + ".attn_norm", d);
        add_attention(p, lp + ".attn", d, seed);
        add_norm(p, lp + ".ffn_norm", d);
        add_ffn(p, lp + ".ffn", d, cfg.encoder.d_ff, seed);
    }
    add_norm(p, "encoder.final_norm", d);
    add_linear(p, "encoder.unit_head", d, cfg.num_units, seed);
}

template <class T>
void init_decoder(ad::ParamStore<T>& p, const ModelConfig& cfg, std::uint64_t seed) {
    const auto d = cfg.decoder.d_model;
    p.add("decoder.unit_embedding", normal_param<T>({cfg.unit_vocab(), d}, 1.0, seed, "decoder.unit_embedding"));
    for (std::size_t i = 0; i < cfg.decoder.n_layers; ++i) {
        const auto lp = layer_prefix("decoder", i);
        add_norm(p, lp + ".self_attn_norm", d);
        add_attention(p, lp + ".self_attn", d, seed);
        add_norm(p, lp + ".cross_attn_norm", d);
        add_attention(p, lp + ".cross_attn", d, seed);
        add_norm(p, lp + ".ffn_norm", d);
        add_ffn(p, lp + ".ffn", d, cfg.decoder.d_ff, seed);
    }
    add_norm(p, "decoder.final_norm", d);
    add_linear(p, "decoder.unit_head", d, cfg.unit_vocab(), seed);
}

template <class T>
ad::Tensor<T> norm(const ad::Tensor<T>& x, const ad::ParamStore<T>& p, const std::string& prefix) {
    return ad::layer_norm(x, p.get(prefix + ".gain"), p.get(prefix + ".bias"));
}

template <class T>
ad::Tensor<T> maybe_dropout(const ad::Tensor<T>& x, double rate, const ForwardOptions& opts) {
    if (!opts.training || rate <= 0.0) return x;
    if (!opts.rng) throw std::invalid_argument("forward: training-mode dropout needs an rng");
    return ad::dropout(x, rate, *opts.rng);
}

template <class T>
ad::Tensor<T> causal_bias(std::size_t n) {
    std::vector<T> v(n * n, T(0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) v[i * n + j] = T(-1e9);
    }
    return ad::Tensor<T>::from({n, n}, std::move(v));
}

template <class T>
ad::Tensor<T> attention(const ad::ParamStore<T>& p, const std::string& prefix, const ad::Tensor<T>& query_in,
                        const ad::Tensor<T>& memory, std::size_t heads, bool causal,
                        std::vector<ad::Tensor<T>>* weights_out) {
    const std::size_t d = query_in.dim(1);
    const std::size_t dh = d / heads;
    auto q = linear(query_in, p, prefix + ".q");
    auto k = linear(memory, p, prefix + ".k");
    auto v = linear(memory, p, prefix + ".v");
    const T inv_scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    ad::Tensor<T> mask;
    if (causal) mask = causal_bias<T>(query_in.dim(0));
    std::vector<ad::Tensor<T>> contexts;
    for (std::size_t h = 0; h < heads; ++h) {
        auto qh = ad::slice(q, 1, h * dh, (h + 1) * dh);
        auto kh = ad::slice(k, 1, h * dh, (h + 1) * dh);
        auto vh = ad::slice(v, 1, h * dh, (h + 1) * dh);
        auto scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_scale);
        if (causal) scores = ad::add(scores, mask);
        auto w = ad::softmax(scores);
        if (weights_out) weights_out->push_back(w);
        contexts.push_back(ad::matmul(w, vh));
    }
    auto joined = heads == 1 ? contexts[0] : ad::concat<T>(contexts, 1);
    return linear(joined, p, prefix + ".o");
}

template <class T>
ad::Tensor<T> feed_forward(const ad::ParamStore<T>& p, const std::string& prefix, const ad::Tensor<T>& x) {
    return linear(ad::gelu(linear(x, p, prefix + ".fc1")), p, prefix + ".fc2");
}

}  // namespace

void validate(const ModelConfig& cfg) {
    auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
    if (cfg.num_units < 1) fail("num_units (K) must be at least 1");
    if (cfg.frontend.channels == 0 || cfg.frontend.layers.empty()) fail("frontend needs channels and conv layers");
    const auto& e = cfg.encoder;
    const auto& d = cfg.decoder;
    if (e.n_heads == 0 || e.d_model == 0 || e.d_model % e.n_heads != 0) fail("encoder d_model must be divisible by n_heads");
    if (d.n_heads == 0 || d.d_model == 0 || d.d_model % d.n_heads != 0) fail("decoder d_model must be divisible by n_heads");
    if (d.d_model != e.d_model) fail("decoder d_model must match encoder d_model for source attention");
    if (e.d_ff == 0 || d.d_ff == 0) fail("d_ff must be positive");
    if (e.dropout < 0.0 || e.dropout >= 1.0 || d.dropout < 0.0 || d.dropout >= 1.0) fail("dropout must lie in [0, 1)");
}

std::vector<std::string> encoder_config_diff(const ModelConfig& expected, const ModelConfig& found) {
    std::vector<std::string> diff;
    auto check = [&](const char* field, std::size_t a, std::size_t b) {
        if (a != b) diff.push_back(std::string(field) + ": expected " + std::to_string(a) + ", found " + std::to_string(b));
    };
    check("kmeans.K", expected.num_units, found.num_units);
    check("frontend.channels", expected.frontend.channels, found.frontend.channels);
    check("frontend.layers", expected.frontend.layers.size(), found.frontend.layers.size());
    for (std::size_t i = 0; i < std::min(expected.frontend.layers.size(), found.frontend.layers.size()); ++i) {
        const auto tag = "frontend.layers[" + std::to_string(i) + "]";
        check((tag + ".kernel").c_str(), expected.frontend.layers[i].kernel, found.frontend.layers[i].kernel);
        check((tag + ".stride").c_str(), expected.frontend.layers[i].stride, found.frontend.layers[i].stride);
    }
    check("encoder.n_layers", expected.encoder.n_layers, found.encoder.n_layers);
    check("encoder.n_heads", expected.encoder.n_heads, found.encoder.n_heads);
    check("encoder.d_model", expected.encoder.d_model, found.encoder.d_model);
    check("encoder.d_ff", expected.encoder.d_ff, found.encoder.d_ff);
    return diff;
}

template <class T>
ad::ParamStore<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    ad::ParamStore<T> p;
    frontend::init_frontend_params(p, cfg.frontend, seed);
    init_encoder(p, cfg, seed);
    init_decoder(p, cfg, seed);
    return p;
}

template <class T>
ad::ParamStore<T> init_params(const ModelConfig& cfg, std::uint64_t seed, InitMode mode,
                              const ad::ParamStore<T>* source, const ModelConfig* source_cfg) {
    if (mode == InitMode::kScratch) return init_params<T>(cfg, seed);
    if (!source || !source_cfg) {
        throw std::invalid_argument("init_params: encoder_from_checkpoint_decoder_random needs a source checkpoint");
    }
    validate(cfg);
    auto diff = encoder_config_diff(cfg, *source_cfg);
    if (!diff.empty()) {
        std::string msg = "init_params: checkpoint encoder config differs:";
        for (const auto& d : diff) msg += "\n  " + d;
        throw std::invalid_argument(msg);
    }
    ad::ParamStore<T> fresh = init_params<T>(cfg, seed);
    ad::ParamStore<T> p;
    for (const auto& name : fresh.names()) {
        if (name.starts_with("decoder.")) {
            p.add(name, fresh.get(name));
        } else {
            if (!source->contains(name)) throw std::invalid_argument("init_params: checkpoint lacks tensor '" + name + "'");
            const auto& src = source->get(name);
            p.add(name, ad::Tensor<T>::from(src.shape(), std::vector<T>(src.data().begin(), src.data().end()), true));
        }
    }
    return p;
}

template <class T>
void reinit_decoder(ad::ParamStore<T>& params, const ModelConfig& cfg, std::uint64_t seed) {
    params.erase_prefix("decoder.");
    init_decoder(params, cfg, seed);
}

template <class T>
void add_finetune_heads(ad::ParamStore<T>& params, const ModelConfig& cfg, std::size_t n_chars, std::uint64_t seed) {
    if (n_chars == 0) throw std::invalid_argument("add_finetune_heads: empty character set");
    params.erase_prefix("finetune.");
    const auto d = cfg.encoder.d_model;
    add_linear(params, FinetuneHeads::kCtcHead, d, n_chars + 1, seed);
    params.add(FinetuneHeads::kCharEmbedding,
               normal_param<T>({n_chars + 2, d}, 1.0, seed, FinetuneHeads::kCharEmbedding));
    add_linear(params, FinetuneHeads::kAttentionHead, d, n_chars + 2, seed);
}

std::size_t parameter_count(const ModelConfig& cfg) {
    ad::ParamStore<float> p;
    {
        ad::NoGradGuard guard;
        p = init_params<float>(cfg, 0);
    }
    return p.parameter_count();
}

template <class T>
ad::Tensor<T> linear(const ad::Tensor<T>& x, const ad::ParamStore<T>& params, const std::string& prefix) {
    return ad::add_row(ad::matmul(x, params.get(prefix + ".weight")), params.get(prefix + ".bias"));
}

template <class T>
ad::Tensor<T> sinusoidal_positions(std::size_t length, std::size_t d_model) {
    std::vector<T> v(length * d_model);
    for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t i = 0; i < d_model; i += 2) {
            const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d_model));
            v[t * d_model + i] = static_cast<T>(std::sin(static_cast<double>(t) * freq));
            if (i + 1 < d_model) v[t * d_model + i + 1] = static_cast<T>(std::cos(static_cast<double>(t) * freq));
        }
    }
    return ad::Tensor<T>::from({length, d_model}, std::move(v));
}

template <class T>
EncoderOutput<T> encoder_forward(const ad::Tensor<T>& features, const ad::ParamStore<T>& params,
                                 const ModelConfig& cfg, const ForwardOptions& opts) {
    if (features.rank() != 2 || features.dim(1) != cfg.frontend.channels) {
        throw ad::ShapeError("encoder_forward: expected [T, " + std::to_string(cfg.frontend.channels) +
                             "] features, got " + ad::to_string(features.shape()));
    }
    const auto& e = cfg.encoder;
    EncoderOutput<T> out;
    auto x = linear(norm(features, params, "encoder.input_norm"), params, "encoder.input_proj");
    x = ad::add(x, sinusoidal_positions<T>(features.dim(0), e.d_model));
    x = maybe_dropout(x, e.dropout, opts);
    out.hidden.push_back(x);
    for (std::size_t i = 0; i < e.n_layers; ++i) {
        const auto lp = layer_prefix("encoder", i);
        std::vector<ad::Tensor<T>> weights;
        auto h = norm(x, params, lp + ".attn_norm");
        auto a = attention(params, lp + ".attn", h, h, e.n_heads, false, opts.keep_attention ? &weights : nullptr);
        x = ad::add(x, maybe_dropout(a, e.dropout, opts));
        auto f = feed_forward(params, lp + ".ffn", norm(x, params, lp + ".ffn_norm"));
        x = ad::add(x, maybe_dropout(f, e.dropout, opts));
        out.hidden.push_back(x);
        if (opts.keep_attention) out.attention.push_back(std::move(weights));
    }
    out.states = e.n_layers == 0 ? x : norm(x, params, "encoder.final_norm");
    return out;
}

template <class T>
DecoderOutput<T> decoder_forward(std::span<const std::int32_t> tokens, const ad::Tensor<T>& encoder_states,
                                 const ad::ParamStore<T>& params, const ModelConfig& cfg, const DecoderHeads& heads,
                                 const ForwardOptions& opts) {
    const auto& d = cfg.decoder;
    if (tokens.empty()) throw std::invalid_argument("decoder_forward: empty token prefix");
    if (encoder_states.rank() != 2 || encoder_states.dim(1) != d.d_model) {
        throw ad::ShapeError("decoder_forward: encoder states " + ad::to_string(encoder_states.shape()) +
                             " do not have width " + std::to_string(d.d_model));
    }
    DecoderOutput<T> out;
    auto x = ad::embedding(params.get(heads.embedding), tokens);
    x = ad::add(x, sinusoidal_positions<T>(tokens.size(), d.d_model));
    x = maybe_dropout(x, d.dropout, opts);
    for (std::size_t i = 0; i < d.n_layers; ++i) {
        const auto lp = layer_prefix("decoder", i);
        std::vector<ad::Tensor<T>> self_w, cross_w;
        auto h = norm(x, params, lp + ".self_attn_norm");
        auto a = attention(params, lp + ".self_attn", h, h, d.n_heads, true, opts.keep_attention ? &self_w : nullptr);
        x = ad::add(x, maybe_dropout(a, d.dropout, opts));
        auto hc = norm(x, params, lp + ".cross_attn_norm");
        auto c = attention(params, lp + ".cross_attn", hc, encoder_states, d.n_heads, false,
                           opts.keep_attention ? &cross_w : nullptr);
        x = ad::add(x, maybe_dropout(c, d.dropout, opts));
        auto f = feed_forward(params, lp + ".ffn", norm(x, params, lp + ".ffn_norm"));
        x = ad::add(x, maybe_dropout(f, d.dropout, opts));
        if (opts.keep_attention) {
            out.self_attention.push_back(std::move(self_w));
            out.cross_attention.push_back(std::move(cross_w));
        }
    }
    out.logits = linear(norm(x, params, "decoder.final_norm"), params, heads.head);
    return out;
}

#define JEDSSL_INSTANTIATE_MODEL(T)                                                                                   \
    template ad::ParamStore<T> init_params<T>(const ModelConfig&, std::uint64_t);                                     \
    template ad::ParamStore<T> init_params<T>(const ModelConfig&, std::uint64_t, InitMode, const ad::ParamStore<T>*, \
                                              const ModelConfig*);                                                    \
    template void reinit_decoder<T>(ad::ParamStore<T>&, const ModelConfig&, std::uint64_t);                           \
    template void add_finetune_heads<T>(ad::ParamStore<T>&, const ModelConfig&, std::size_t, std::uint64_t);          \
    template ad::Tensor<T> linear<T>(const ad::Tensor<T>&, const ad::ParamStore<T>&, const std::string&);             \
    template ad::Tensor<T> sinusoidal_positions<T>(std::size_t, std::size_t);                                         \
    template EncoderOutput<T> encoder_forward<T>(const ad::Tensor<T>&, const ad::ParamStore<T>&, const ModelConfig&,  \
                                                 const ForwardOptions&);                                              \
    template DecoderOutput<T> decoder_forward<T>(std::span<const std::int32_t>, const ad::Tensor<T>&,                 \
                                                 const ad::ParamStore<T>&, const ModelConfig&, const DecoderHeads&,   \
                                                 const ForwardOptions&);

JEDSSL_INSTANTIATE_MODEL(float)
JEDSSL_INSTANTIATE_MODEL(double)

#undef JEDSSL_INSTANTIATE_MODEL

}  // namespace jedssl::model
