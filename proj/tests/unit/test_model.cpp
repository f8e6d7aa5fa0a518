// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "jedssl/model.hpp"
#include "jedssl/ops.hpp"
#include "support.hpp"

namespace jedssl::model {
namespace {

using D = ad::Tensor<double>;

ModelConfig tiny() {
    ModelConfig cfg;
    cfg.frontend.layers = {{4, 2}, {3, 2}};
    cfg.frontend.channels = 6;
    cfg.encoder = {2, 2, 8, 16, 0.0};
    cfg.decoder = {2, 2, 8, 12, 0.0};
    cfg.num_units = 5;
    return cfg;
}

D features(std::size_t frames, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return testing::random_tensor({frames, 6}, rng, 1.0, false);
}

TEST(Model, EncoderShapes) {
    const auto cfg = tiny();
    const auto p = init_params<double>(cfg, 1);
    ForwardOptions opts;
    opts.keep_attention = true;
    const auto out = encoder_forward(features(9, 2), p, cfg, opts);
    EXPECT_EQ(out.states.shape(), (ad::Shape{9, 8}));
    ASSERT_EQ(out.hidden.size(), 3u);
    ASSERT_EQ(out.attention.size(), 2u);
    ASSERT_EQ(out.attention[0].size(), 2u);
    EXPECT_EQ(linear(out.states, p, "encoder.unit_head").shape(), (ad::Shape{9, 5}));
    EXPECT_THROW(encoder_forward(D::zeros({9, 5}), p, cfg), ad::ShapeError);
}

TEST(Model, AttentionRowsSumToOne) {
    const auto cfg = tiny();
    const auto p = init_params<double>(cfg, 1);
    ForwardOptions opts;
    opts.keep_attention = true;
    const auto enc = encoder_forward(features(7, 3), p, cfg, opts);
    const std::vector<std::int32_t> tokens{5, 1, 2};
    const auto dec = decoder_forward<double>(tokens, enc.states, p, cfg, {}, opts);
    auto check_rows = [](const D& a) {
        for (std::size_t r = 0; r < a.dim(0); ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < a.dim(1); ++c) s += a.at(r, c);
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
    };
    for (const auto& layer : enc.attention) for (const auto& h : layer) check_rows(h);
    for (const auto& layer : dec.self_attention) {
        for (const auto& h : layer) {
            check_rows(h);
            for (std::size_t r = 0; r < h.dim(0); ++r) {
                for (std::size_t c = r + 1; c < h.dim(1); ++c) EXPECT_EQ(h.at(r, c), 0.0);
            }
        }
    }
    for (const auto& layer : dec.cross_attention) for (const auto& h : layer) check_rows(h);
}

TEST(Model, ZeroLayerEncoderIsInputProjection) {
    auto cfg = tiny();
    cfg.encoder.n_layers = 0;
    const auto p = init_params<double>(cfg, 1);
    const auto f = features(5, 4);
    const auto out = encoder_forward(f, p, cfg);
    const auto ln = ad::layer_norm(f, p.get("encoder.input_norm.gain"), p.get("encoder.input_norm.bias"));
    const auto ref = ad::add(linear(ln, p, "encoder.input_proj"), sinusoidal_positions<double>(5, 8));
    for (std::size_t i = 0; i < ref.numel(); ++i) EXPECT_EQ(out.states.at(i), ref.at(i));
}

TEST(Model, DecoderIsCausal) {
    const auto cfg = tiny();
    const auto p = init_params<double>(cfg, 2);
    const auto enc = encoder_forward(features(6, 5), p, cfg).states;
    const std::vector<std::int32_t> a{5, 0, 1, 2}, b{5, 0, 4, 3};
    const auto la = decoder_forward<double>(a, enc, p, cfg).logits;
    const auto lb = decoder_forward<double>(b, enc, p, cfg).logits;
    EXPECT_EQ(la.shape(), (ad::Shape{4, cfg.unit_vocab()}));
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < la.dim(1); ++c) EXPECT_EQ(la.at(r, c), lb.at(r, c));
    }
    bool changed = false;
    for (std::size_t c = 0; c < la.dim(1); ++c) changed |= la.at(2, c) != lb.at(2, c);
    EXPECT_TRUE(changed);
}

TEST(Model, DecoderReadsEncoderStates) {
    const auto cfg = tiny();
    const auto p = init_params<double>(cfg, 2);
    const auto e1 = encoder_forward(features(6, 5), p, cfg).states;
    const auto e2 = encoder_forward(features(6, 6), p, cfg).states;
    const std::vector<std::int32_t> t{5, 0};
    const auto l1 = decoder_forward<double>(t, e1, p, cfg).logits;
    const auto l2 = decoder_forward<double>(t, e2, p, cfg).logits;
    bool changed = false;
    for (std::size_t i = 0; i < l1.numel(); ++i) changed |= l1.at(i) != l2.at(i);
    EXPECT_TRUE(changed);
}

TEST(Model, TokenOutOfVocabulary) {
    const auto cfg = tiny();
    const auto p = init_params<double>(cfg, 2);
    const auto enc = encoder_forward(features(6, 5), p, cfg).states;
    const std::vector<std::int32_t> bad{5, 7};
    EXPECT_THROW(decoder_forward<double>(bad, enc, p, cfg), std::out_of_range);
}

bool same_store(const ad::ParamStore<double>& a, const ad::ParamStore<double>& b, const std::string& prefix) {
    for (const auto& n : a.names()) {
        if (!n.starts_with(prefix)) continue;
        const auto x = a.get(n).data(), y = b.get(n).data();
        if (x.size() != y.size() || !std::equal(x.begin(), x.end(), y.begin())) return false;
    }
    return true;
}

TEST(Model, InitDeterminism) {
    const auto cfg = tiny();
    const auto a = init_params<double>(cfg, 7), b = init_params<double>(cfg, 7), c = init_params<double>(cfg, 8);
    EXPECT_EQ(a.names(), b.names());
    EXPECT_TRUE(same_store(a, b, ""));
    EXPECT_FALSE(same_store(a, c, ""));
}

TEST(Model, MixedInitCopiesEncoderOnly) {
    const auto cfg = tiny();
    const auto src = init_params<double>(cfg, 7);
    const auto mixed = init_params<double>(cfg, 8, InitMode::kEncoderFromCheckpointDecoderRandom, &src, &cfg);
    EXPECT_TRUE(same_store(src, mixed, "encoder."));
    EXPECT_TRUE(same_store(src, mixed, "frontend."));
    EXPECT_FALSE(same_store(src, mixed, "decoder."));
    EXPECT_TRUE(same_store(init_params<double>(cfg, 8), mixed, "decoder."));
}

TEST(Model, MixedInitRejectsDivergentConfig) {
    const auto cfg = tiny();
    auto other = cfg;
    other.encoder.d_ff = 32;
    other.num_units = 6;
    const auto src = init_params<double>(other, 7);
    try {
        init_params<double>(cfg, 8, InitMode::kEncoderFromCheckpointDecoderRandom, &src, &other);
        FAIL();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("encoder.d_ff"), std::string::npos);
        EXPECT_NE(msg.find("kmeans.K"), std::string::npos);
    }
}

TEST(Model, ParameterCountClosedForm) {
    const auto cfg = tiny();
    const std::size_t c = 6, d = 8, k = 5, v = k + 2;
    auto lin = [](std::size_t i, std::size_t o) { return i * o + o; };
    const std::size_t norm = 2 * d, attn = 4 * lin(d, d);
    const std::size_t frontend = lin(4 * 1, c) + lin(3 * c, c);
    const std::size_t encoder = c + 2 * c + lin(c, d) + 2 * (norm + attn + norm + lin(d, 16) + lin(16, d)) + norm +
                                lin(d, k);
    const std::size_t decoder =
        v * d + 2 * (norm + attn + norm + attn + norm + lin(d, 12) + lin(12, d)) + norm + lin(d, v);
    EXPECT_EQ(parameter_count(cfg), frontend + encoder + decoder);
}

TEST(Model, FinetuneHeadWidths) {
    const auto cfg = tiny();
    auto p = init_params<double>(cfg, 1);
    add_finetune_heads(p, cfg, 4, 2);
    EXPECT_EQ(p.get("finetune.ctc_head.weight").shape(), (ad::Shape{8, 5}));
    EXPECT_EQ(p.get("finetune.char_embedding").shape(), (ad::Shape{6, 8}));
    EXPECT_EQ(p.get("finetune.attention_head.weight").shape(), (ad::Shape{8, 6}));
}

TEST(Model, InvalidConfig) {
    auto cfg = tiny();
    cfg.encoder.n_heads = 3;
    EXPECT_THROW(validate(cfg), std::invalid_argument);
}

}  // namespace
}  // namespace jedssl::model
