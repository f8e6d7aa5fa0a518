// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "acceptance/fixtures.hpp"
#include "jedssl/checkpoint.hpp"
#include "jedssl/training.hpp"

namespace jedssl::training {
namespace {

namespace fs = std::filesystem;
using acceptance::random_unit_data;
using acceptance::small_model;
using acceptance::tiny_corpus_spec;

fs::path scratch(const std::string& name) {
    const char* env = std::getenv("JEDSSL_SCRATCH");
    fs::path p = (env ? fs::path(env) : fs::temp_directory_path() / "jedssl-unit") / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

TEST(Batching, PlanCoversEveryUtteranceOnce) {
    const std::vector<std::size_t> lengths{30, 10, 50, 20, 40, 10, 60};
    const auto plan = plan_batches(lengths, 70);
    std::multiset<std::size_t> seen;
    std::size_t prev_max = 0;
    for (const auto& b : plan) {
        std::size_t total = 0;
        for (auto i : b) {
            seen.insert(i);
            total += lengths[i];
            EXPECT_GE(lengths[i], prev_max);  // sorted by length
            prev_max = lengths[i];
        }
        EXPECT_LE(total, 70u);
    }
    EXPECT_EQ(seen, (std::multiset<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
    EXPECT_THROW(plan_batches(lengths, 55), std::invalid_argument);
}

TEST(Batching, EveryEpochVisitsEachBatch) {
    const auto plan = plan_batches({5, 5, 5, 5, 5}, 5);
    for (std::uint64_t epoch = 0; epoch < 3; ++epoch) {
        std::set<std::size_t> firsts;
        for (std::uint64_t s = 1; s <= plan.size(); ++s) firsts.insert(batch_for_step(plan, 9, epoch * plan.size() + s)[0]);
        EXPECT_EQ(firsts.size(), plan.size());
    }
    EXPECT_EQ(&batch_for_step(plan, 9, 3), &batch_for_step(plan, 9, 3));
    EXPECT_THROW(batch_for_step(plan, 9, 0), std::invalid_argument);
}

TEST(Modes, NamesAndRules) {
    for (auto m : {FinetuneMode::kCtcOnlyEncoder, FinetuneMode::kJointEncDec, FinetuneMode::kEncPlusRandomDecoder,
                   FinetuneMode::kProposedEncWithRandomDecoder}) {
        EXPECT_EQ(parse_finetune_mode(to_string(m)), m);
    }
    EXPECT_EQ(to_string(FinetuneMode::kCtcOnlyEncoder), "ctc_only_encoder");
    EXPECT_FALSE(uses_decoder(FinetuneMode::kCtcOnlyEncoder));
    EXPECT_TRUE(uses_decoder(FinetuneMode::kJointEncDec));
    EXPECT_FALSE(randomizes_decoder(FinetuneMode::kJointEncDec));
    EXPECT_TRUE(randomizes_decoder(FinetuneMode::kEncPlusRandomDecoder));
    EXPECT_TRUE(randomizes_decoder(FinetuneMode::kProposedEncWithRandomDecoder));
    EXPECT_THROW(parse_finetune_mode("ctc"), std::invalid_argument);
}

struct Fixture {
    corpus::Corpus corpus = corpus::generate_synthetic_corpus(tiny_corpus_spec());
    model::ModelConfig mcfg = small_model();
    PretrainData data;
    PretrainConfig pcfg;
    Fixture() {
        data = random_unit_data(corpus, mcfg, 2);
        pcfg.steps = 6;
        pcfg.batch_frames = 200;
        pcfg.lr = 2e-3;
        pcfg.warmup_steps = 3;
        pcfg.checkpoint_every = 2;
        pcfg.keep_last = 2;
        pcfg.mask.selection_prob = 0.3;
        pcfg.mask.span_length = 2;
    }
    TrainState<double> fresh() const {
        TrainState<double> s;
        s.params = model::init_params<double>(mcfg, 1);
        return s;
    }
    checkpoint::Checkpoint<double> pretrained(double alpha) const {
        auto s = fresh();
        auto cfg = pcfg;
        cfg.alpha = alpha;
        pretrain(s, data, mcfg, cfg, 4, "pretrain");
        return snapshot(s, "pretrain", 4, {cfg.lr, cfg.warmup_steps}, 0.0, nlohmann::json::object(),
                        nlohmann::json{{"alpha", alpha}});
    }
};

TEST(Pretrain, AlphaOneLeavesDecoderWithoutGradient) {
    Fixture f;
    auto s = f.fresh();
    auto cfg = f.pcfg;
    cfg.alpha = 1.0;
    std::mt19937_64 rng(3);
    s.params.zero_grad();
    auto loss = pretrain_batch_loss(s.params, f.mcfg, cfg, f.data, {0, 1, 2}, rng, true);
    loss.total.backward();
    for (const auto& n : s.params.names()) {
        const auto& t = s.params.get(n);
        if (!n.starts_with("decoder.") || !t.has_grad()) continue;
        for (double g : t.grad()) EXPECT_EQ(g, 0.0) << n;
    }
}

TEST(Pretrain, RecordsScheduleAndIsDeterministic) {
    Fixture f;
    auto a = f.fresh(), b = f.fresh();
    const auto ma = pretrain(a, f.data, f.mcfg, f.pcfg, 4, "pretrain");
    const auto mb = pretrain(b, f.data, f.mcfg, f.pcfg, 4, "pretrain");
    ASSERT_EQ(ma.steps.size(), 6u);
    for (std::size_t i = 0; i < ma.steps.size(); ++i) {
        EXPECT_EQ(ma.steps[i].step, i + 1);
        EXPECT_EQ(ma.steps[i].lr, ad::lr_at_step({f.pcfg.lr, f.pcfg.warmup_steps}, i + 1));
        EXPECT_EQ(ma.steps[i].loss, mb.steps[i].loss);
        EXPECT_EQ(ma.steps[i].l_m, mb.steps[i].l_m);
        EXPECT_EQ(ma.steps[i].l_s, mb.steps[i].l_s);
        EXPECT_NEAR(ma.steps[i].loss, 0.5 * ma.steps[i].l_m + 0.5 * ma.steps[i].l_s, 1e-12);
    }
    EXPECT_EQ(a.adam.step, 6u);
}

TEST(Pretrain, CheckpointRotation) {
    Fixture f;
    const auto dir = scratch("rotation");
    auto s = f.fresh();
    RunIO io;
    io.checkpoint_dir = dir / "ck";
    io.metrics_path = dir / "metrics.jsonl";
    pretrain(s, f.data, f.mcfg, f.pcfg, 4, "pretrain", io);
    EXPECT_FALSE(fs::exists(dir / "ck" / "step_00000002.ckpt"));
    EXPECT_TRUE(fs::exists(dir / "ck" / "step_00000004.ckpt"));
    EXPECT_TRUE(fs::exists(dir / "ck" / "step_00000006.ckpt"));
    EXPECT_TRUE(fs::exists(dir / "ck" / "best.ckpt"));
    EXPECT_TRUE(fs::exists(dir / "ck" / "final.ckpt"));
    const auto final_ck = checkpoint::load<double>(dir / "ck" / "final.ckpt");
    EXPECT_EQ(final_ck.step, 6u);
    EXPECT_EQ(final_ck.extra.at("alpha"), 0.5);
    std::ifstream in(dir / "metrics.jsonl");
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    EXPECT_EQ(lines, 6u);
}

TEST(Pretrain, NonFiniteLossAborts) {
    Fixture f;
    auto s = f.fresh();
    s.params.get("encoder.input_proj.weight").mutable_data()[0] = std::nan("");
    EXPECT_THROW(pretrain(s, f.data, f.mcfg, f.pcfg, 4, "pretrain"), TrainingAborted);
}

TEST(Finetune, ModeRequiresJointPretraining) {
    Fixture f;
    FinetuneConfig cfg;
    const auto enc_only = f.pretrained(1.0);
    cfg.mode = FinetuneMode::kJointEncDec;
    EXPECT_THROW(prepare_finetune(enc_only, f.mcfg, cfg, 4, 1), std::invalid_argument);
    cfg.mode = FinetuneMode::kProposedEncWithRandomDecoder;
    EXPECT_THROW(prepare_finetune(enc_only, f.mcfg, cfg, 4, 1), std::invalid_argument);
    cfg.mode = FinetuneMode::kEncPlusRandomDecoder;
    EXPECT_NO_THROW(prepare_finetune(enc_only, f.mcfg, cfg, 4, 1));
    cfg.mode = FinetuneMode::kCtcOnlyEncoder;
    const auto s = prepare_finetune(enc_only, f.mcfg, cfg, 4, 1);
    for (const auto& n : s.params.names()) EXPECT_FALSE(n.starts_with("decoder.")) << n;
}

TEST(Finetune, RandomDecoderModeKeepsEncoder) {
    Fixture f;
    const auto ck = f.pretrained(1.0);
    FinetuneConfig cfg;
    cfg.mode = FinetuneMode::kEncPlusRandomDecoder;
    const auto s = prepare_finetune(ck, f.mcfg, cfg, 4, 1);
    bool decoder_differs = false;
    for (const auto& n : ck.params.names()) {
        const auto x = ck.params.get(n).data(), y = s.params.get(n).data();
        const bool same = std::equal(x.begin(), x.end(), y.begin(), y.end());
        if (n.starts_with("decoder.")) decoder_differs |= !same;
        else EXPECT_TRUE(same) << n;
    }
    EXPECT_TRUE(decoder_differs);
}

TEST(Finetune, FrozenPartsStayFixed) {
    Fixture f;
    const auto ck = f.pretrained(0.5);
    FinetuneConfig cfg;
    cfg.mode = FinetuneMode::kJointEncDec;
    cfg.steps = 4;
    cfg.batch_frames = 200;
    cfg.lr = 2e-3;
    cfg.warmup_steps = 2;
    cfg.checkpoint_every = 100;
    const auto train = f.corpus.split("train");
    const auto data = make_finetune_data(train, 4);
    auto s = prepare_finetune(ck, f.mcfg, cfg, 4, 1);
    const auto metrics = finetune(s, data, f.mcfg, cfg, 2);
    ASSERT_EQ(metrics.steps.size(), 4u);
    for (const auto& r : metrics.steps) EXPECT_NEAR(r.loss, 0.3 * r.ctc + 0.7 * r.attention, 1e-12);
    bool encoder_moved = false;
    for (const auto& n : ck.params.names()) {
        const auto x = ck.params.get(n).data(), y = s.params.get(n).data();
        const bool same = std::equal(x.begin(), x.end(), y.begin(), y.end());
        const bool frozen = n.starts_with("frontend.") || n == "encoder.mask_embedding" ||
                            n.starts_with("encoder.unit_head") || n.starts_with("decoder.unit_");
        if (frozen) {
            EXPECT_TRUE(same) << n;
            EXPECT_FALSE(s.params.get(n).requires_grad()) << n;
        }
        if (n.starts_with("encoder.layer")) encoder_moved |= !same;
    }
    EXPECT_TRUE(encoder_moved);
}

TEST(Finetune, AlphabetMismatch) {
    Fixture f;
    const auto train = f.corpus.split("train");
    EXPECT_THROW(make_finetune_data(train, 1), std::invalid_argument);
}

TEST(Resume, RestoreContinuesBitExactly) {
    Fixture f;
    auto full = f.fresh();
    pretrain(full, f.data, f.mcfg, f.pcfg, 4, "pretrain");
    auto half = f.fresh();
    auto cfg = f.pcfg;
    cfg.steps = 3;
    pretrain(half, f.data, f.mcfg, cfg, 4, "pretrain");
    const auto ck = checkpoint::decode<double>(
        checkpoint::encode(snapshot(half, "pretrain", 4, {cfg.lr, cfg.warmup_steps}, 0.0, nlohmann::json::object(),
                                    nlohmann::json::object())));
    auto resumed = restore(ck);
    pretrain(resumed, f.data, f.mcfg, f.pcfg, 4, "pretrain");
    for (const auto& n : full.params.names()) {
        const auto x = full.params.get(n).data(), y = resumed.params.get(n).data();
        EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin(), y.end())) << n;
    }
}

}  // namespace
}  // namespace jedssl::training
