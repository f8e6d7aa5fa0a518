// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "jedssl/config.hpp"
#include "jedssl/serialize.hpp"

namespace jedssl::config {
namespace {

using nlohmann::json;

TEST(Config, PresetsRoundTrip) {
    for (const auto& name : preset_names()) {
        const auto cfg = preset(name);
        const auto j = to_json(cfg);
        EXPECT_EQ(to_json(from_json(j)), j) << name;
    }
    EXPECT_THROW(preset("huge"), ConfigError);
}

TEST(Config, ShippedFilesMatchPresets) {
    for (const auto& name : preset_names()) {
        const auto text = read_text_file(std::filesystem::path(JEDSSL_SOURCE_DIR) / "configs" / (name + ".json"));
        EXPECT_EQ(json::parse(text), to_json(preset(name))) << name;
    }
}

void expect_rejected(json j, const std::string& key_path) {
    try {
        from_json(j);
        FAIL() << "accepted " << key_path;
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find(key_path), std::string::npos) << e.what();
    }
}

TEST(Config, StrictKeys) {
    auto j = to_json(preset("desk-tiny"));
    j["encoder"]["n_layer"] = 3;
    expect_rejected(j, "encoder.n_layer");
    j = to_json(preset("desk-tiny"));
    j["optimizer"] = json::object();
    expect_rejected(j, "optimizer");
}

TEST(Config, TypesAndRanges) {
    auto j = to_json(preset("desk-tiny"));
    j["pretrain"]["steps"] = -5;
    expect_rejected(j, "pretrain.steps");
    j = to_json(preset("desk-tiny"));
    j["encoder"]["d_model"] = "big";
    expect_rejected(j, "encoder.d_model");
    j = to_json(preset("desk-tiny"));
    j["encoder"]["n_heads"] = 3;
    EXPECT_THROW(from_json(j), ConfigError);
    j = to_json(preset("desk-tiny"));
    j["finetune"]["mode"] = "ctc";
    EXPECT_THROW(from_json(j), ConfigError);
    j = to_json(preset("desk-tiny"));
    j["precision"] = "f16";
    EXPECT_THROW(from_json(j), ConfigError);
}

TEST(Config, Overrides) {
    auto j = to_json(preset("desk-tiny"));
    apply_override(j, "pretrain.alpha=1");
    apply_override(j, "finetune.mode=ctc_only_encoder");
    apply_override(j, "eval.split=\"test\"");
    const auto cfg = from_json(j);
    EXPECT_EQ(cfg.pretrain.alpha, 1.0);
    EXPECT_EQ(cfg.finetune.mode, training::FinetuneMode::kCtcOnlyEncoder);
    EXPECT_EQ(cfg.eval.split, "test");
    EXPECT_THROW(apply_override(j, "pretrain.alpha"), ConfigError);
    EXPECT_THROW(apply_override(j, "nosuch.key=1"), ConfigError);
}

TEST(Config, DiffNamesKeyPaths) {
    auto a = to_json(preset("desk-tiny"));
    auto b = a;
    b["pretrain"]["steps"] = 7;
    b["seed"] = 99;
    const auto d = diff(a, b);
    ASSERT_EQ(d.size(), 2u);
    bool steps = false, seed = false;
    for (const auto& line : d) {
        steps |= line.find("pretrain.steps") != std::string::npos;
        seed |= line.find("seed") != std::string::npos;
    }
    EXPECT_TRUE(steps && seed);
    EXPECT_TRUE(diff(a, a).empty());
}

}  // namespace
}  // namespace jedssl::config
