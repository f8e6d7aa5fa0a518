// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// A model and corpus small enough to train for a few steps in a check.

#pragma once

#include <random>
#include <vector>

#include "jedssl/corpus.hpp"
#include "jedssl/frontend.hpp"
#include "jedssl/model.hpp"
#include "jedssl/training.hpp"

namespace jedssl::acceptance {

inline corpus::SyntheticCorpusSpec tiny_corpus_spec(std::uint64_t seed = 5) {
    corpus::SyntheticCorpusSpec s;
    s.n_utterances = 3;
    s.n_test_utterances = 0;
    s.min_duration = 0.10;
    s.max_duration = 0.15;
    s.min_phone_duration = 0.03;
    s.max_phone_duration = 0.05;
    s.n_latent_phones = 4;
    s.sample_rate = 4000;
    s.seed = seed;
    return s;
}

inline model::ModelConfig small_model() {
    model::ModelConfig cfg;
    cfg.frontend.layers = {{10, 5}, {4, 2}};
    cfg.frontend.channels = 8;
    cfg.encoder = {2, 2, 8, 16, 0.0};
    cfg.decoder = {1, 2, 8, 16, 0.0};
    cfg.num_units = 5;
    return cfg;
}

// Random unit ids per utterance, sized to the frontend output.
inline training::PretrainData random_unit_data(const corpus::Corpus& c, const model::ModelConfig& cfg,
                                               std::uint64_t seed) {
    training::PretrainData data;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int32_t> unit(0, static_cast<std::int32_t>(cfg.num_units) - 1);
    for (const auto& u : c.utterances) {
        data.utterances.push_back(&u);
        std::vector<std::int32_t> ids(frontend::frame_count(cfg.frontend, u.wave.samples.size()));
        for (auto& i : ids) i = unit(rng);
        data.targets.push_back(std::move(ids));
    }
    return data;
}

}  // namespace jedssl::acceptance
