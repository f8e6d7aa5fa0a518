// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: one JSON document with sections corpus,
// frontend, kmeans, mask, encoder, decoder, pretrain, finetune and eval.
// Unknown keys are rejected and every module invariant is checked at load.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jedssl/corpus.hpp"
#include "jedssl/model.hpp"
#include "jedssl/training.hpp"

namespace jedssl::config {

class ConfigError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

enum class Precision { kF32, kF64 };

std::string to_string(Precision p);
Precision parse_precision(const std::string& name);

struct KMeansConfig {
    std::size_t max_iters = 100;
    std::size_t refit_layer = 0;  // 0 keeps frontend-feature targets for continued pre-training
};

struct EvalConfig {
    std::string decoder = "auto";  // auto picks ctc for ctc_only_encoder, attention otherwise
    std::size_t beam_size = 4;
    std::size_t max_len = 32;
    std::string split = "test";
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    Precision precision = Precision::kF64;
    corpus::SyntheticCorpusSpec corpus;
    model::ModelConfig model;  // model.num_units is kmeans.num_clusters
    KMeansConfig kmeans;
    training::PretrainConfig pretrain;  // pretrain.mask is the mask section
    training::FinetuneConfig finetune;
    EvalConfig eval;
};

nlohmann::json to_json(const ExperimentConfig& cfg);

// Throws ConfigError naming the offending key path.
ExperimentConfig from_json(const nlohmann::json& j);

void validate(const ExperimentConfig& cfg);

// The model part alone, as stored in checkpoints.
nlohmann::json model_to_json(const model::ModelConfig& cfg);
model::ModelConfig model_from_json(const nlohmann::json& j);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

// "section.key=value"; value parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& j, const std::string& assignment);

// Key paths whose values differ, for error messages.
std::vector<std::string> diff(const nlohmann::json& a, const nlohmann::json& b, const std::string& prefix = "");

}  // namespace jedssl::config
