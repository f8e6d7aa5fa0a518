// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pipeline stages over an experiment directory:
//
//   config.json                 snapshot, written before anything else
//   corpus/                     manifest.json + <id>.f32
//   kmeans/                     kmeans.json, centroids.f32, targets.json
//   kmeans_refit/               optional second pass for continued pre-training
//   checkpoints/<stage>/        step_*.ckpt (last few), best.ckpt, final.ckpt
//   metrics.jsonl               one record per training step
//   eval/report.json            latest report; eval/report_<tag>.json per model

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "jedssl/config.hpp"

namespace jedssl::experiment {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kMissingDependency = 3,
    kNumericalFailure = 4,
};

class MissingDependency : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::filesystem::path dir;
    std::optional<std::filesystem::path> config_path;
    std::optional<std::string> preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> precision;
    std::vector<std::string> overrides;  // key=value
    std::optional<std::string> mode;     // finetune mode
    std::optional<std::string> from;     // pretrain | continue_pretrain
    std::optional<std::string> split;
    std::optional<std::string> decoder;
    bool force = false;
};

// Preset (default desk-tiny), then the config file merged on top, then
// --seed/--precision, then each override.
config::ExperimentConfig resolve_config(const Options& opts);

// True when any flag besides the directory shapes the config.
bool has_config_flags(const Options& opts);

std::vector<std::string> command_names();

// Runs one subcommand; messages go to `out`, errors to `err`.
int run(const std::string& command, const Options& opts, std::ostream& out, std::ostream& err);

}  // namespace jedssl::experiment
