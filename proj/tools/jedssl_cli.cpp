// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// jedssl <command> [flags]: the full pipeline from synthetic corpus to
// evaluation report, one stage per subcommand.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "jedssl/experiment.hpp"
#include "jedssl/kernels.hpp"

namespace {

struct Flags {
    std::string dir;
    std::string config;
    std::string preset;
    std::uint64_t seed = 0;
    std::string precision;
    std::vector<std::string> overrides;
    std::string mode;
    std::string from;
    std::string split;
    std::string decoder;
    bool force = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--dir", f.dir, "Experiment directory");
    cmd->add_option("--config", f.config, "JSON config merged over the preset")->check(CLI::ExistingFile);
    cmd->add_option("--preset", f.preset, "Base preset: desk-tiny, desk-small or paper-360h");
    cmd->add_option("--seed", f.seed, "Training seed");
    cmd->add_option("--precision", f.precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
    cmd->add_option("--set", f.overrides, "Override one config key, e.g. --set pretrain.alpha=1");
    cmd->add_flag("--force", f.force, "Redo a finished stage or replace a differing config snapshot");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint encoder-decoder self-supervised pre-training for speech, at desk scale"};
    app.require_subcommand(1);
    Flags f;

    struct Entry {
        const char* name;
        const char* help;
    };
    const Entry entries[] = {
        {"gen-corpus", "Render the synthetic corpus into <dir>/corpus"},
        {"discover-units", "Fit k-means on frontend features and store frame targets"},
        {"pretrain", "Joint masked-prediction and sequence pre-training from scratch"},
        {"continue-pretrain", "Continue pre-training from the pre-trained encoder with a fresh decoder"},
        {"finetune", "Finetune on transcripts (--mode selects the regime)"},
        {"evaluate", "Decode a split with a finetuned model and write eval/report.json"},
        {"pipeline", "gen-corpus, discover-units, pretrain, finetune and evaluate in order"},
        {"print-config", "Print the resolved config"},
    };
    for (const auto& e : entries) {
        auto* cmd = app.add_subcommand(e.name, e.help);
        add_common(cmd, f);
        const std::string name = e.name;
        if (name == "finetune" || name == "evaluate" || name == "pipeline") {
            cmd->add_option("--mode", f.mode,
                            "ctc_only_encoder, joint_enc_dec, enc_plus_random_decoder or proposed_enc_with_random_decoder");
        }
        if (name == "finetune" || name == "evaluate") {
            cmd->add_option("--from", f.from, "Source pre-training stage: pretrain or continue_pretrain");
        }
        if (name == "evaluate") {
            cmd->add_option("--split", f.split, "train or test");
            cmd->add_option("--decoder", f.decoder, "auto, ctc or attention");
        }
    }

    CLI11_PARSE(app, argc, argv);
    jedssl::kernels::configure_threads_from_env();

    auto* chosen = app.get_subcommands().front();
    jedssl::experiment::Options opts;
    opts.dir = f.dir;
    opts.force = f.force;
    opts.overrides = f.overrides;
    if (!f.config.empty()) opts.config_path = f.config;
    if (!f.preset.empty()) opts.preset = f.preset;
    if (chosen->count("--seed") > 0) opts.seed = f.seed;
    if (!f.precision.empty()) opts.precision = f.precision;
    if (!f.mode.empty()) opts.mode = f.mode;
    if (!f.from.empty()) opts.from = f.from;
    if (!f.split.empty()) opts.split = f.split;
    if (!f.decoder.empty()) opts.decoder = f.decoder;
    return jedssl::experiment::run(chosen->get_name(), opts, std::cout, std::cerr);
}
