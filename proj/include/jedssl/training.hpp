// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Joint SSL pre-training, continued pre-training, and the four finetuning
// regimes, with periodic checkpoints and per-step metrics.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jedssl/checkpoint.hpp"
#include "jedssl/corpus.hpp"
#include "jedssl/kmeans.hpp"
#include "jedssl/model.hpp"
#include "jedssl/optim.hpp"

namespace jedssl::training {

struct MaskConfig {
    double selection_prob = 0.08;
    std::size_t span_length = 10;
};

struct PretrainConfig {
    std::size_t steps = 3000;
    std::size_t batch_frames = 400;  // frame budget per batch
    double lr = 1e-3;
    std::uint64_t warmup_steps = 500;
    double alpha = 0.5;
    double label_smoothing = 0.1;
    MaskConfig mask;
    std::size_t checkpoint_every = 500;
    std::size_t keep_last = 3;
};

enum class FinetuneMode { kCtcOnlyEncoder, kJointEncDec, kEncPlusRandomDecoder, kProposedEncWithRandomDecoder };

std::string to_string(FinetuneMode mode);
FinetuneMode parse_finetune_mode(const std::string& name);
// True for the three modes trained with the joint CTC/attention loss.
bool uses_decoder(FinetuneMode mode);
bool randomizes_decoder(FinetuneMode mode);

struct FinetuneConfig {
    FinetuneMode mode = FinetuneMode::kJointEncDec;
    std::size_t steps = 2000;
    std::size_t batch_frames = 400;
    double lr = 3e-4;
    std::uint64_t warmup_steps = 200;
    double beta = 0.3;
    double label_smoothing = 0.1;
    std::size_t checkpoint_every = 500;
    std::size_t keep_last = 3;
};

void validate(const PretrainConfig& cfg);
void validate(const FinetuneConfig& cfg);

struct StepRecord {
    std::string stage;
    std::uint64_t step = 0;
    double lr = 0.0;
    double loss = 0.0;
    double l_m = 0.0;        // pretraining
    double l_s = 0.0;
    double ctc = 0.0;        // finetuning
    double attention = 0.0;
    std::size_t batch_frames = 0;
    std::size_t batch_utterances = 0;
    double wall_ms = 0.0;
};

nlohmann::json to_json(const StepRecord& r);

struct RunMetrics {
    std::vector<StepRecord> steps;
};

// Where a run writes; every field is optional.
struct RunIO {
    std::filesystem::path checkpoint_dir;
    std::filesystem::path metrics_path;  // JSON lines, appended
    nlohmann::json config_snapshot = nlohmann::json::object();
    std::function<void(const StepRecord&)> on_step;
};

// Raised when a step produces a non-finite loss or gradient.
class TrainingAborted : public ad::NumericalError {
   public:
    using ad::NumericalError::NumericalError;
};

// Sorted by length, greedy fill under the budget. Throws if a single
// utterance exceeds the budget.
std::vector<std::vector<std::size_t>> plan_batches(const std::vector<std::size_t>& frame_counts, std::size_t budget);

// Batch used at `step` (1-based): batch order reshuffled every epoch from the seed.
const std::vector<std::size_t>& batch_for_step(const std::vector<std::vector<std::size_t>>& plan, std::uint64_t seed,
                                               std::uint64_t step);

template <class T>
struct TrainState {
    ad::ParamStore<T> params;
    ad::AdamState<T> adam;  // adam.step is the number of completed steps
    double best_loss = 0.0;
    bool has_best = false;
};

struct PretrainData {
    std::vector<const corpus::Utterance*> utterances;
    std::vector<std::vector<std::int32_t>> targets;  // frame-level cluster ids per utterance
};

// Cluster ids of every frame, from the frontend at `params`.
template <class T>
std::vector<std::vector<std::int32_t>> unit_targets(const std::vector<const corpus::Utterance*>& utts,
                                                    const ad::ParamStore<T>& params,
                                                    const frontend::FrontendConfig& fcfg,
                                                    const units::KMeansModel& km);

// Loss pieces for one batch; exposed for gradient and coupling tests.
template <class T>
struct PretrainLoss {
    ad::Tensor<T> total;
    ad::Tensor<T> l_m;
    ad::Tensor<T> l_s;
    std::size_t frames = 0;
};

template <class T>
PretrainLoss<T> pretrain_batch_loss(const ad::ParamStore<T>& params, const model::ModelConfig& mcfg,
                                    const PretrainConfig& cfg, const PretrainData& data,
                                    const std::vector<std::size_t>& batch, std::mt19937_64& rng, bool training);

// Runs until state.adam.step == cfg.steps. `stage` is "pretrain" or
// "continue_pretrain"; the seed drives batch order, masks and dropout.
template <class T>
RunMetrics pretrain(TrainState<T>& state, const PretrainData& data, const model::ModelConfig& mcfg,
                    const PretrainConfig& cfg, std::uint64_t seed, const std::string& stage, const RunIO& io = {});

struct FinetuneData {
    std::vector<const corpus::Utterance*> utterances;
    std::vector<std::vector<std::int32_t>> labels;  // character ids
    std::size_t n_chars = 0;
};

// Character ids of each transcript; throws if a character falls outside
// the alphabet of size n_chars.
FinetuneData make_finetune_data(const std::vector<const corpus::Utterance*>& utts, std::size_t n_chars);

// Builds the finetuning parameter set from a pre-trained checkpoint: adds
// fresh heads, reinitializes the decoder for the random-decoder modes, and
// freezes the frontend. Throws std::invalid_argument on incompatible
// checkpoints (for example joint_enc_dec on a checkpoint whose decoder never
// received gradient).
template <class T>
TrainState<T> prepare_finetune(const checkpoint::Checkpoint<T>& pretrained, const model::ModelConfig& mcfg,
                               const FinetuneConfig& cfg, std::size_t n_chars, std::uint64_t seed);

template <class T>
struct FinetuneLoss {
    ad::Tensor<T> total;
    ad::Tensor<T> ctc;
    ad::Tensor<T> attention;  // undefined in ctc_only_encoder mode
    std::size_t frames = 0;
};

// features: frozen frontend output per utterance.
template <class T>
FinetuneLoss<T> finetune_batch_loss(const ad::ParamStore<T>& params, const model::ModelConfig& mcfg,
                                    const FinetuneConfig& cfg, const FinetuneData& data,
                                    const std::vector<ad::Tensor<T>>& features,
                                    const std::vector<std::size_t>& batch, std::mt19937_64& rng, bool training);

template <class T>
std::vector<ad::Tensor<T>> frozen_features(const ad::ParamStore<T>& params, const frontend::FrontendConfig& fcfg,
                                           const std::vector<const corpus::Utterance*>& utts);

template <class T>
RunMetrics finetune(TrainState<T>& state, const FinetuneData& data, const model::ModelConfig& mcfg,
                    const FinetuneConfig& cfg, std::uint64_t seed, const RunIO& io = {});

// Checkpoint of the current state, tagged with stage and config.
template <class T>
checkpoint::Checkpoint<T> snapshot(const TrainState<T>& state, const std::string& stage, std::uint64_t seed,
                                   const ad::WarmupSchedule& schedule, double loss, const nlohmann::json& config,
                                   const nlohmann::json& extra);

template <class T>
TrainState<T> restore(const checkpoint::Checkpoint<T>& ck);

}  // namespace jedssl::training
