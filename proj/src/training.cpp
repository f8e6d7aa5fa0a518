// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "jedssl/frontend.hpp"
#include "jedssl/losses.hpp"
#include "jedssl/ops.hpp"
#include "jedssl/rng.hpp"
#include "jedssl/serialize.hpp"
#include "jedssl/targets.hpp"

namespace jedssl::training {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::size_t kMaskRetries = 10;

std::string to_string(FinetuneMode mode) {
    switch (mode) {
        case FinetuneMode::kCtcOnlyEncoder:
            return "ctc_only_encoder";
        case FinetuneMode::kJointEncDec:
            return "joint_enc_dec";
        case FinetuneMode::kEncPlusRandomDecoder:
            return "enc_plus_random_decoder";
        case FinetuneMode::kProposedEncWithRandomDecoder:
            return "proposed_enc_with_random_decoder";
    }
    return "?";
}

FinetuneMode parse_finetune_mode(const std::string& name) {
    for (auto m : {FinetuneMode::kCtcOnlyEncoder, FinetuneMode::kJointEncDec, FinetuneMode::kEncPlusRandomDecoder,
                   FinetuneMode::kProposedEncWithRandomDecoder}) {
        if (to_string(m) == name) return m;
    }
    throw std::invalid_argument("unknown finetune mode '" + name +
                                "' (expected ctc_only_encoder, joint_enc_dec, enc_plus_random_decoder or "
                                "proposed_enc_with_random_decoder)");
}

bool uses_decoder(FinetuneMode mode) { return mode != FinetuneMode::kCtcOnlyEncoder; }

bool randomizes_decoder(FinetuneMode mode) {
    return mode == FinetuneMode::kEncPlusRandomDecoder || mode == FinetuneMode::kProposedEncWithRandomDecoder;
}

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void validate(const PretrainConfig& cfg) {
    require(cfg.steps > 0, "pretrain.steps must be positive");
    require(cfg.batch_frames > 0, "pretrain.batch_frames must be positive");
    require(cfg.lr > 0.0, "pretrain.lr must be positive");
    require(cfg.warmup_steps > 0, "pretrain.warmup_steps must be positive");
    require(cfg.alpha >= 0.0 && cfg.alpha <= 1.0, "pretrain.alpha must lie in [0, 1]");
    require(cfg.label_smoothing >= 0.0 && cfg.label_smoothing < 1.0, "pretrain.label_smoothing must lie in [0, 1)");
    require(cfg.mask.selection_prob > 0.0 && cfg.mask.selection_prob < 1.0, "mask.selection_prob must lie in (0, 1)");
    require(cfg.mask.span_length > 0, "mask.span_length must be positive");
    require(cfg.checkpoint_every > 0, "pretrain.checkpoint_every must be positive");
    require(cfg.keep_last > 0, "pretrain.keep_last must be positive");
}

void validate(const FinetuneConfig& cfg) {
    require(cfg.steps > 0, "finetune.steps must be positive");
    require(cfg.batch_frames > 0, "finetune.batch_frames must be positive");
    require(cfg.lr > 0.0, "finetune.lr must be positive");
    require(cfg.warmup_steps > 0, "finetune.warmup_steps must be positive");
    require(cfg.beta >= 0.0 && cfg.beta <= 1.0, "finetune.beta must lie in [0, 1]");
    require(cfg.label_smoothing >= 0.0 && cfg.label_smoothing < 1.0, "finetune.label_smoothing must lie in [0, 1)");
    require(cfg.checkpoint_every > 0, "finetune.checkpoint_every must be positive");
    require(cfg.keep_last > 0, "finetune.keep_last must be positive");
}

json to_json(const StepRecord& r) {
    json j = {{"stage", r.stage}, {"step", r.step}, {"lr", r.lr}, {"loss", r.loss}};
    if (r.stage == "finetune") {
        j["ctc"] = r.ctc;
        j["attention"] = r.attention;
    } else {
        j["l_m"] = r.l_m;
        j["l_s"] = r.l_s;
    }
    j["batch_frames"] = r.batch_frames;
    j["batch_utterances"] = r.batch_utterances;
    j["wall_ms"] = r.wall_ms;
    return j;
}

std::vector<std::vector<std::size_t>> plan_batches(const std::vector<std::size_t>& frame_counts, std::size_t budget) {
    if (frame_counts.empty()) throw std::invalid_argument("plan_batches: no utterances");
    std::vector<std::size_t> order(frame_counts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frame_counts[a] < frame_counts[b]; });
    std::vector<std::vector<std::size_t>> plan;
    std::vector<std::size_t> current;
    std::size_t used = 0;
    for (auto idx : order) {
        const std::size_t n = frame_counts[idx];
        if (n > budget) {
            throw std::invalid_argument("plan_batches: utterance " + std::to_string(idx) + " has " + std::to_string(n) +
                                        " frames, over the budget of " + std::to_string(budget));
        }
        if (used + n > budget) {
            plan.push_back(std::move(current));
            current.clear();
            used = 0;
        }
        current.push_back(idx);
        used += n;
    }
    plan.push_back(std::move(current));
    return plan;
}

const std::vector<std::size_t>& batch_for_step(const std::vector<std::vector<std::size_t>>& plan, std::uint64_t seed,
                                               std::uint64_t step) {
    if (plan.empty()) throw std::invalid_argument("batch_for_step: empty plan");
    if (step == 0) throw std::invalid_argument("batch_for_step: steps count from 1");
    const std::uint64_t epoch = (step - 1) / plan.size();
    const std::uint64_t pos = (step - 1) % plan.size();
    std::vector<std::size_t> order(plan.size());
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(derive_seed(derive_seed(seed, "batch-order"), epoch));
    std::shuffle(order.begin(), order.end(), rng);
    return plan[order[pos]];
}

template <class T>
std::vector<std::vector<std::int32_t>> unit_targets(const std::vector<const corpus::Utterance*>& utts,
                                                    const ad::ParamStore<T>& params,
                                                    const frontend::FrontendConfig& fcfg,
                                                    const units::KMeansModel& km) {
    std::vector<std::vector<std::int32_t>> out(utts.size());
    ad::NoGradGuard no_grad;
    for (std::size_t i = 0; i < utts.size(); ++i) {
        auto feats = frontend::conv_feature_extractor<T>(utts[i]->wave, params, fcfg);
        units::FeatureMatrix m;
        m.append_rows<T>(feats.frames.data(), feats.frames.dim(1));
        out[i] = units::kmeans_assign(km, m).ids;
    }
    return out;
}

namespace {

template <class T>
ad::Tensor<T> stack(const std::vector<ad::Tensor<T>>& parts) {
    return parts.size() == 1 ? parts.front() : ad::concat<T>(parts, 0);
}

template <class T>
ad::Tensor<T> average(const std::vector<ad::Tensor<T>>& scalars) {
    return ad::mean(stack(scalars));
}

template <class T>
void ensure_grad_buffers(ad::ParamStore<T>& params) {
    for (const auto& name : params.names()) {
        auto& p = params.get(name);
        if (p.requires_grad() && !p.has_grad()) p.mutable_grad();
    }
}

template <class T>
ad::ParamStore<T> clone(const ad::ParamStore<T>& src) {
    ad::ParamStore<T> out;
    for (const auto& name : src.names()) {
        const auto& t = src.get(name);
        out.add(name, ad::Tensor<T>::from(t.shape(), std::vector<T>(t.data().begin(), t.data().end()), t.requires_grad()));
    }
    return out;
}

std::string step_file(std::uint64_t step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "step_%08llu.ckpt", static_cast<unsigned long long>(step));
    return buf;
}

// Shared loop: checkpoint cadence, rotation, best tracking, metrics output.
template <class T>
class Runner {
   public:
    Runner(TrainState<T>& state, const RunIO& io, std::string stage, std::uint64_t seed, ad::WarmupSchedule sched,
           std::size_t total_steps, std::size_t every, std::size_t keep_last, json extra)
        : state_(state),
          io_(io),
          stage_(std::move(stage)),
          seed_(seed),
          sched_(sched),
          total_(total_steps),
          every_(every),
          keep_last_(keep_last),
          extra_(std::move(extra)) {
        if (!io_.checkpoint_dir.empty()) fs::create_directories(io_.checkpoint_dir);
    }

    template <class StepFn>
    RunMetrics run(StepFn&& step_fn) {
        RunMetrics metrics;
        while (state_.adam.step < total_) {
            const std::uint64_t step = state_.adam.step + 1;
            const auto t0 = std::chrono::steady_clock::now();
            StepRecord rec;
            rec.stage = stage_;
            rec.step = step;
            rec.lr = ad::lr_at_step(sched_, step);
            state_.params.zero_grad();
            try {
                auto total = step_fn(step, rec);
                rec.loss = static_cast<double>(total.item());
                if (!std::isfinite(rec.loss)) throw ad::NumericalError("non-finite loss");
                total.backward();
                ensure_grad_buffers(state_.params);
                ad::adam_step(state_.params, state_.adam, rec.lr);
            } catch (const TrainingAborted&) {
                throw;
            } catch (const ad::NumericalError& e) {
                throw TrainingAborted(stage_ + " step " + std::to_string(step) + ": " + e.what() +
                                      "; last good checkpoint: " + (last_good_.empty() ? "none" : last_good_.string()));
            }
            rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            if (!io_.metrics_path.empty()) append_line(io_.metrics_path, to_json(rec).dump());
            if (io_.on_step) io_.on_step(rec);
            metrics.steps.push_back(rec);
            if (step % every_ == 0 || step == total_) save(step, rec.loss);
        }
        return metrics;
    }

   private:
    void save(std::uint64_t step, double loss) {
        if (!state_.has_best || loss < state_.best_loss) {
            state_.best_loss = loss;
            state_.has_best = true;
        }
        if (io_.checkpoint_dir.empty()) return;
        json extra = extra_;
        extra["best_loss"] = state_.best_loss;
        auto ck = snapshot(state_, stage_, seed_, sched_, loss, io_.config_snapshot, extra);
        const auto bytes = checkpoint::encode(ck);
        const fs::path path = io_.checkpoint_dir / step_file(step);
        write_text_file(path, bytes);
        last_good_ = path;
        if (loss == state_.best_loss) write_text_file(io_.checkpoint_dir / "best.ckpt", bytes);
        if (step == total_) write_text_file(io_.checkpoint_dir / "final.ckpt", bytes);
        // Older periodic files beyond the retention window.
        std::vector<fs::path> periodic;
        for (const auto& entry : fs::directory_iterator(io_.checkpoint_dir)) {
            const auto name = entry.path().filename().string();
            if (name.starts_with("step_") && name.ends_with(".ckpt")) periodic.push_back(entry.path());
        }
        std::sort(periodic.begin(), periodic.end());
        while (periodic.size() > keep_last_) {
            fs::remove(periodic.front());
            periodic.erase(periodic.begin());
        }
    }

    TrainState<T>& state_;
    const RunIO& io_;
    std::string stage_;
    std::uint64_t seed_;
    ad::WarmupSchedule sched_;
    std::size_t total_;
    std::size_t every_;
    std::size_t keep_last_;
    json extra_;
    fs::path last_good_;
};

}  // namespace

template <class T>
PretrainLoss<T> pretrain_batch_loss(const ad::ParamStore<T>& params, const model::ModelConfig& mcfg,
                                    const PretrainConfig& cfg, const PretrainData& data,
                                    const std::vector<std::size_t>& batch, std::mt19937_64& rng, bool training) {
    if (batch.empty()) throw std::invalid_argument("pretrain: empty batch");
    const model::ForwardOptions opts{training, &rng, false};
    const auto num_units = static_cast<std::int32_t>(mcfg.num_units);
    std::vector<ad::Tensor<T>> enc_logits, dec_logits;
    std::vector<std::int32_t> enc_targets, dec_targets;
    std::vector<bool> mask;
    PretrainLoss<T> out;
    for (auto idx : batch) {
        const auto& utt = *data.utterances.at(idx);
        const auto& ids = data.targets.at(idx);
        auto feats = frontend::conv_feature_extractor<T>(utt.wave, params, mcfg.frontend).frames;
        if (feats.dim(0) != ids.size()) {
            throw ad::ShapeError("pretrain: " + utt.id + " has " + std::to_string(feats.dim(0)) + " frames but " +
                                 std::to_string(ids.size()) + " targets");
        }
        targets::MaskSpec spec;
        for (std::size_t attempt = 0;; ++attempt) {
            spec = targets::sample_mask_spans(feats.dim(0), cfg.mask.selection_prob, cfg.mask.span_length, rng);
            if (spec.masked_count() > 0) break;
            if (attempt + 1 == kMaskRetries) {
                throw std::runtime_error("pretrain: no frame of " + utt.id + " was masked after " +
                                         std::to_string(kMaskRetries) + " draws");
            }
        }
        auto masked = targets::apply_mask(feats, spec, params.get("encoder.mask_embedding"));
        auto enc = model::encoder_forward<T>(masked.features, params, mcfg, opts);
        enc_logits.push_back(model::linear<T>(enc.states, params, "encoder.unit_head"));
        enc_targets.insert(enc_targets.end(), ids.begin(), ids.end());
        mask.insert(mask.end(), spec.masked.begin(), spec.masked.end());
        // Decoder targets come from every frame, masked or not.
        auto seq = targets::prepare_decoder_targets(ids, num_units);
        auto dec = model::decoder_forward<T>(seq.input(), enc.states, params, mcfg, {}, opts);
        dec_logits.push_back(dec.logits);
        auto tgt = seq.target();
        dec_targets.insert(dec_targets.end(), tgt.begin(), tgt.end());
        out.frames += ids.size();
    }
    out.l_m = losses::masked_prediction_loss(stack(enc_logits), enc_targets, mask);
    out.l_s = losses::sequence_loss(stack(dec_logits), dec_targets, training ? cfg.label_smoothing : 0.0);
    out.total = losses::joint_ssl_loss(out.l_m, out.l_s, {cfg.alpha});
    return out;
}

template <class T>
RunMetrics pretrain(TrainState<T>& state, const PretrainData& data, const model::ModelConfig& mcfg,
                    const PretrainConfig& cfg, std::uint64_t seed, const std::string& stage, const RunIO& io) {
    validate(cfg);
    model::validate(mcfg);
    if (data.utterances.empty()) throw std::invalid_argument("pretrain: corpus has no training utterances");
    if (data.targets.size() != data.utterances.size()) throw std::invalid_argument("pretrain: targets do not cover the corpus");
    std::vector<std::size_t> lengths;
    for (const auto& t : data.targets) lengths.push_back(t.size());
    const auto plan = plan_batches(lengths, cfg.batch_frames);
    const ad::WarmupSchedule sched{cfg.lr, cfg.warmup_steps};
    const std::uint64_t step_seed = derive_seed(seed, stage + "-step");
    Runner<T> runner(state, io, stage, seed, sched, cfg.steps, cfg.checkpoint_every, cfg.keep_last,
                     json{{"alpha", cfg.alpha}});
    return runner.run([&](std::uint64_t step, StepRecord& rec) {
        const auto& batch = batch_for_step(plan, seed, step);
        auto rng = make_rng(derive_seed(step_seed, step));
        auto l = pretrain_batch_loss(state.params, mcfg, cfg, data, batch, rng, true);
        rec.l_m = static_cast<double>(l.l_m.item());
        rec.l_s = static_cast<double>(l.l_s.item());
        rec.batch_frames = l.frames;
        rec.batch_utterances = batch.size();
        return l.total;
    });
}

FinetuneData make_finetune_data(const std::vector<const corpus::Utterance*>& utts, std::size_t n_chars) {
    FinetuneData data;
    data.n_chars = n_chars;
    data.utterances = utts;
    for (const auto* u : utts) {
        std::vector<std::int32_t> ids;
        for (char c : u->transcript) {
            const auto id = corpus::letter_phone(c);
            if (static_cast<std::size_t>(id) >= n_chars) {
                throw std::invalid_argument("finetune: transcript of " + u->id + " uses '" + std::string(1, c) +
                                            "' outside the " + std::to_string(n_chars) + "-character alphabet");
            }
            ids.push_back(id);
        }
        if (ids.empty()) throw std::invalid_argument("finetune: empty transcript for " + u->id);
        data.labels.push_back(std::move(ids));
    }
    return data;
}

template <class T>
TrainState<T> prepare_finetune(const checkpoint::Checkpoint<T>& pretrained, const model::ModelConfig& mcfg,
                               const FinetuneConfig& cfg, std::size_t n_chars, std::uint64_t seed) {
    validate(cfg);
    if (pretrained.stage != "pretrain" && pretrained.stage != "continue_pretrain") {
        throw std::invalid_argument("finetune: expected a pre-training checkpoint, got stage '" + pretrained.stage + "'");
    }
    const double alpha = pretrained.extra.value("alpha", 1.0);
    const bool decoder_trained = alpha < 1.0;
    if ((cfg.mode == FinetuneMode::kJointEncDec || cfg.mode == FinetuneMode::kProposedEncWithRandomDecoder) &&
        !decoder_trained) {
        throw std::invalid_argument("finetune mode " + to_string(cfg.mode) +
                                    " needs a checkpoint from joint pre-training (alpha < 1); this one has alpha = " +
                                    std::to_string(alpha));
    }
    TrainState<T> state;
    state.params = clone(pretrained.params);
    for (const auto& name : state.params.names()) {
        if (name.starts_with("finetune.")) throw std::invalid_argument("finetune: checkpoint already carries " + name);
    }
    if (randomizes_decoder(cfg.mode)) {
        model::reinit_decoder(state.params, mcfg, derive_seed(seed, "finetune-decoder"));
    } else if (!uses_decoder(cfg.mode)) {
        state.params.erase_prefix("decoder.");
    }
    model::add_finetune_heads(state.params, mcfg, n_chars, derive_seed(seed, "finetune-heads"));
    state.params.set_requires_grad_prefix("", true);
    state.params.set_requires_grad_prefix("frontend.", false);
    // Pre-training heads play no part in finetuning.
    state.params.set_requires_grad_prefix("encoder.mask_embedding", false);
    state.params.set_requires_grad_prefix("encoder.unit_head", false);
    state.params.set_requires_grad_prefix("decoder.unit_", false);
    if (!uses_decoder(cfg.mode)) {
        state.params.set_requires_grad_prefix(model::FinetuneHeads::kCharEmbedding, false);
        state.params.set_requires_grad_prefix(model::FinetuneHeads::kAttentionHead, false);
    }
    return state;
}

template <class T>
std::vector<ad::Tensor<T>> frozen_features(const ad::ParamStore<T>& params, const frontend::FrontendConfig& fcfg,
                                           const std::vector<const corpus::Utterance*>& utts) {
    std::vector<ad::Tensor<T>> out(utts.size());
    ad::NoGradGuard no_grad;
    for (std::size_t i = 0; i < utts.size(); ++i) {
        out[i] = frontend::conv_feature_extractor<T>(utts[i]->wave, params, fcfg).frames;
    }
    return out;
}

template <class T>
FinetuneLoss<T> finetune_batch_loss(const ad::ParamStore<T>& params, const model::ModelConfig& mcfg,
                                    const FinetuneConfig& cfg, const FinetuneData& data,
                                    const std::vector<ad::Tensor<T>>& features,
                                    const std::vector<std::size_t>& batch, std::mt19937_64& rng, bool training) {
    if (batch.empty()) throw std::invalid_argument("finetune: empty batch");
    const model::ForwardOptions opts{training, &rng, false};
    const bool joint = uses_decoder(cfg.mode);
    const auto chars = static_cast<std::int32_t>(data.n_chars);
    const auto& ctc_head = params.get(std::string(model::FinetuneHeads::kCtcHead) + ".weight");
    if (ctc_head.dim(1) != data.n_chars + 1) {
        throw std::invalid_argument("finetune: CTC head has " + std::to_string(ctc_head.dim(1)) + " classes, alphabet needs " +
                                    std::to_string(data.n_chars + 1));
    }
    std::vector<ad::Tensor<T>> ctc_terms, dec_logits;
    std::vector<std::int32_t> dec_targets;
    FinetuneLoss<T> out;
    for (auto idx : batch) {
        const auto& labels = data.labels.at(idx);
        auto enc = model::encoder_forward<T>(features.at(idx), params, mcfg, opts);
        std::vector<std::int32_t> ctc_labels(labels.size());
        // Blank is class 0, character c is class c + 1.
        std::transform(labels.begin(), labels.end(), ctc_labels.begin(), [](std::int32_t c) { return c + 1; });
        ctc_terms.push_back(losses::ctc_loss(model::linear<T>(enc.states, params, model::FinetuneHeads::kCtcHead), ctc_labels));
        if (joint) {
            auto seq = targets::add_sos_eos(labels, chars);
            auto dec = model::decoder_forward<T>(seq.input(), enc.states, params, mcfg, model::FinetuneHeads::decoder(), opts);
            dec_logits.push_back(dec.logits);
            auto tgt = seq.target();
            dec_targets.insert(dec_targets.end(), tgt.begin(), tgt.end());
        }
        out.frames += features.at(idx).dim(0);
    }
    out.ctc = average(ctc_terms);
    if (!joint) {
        out.total = out.ctc;
        return out;
    }
    out.attention = losses::sequence_loss(stack(dec_logits), dec_targets, training ? cfg.label_smoothing : 0.0);
    out.total = losses::joint_finetune_loss(out.ctc, out.attention, {cfg.beta});
    return out;
}

template <class T>
RunMetrics finetune(TrainState<T>& state, const FinetuneData& data, const model::ModelConfig& mcfg,
                    const FinetuneConfig& cfg, std::uint64_t seed, const RunIO& io) {
    validate(cfg);
    model::validate(mcfg);
    if (data.utterances.empty()) throw std::invalid_argument("finetune: no labeled utterances");
    for (const auto& name : state.params.names()) {
        if (name.starts_with("frontend.") && state.params.get(name).requires_grad()) {
            throw std::invalid_argument("finetune: frontend parameter " + name + " is not frozen");
        }
    }
    const auto features = frozen_features<T>(state.params, mcfg.frontend, data.utterances);
    std::vector<std::size_t> lengths;
    for (const auto& f : features) lengths.push_back(f.dim(0));
    const auto plan = plan_batches(lengths, cfg.batch_frames);
    const ad::WarmupSchedule sched{cfg.lr, cfg.warmup_steps};
    const std::uint64_t step_seed = derive_seed(seed, "finetune-step");
    Runner<T> runner(state, io, "finetune", seed, sched, cfg.steps, cfg.checkpoint_every, cfg.keep_last,
                     json{{"mode", to_string(cfg.mode)}, {"beta", cfg.beta}, {"n_chars", data.n_chars}});
    return runner.run([&](std::uint64_t step, StepRecord& rec) {
        const auto& batch = batch_for_step(plan, seed, step);
        auto rng = make_rng(derive_seed(step_seed, step));
        auto l = finetune_batch_loss(state.params, mcfg, cfg, data, features, batch, rng, true);
        rec.ctc = static_cast<double>(l.ctc.item());
        rec.attention = l.attention.defined() ? static_cast<double>(l.attention.item()) : 0.0;
        rec.batch_frames = l.frames;
        rec.batch_utterances = batch.size();
        return l.total;
    });
}

template <class T>
checkpoint::Checkpoint<T> snapshot(const TrainState<T>& state, const std::string& stage, std::uint64_t seed,
                                   const ad::WarmupSchedule& schedule, double loss, const json& config,
                                   const json& extra) {
    checkpoint::Checkpoint<T> ck;
    ck.stage = stage;
    ck.seed = seed;
    ck.step = state.adam.step;
    ck.loss = loss;
    ck.schedule = schedule;
    ck.config = config;
    ck.extra = extra;
    ck.params = clone(state.params);
    ck.adam = state.adam;
    return ck;
}

template <class T>
TrainState<T> restore(const checkpoint::Checkpoint<T>& ck) {
    TrainState<T> state;
    state.params = clone(ck.params);
    state.adam = ck.adam;
    if (ck.extra.contains("best_loss")) {
        state.best_loss = ck.extra.at("best_loss");
        state.has_best = true;
    }
    return state;
}

#define JEDSSL_INSTANTIATE_TRAINING(T)                                                                                \
    template std::vector<std::vector<std::int32_t>> unit_targets<T>(const std::vector<const corpus::Utterance*>&,      \
                                                                    const ad::ParamStore<T>&,                          \
                                                                    const frontend::FrontendConfig&,                   \
                                                                    const units::KMeansModel&);                        \
    template PretrainLoss<T> pretrain_batch_loss<T>(const ad::ParamStore<T>&, const model::ModelConfig&,              \
                                                    const PretrainConfig&, const PretrainData&,                       \
                                                    const std::vector<std::size_t>&, std::mt19937_64&, bool);         \
    template RunMetrics pretrain<T>(TrainState<T>&, const PretrainData&, const model::ModelConfig&,                   \
                                    const PretrainConfig&, std::uint64_t, const std::string&, const RunIO&);          \
    template TrainState<T> prepare_finetune<T>(const checkpoint::Checkpoint<T>&, const model::ModelConfig&,          \
                                               const FinetuneConfig&, std::size_t, std::uint64_t);                    \
    template std::vector<ad::Tensor<T>> frozen_features<T>(const ad::ParamStore<T>&, const frontend::FrontendConfig&, \
                                                           const std::vector<const corpus::Utterance*>&);             \
    template FinetuneLoss<T> finetune_batch_loss<T>(const ad::ParamStore<T>&, const model::ModelConfig&,              \
                                                    const FinetuneConfig&, const FinetuneData&,                       \
                                                    const std::vector<ad::Tensor<T>>&,                                \
                                                    const std::vector<std::size_t>&, std::mt19937_64&, bool);         \
    template RunMetrics finetune<T>(TrainState<T>&, const FinetuneData&, const model::ModelConfig&,                   \
                                    const FinetuneConfig&, std::uint64_t, const RunIO&);                              \
    template checkpoint::Checkpoint<T> snapshot<T>(const TrainState<T>&, const std::string&, std::uint64_t,           \
                                                   const ad::WarmupSchedule&, double, const json&, const json&);      \
    template TrainState<T> restore<T>(const checkpoint::Checkpoint<T>&);

JEDSSL_INSTANTIATE_TRAINING(float)
JEDSSL_INSTANTIATE_TRAINING(double)

#undef JEDSSL_INSTANTIATE_TRAINING

}  // namespace jedssl::training
