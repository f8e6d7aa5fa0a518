// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/experiment.hpp"

#include <algorithm>
#include <iomanip>
#include <map>

#include "jedssl/checkpoint.hpp"
#include "jedssl/corpus.hpp"
#include "jedssl/decoding.hpp"
#include "jedssl/frontend.hpp"
#include "jedssl/kmeans.hpp"
#include "jedssl/model.hpp"
#include "jedssl/rng.hpp"
#include "jedssl/serialize.hpp"
#include "jedssl/training.hpp"

namespace jedssl::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

config::ExperimentConfig resolve_config(const Options& opts) {
    json j = config::to_json(config::preset(opts.preset.value_or("desk-tiny")));
    if (opts.config_path) {
        if (!fs::exists(*opts.config_path)) throw config::ConfigError("config file " + opts.config_path->string() + " does not exist");
        json file;
        try {
            file = json::parse(read_text_file(*opts.config_path));
        } catch (const json::parse_error& e) {
            throw config::ConfigError("config file " + opts.config_path->string() + ": " + e.what());
        }
        if (!file.is_object()) throw config::ConfigError("config file " + opts.config_path->string() + " must hold an object");
        // Validate the file on its own so unknown keys are reported against it.
        config::from_json(file);
        j.merge_patch(file);
    }
    if (opts.seed) j["seed"] = *opts.seed;
    if (opts.precision) j["precision"] = *opts.precision;
    for (const auto& o : opts.overrides) config::apply_override(j, o);
    return config::from_json(j);
}

bool has_config_flags(const Options& opts) {
    return opts.config_path || opts.preset || opts.seed || opts.precision || !opts.overrides.empty();
}

std::vector<std::string> command_names() {
    return {"gen-corpus", "discover-units", "pretrain", "continue-pretrain", "finetune", "evaluate", "pipeline", "print-config"};
}

namespace {

struct Context {
    fs::path dir;
    config::ExperimentConfig cfg;
    const Options& opts;
    std::ostream& out;

    fs::path path(const std::string& rel) const { return dir / rel; }
};

config::ExperimentConfig open_dir(const Options& opts, bool create, std::ostream& out) {
    if (opts.dir.empty()) throw config::ConfigError("--dir is required");
    const fs::path dir = opts.dir;
    if (!fs::exists(dir)) {
        if (!create) throw MissingDependency("experiment directory " + dir.string() + " does not exist; run gen-corpus first");
        const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::current_path();
        if (!fs::is_directory(parent)) {
            throw MissingDependency("parent directory " + parent.string() + " of " + dir.string() + " does not exist");
        }
        // Resolve before creating anything so a bad config leaves no trace.
        auto cfg = resolve_config(opts);
        fs::create_directory(dir);
        write_text_file(dir / "config.json", config::to_json(cfg).dump(2) + "\n");
        return cfg;
    }
    const fs::path snap = dir / "config.json";
    if (!fs::exists(snap)) {
        if (!create) throw MissingDependency("missing " + snap.string() + "; run gen-corpus first");
        auto cfg = resolve_config(opts);
        write_text_file(snap, config::to_json(cfg).dump(2) + "\n");
        return cfg;
    }
    json stored_json;
    try {
        stored_json = json::parse(read_text_file(snap));
    } catch (const json::parse_error& e) {
        throw config::ConfigError(snap.string() + ": " + e.what());
    }
    auto stored = config::from_json(stored_json);
    if (!has_config_flags(opts)) return stored;
    auto resolved = resolve_config(opts);
    const auto d = config::diff(config::to_json(stored), config::to_json(resolved));
    if (d.empty()) return stored;
    if (!opts.force) {
        std::string msg = "flags differ from the config snapshot in " + dir.string() + " (use --force to replace it):";
        for (const auto& line : d) msg += "\n  " + line;
        throw config::ConfigError(msg);
    }
    out << "replacing config snapshot in " << dir.string() << "\n";
    write_text_file(snap, config::to_json(resolved).dump(2) + "\n");
    return resolved;
}

corpus::Corpus need_corpus(const Context& ctx) {
    const auto dir = ctx.path("corpus");
    if (!fs::exists(dir / "manifest.json")) throw MissingDependency("missing " + (dir / "manifest.json").string() + "; run gen-corpus first");
    return corpus::load_corpus(dir);
}

std::vector<const corpus::Utterance*> need_split(const corpus::Corpus& c, const std::string& split) {
    auto utts = c.split(split);
    if (utts.empty()) throw config::ConfigError("corpus split '" + split + "' has no utterances");
    return utts;
}

std::vector<std::vector<std::int32_t>> load_targets(const fs::path& file, const std::vector<const corpus::Utterance*>& utts) {
    if (!fs::exists(file)) throw MissingDependency("missing " + file.string() + "; run discover-units first");
    const json j = json::parse(read_text_file(file));
    std::vector<std::vector<std::int32_t>> out;
    for (const auto* u : utts) {
        if (!j.at("targets").contains(u->id)) throw std::runtime_error(file.string() + " has no targets for " + u->id);
        out.push_back(j.at("targets").at(u->id).get<std::vector<std::int32_t>>());
    }
    return out;
}

void write_targets(const fs::path& file, const std::vector<const corpus::Utterance*>& utts,
                   const std::vector<std::vector<std::int32_t>>& ids, double purity) {
    json t = json::object();
    for (std::size_t i = 0; i < utts.size(); ++i) t[utts[i]->id] = ids[i];
    write_text_file(file, json{{"purity", purity}, {"targets", t}}.dump() + "\n");
}

std::vector<const corpus::Utterance*> all_utterances(const corpus::Corpus& c) {
    std::vector<const corpus::Utterance*> out;
    for (const auto& u : c.utterances) out.push_back(&u);
    return out;
}

double purity_against_phones(const std::vector<const corpus::Utterance*>& utts,
                             const std::vector<std::vector<std::int32_t>>& ids, const frontend::FrontendConfig& fcfg) {
    std::vector<std::int32_t> flat_ids, flat_labels;
    for (std::size_t i = 0; i < utts.size(); ++i) {
        auto labels = corpus::frame_phone_labels(*utts[i], fcfg);
        flat_ids.insert(flat_ids.end(), ids[i].begin(), ids[i].end());
        flat_labels.insert(flat_labels.end(), labels.begin(), labels.end());
    }
    return units::cluster_purity(flat_ids, flat_labels);
}

// Skips a finished stage unless --force, which clears its outputs.
bool stage_done(const Context& ctx, const fs::path& marker, const fs::path& clear, const std::string& what) {
    if (!fs::exists(marker)) return false;
    if (!ctx.opts.force) {
        ctx.out << what << " already present at " << marker.string() << "; skipping (use --force to redo)\n";
        return true;
    }
    fs::remove_all(clear);
    return false;
}

std::optional<fs::path> latest_step(const fs::path& dir) {
    if (!fs::is_directory(dir)) return std::nullopt;
    std::optional<fs::path> best;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.starts_with("step_") && name.ends_with(".ckpt") && (!best || e.path() > *best)) best = e.path();
    }
    return best;
}

training::RunIO run_io(const Context& ctx, const fs::path& ck_dir) {
    training::RunIO io;
    io.checkpoint_dir = ck_dir;
    io.metrics_path = ctx.path("metrics.jsonl");
    io.config_snapshot = config::to_json(ctx.cfg);
    return io;
}

void report_tail(const Context& ctx, const training::RunMetrics& m, bool pretraining) {
    if (m.steps.empty()) {
        ctx.out << "no steps left to run\n";
        return;
    }
    const auto& r = m.steps.back();
    ctx.out << r.stage << " finished at step " << r.step << ": loss " << r.loss;
    if (pretraining) {
        ctx.out << " (L_M " << r.l_m << ", L_S " << r.l_s << ")\n";
    } else {
        ctx.out << " (ctc " << r.ctc << ", attention " << r.attention << ")\n";
    }
}

int cmd_gen_corpus(const Context& ctx) {
    const auto dir = ctx.path("corpus");
    if (stage_done(ctx, dir / "manifest.json", dir, "corpus")) return kOk;
    const auto c = corpus::generate_synthetic_corpus(ctx.cfg.corpus);
    corpus::save_corpus(c, dir);
    ctx.out << "wrote " << c.utterances.size() << " utterances (" << c.split("train").size() << " train, "
            << c.split("test").size() << " test) to " << dir.string() << "\n";
    return kOk;
}

template <class T>
int cmd_discover_units(const Context& ctx) {
    const auto dir = ctx.path("kmeans");
    const auto c = need_corpus(ctx);
    if (stage_done(ctx, dir / "targets.json", dir, "cluster model")) return kOk;
    const auto train = need_split(c, "train");
    ad::ParamStore<T> params;
    frontend::init_frontend_params(params, ctx.cfg.model.frontend, ctx.cfg.seed);
    units::FeatureMatrix features;
    {
        ad::NoGradGuard no_grad;
        for (const auto* u : train) {
            auto f = frontend::conv_feature_extractor<T>(u->wave, params, ctx.cfg.model.frontend);
            features.append_rows<T>(f.frames.data(), f.frames.dim(1));
        }
    }
    const auto km = units::kmeans_fit(features, ctx.cfg.model.num_units, ctx.cfg.kmeans.max_iters,
                                      derive_seed(ctx.cfg.seed, "kmeans"));
    const auto utts = all_utterances(c);
    const auto ids = training::unit_targets<T>(utts, params, ctx.cfg.model.frontend, km);
    const double purity = purity_against_phones(utts, ids, ctx.cfg.model.frontend);
    units::save_kmeans(km, dir);
    write_targets(dir / "targets.json", utts, ids, purity);
    ctx.out << "k-means K=" << km.k << " on " << features.rows << " frames: " << km.iterations << " iterations, inertia "
            << km.inertia << ", purity " << purity << "\n";
    return kOk;
}

template <class T>
training::TrainState<T> resume_or(const fs::path& ck_dir, const std::string& stage, training::TrainState<T> fresh,
                                  std::ostream& out) {
    if (auto last = latest_step(ck_dir)) {
        auto ck = checkpoint::load<T>(*last);
        if (ck.stage != stage) throw std::runtime_error(last->string() + " belongs to stage " + ck.stage);
        out << "resuming from " << last->string() << " (step " << ck.step << ")\n";
        return training::restore(ck);
    }
    return fresh;
}

template <class T>
int cmd_pretrain(const Context& ctx) {
    const auto ck_dir = ctx.path("checkpoints/pretrain");
    const auto c = need_corpus(ctx);
    const auto train = need_split(c, "train");
    const auto targets = load_targets(ctx.path("kmeans/targets.json"), train);
    if (stage_done(ctx, ck_dir / "final.ckpt", ck_dir, "pre-trained model")) return kOk;
    training::TrainState<T> fresh;
    fresh.params = model::init_params<T>(ctx.cfg.model, ctx.cfg.seed);
    auto state = resume_or<T>(ck_dir, "pretrain", std::move(fresh), ctx.out);
    const auto metrics = training::pretrain(state, {train, targets}, ctx.cfg.model, ctx.cfg.pretrain, ctx.cfg.seed,
                                            "pretrain", run_io(ctx, ck_dir));
    report_tail(ctx, metrics, true);
    return kOk;
}

model::ModelConfig checkpoint_model(const json& config) { return config::from_json(config).model; }

void require_compatible(const model::ModelConfig& expected, const model::ModelConfig& found, const std::string& what) {
    const auto d = model::encoder_config_diff(expected, found);
    if (d.empty()) return;
    std::string msg = what + " was built with a different model config:";
    for (const auto& line : d) msg += "\n  " + line;
    throw config::ConfigError(msg);
}

template <class T>
int cmd_continue_pretrain(const Context& ctx) {
    const auto ck_dir = ctx.path("checkpoints/continue_pretrain");
    const auto src_path = ctx.path("checkpoints/pretrain/final.ckpt");
    if (!fs::exists(src_path)) throw MissingDependency("missing " + src_path.string() + "; run pretrain first");
    const auto c = need_corpus(ctx);
    const auto train = need_split(c, "train");
    if (stage_done(ctx, ck_dir / "final.ckpt", ck_dir, "continued pre-training")) return kOk;
    const auto src = checkpoint::load<T>(src_path);
    const auto src_model = checkpoint_model(src.config);
    require_compatible(ctx.cfg.model, src_model, src_path.string());

    std::vector<std::vector<std::int32_t>> targets;
    const std::size_t layer = ctx.cfg.kmeans.refit_layer;
    if (layer == 0) {
        targets = load_targets(ctx.path("kmeans/targets.json"), train);
    } else {
        const auto refit_dir = ctx.path("kmeans_refit");
        auto layer_matrix = [&](const corpus::Utterance& u, std::size_t l) {
            ad::NoGradGuard no_grad;
            auto f = frontend::conv_feature_extractor<T>(u.wave, src.params, src_model.frontend);
            auto enc = model::encoder_forward<T>(f.frames, src.params, src_model);
            units::FeatureMatrix m;
            m.append_rows<T>(enc.hidden.at(l).data(), enc.hidden.at(l).dim(1));
            return m;
        };
        units::LayerFeatureFn fn = [&](std::size_t i, std::size_t l) { return layer_matrix(*train.at(i), l); };
        const auto km = units::refit_from_model_layer(fn, layer, src_model.encoder.n_layers, train.size(),
                                                      ctx.cfg.model.num_units, ctx.cfg.kmeans.max_iters,
                                                      derive_seed(ctx.cfg.seed, "kmeans-refit"));
        const auto utts = all_utterances(c);
        std::vector<std::vector<std::int32_t>> all_ids;
        for (const auto* u : utts) all_ids.push_back(units::kmeans_assign(km, layer_matrix(*u, layer)).ids);
        const double purity = purity_against_phones(utts, all_ids, ctx.cfg.model.frontend);
        units::save_kmeans(km, refit_dir);
        write_targets(refit_dir / "targets.json", utts, all_ids, purity);
        ctx.out << "refit k-means on encoder layer " << layer << ": purity " << purity << "\n";
        targets = load_targets(refit_dir / "targets.json", train);
    }
    training::TrainState<T> fresh;
    fresh.params = model::init_params<T>(ctx.cfg.model, derive_seed(ctx.cfg.seed, "continue-pretrain"),
                                         model::InitMode::kEncoderFromCheckpointDecoderRandom, &src.params, &src_model);
    auto state = resume_or<T>(ck_dir, "continue_pretrain", std::move(fresh), ctx.out);
    const auto metrics = training::pretrain(state, {train, targets}, ctx.cfg.model, ctx.cfg.pretrain, ctx.cfg.seed,
                                            "continue_pretrain", run_io(ctx, ck_dir));
    report_tail(ctx, metrics, true);
    return kOk;
}

std::string pick_source(const Context& ctx) {
    if (ctx.opts.from) {
        if (*ctx.opts.from != "pretrain" && *ctx.opts.from != "continue_pretrain") {
            throw config::ConfigError("--from must be pretrain or continue_pretrain, got '" + *ctx.opts.from + "'");
        }
        return *ctx.opts.from;
    }
    return fs::exists(ctx.path("checkpoints/continue_pretrain/final.ckpt")) ? "continue_pretrain" : "pretrain";
}

training::FinetuneMode pick_mode(const Context& ctx) {
    if (!ctx.opts.mode) return ctx.cfg.finetune.mode;
    try {
        return training::parse_finetune_mode(*ctx.opts.mode);
    } catch (const std::invalid_argument& e) {
        throw config::ConfigError(e.what());
    }
}

fs::path finetune_dir(const Context& ctx, const std::string& source, training::FinetuneMode mode) {
    return ctx.path("checkpoints/finetune_" + source + "_" + training::to_string(mode));
}

template <class T>
int cmd_finetune(const Context& ctx) {
    const auto source = pick_source(ctx);
    const auto mode = pick_mode(ctx);
    const auto src_path = ctx.path("checkpoints/" + source + "/final.ckpt");
    if (!fs::exists(src_path)) throw MissingDependency("missing " + src_path.string() + "; run " + source + " first");
    const auto ck_dir = finetune_dir(ctx, source, mode);
    const auto c = need_corpus(ctx);
    const auto train = need_split(c, "train");
    if (stage_done(ctx, ck_dir / "final.ckpt", ck_dir, "finetuned model")) return kOk;
    const auto src = checkpoint::load<T>(src_path);
    require_compatible(ctx.cfg.model, checkpoint_model(src.config), src_path.string());
    auto fcfg = ctx.cfg.finetune;
    fcfg.mode = mode;
    const auto data = training::make_finetune_data(train, ctx.cfg.corpus.n_latent_phones);
    training::TrainState<T> fresh;
    try {
        fresh = training::prepare_finetune<T>(src, ctx.cfg.model, fcfg, data.n_chars, derive_seed(ctx.cfg.seed, "finetune"));
    } catch (const std::invalid_argument& e) {
        throw config::ConfigError(e.what());
    }
    auto state = resume_or<T>(ck_dir, "finetune", std::move(fresh), ctx.out);
    auto io = run_io(ctx, ck_dir);
    io.config_snapshot["finetune"]["mode"] = training::to_string(mode);
    const auto metrics = training::finetune(state, data, ctx.cfg.model, fcfg, ctx.cfg.seed, io);
    report_tail(ctx, metrics, false);
    return kOk;
}

template <class T>
int cmd_evaluate(const Context& ctx) {
    const auto source = pick_source(ctx);
    const auto mode = pick_mode(ctx);
    const auto ck_path = finetune_dir(ctx, source, mode) / "final.ckpt";
    if (!fs::exists(ck_path)) {
        throw MissingDependency("missing " + ck_path.string() + "; run finetune --mode " + training::to_string(mode) + " first");
    }
    const auto c = need_corpus(ctx);
    const std::string split = ctx.opts.split.value_or(ctx.cfg.eval.split);
    const auto utts = need_split(c, split);
    std::string decoder = ctx.opts.decoder.value_or(ctx.cfg.eval.decoder);
    if (decoder == "auto") decoder = training::uses_decoder(mode) ? "attention" : "ctc";
    decoding::EvalOptions eo;
    try {
        eo.decoder = decoding::parse_decoder_kind(decoder);
    } catch (const std::invalid_argument& e) {
        throw config::ConfigError(e.what());
    }
    if (eo.decoder == decoding::DecoderKind::kAttention && !training::uses_decoder(mode)) {
        throw config::ConfigError("mode ctc_only_encoder has no decoder; use --decoder ctc");
    }
    eo.beam_size = ctx.cfg.eval.beam_size;
    eo.max_len = ctx.cfg.eval.max_len;
    eo.split = split;
    eo.model_tag = source + "." + training::to_string(mode) + "." + decoder;
    const auto eval_dir = ctx.path("eval");
    const auto tagged = eval_dir / ("report_" + eo.model_tag + "_" + split + ".json");
    if (stage_done(ctx, tagged, tagged, "evaluation report")) return kOk;
    const auto ck = checkpoint::load<T>(ck_path);
    const std::size_t n_chars = ck.extra.at("n_chars");
    const auto report = decoding::evaluate<T>(ck.params, ctx.cfg.model, n_chars, utts, eo);
    fs::create_directories(eval_dir);
    const auto text = decoding::to_json(report).dump(2) + "\n";
    write_text_file(tagged, text);
    write_text_file(eval_dir / "report.json", text);
    ctx.out << eo.model_tag << " on " << split << ": CER " << std::setprecision(4) << report.cer << " ("
            << report.total_distance << "/" << report.total_ref_chars << ")\n";
    return kOk;
}

template <class T>
int dispatch_typed(const std::string& command, const Context& ctx) {
    if (command == "discover-units") return cmd_discover_units<T>(ctx);
    if (command == "pretrain") return cmd_pretrain<T>(ctx);
    if (command == "continue-pretrain") return cmd_continue_pretrain<T>(ctx);
    if (command == "finetune") return cmd_finetune<T>(ctx);
    if (command == "evaluate") return cmd_evaluate<T>(ctx);
    throw std::logic_error("no typed command " + command);
}

int dispatch(const std::string& command, const Options& opts, std::ostream& out) {
    if (command == "print-config") {
        config::ExperimentConfig cfg;
        if (!opts.dir.empty() && fs::exists(opts.dir / "config.json") && !has_config_flags(opts)) {
            cfg = config::from_json(json::parse(read_text_file(opts.dir / "config.json")));
        } else {
            cfg = resolve_config(opts);
        }
        out << config::to_json(cfg).dump(2) << "\n";
        return kOk;
    }
    const bool creates = command == "gen-corpus" || command == "pipeline";
    Context ctx{opts.dir, open_dir(opts, creates, out), opts, out};
    if (command == "gen-corpus") return cmd_gen_corpus(ctx);
    if (command == "pipeline") {
        cmd_gen_corpus(ctx);
        for (const char* stage : {"discover-units", "pretrain", "finetune", "evaluate"}) {
            const int rc = ctx.cfg.precision == config::Precision::kF32 ? dispatch_typed<float>(stage, ctx)
                                                                         : dispatch_typed<double>(stage, ctx);
            if (rc != kOk) return rc;
        }
        return kOk;
    }
    return ctx.cfg.precision == config::Precision::kF32 ? dispatch_typed<float>(command, ctx)
                                                         : dispatch_typed<double>(command, ctx);
}

}  // namespace

int run(const std::string& command, const Options& opts, std::ostream& out, std::ostream& err) {
    const auto names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end()) {
        err << "error: unknown command '" << command << "'\n";
        return kConfigError;
    }
    try {
        return dispatch(command, opts, out);
    } catch (const config::ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const MissingDependency& e) {
        err << "missing dependency: " << e.what() << "\n";
        return kMissingDependency;
    } catch (const ad::NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace jedssl::experiment
