// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/config.hpp"

#include <set>
#include <type_traits>

namespace jedssl::config {

using nlohmann::json;

std::string to_string(Precision p) { return p == Precision::kF32 ? "f32" : "f64"; }

Precision parse_precision(const std::string& name) {
    if (name == "f32") return Precision::kF32;
    if (name == "f64") return Precision::kF64;
    throw ConfigError("precision must be f32 or f64, got '" + name + "'");
}

namespace {

// Reads keys from one object and rejects whatever was not consumed.
class Section {
   public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <class V>
    void read(const char* key, V& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if constexpr (std::is_unsigned_v<V>) {
            if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
                throw ConfigError(path_ + "." + key + ": expected a non-negative integer, got " + v.dump());
            }
        }
        try {
            out = v.get<V>();
        } catch (const json::exception& e) {
            throw ConfigError(path_ + "." + key + ": " + e.what());
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) throw ConfigError("unknown config key '" + (path_.empty() ? key : path_ + "." + key) + "'");
        }
    }

   private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json frontend_to_json(const frontend::FrontendConfig& f) {
    json layers = json::array();
    for (const auto& l : f.layers) layers.push_back({{"kernel", l.kernel}, {"stride", l.stride}});
    return {{"channels", f.channels}, {"layers", layers}};
}

void read_frontend(const json& j, frontend::FrontendConfig& f) {
    Section s(j, "frontend");
    s.read("channels", f.channels);
    if (const json* layers = s.child("layers")) {
        if (!layers->is_array() || layers->empty()) throw ConfigError("frontend.layers: expected a non-empty array");
        f.layers.clear();
        for (std::size_t i = 0; i < layers->size(); ++i) {
            frontend::ConvLayerSpec l;
            Section ls(layers->at(i), "frontend.layers[" + std::to_string(i) + "]");
            ls.read("kernel", l.kernel);
            ls.read("stride", l.stride);
            ls.finish();
            f.layers.push_back(l);
        }
    }
    s.finish();
}

json encoder_to_json(const model::EncoderConfig& e) {
    return {{"n_layers", e.n_layers}, {"n_heads", e.n_heads}, {"d_model", e.d_model}, {"d_ff", e.d_ff}, {"dropout", e.dropout}};
}

template <class C>
void read_stack(const json& j, const char* path, C& c) {
    Section s(j, path);
    s.read("n_layers", c.n_layers);
    s.read("n_heads", c.n_heads);
    s.read("d_model", c.d_model);
    s.read("d_ff", c.d_ff);
    s.read("dropout", c.dropout);
    s.finish();
}

json decoder_to_json(const model::DecoderConfig& d) {
    return {{"n_layers", d.n_layers}, {"n_heads", d.n_heads}, {"d_model", d.d_model}, {"d_ff", d.d_ff}, {"dropout", d.dropout}};
}

json corpus_to_json(const corpus::SyntheticCorpusSpec& c) {
    return {{"n_utterances", c.n_utterances},
            {"n_test_utterances", c.n_test_utterances},
            {"min_duration", c.min_duration},
            {"max_duration", c.max_duration},
            {"n_latent_phones", c.n_latent_phones},
            {"min_phone_duration", c.min_phone_duration},
            {"max_phone_duration", c.max_phone_duration},
            {"snr_db", c.snr_db},
            {"sample_rate", c.sample_rate},
            {"seed", c.seed}};
}

void read_corpus(const json& j, corpus::SyntheticCorpusSpec& c) {
    Section s(j, "corpus");
    s.read("n_utterances", c.n_utterances);
    s.read("n_test_utterances", c.n_test_utterances);
    s.read("min_duration", c.min_duration);
    s.read("max_duration", c.max_duration);
    s.read("n_latent_phones", c.n_latent_phones);
    s.read("min_phone_duration", c.min_phone_duration);
    s.read("max_phone_duration", c.max_phone_duration);
    s.read("snr_db", c.snr_db);
    s.read("sample_rate", c.sample_rate);
    s.read("seed", c.seed);
    s.finish();
}

}  // namespace

json model_to_json(const model::ModelConfig& cfg) {
    return {{"frontend", frontend_to_json(cfg.frontend)},
            {"encoder", encoder_to_json(cfg.encoder)},
            {"decoder", decoder_to_json(cfg.decoder)},
            {"num_units", cfg.num_units}};
}

model::ModelConfig model_from_json(const json& j) {
    model::ModelConfig cfg;
    Section s(j, "model");
    if (const json* f = s.child("frontend")) read_frontend(*f, cfg.frontend);
    if (const json* e = s.child("encoder")) read_stack(*e, "encoder", cfg.encoder);
    if (const json* d = s.child("decoder")) read_stack(*d, "decoder", cfg.decoder);
    s.read("num_units", cfg.num_units);
    s.finish();
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    const auto& p = cfg.pretrain;
    const auto& f = cfg.finetune;
    return {
        {"seed", cfg.seed},
        {"precision", to_string(cfg.precision)},
        {"corpus", corpus_to_json(cfg.corpus)},
        {"frontend", frontend_to_json(cfg.model.frontend)},
        {"kmeans", {{"num_clusters", cfg.model.num_units}, {"max_iters", cfg.kmeans.max_iters}, {"refit_layer", cfg.kmeans.refit_layer}}},
        {"mask", {{"selection_prob", p.mask.selection_prob}, {"span_length", p.mask.span_length}}},
        {"encoder", encoder_to_json(cfg.model.encoder)},
        {"decoder", decoder_to_json(cfg.model.decoder)},
        {"pretrain",
         {{"steps", p.steps},
          {"batch_frames", p.batch_frames},
          {"lr", p.lr},
          {"warmup_steps", p.warmup_steps},
          {"alpha", p.alpha},
          {"label_smoothing", p.label_smoothing},
          {"checkpoint_every", p.checkpoint_every},
          {"keep_last", p.keep_last}}},
        {"finetune",
         {{"mode", training::to_string(f.mode)},
          {"steps", f.steps},
          {"batch_frames", f.batch_frames},
          {"lr", f.lr},
          {"warmup_steps", f.warmup_steps},
          {"beta", f.beta},
          {"label_smoothing", f.label_smoothing},
          {"checkpoint_every", f.checkpoint_every},
          {"keep_last", f.keep_last}}},
        {"eval", {{"decoder", cfg.eval.decoder}, {"beam_size", cfg.eval.beam_size}, {"max_len", cfg.eval.max_len}, {"split", cfg.eval.split}}},
    };
}

ExperimentConfig from_json(const json& j) {
    ExperimentConfig cfg;
    Section top(j, "");
    top.read("seed", cfg.seed);
    std::string precision = to_string(cfg.precision);
    top.read("precision", precision);
    cfg.precision = parse_precision(precision);
    if (const json* c = top.child("corpus")) read_corpus(*c, cfg.corpus);
    if (const json* f = top.child("frontend")) read_frontend(*f, cfg.model.frontend);
    if (const json* k = top.child("kmeans")) {
        Section s(*k, "kmeans");
        s.read("num_clusters", cfg.model.num_units);
        s.read("max_iters", cfg.kmeans.max_iters);
        s.read("refit_layer", cfg.kmeans.refit_layer);
        s.finish();
    }
    if (const json* m = top.child("mask")) {
        Section s(*m, "mask");
        s.read("selection_prob", cfg.pretrain.mask.selection_prob);
        s.read("span_length", cfg.pretrain.mask.span_length);
        s.finish();
    }
    if (const json* e = top.child("encoder")) read_stack(*e, "encoder", cfg.model.encoder);
    if (const json* d = top.child("decoder")) read_stack(*d, "decoder", cfg.model.decoder);
    if (const json* pj = top.child("pretrain")) {
        auto& p = cfg.pretrain;
        Section s(*pj, "pretrain");
        s.read("steps", p.steps);
        s.read("batch_frames", p.batch_frames);
        s.read("lr", p.lr);
        s.read("warmup_steps", p.warmup_steps);
        s.read("alpha", p.alpha);
        s.read("label_smoothing", p.label_smoothing);
        s.read("checkpoint_every", p.checkpoint_every);
        s.read("keep_last", p.keep_last);
        s.finish();
    }
    if (const json* fj = top.child("finetune")) {
        auto& f = cfg.finetune;
        Section s(*fj, "finetune");
        std::string mode = training::to_string(f.mode);
        s.read("mode", mode);
        try {
            f.mode = training::parse_finetune_mode(mode);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("finetune.mode: ") + e.what());
        }
        s.read("steps", f.steps);
        s.read("batch_frames", f.batch_frames);
        s.read("lr", f.lr);
        s.read("warmup_steps", f.warmup_steps);
        s.read("beta", f.beta);
        s.read("label_smoothing", f.label_smoothing);
        s.read("checkpoint_every", f.checkpoint_every);
        s.read("keep_last", f.keep_last);
        s.finish();
    }
    if (const json* ej = top.child("eval")) {
        Section s(*ej, "eval");
        s.read("decoder", cfg.eval.decoder);
        s.read("beam_size", cfg.eval.beam_size);
        s.read("max_len", cfg.eval.max_len);
        s.read("split", cfg.eval.split);
        s.finish();
    }
    top.finish();
    validate(cfg);
    return cfg;
}

void validate(const ExperimentConfig& cfg) {
    try {
        corpus::validate(cfg.corpus);
        model::validate(cfg.model);
        training::validate(cfg.pretrain);
        training::validate(cfg.finetune);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.kmeans.max_iters == 0) throw ConfigError("kmeans.max_iters must be positive");
    if (cfg.kmeans.refit_layer > cfg.model.encoder.n_layers) {
        throw ConfigError("kmeans.refit_layer " + std::to_string(cfg.kmeans.refit_layer) + " exceeds encoder depth " +
                          std::to_string(cfg.model.encoder.n_layers));
    }
    if (cfg.eval.decoder != "auto" && cfg.eval.decoder != "ctc" && cfg.eval.decoder != "attention") {
        throw ConfigError("eval.decoder must be auto, ctc or attention");
    }
    if (cfg.eval.beam_size == 0 || cfg.eval.max_len == 0) throw ConfigError("eval.beam_size and eval.max_len must be positive");
    if (cfg.eval.split != "train" && cfg.eval.split != "test") throw ConfigError("eval.split must be train or test");
}

std::vector<std::string> preset_names() { return {"desk-tiny", "desk-small", "paper-360h"}; }

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig cfg;
    if (name == "desk-tiny") {
        cfg.corpus.n_utterances = 4;
        cfg.corpus.n_test_utterances = 0;
        cfg.corpus.n_latent_phones = 5;
        cfg.model.frontend.channels = 32;
        cfg.model.encoder = {2, 4, 32, 64, 0.0};
        cfg.model.decoder = {1, 4, 32, 64, 0.0};
        cfg.model.num_units = 8;
        cfg.pretrain.steps = 1000;
        cfg.pretrain.batch_frames = 200;
        cfg.pretrain.checkpoint_every = 250;
        cfg.finetune.steps = 1000;
        cfg.finetune.batch_frames = 200;
        cfg.finetune.checkpoint_every = 250;
        cfg.eval.split = "train";
        cfg.eval.beam_size = 2;
    } else if (name == "desk-small") {
        cfg.corpus.n_utterances = 200;
        cfg.corpus.n_test_utterances = 40;
        cfg.corpus.n_latent_phones = 8;
        cfg.corpus.max_duration = 1.0;
        cfg.model.num_units = 16;
        cfg.kmeans.refit_layer = 2;
        cfg.pretrain.steps = 3000;
        cfg.pretrain.batch_frames = 800;
        cfg.finetune.steps = 2000;
        cfg.finetune.batch_frames = 800;
        cfg.precision = Precision::kF32;
    } else if (name == "paper-360h") {
        cfg.model.frontend.channels = 512;
        cfg.model.frontend.layers = {{10, 5}, {3, 2}, {3, 2}, {3, 2}, {3, 2}, {2, 2}, {2, 2}};
        cfg.model.encoder = {12, 8, 768, 3072, 0.1};
        cfg.model.decoder = {8, 8, 768, 2048, 0.1};
        cfg.model.num_units = 500;
        cfg.kmeans.refit_layer = 6;
        cfg.pretrain.lr = 1e-4;
        cfg.pretrain.warmup_steps = 25000;
        cfg.pretrain.steps = 400000;
        cfg.pretrain.batch_frames = 15000000;
        cfg.pretrain.alpha = 0.5;
        cfg.finetune.lr = 2e-5;
        cfg.finetune.warmup_steps = 8000;
        cfg.finetune.steps = 100000;
        cfg.finetune.batch_frames = 15000000;
        cfg.finetune.beta = 0.3;
        cfg.precision = Precision::kF32;
    } else {
        std::string known;
        for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
    }
    validate(cfg);
    return cfg;
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
        if (dot == std::string::npos) {
            if (!node->is_object()) throw ConfigError("override '" + assignment + "' does not address an object");
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key) || !(*node)[key].is_object()) throw ConfigError("unknown config section '" + path.substr(0, dot) + "'");
        node = &(*node)[key];
        start = dot + 1;
    }
}

std::vector<std::string> diff(const json& a, const json& b, const std::string& prefix) {
    std::vector<std::string> out;
    if (a.is_object() && b.is_object()) {
        std::set<std::string> keys;
        for (const auto& [k, v] : a.items()) keys.insert(k);
        for (const auto& [k, v] : b.items()) keys.insert(k);
        for (const auto& k : keys) {
            const std::string path = prefix.empty() ? k : prefix + "." + k;
            if (!a.contains(k) || !b.contains(k)) {
                out.push_back(path + ": present on one side only");
                continue;
            }
            auto sub = diff(a.at(k), b.at(k), path);
            out.insert(out.end(), sub.begin(), sub.end());
        }
    } else if (a != b) {
        out.push_back((prefix.empty() ? std::string("<root>") : prefix) + ": " + a.dump() + " vs " + b.dump());
    }
    return out;
}

}  // namespace jedssl::config
