// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/corpus.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "jedssl/rng.hpp"
#include "jedssl/serialize.hpp"

namespace jedssl::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

void validate(const SyntheticCorpusSpec& spec) {
    auto fail = [](const std::string& what) { throw std::invalid_argument("corpus spec: " + what); };
    if (spec.n_latent_phones < 2 || spec.n_latent_phones > 26) fail("n_latent_phones must be in [2, 26]");
    if (!(spec.min_duration > 0.0) || spec.max_duration < spec.min_duration) fail("bad duration range");
    if (!(spec.min_phone_duration > 0.0) || spec.max_phone_duration < spec.min_phone_duration) {
        fail("bad phone duration range");
    }
    if (spec.min_duration < 2.0 * spec.min_phone_duration) fail("utterances must hold at least two phones");
    if (spec.sample_rate == 0) fail("sample_rate must be positive");
}

std::vector<std::int32_t> Utterance::phones() const {
    std::vector<std::int32_t> out;
    out.reserve(segments.size());
    for (const auto& s : segments) out.push_back(s.phone);
    return out;
}

std::int32_t Utterance::phone_at(std::size_t begin, std::size_t end) const {
    const std::size_t centre = begin + (end - begin) / 2;
    for (const auto& s : segments) {
        if (centre >= s.begin && centre < s.end) return s.phone;
    }
    return segments.back().phone;
}

std::vector<const Utterance*> Corpus::split(const std::string& name) const {
    std::vector<const Utterance*> out;
    for (const auto& u : utterances) {
        if (u.split == name) out.push_back(&u);
    }
    return out;
}

char phone_letter(std::int32_t phone) {
    if (phone < 0 || phone >= 26) throw std::out_of_range("phone id " + std::to_string(phone) + " has no letter");
    return static_cast<char>('a' + phone);
}

std::int32_t letter_phone(char letter) {
    if (letter < 'a' || letter > 'z') throw std::out_of_range(std::string("not a phone letter: '") + letter + "'");
    return letter - 'a';
}

std::string transcript_of(const std::vector<std::int32_t>& phones) {
    std::string s;
    for (auto p : phones) s.push_back(phone_letter(p));
    return s;
}

namespace {

struct Texture {
    double f1;
    double f2;
};

// Evenly spaced tone pairs across the band. The second tone runs in reverse
// order, so every phone differs from every other in both tones.
Texture texture_of(std::int32_t phone, std::size_t n_phones, std::uint32_t sample_rate) {
    const double nyquist = 0.5 * sample_rate;
    const double lo = 0.03 * nyquist, hi = 0.85 * nyquist;
    const double step = (hi - lo) / static_cast<double>(n_phones - 1);
    const double f1 = lo + step * phone;
    const double f2 = lo + step * static_cast<double>(static_cast<std::int32_t>(n_phones) - 1 - phone) + 0.5 * step;
    return {f1, std::min(f2, 0.95 * nyquist)};
}

Utterance render_utterance(const SyntheticCorpusSpec& spec, std::size_t index, const std::string& split) {
    auto rng = make_rng(derive_seed(spec.seed, index));
    const double rate = spec.sample_rate;
    std::uniform_real_distribution<double> dur(spec.min_duration, spec.max_duration);
    const auto total = static_cast<std::size_t>(std::llround(dur(rng) * rate));
    const auto seg_min = static_cast<std::size_t>(std::llround(spec.min_phone_duration * rate));
    const auto seg_max = static_cast<std::size_t>(std::llround(spec.max_phone_duration * rate));

    Utterance utt;
    utt.id = split + "_" + std::to_string(index);
    utt.split = split;
    utt.wave.sample_rate = spec.sample_rate;
    utt.wave.samples.assign(total, 0.0f);

    std::uniform_int_distribution<std::int32_t> phone_dist(0, static_cast<std::int32_t>(spec.n_latent_phones) - 1);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> gain(0.8, 1.2);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::size_t pos = 0;
    std::int32_t prev = -1;
    while (pos < total) {
        const std::size_t remaining = total - pos;
        std::size_t len;
        if (remaining < 2 * seg_min) {
            len = remaining;
        } else {
            std::uniform_int_distribution<std::size_t> seg(seg_min, std::min(seg_max, remaining - seg_min));
            len = seg(rng);
        }
        std::int32_t p;
        do {
            p = phone_dist(rng);
        } while (p == prev);
        prev = p;

        const Texture tex = texture_of(p, spec.n_latent_phones, spec.sample_rate);
        const double ph1 = phase(rng), ph2 = phase(rng), g = gain(rng);
        const double signal_rms = g * 0.5 * std::sqrt(0.5 * (1.0 + 0.36));
        const double noise_std = signal_rms / std::pow(10.0, spec.snr_db / 20.0);
        for (std::size_t i = 0; i < len; ++i) {
            const double t = static_cast<double>(pos + i) / rate;
            const double s = 0.5 * g *
                             (std::sin(2.0 * std::numbers::pi * tex.f1 * t + ph1) +
                              0.6 * std::sin(2.0 * std::numbers::pi * tex.f2 * t + ph2));
            utt.wave.samples[pos + i] = static_cast<float>(s + noise_std * noise(rng));
        }
        utt.segments.push_back({p, pos, pos + len});
        pos += len;
    }
    utt.transcript = transcript_of(utt.phones());
    return utt;
}

}  // namespace

Corpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
    validate(spec);
    Corpus corpus;
    corpus.spec = spec;
    const std::size_t n = spec.n_utterances + spec.n_test_utterances;
    corpus.utterances.resize(n);
    // Utterance i draws only from its own stream, so the loop order is free.
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const bool train = idx < spec.n_utterances;
        corpus.utterances[idx] = render_utterance(spec, idx, train ? "train" : "test");
    }
    return corpus;
}

namespace {

json spec_to_json(const SyntheticCorpusSpec& s) {
    return {{"n_utterances", s.n_utterances},
            {"n_test_utterances", s.n_test_utterances},
            {"min_duration", s.min_duration},
            {"max_duration", s.max_duration},
            {"n_latent_phones", s.n_latent_phones},
            {"min_phone_duration", s.min_phone_duration},
            {"max_phone_duration", s.max_phone_duration},
            {"snr_db", s.snr_db},
            {"sample_rate", s.sample_rate},
            {"seed", s.seed}};
}

SyntheticCorpusSpec spec_from_json(const json& j) {
    SyntheticCorpusSpec s;
    s.n_utterances = j.at("n_utterances");
    s.n_test_utterances = j.at("n_test_utterances");
    s.min_duration = j.at("min_duration");
    s.max_duration = j.at("max_duration");
    s.n_latent_phones = j.at("n_latent_phones");
    s.min_phone_duration = j.at("min_phone_duration");
    s.max_phone_duration = j.at("max_phone_duration");
    s.snr_db = j.at("snr_db");
    s.sample_rate = j.at("sample_rate");
    s.seed = j.at("seed");
    return s;
}

}  // namespace

void save_corpus(const Corpus& corpus, const fs::path& dir) {
    const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::current_path();
    if (!fs::is_directory(parent)) {
        throw std::runtime_error("save_corpus: parent directory " + parent.string() + " does not exist");
    }
    // Build in a staging directory, then move into place.
    fs::path staging = dir;
    staging += ".partial";
    fs::remove_all(staging);
    fs::create_directory(staging);
    json utts = json::array();
    for (const auto& u : corpus.utterances) {
        json segs = json::array();
        for (const auto& s : u.segments) segs.push_back({s.phone, s.begin, s.end});
        utts.push_back({{"id", u.id},
                        {"split", u.split},
                        {"duration", u.duration()},
                        {"num_samples", u.wave.samples.size()},
                        {"sample_rate", u.wave.sample_rate},
                        {"transcript", u.transcript},
                        {"segments", segs}});
        write_f32_file(staging / (u.id + ".f32"), u.wave.samples);
    }
    json manifest = {{"format", "jedssl-corpus"}, {"version", 1}, {"spec", spec_to_json(corpus.spec)}, {"utterances", utts}};
    write_text_file(staging / "manifest.json", manifest.dump(2) + "\n");
    fs::remove_all(dir);
    fs::rename(staging, dir);
}

Corpus load_corpus(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw std::runtime_error("load_corpus: missing " + manifest_path.string());
    const json manifest = json::parse(read_text_file(manifest_path));
    if (manifest.value("format", "") != "jedssl-corpus") {
        throw std::runtime_error("load_corpus: " + manifest_path.string() + " is not a corpus manifest");
    }
    Corpus corpus;
    corpus.spec = spec_from_json(manifest.at("spec"));
    for (const auto& j : manifest.at("utterances")) {
        Utterance u;
        u.id = j.at("id");
        u.split = j.at("split");
        u.transcript = j.at("transcript");
        u.wave.sample_rate = j.at("sample_rate");
        u.wave.samples = read_f32_file(dir / (u.id + ".f32"));
        if (u.wave.samples.size() != j.at("num_samples").get<std::size_t>()) {
            throw std::runtime_error("load_corpus: sample count mismatch for " + u.id);
        }
        for (const auto& s : j.at("segments")) u.segments.push_back({s.at(0), s.at(1), s.at(2)});
        corpus.utterances.push_back(std::move(u));
    }
    return corpus;
}

std::vector<std::int32_t> frame_phone_labels(const Utterance& utt, const frontend::FrontendConfig& cfg) {
    const std::size_t frames = frontend::frame_count(cfg, utt.wave.samples.size());
    const std::size_t stride = frontend::total_stride(cfg);
    const std::size_t field = frontend::receptive_field(cfg);
    std::vector<std::int32_t> labels(frames);
    for (std::size_t t = 0; t < frames; ++t) labels[t] = utt.phone_at(t * stride, t * stride + field);
    return labels;
}

}  // namespace jedssl::corpus
