// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic speech stand-in. Each utterance is a chain of hidden
// "phone" segments; every phone has a fixed two-tone texture with additive
// white noise. The phone sequence and its segment boundaries are kept as
// ground truth, and the transcript spells phone i as the letter 'a' + i.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "jedssl/frontend.hpp"

namespace jedssl::corpus {

struct SyntheticCorpusSpec {
    std::size_t n_utterances = 4;
    std::size_t n_test_utterances = 0;
    double min_duration = 0.4;  // seconds
    double max_duration = 0.6;
    std::size_t n_latent_phones = 8;
    double min_phone_duration = 0.06;
    double max_phone_duration = 0.14;
    double snr_db = 20.0;
    std::uint32_t sample_rate = 16000;
    std::uint64_t seed = 1;
};

void validate(const SyntheticCorpusSpec& spec);

struct PhoneSegment {
    std::int32_t phone = 0;
    std::size_t begin = 0;  // samples, half-open
    std::size_t end = 0;
};

struct Utterance {
    std::string id;
    std::string split;  // "train" or "test"
    frontend::Waveform wave;
    std::vector<PhoneSegment> segments;
    std::string transcript;

    double duration() const {
        return static_cast<double>(wave.samples.size()) / static_cast<double>(wave.sample_rate);
    }
    std::vector<std::int32_t> phones() const;
    // Phone under the centre sample of [begin, end).
    std::int32_t phone_at(std::size_t begin, std::size_t end) const;
};

struct Corpus {
    SyntheticCorpusSpec spec;
    std::vector<Utterance> utterances;

    std::vector<const Utterance*> split(const std::string& name) const;
};

char phone_letter(std::int32_t phone);
std::int32_t letter_phone(char letter);
std::string transcript_of(const std::vector<std::int32_t>& phones);

Corpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

// Directory layout: manifest.json plus one raw little-endian float32 file per
// utterance (<id>.f32). save refuses a missing parent directory.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

// Phone label of every output frame (centre-sample rule), for purity checks.
std::vector<std::int32_t> frame_phone_labels(const Utterance& utt, const frontend::FrontendConfig& cfg);

}  // namespace jedssl::corpus
