// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-file checkpoints: an 8-byte magic, the manifest length as a
// little-endian u64, a JSON manifest, then the raw little-endian payload.
// The payload element width follows the training precision so that 64-bit
// runs resume bit-exactly.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "jedssl/optim.hpp"

namespace jedssl::checkpoint {

inline constexpr int kFormatVersion = 1;
inline constexpr char kMagic[9] = "JEDSSLCK";

class CheckpointError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

template <class T>
struct Checkpoint {
    std::string stage;  // "pretrain", "continue_pretrain", "finetune"
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    double loss = 0.0;
    ad::WarmupSchedule schedule;
    nlohmann::json config;               // snapshot used to build the params
    nlohmann::json extra = nlohmann::json::object();  // stage-specific facts
    ad::ParamStore<T> params;
    ad::AdamState<T> adam;
};

template <class T>
std::string dtype_name();

std::uint32_t crc32_of(std::string_view bytes);

template <class T>
std::string encode(const Checkpoint<T>& ck);

// Throws CheckpointError naming the manifest fields that disagree with what
// this build expects (magic, version, dtype, checksums).
template <class T>
Checkpoint<T> decode(std::string_view bytes, const std::string& origin = "<memory>");

template <class T>
void save(const Checkpoint<T>& ck, const std::filesystem::path& path);

template <class T>
Checkpoint<T> load(const std::filesystem::path& path);

// Manifest only, without materializing tensors.
nlohmann::json read_manifest(const std::filesystem::path& path);

}  // namespace jedssl::checkpoint
