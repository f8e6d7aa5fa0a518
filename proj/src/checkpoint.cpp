// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "jedssl/serialize.hpp"

namespace jedssl::checkpoint {

using nlohmann::json;

namespace {

constexpr std::size_t kMagicBytes = 8;
constexpr std::size_t kHeaderBytes = kMagicBytes + 8;

template <class T>
std::vector<T> decode_values(std::string_view bytes, std::size_t offset, std::size_t count) {
    if constexpr (std::is_same_v<T, float>) {
        return decode_le_f32(bytes, offset, count);
    } else {
        return decode_le_f64(bytes, offset, count);
    }
}

[[noreturn]] void manifest_mismatch(const std::string& origin, const std::string& field, const std::string& expected,
                           const std::string& found) {
    throw CheckpointError("checkpoint " + origin + ": manifest mismatch\n  " + field + ": expected " + expected +
                          ", found " + found);
}

}  // namespace

template <>
std::string dtype_name<float>() {
    return "f32";
}
template <>
std::string dtype_name<double>() {
    return "f64";
}

std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in pieces.
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

template <class T>
std::string encode(const Checkpoint<T>& ck) {
    std::string payload;
    json tensors = json::array();
    std::size_t offset = 0;
    for (const auto& name : ck.params.names()) {
        const auto& t = ck.params.get(name);
        tensors.push_back({{"name", name},
                           {"shape", t.shape()},
                           {"offset", offset},
                           {"requires_grad", t.requires_grad()}});
        append_le(payload, t.data());
        offset += t.numel();
    }
    json moments = json::array();
    for (const auto& [name, m] : ck.adam.first_moment) {
        auto v = ck.adam.second_moment.find(name);
        if (v == ck.adam.second_moment.end() || v->second.size() != m.size()) {
            throw CheckpointError("checkpoint: optimizer moments for " + name + " are inconsistent");
        }
        moments.push_back({{"name", name}, {"count", m.size()}, {"first_offset", offset}, {"second_offset", offset + m.size()}});
        append_le(payload, std::span<const T>(m));
        append_le(payload, std::span<const T>(v->second));
        offset += 2 * m.size();
    }
    const std::string config_text = ck.config.dump();
    json manifest = {{"format_version", kFormatVersion},
                     {"dtype", dtype_name<T>()},
                     {"stage", ck.stage},
                     {"seed", ck.seed},
                     {"step", ck.step},
                     {"loss", ck.loss},
                     {"schedule", {{"peak_lr", ck.schedule.peak_lr}, {"warmup_steps", ck.schedule.warmup_steps}}},
                     {"adam",
                      {{"beta1", ck.adam.hyper.beta1},
                       {"beta2", ck.adam.hyper.beta2},
                       {"epsilon", ck.adam.hyper.epsilon},
                       {"step", ck.adam.step}}},
                     {"config", ck.config},
                     {"config_fingerprint", crc32_of(config_text)},
                     {"extra", ck.extra},
                     {"tensors", tensors},
                     {"moments", moments},
                     {"payload_elements", offset},
                     {"payload_crc32", crc32_of(payload)}};
    const std::string text = manifest.dump();
    std::string out(kMagic, kMagicBytes);
    append_le_u64(out, text.size());
    out += text;
    out += payload;
    return out;
}

template <class T>
Checkpoint<T> decode(std::string_view bytes, const std::string& origin) {
    if (bytes.size() < kHeaderBytes) manifest_mismatch(origin, "size", ">= " + std::to_string(kHeaderBytes) + " bytes", std::to_string(bytes.size()));
    if (bytes.substr(0, kMagicBytes) != std::string_view(kMagic, kMagicBytes)) {
        manifest_mismatch(origin, "magic", kMagic, "'" + std::string(bytes.substr(0, kMagicBytes)) + "'");
    }
    const std::uint64_t manifest_len = decode_le_u64(bytes, kMagicBytes);
    if (manifest_len > bytes.size() - kHeaderBytes) {
        manifest_mismatch(origin, "manifest length", "<= " + std::to_string(bytes.size() - kHeaderBytes), std::to_string(manifest_len));
    }
    json manifest;
    try {
        manifest = json::parse(bytes.substr(kHeaderBytes, manifest_len));
    } catch (const json::exception& e) {
        throw CheckpointError("checkpoint " + origin + ": unreadable manifest: " + e.what());
    }
    const int version = manifest.value("format_version", -1);
    if (version != kFormatVersion) manifest_mismatch(origin, "format_version", std::to_string(kFormatVersion), std::to_string(version));
    const std::string dtype = manifest.value("dtype", "?");
    if (dtype != dtype_name<T>()) manifest_mismatch(origin, "dtype", dtype_name<T>(), dtype);

    const std::string_view payload = bytes.substr(kHeaderBytes + manifest_len);
    const std::size_t elements = manifest.at("payload_elements");
    if (payload.size() != elements * sizeof(T)) {
        manifest_mismatch(origin, "payload bytes", std::to_string(elements * sizeof(T)), std::to_string(payload.size()));
    }
    const std::uint32_t crc = manifest.at("payload_crc32");
    if (crc32_of(payload) != crc) manifest_mismatch(origin, "payload_crc32", std::to_string(crc), std::to_string(crc32_of(payload)));
    const std::uint32_t fingerprint = manifest.at("config_fingerprint");
    const std::uint32_t config_crc = crc32_of(manifest.at("config").dump());
    if (config_crc != fingerprint) manifest_mismatch(origin, "config_fingerprint", std::to_string(fingerprint), std::to_string(config_crc));

    Checkpoint<T> ck;
    ck.stage = manifest.at("stage").get<std::string>();
    ck.seed = manifest.at("seed");
    ck.step = manifest.at("step");
    ck.loss = manifest.at("loss");
    ck.schedule.peak_lr = manifest.at("schedule").at("peak_lr");
    ck.schedule.warmup_steps = manifest.at("schedule").at("warmup_steps");
    const auto& adam = manifest.at("adam");
    ck.adam.hyper.beta1 = adam.at("beta1");
    ck.adam.hyper.beta2 = adam.at("beta2");
    ck.adam.hyper.epsilon = adam.at("epsilon");
    ck.adam.step = adam.at("step");
    ck.config = manifest.at("config");
    ck.extra = manifest.at("extra");
    for (const auto& t : manifest.at("tensors")) {
        ad::Shape shape = t.at("shape").get<ad::Shape>();
        const std::size_t offset = t.at("offset");
        const std::size_t n = ad::numel(shape);
        if (offset + n > elements) manifest_mismatch(origin, "tensor " + t.at("name").get<std::string>(), "inside payload", "past the end");
        ck.params.add(t.at("name").get<std::string>(), ad::Tensor<T>::from(std::move(shape), decode_values<T>(payload, offset * sizeof(T), n),
                                                        t.at("requires_grad")));
    }
    for (const auto& m : manifest.at("moments")) {
        const std::string name = m.at("name");
        const std::size_t count = m.at("count");
        const std::size_t first = m.at("first_offset"), second = m.at("second_offset");
        if (first + count > elements || second + count > elements) manifest_mismatch(origin, "moments " + name, "inside payload", "past the end");
        ck.adam.first_moment[name] = decode_values<T>(payload, first * sizeof(T), count);
        ck.adam.second_moment[name] = decode_values<T>(payload, second * sizeof(T), count);
    }
    return ck;
}

template <class T>
void save(const Checkpoint<T>& ck, const std::filesystem::path& path) {
    write_text_file(path, encode(ck));
}

template <class T>
Checkpoint<T> load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw CheckpointError("checkpoint " + path.string() + " does not exist");
    return decode<T>(read_text_file(path), path.string());
}

json read_manifest(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw CheckpointError("checkpoint " + path.string() + " does not exist");
    std::ifstream in(path, std::ios::binary);
    std::string header(kHeaderBytes, '\0');
    in.read(header.data(), static_cast<std::streamsize>(kHeaderBytes));
    if (in.gcount() != static_cast<std::streamsize>(kHeaderBytes) || header.compare(0, kMagicBytes, kMagic) != 0) {
        throw CheckpointError("checkpoint " + path.string() + ": bad header");
    }
    const std::uint64_t len = decode_le_u64(header, kMagicBytes);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::uint64_t>(in.gcount()) != len) throw CheckpointError("checkpoint " + path.string() + ": truncated manifest");
    return json::parse(text);
}

template std::string encode<float>(const Checkpoint<float>&);
template std::string encode<double>(const Checkpoint<double>&);
template Checkpoint<float> decode<float>(std::string_view, const std::string&);
template Checkpoint<double> decode<double>(std::string_view, const std::string&);
template void save<float>(const Checkpoint<float>&, const std::filesystem::path&);
template void save<double>(const Checkpoint<double>&, const std::filesystem::path&);
template Checkpoint<float> load<float>(const std::filesystem::path&);
template Checkpoint<double> load<double>(const std::filesystem::path&);

}  // namespace jedssl::checkpoint
