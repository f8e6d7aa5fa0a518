// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/serialize.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace jedssl {

namespace {

template <class U>
void put_le(std::string& out, U bits) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <class U>
U get_le(std::string_view bytes, std::size_t offset) {
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        bits |= static_cast<U>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    }
    return bits;
}

void require_bytes(std::string_view bytes, std::size_t offset, std::size_t n) {
    if (offset > bytes.size() || bytes.size() - offset < n) {
        throw std::runtime_error("binary payload truncated: need " + std::to_string(n) + " bytes at offset " +
                                 std::to_string(offset) + ", have " + std::to_string(bytes.size()));
    }
}

}  // namespace

void append_le(std::string& out, std::span<const float> values) {
    out.reserve(out.size() + 4 * values.size());
    for (float v : values) put_le(out, std::bit_cast<std::uint32_t>(v));
}

void append_le(std::string& out, std::span<const double> values) {
    out.reserve(out.size() + 8 * values.size());
    for (double v : values) put_le(out, std::bit_cast<std::uint64_t>(v));
}

void append_le_u64(std::string& out, std::uint64_t value) { put_le(out, value); }

std::vector<float> decode_le_f32(std::string_view bytes, std::size_t offset, std::size_t count) {
    require_bytes(bytes, offset, 4 * count);
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset + 4 * i));
    return out;
}

std::vector<double> decode_le_f64(std::string_view bytes, std::size_t offset, std::size_t count) {
    require_bytes(bytes, offset, 8 * count);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, offset + 8 * i));
    }
    return out;
}

std::uint64_t decode_le_u64(std::string_view bytes, std::size_t offset) {
    require_bytes(bytes, offset, 8);
    return get_le<std::uint64_t>(bytes, offset);
}

void write_f32_file(const std::filesystem::path& path, std::span<const float> values) {
    std::string bytes;
    append_le(bytes, values);
    write_text_file(path, bytes);
}

std::vector<float> read_f32_file(const std::filesystem::path& path) {
    const std::string bytes = read_text_file(path);
    if (bytes.size() % 4 != 0) throw std::runtime_error(path.string() + ": size is not a multiple of 4 bytes");
    return decode_le_f32(bytes, 0, bytes.size() / 4);
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void append_line(const std::filesystem::path& path, std::string_view line) {
    std::string buf(line);
    buf.push_back('\n');
    std::FILE* f = std::fopen(path.c_str(), "ab");
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for appending");
    const std::size_t written = std::fwrite(buf.data(), 1, buf.size(), f);
    std::fclose(f);
    if (written != buf.size()) throw std::runtime_error("short write to " + path.string());
}

}  // namespace jedssl
