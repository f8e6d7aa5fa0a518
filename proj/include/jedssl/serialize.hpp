// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Little-endian float payloads and whole-file text I/O.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace jedssl {

void append_le(std::string& out, std::span<const float> values);
void append_le(std::string& out, std::span<const double> values);
void append_le_u64(std::string& out, std::uint64_t value);

// Decodes `count` values starting at `offset`; throws on truncated input.
std::vector<float> decode_le_f32(std::string_view bytes, std::size_t offset, std::size_t count);
std::vector<double> decode_le_f64(std::string_view bytes, std::size_t offset, std::size_t count);
std::uint64_t decode_le_u64(std::string_view bytes, std::size_t offset);

void write_f32_file(const std::filesystem::path& path, std::span<const float> values);
std::vector<float> read_f32_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames, so readers never see a
// partially written file.
void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

// Appends one line with a single write call.
void append_line(const std::filesystem::path& path, std::string_view line);

}  // namespace jedssl
