/*
 * SPDX-FileCopyrightText: Copyright 2026 The modsca Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Little-endian byte streams shared by the .scmd and .sctr containers.

#include "modsca/errors.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace modsca {

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void tag(std::string_view magic) { bytes_.insert(bytes_.end(), magic.begin(), magic.end()); }
    void raw(std::span<const std::uint8_t> data) {
        bytes_.insert(bytes_.end(), data.begin(), data.end());
    }

    /// Appends the CRC32 of everything written so far.
    void seal() { u32(crc32(bytes_)); }

    std::size_t size() const { return bytes_.size(); }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    void put(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i)
            bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> bytes_;
};

/// Bounds-checked reader. Every failure is a FormatError carrying the offset.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32() { return std::bit_cast<float>(u32()); }

    void expect_tag(std::string_view magic) {
        need(magic.size());
        for (std::size_t i = 0; i < magic.size(); ++i)
            if (bytes_[offset_ + i] != static_cast<std::uint8_t>(magic[i]))
                throw FormatError("bad magic, expected \"" + std::string(magic) + "\"",
                                  offset_);
        offset_ += magic.size();
    }

    std::span<const std::uint8_t> raw(std::size_t count) {
        need(count);
        auto out = bytes_.subspan(offset_, count);
        offset_ += count;
        return out;
    }

    void need(std::size_t count) const {
        if (count > remaining())
            throw FormatError("truncated input: need " + std::to_string(count) +
                                  " bytes, " + std::to_string(remaining()) + " left",
                              offset_);
    }

    std::size_t offset() const { return offset_; }
    std::size_t remaining() const { return bytes_.size() - offset_; }

private:
    std::uint64_t get(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i)
            v |= static_cast<std::uint64_t>(bytes_[offset_ + i]) << (8 * i);
        offset_ += static_cast<std::size_t>(width);
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t offset_ = 0;
};

/// Checks the trailing CRC32 and returns the payload without it.
std::span<const std::uint8_t> verify_crc(std::span<const std::uint8_t> bytes,
                                         std::size_t min_payload);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path);
void write_file_bytes(const std::filesystem::path &path,
                      std::span<const std::uint8_t> bytes);

} // namespace modsca
