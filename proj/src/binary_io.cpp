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

#include "modsca/binary_io.hpp"

#include <fstream>
#include <iterator>

#include <zlib.h>

namespace modsca {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks to stay portable.
    constexpr std::size_t chunk = 1u << 30;
    for (std::size_t at = 0; at < bytes.size(); at += chunk) {
        const std::size_t len = std::min(chunk, bytes.size() - at);
        crc = ::crc32(crc, bytes.data() + at, static_cast<uInt>(len));
    }
    return static_cast<std::uint32_t>(crc);
}

std::span<const std::uint8_t> verify_crc(std::span<const std::uint8_t> bytes,
                                         std::size_t min_payload) {
    if (bytes.size() < min_payload + 4)
        throw FormatError("truncated input: " + std::to_string(bytes.size()) +
                              " bytes is shorter than the minimal container",
                          bytes.size());
    const auto payload = bytes.first(bytes.size() - 4);
    ByteReader tail(bytes.last(4));
    const std::uint32_t stored = tail.u32();
    if (stored != crc32(payload))
        throw FormatError("CRC32 mismatch", payload.size());
    return payload;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path &path,
                      std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char *>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw DataError("failed writing " + path.string());
}

} // namespace modsca
