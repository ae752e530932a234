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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

namespace modsca {

/// AES forward S-box.
extern const std::array<std::uint8_t, 256> kAesSbox;

enum class LeakageKind : std::uint8_t { SboxIdentity = 0, SboxHammingWeight = 1 };

/// Maps a plaintext byte and a key hypothesis to a class label.
struct LeakageModel {
    LeakageKind kind = LeakageKind::SboxIdentity;
    /// Index of the attacked key byte (informational; traces carry one byte).
    unsigned target_byte = 2;

    std::size_t class_count() const {
        return kind == LeakageKind::SboxIdentity ? 256 : 9;
    }
};

LeakageKind parse_leakage_kind(const std::string &name);
std::string to_string(LeakageKind kind);

/// Sbox[p ^ k], or its Hamming weight.
std::uint32_t sbox_label(std::uint8_t plaintext, std::uint8_t key, const LeakageModel &model);

} // namespace modsca
