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

#include "modsca/leakage.hpp"
#include "modsca/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace modsca {

enum class TraceRole : std::uint8_t { Profiling = 0, Attack = 1 };

std::string to_string(TraceRole role);

/// N leakage traces of m samples each, with the plaintext byte of each trace.
struct TraceSet {
    std::size_t count = 0;
    std::size_t length = 0;
    /// Row-major [count, length].
    std::vector<float> samples;
    std::vector<std::uint8_t> plaintexts;
    std::optional<std::uint8_t> key;
    TraceRole role = TraceRole::Profiling;
    std::uint32_t desync_threshold = 0;

    std::span<const float> trace(std::size_t i) const {
        return std::span<const float>(samples).subspan(i * length, length);
    }

    /// Copies the selected traces into a [indices.size(), length] tensor.
    Tensor<float> batch(std::span<const std::size_t> indices) const;
    /// All traces as a [count, length] tensor.
    Tensor<float> as_tensor() const;

    /// Class labels under `model`; requires a known key.
    std::vector<std::uint32_t> labels(const LeakageModel &model) const;

    /// Traces [first, first + n) as a new set with the same metadata.
    TraceSet slice(std::size_t first, std::size_t n) const;

    friend bool operator==(const TraceSet &, const TraceSet &) = default;
};

struct ForgeConfig {
    std::uint8_t key = 0x2A;
    std::size_t count = 2000;
    std::size_t length = 700;
    std::vector<std::size_t> leak_positions{150, 300, 450};
    double amplitude = 0.25;
    double noise_sigma = 0.02;
    std::uint32_t desync_threshold = 0;
    LeakageModel model{LeakageKind::SboxHammingWeight};
    std::uint64_t seed = 0;
    TraceRole role = TraceRole::Profiling;
    /// Min-max scale the whole set to [0, 1].
    bool normalize = true;
};

struct ForgedTraces {
    TraceSet traces;
    /// Right shift applied to each trace.
    std::vector<std::uint32_t> shifts;
};

/// Synthetic first-order leakage: Gaussian noise plus, at each leak position,
/// amplitude * HW(Sbox(p ^ key)) / 8 (or Sbox(p ^ key) / 255 for the identity
/// model). Each trace is then shifted right by a uniform draw in [0, T], with
/// fresh noise filling the vacated samples. Trace i draws from generators
/// seeded by (seed, i), so the result does not depend on evaluation order.
ForgedTraces forge(const ForgeConfig &config);
TraceSet generate(const ForgeConfig &config);

/// Named generator presets: "tiny", "ascad_f_like", "ascad_r_like".
ForgeConfig forge_preset(const std::string &name, TraceRole role = TraceRole::Profiling);

inline constexpr std::uint16_t kTraceFormatVersion = 1;

std::vector<std::uint8_t> serialize_traces(const TraceSet &set);
TraceSet deserialize_traces(std::span<const std::uint8_t> bytes);

struct TraceHeader {
    std::uint16_t version = 0;
    TraceRole role = TraceRole::Profiling;
    std::optional<std::uint8_t> key;
    std::uint32_t count = 0;
    std::uint32_t length = 0;
    std::uint32_t desync_threshold = 0;
};
TraceHeader read_trace_header(std::span<const std::uint8_t> bytes);

void write_traces(const TraceSet &set, const std::filesystem::path &path);
TraceSet read_traces(const std::filesystem::path &path);

/// The first round(fraction * N) traces and the rest.
std::pair<TraceSet, TraceSet> split(const TraceSet &set, double fraction);

} // namespace modsca
