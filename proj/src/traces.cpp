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

#include "modsca/traces.hpp"

#include "modsca/binary_io.hpp"
#include "modsca/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

namespace modsca {

std::string to_string(TraceRole role) {
    return role == TraceRole::Profiling ? "profiling" : "attack";
}

Tensor<float> TraceSet::batch(std::span<const std::size_t> indices) const {
    Tensor<float> out({indices.size(), length});
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto row = trace(indices[r]);
        std::copy(row.begin(), row.end(), out.data() + r * length);
    }
    return out;
}

Tensor<float> TraceSet::as_tensor() const { return Tensor<float>({count, length}, samples); }

std::vector<std::uint32_t> TraceSet::labels(const LeakageModel &model) const {
    if (!key)
        throw DataError("trace set carries no key; cannot label it");
    std::vector<std::uint32_t> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = sbox_label(plaintexts[i], *key, model);
    return out;
}

TraceSet TraceSet::slice(std::size_t first, std::size_t n) const {
    if (first + n > count)
        throw DataError("slice exceeds trace count");
    TraceSet out;
    out.count = n;
    out.length = length;
    out.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(first * length),
                       samples.begin() + static_cast<std::ptrdiff_t>((first + n) * length));
    out.plaintexts.assign(plaintexts.begin() + static_cast<std::ptrdiff_t>(first),
                          plaintexts.begin() + static_cast<std::ptrdiff_t>(first + n));
    out.key = key;
    out.role = role;
    out.desync_threshold = desync_threshold;
    return out;
}

ForgedTraces forge(const ForgeConfig &c) {
    if (c.count == 0 || c.length == 0)
        throw ConfigError("trace count and length must be positive");
    if (!(c.amplitude > 0.0))
        throw ConfigError("leak amplitude must be positive");
    if (!(c.noise_sigma >= 0.0))
        throw ConfigError("noise sigma must be non-negative");
    if (c.desync_threshold >= c.length)
        throw ConfigError("desync threshold must be shorter than the trace");
    for (std::size_t pos : c.leak_positions)
        if (pos >= c.length - c.desync_threshold)
            throw ConfigError("leak position " + std::to_string(pos) +
                              " collides with the shift range end (length " +
                              std::to_string(c.length) + ", threshold " +
                              std::to_string(c.desync_threshold) + ")");

    ForgedTraces out;
    TraceSet &set = out.traces;
    set.count = c.count;
    set.length = c.length;
    set.samples.resize(c.count * c.length);
    set.plaintexts.resize(c.count);
    set.key = c.key;
    set.role = c.role;
    set.desync_threshold = c.desync_threshold;
    out.shifts.resize(c.count);

    const auto seed_lo = static_cast<std::uint32_t>(c.seed);
    const auto seed_hi = static_cast<std::uint32_t>(c.seed >> 32);
    std::vector<double> clean(c.length);
    for (std::size_t i = 0; i < c.count; ++i) {
        const auto idx = static_cast<std::uint32_t>(i);
        std::seed_seq content_seq{seed_lo, seed_hi, idx, 0u};
        std::seed_seq shift_seq{seed_lo, seed_hi, idx, 1u};
        std::mt19937_64 content(content_seq);
        std::mt19937_64 shifter(shift_seq);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::uniform_int_distribution<int> byte(0, 255);

        const auto p = static_cast<std::uint8_t>(byte(content));
        set.plaintexts[i] = p;
        for (double &v : clean)
            v = c.noise_sigma * noise(content);
        const std::uint32_t label = sbox_label(p, c.key, c.model);
        const double leak = c.model.kind == LeakageKind::SboxHammingWeight
                                ? static_cast<double>(label) / 8.0
                                : static_cast<double>(label) / 255.0;
        for (std::size_t pos : c.leak_positions)
            clean[pos] += c.amplitude * leak;

        std::uniform_int_distribution<std::uint32_t> shift_dist(0, c.desync_threshold);
        const std::uint32_t shift = shift_dist(shifter);
        out.shifts[i] = shift;
        float *row = set.samples.data() + i * c.length;
        for (std::size_t j = 0; j < shift; ++j)
            row[j] = static_cast<float>(c.noise_sigma * noise(shifter));
        for (std::size_t j = shift; j < c.length; ++j)
            row[j] = static_cast<float>(clean[j - shift]);
    }

    if (c.normalize) {
        const auto [lo, hi] = std::minmax_element(set.samples.begin(), set.samples.end());
        const double mn = *lo, mx = *hi;
        const double range = mx - mn;
        for (float &v : set.samples)
            v = range > 0 ? static_cast<float>((v - mn) / range) : 0.0f;
    }
    return out;
}

TraceSet generate(const ForgeConfig &config) { return forge(config).traces; }

ForgeConfig forge_preset(const std::string &name, TraceRole role) {
    ForgeConfig c;
    c.role = role;
    if (name == "tiny") {
        c.count = role == TraceRole::Profiling ? 2000 : 1000;
        c.length = 700;
        c.leak_positions = {150, 300, 450};
        c.noise_sigma = 0.02;
        c.amplitude = 0.25;
    } else if (name == "ascad_f_like") {
        c.count = role == TraceRole::Profiling ? 50000 : 10000;
        c.length = 700;
        c.leak_positions = {150, 300, 450};
    } else if (name == "ascad_r_like") {
        c.count = role == TraceRole::Profiling ? 200000 : 100000;
        c.length = 1400;
        c.leak_positions = {300, 600, 900};
    } else {
        throw ConfigError("unknown trace preset '" + name +
                          "' (expected tiny, ascad_f_like or ascad_r_like)");
    }
    return c;
}

// ---------------------------------------------------------------- container

namespace {

constexpr std::string_view kTraceMagic = "SCTR";
// magic + version + role + has_key + key + N + m + T
constexpr std::size_t kTraceHeaderBytes = 4 + 2 + 1 + 1 + 1 + 4 + 4 + 4;

TraceHeader parse_trace_header(ByteReader &in) {
    in.expect_tag(kTraceMagic);
    TraceHeader h;
    std::size_t at = in.offset();
    h.version = in.u16();
    if (h.version != kTraceFormatVersion)
        throw FormatError("unsupported trace format version " + std::to_string(h.version),
                          at);
    at = in.offset();
    const std::uint8_t role = in.u8();
    if (role > 1)
        throw FormatError("invalid trace role " + std::to_string(role), at);
    h.role = static_cast<TraceRole>(role);
    at = in.offset();
    const std::uint8_t has_key = in.u8();
    if (has_key > 1)
        throw FormatError("invalid key presence flag", at);
    const std::uint8_t key = in.u8();
    if (has_key)
        h.key = key;
    h.count = in.u32();
    h.length = in.u32();
    h.desync_threshold = in.u32();
    return h;
}

} // namespace

std::vector<std::uint8_t> serialize_traces(const TraceSet &set) {
    if (set.samples.size() != set.count * set.length ||
        set.plaintexts.size() != set.count)
        throw DataError("trace set arrays disagree with its count and length");
    ByteWriter out;
    out.tag(kTraceMagic);
    out.u16(kTraceFormatVersion);
    out.u8(static_cast<std::uint8_t>(set.role));
    out.u8(set.key ? 1 : 0);
    out.u8(set.key.value_or(0));
    out.u32(static_cast<std::uint32_t>(set.count));
    out.u32(static_cast<std::uint32_t>(set.length));
    out.u32(set.desync_threshold);
    out.raw(set.plaintexts);
    for (float v : set.samples)
        out.f32(v);
    out.seal();
    return out.take();
}

TraceHeader read_trace_header(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    return parse_trace_header(in);
}

TraceSet deserialize_traces(std::span<const std::uint8_t> bytes) {
    {
        ByteReader probe(bytes);
        parse_trace_header(probe);
    }
    ByteReader in(verify_crc(bytes, kTraceHeaderBytes));
    const TraceHeader h = parse_trace_header(in);
    if (h.count == 0 || h.length == 0)
        throw FormatError("trace container declares an empty set", 4 + 2 + 3);
    const std::uint64_t floats = static_cast<std::uint64_t>(h.count) * h.length;
    if (floats > in.remaining() / 4 || h.count + floats * 4 != in.remaining())
        throw FormatError("payload holds " + std::to_string(in.remaining()) +
                              " bytes, header declares " + std::to_string(h.count) + " x " +
                              std::to_string(h.length) + " samples",
                          in.offset());
    TraceSet set;
    set.count = h.count;
    set.length = h.length;
    set.role = h.role;
    set.key = h.key;
    set.desync_threshold = h.desync_threshold;
    const auto pts = in.raw(h.count);
    set.plaintexts.assign(pts.begin(), pts.end());
    set.samples.resize(static_cast<std::size_t>(h.count) * h.length);
    for (float &v : set.samples)
        v = in.f32();
    return set;
}

void write_traces(const TraceSet &set, const std::filesystem::path &path) {
    write_file_bytes(path, serialize_traces(set));
}

TraceSet read_traces(const std::filesystem::path &path) {
    return deserialize_traces(read_file_bytes(path));
}

std::pair<TraceSet, TraceSet> split(const TraceSet &set, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw DomainError("split fraction must lie in (0, 1)");
    const auto first = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(set.count)));
    if (first == 0 || first >= set.count)
        throw DataError("split of " + std::to_string(set.count) + " traces at " +
                        std::to_string(fraction) + " leaves an empty side");
    return {set.slice(0, first), set.slice(first, set.count - first)};
}

} // namespace modsca
