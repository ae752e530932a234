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
#include <optional>
#include <span>
#include <vector>

namespace modsca {

/// Mean rank of the true key as a function of attack-trace count.
/// `ranks[t - 1]` is the mean rank after t traces.
struct GEVector {
    std::vector<double> ranks;
    std::size_t n_experiments = 0;

    std::size_t size() const { return ranks.size(); }
    double final_rank() const { return ranks.empty() ? 0.0 : ranks.back(); }

    friend bool operator==(const GEVector &, const GEVector &) = default;
};

/// Per-trace log-likelihood of every key candidate, row-major [traces, candidates].
struct LogLikelihoodTable {
    std::size_t traces = 0;
    std::size_t candidates = 0;
    std::vector<double> values;

    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(values).subspan(i * candidates, candidates);
    }
};

/// log(max(P_i[label(p_i, k)], 1e-12)) for every trace i and candidate k.
LogLikelihoodTable log_likelihoods(const Tensor<float> &probabilities,
                                   std::span<const std::uint8_t> plaintexts,
                                   const LeakageModel &model);

/// Sum over traces of the per-candidate log-likelihoods (256 entries).
std::vector<double> guessing_vector(const Tensor<float> &probabilities,
                                    std::span<const std::uint8_t> plaintexts,
                                    const LeakageModel &model);

/// Candidates sorted by descending score; ties keep ascending candidate order.
std::vector<std::size_t> key_ordering(std::span<const double> scores);

/// Position of `true_key` in key_ordering(scores), computed without sorting.
std::size_t key_rank(std::span<const double> scores, std::size_t true_key);

struct GeConfig {
    std::size_t n_experiments = 40;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    /// Limit on the attack-trace count; 0 uses every trace.
    std::size_t max_traces = 0;
};

/// Attack-trace order of one experiment: a permutation of [0, n) drawn from
/// a generator seeded by (seed, experiment).
std::vector<std::size_t> experiment_order(std::size_t n, std::uint64_t seed,
                                          std::size_t experiment);

/// Each experiment accumulates the table rows in its own shuffled order and
/// records the true-key rank after every prefix; ranks are then averaged in
/// experiment order.
GEVector guessing_entropy(const LogLikelihoodTable &table, std::size_t true_key,
                          const GeConfig &config = {});

GEVector guessing_entropy(const Tensor<float> &probabilities,
                          std::span<const std::uint8_t> plaintexts,
                          std::uint8_t true_key, const LeakageModel &model,
                          const GeConfig &config = {});

/// Smallest trace count t such that every rank from t to n stays at or below
/// `rank_threshold` and (n - t + 1) / n >= `persistence_fraction`.
std::optional<std::size_t> converged_at(const GEVector &ge, double rank_threshold,
                                        double persistence_fraction);

} // namespace modsca
