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

#include "modsca/guessing_entropy.hpp"

#include "modsca/errors.hpp"
#include "modsca/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace modsca {

LogLikelihoodTable log_likelihoods(const Tensor<float> &probabilities,
                                   std::span<const std::uint8_t> plaintexts,
                                   const LeakageModel &model) {
    if (probabilities.rank() != 2)
        throw DimensionError("probabilities must be [traces, classes]");
    const std::size_t n = probabilities.dim(0), classes = probabilities.dim(1);
    if (classes != model.class_count())
        throw DimensionError("probability vectors have " + std::to_string(classes) +
                             " entries, leakage model has " +
                             std::to_string(model.class_count()) + " classes");
    if (plaintexts.size() != n)
        throw DimensionError("got " + std::to_string(plaintexts.size()) +
                             " plaintexts for " + std::to_string(n) + " traces");
    LogLikelihoodTable table{n, 256, std::vector<double>(n * 256)};
    std::vector<double> logp(classes);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < classes; ++c)
            logp[c] = std::log(std::max<double>(probabilities[i * classes + c],
                                                1e-12));
        for (std::size_t k = 0; k < 256; ++k)
            table.values[i * 256 + k] =
                logp[sbox_label(plaintexts[i], static_cast<std::uint8_t>(k), model)];
    }
    return table;
}

std::vector<double> guessing_vector(const Tensor<float> &probabilities,
                                    std::span<const std::uint8_t> plaintexts,
                                    const LeakageModel &model) {
    const LogLikelihoodTable table = log_likelihoods(probabilities, plaintexts, model);
    std::vector<double> scores(256, 0.0);
    for (std::size_t i = 0; i < table.traces; ++i) {
        const auto row = table.row(i);
        for (std::size_t k = 0; k < 256; ++k)
            scores[k] += row[k];
    }
    return scores;
}

std::vector<std::size_t> key_ordering(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    return order;
}

std::size_t key_rank(std::span<const double> scores, std::size_t true_key) {
    const double mine = scores[true_key];
    std::size_t rank = 0;
    for (std::size_t k = 0; k < scores.size(); ++k)
        if (scores[k] > mine || (scores[k] == mine && k < true_key))
            ++rank;
    return rank;
}

std::vector<std::size_t> experiment_order(std::size_t n, std::uint64_t seed,
                                          std::size_t experiment) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(experiment), 0x6e5u};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

GEVector guessing_entropy(const LogLikelihoodTable &table, std::size_t true_key,
                          const GeConfig &config) {
    if (table.traces == 0)
        throw DataError("guessing entropy needs at least one attack trace");
    if (config.n_experiments == 0)
        throw DomainError("guessing entropy needs at least one experiment");
    if (true_key >= table.candidates)
        throw DomainError("true key outside the candidate space");
    const std::size_t n = table.traces;
    const std::size_t steps =
        config.max_traces ? std::min(config.max_traces, n) : n;
    const std::size_t K = table.candidates;

    std::vector<std::vector<std::uint32_t>> per_experiment(config.n_experiments);
    parallel_for(config.n_experiments, config.threads, [&](std::size_t e) {
        const std::vector<std::size_t> order = experiment_order(n, config.seed, e);
        std::vector<double> scores(K, 0.0);
        std::vector<std::uint32_t> &ranks = per_experiment[e];
        ranks.resize(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            const auto row = table.row(order[t]);
            for (std::size_t k = 0; k < K; ++k)
                scores[k] += row[k];
            ranks[t] = static_cast<std::uint32_t>(key_rank(scores, true_key));
        }
    });

    GEVector ge;
    ge.n_experiments = config.n_experiments;
    ge.ranks.assign(steps, 0.0);
    for (const auto &ranks : per_experiment)
        for (std::size_t t = 0; t < steps; ++t)
            ge.ranks[t] += ranks[t];
    for (double &r : ge.ranks)
        r /= static_cast<double>(config.n_experiments);
    return ge;
}

GEVector guessing_entropy(const Tensor<float> &probabilities,
                          std::span<const std::uint8_t> plaintexts,
                          std::uint8_t true_key, const LeakageModel &model,
                          const GeConfig &config) {
    if (probabilities.empty() || plaintexts.empty())
        throw DataError("guessing entropy needs at least one attack trace");
    return guessing_entropy(log_likelihoods(probabilities, plaintexts, model), true_key,
                            config);
}

std::optional<std::size_t> converged_at(const GEVector &ge, double rank_threshold,
                                        double persistence_fraction) {
    if (!(persistence_fraction > 0.0 && persistence_fraction <= 1.0))
        throw DomainError("persistence fraction must lie in (0, 1]");
    const std::size_t n = ge.ranks.size();
    if (n == 0)
        return std::nullopt;
    // Walk back from the end while ranks stay under the threshold.
    std::size_t t = n + 1;
    while (t > 1 && ge.ranks[t - 2] <= rank_threshold)
        --t;
    if (t == n + 1)
        return std::nullopt;
    const double kept = static_cast<double>(n - t + 1) / static_cast<double>(n);
    if (kept < persistence_fraction)
        return std::nullopt;
    return t;
}

} // namespace modsca
