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

#include "modsca/stopping.hpp"

#include "modsca/errors.hpp"

#include <numeric>

namespace modsca {

GeStopper::GeStopper(StopPolicy policy) : policy_(policy) {
    if (!(policy.persistence > 0.0 && policy.persistence <= 1.0))
        throw DomainError("persistence fraction must lie in (0, 1]");
    if (!(policy.rank_threshold >= 0.0))
        throw DomainError("rank threshold must be non-negative");
}

StopDecision GeStopper::observe(std::size_t epoch, const GEVector &ge) {
    StopDecision d;
    d.ge = ge;
    d.converged = converged_at(ge, policy_.rank_threshold, policy_.persistence);
    const double mean =
        ge.ranks.empty() ? 0.0
                         : std::accumulate(ge.ranks.begin(), ge.ranks.end(), 0.0) /
                               static_cast<double>(ge.ranks.size());

    // Best epoch: smallest convergence count, then lowest mean rank.
    const std::size_t none = ge.size() + 1;
    const std::size_t count = d.converged.value_or(none);
    const std::size_t best = best_count_.value_or(none);
    if (!best_epoch_ || count < best || (count == best && mean < best_mean_)) {
        best_epoch_ = epoch;
        best_mean_ = mean;
        d.improved = true;
    }
    if (d.converged && (!best_count_ || *d.converged < *best_count_)) {
        best_count_ = d.converged;
        best_count_epoch_ = epoch;
    }

    if (best_count_)
        d.stop = *best_count_ <= 1 || epoch - best_count_epoch_ >= policy_.patience;
    return d;
}

StopDecision GeStopper::evaluate(const TruncatedModel &model, const TraceSet &validation,
                                 std::size_t epoch, const LeakageModel &leakage,
                                 const GeConfig &ge_config) {
    return observe(epoch, evaluate_ge(model, validation, leakage, ge_config));
}

GEVector evaluate_ge(const TruncatedModel &model, const TraceSet &attack,
                     const LeakageModel &leakage, const GeConfig &ge_config) {
    if (!attack.key)
        throw DataError("GE evaluation needs a trace set with a known key");
    const Tensor<float> probs = model.predict(attack.as_tensor(), ge_config.threads);
    return guessing_entropy(probs, attack.plaintexts, *attack.key, leakage, ge_config);
}

} // namespace modsca
