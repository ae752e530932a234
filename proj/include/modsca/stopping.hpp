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

#include "modsca/guessing_entropy.hpp"
#include "modsca/leakage.hpp"
#include "modsca/network.hpp"
#include "modsca/traces.hpp"

#include <cstddef>
#include <optional>

namespace modsca {

struct StopPolicy {
    double rank_threshold = 0.5;
    double persistence = 0.5;
    std::size_t patience = 10;
};

struct StopDecision {
    bool stop = false;
    /// Convergence trace count of the evaluated epoch.
    std::optional<std::size_t> converged;
    /// The evaluated epoch is the best seen so far.
    bool improved = false;
    GEVector ge;
};

/// Tracks the convergence trace count of the truncated model across epochs.
/// Fires once a count exists and has not improved for `patience` epochs, or
/// as soon as the count is 1 since that cannot improve.
class GeStopper {
public:
    explicit GeStopper(StopPolicy policy = {});

    StopDecision observe(std::size_t epoch, const GEVector &ge);

    /// Attacks the validation set with the truncated model only.
    StopDecision evaluate(const TruncatedModel &model, const TraceSet &validation,
                          std::size_t epoch, const LeakageModel &leakage,
                          const GeConfig &ge_config = {});

    const StopPolicy &policy() const { return policy_; }
    std::optional<std::size_t> best_epoch() const { return best_epoch_; }
    std::optional<std::size_t> best_converged() const { return best_count_; }

private:
    StopPolicy policy_;
    std::optional<std::size_t> best_epoch_;
    std::optional<std::size_t> best_count_;
    double best_mean_ = 0.0;
    std::size_t best_count_epoch_ = 0;
};

/// GE of `model` on a labeled attack set.
GEVector evaluate_ge(const TruncatedModel &model, const TraceSet &attack,
                     const LeakageModel &leakage, const GeConfig &ge_config);

} // namespace modsca
