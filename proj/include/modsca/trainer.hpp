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

#include "modsca/network.hpp"
#include "modsca/optimizer.hpp"
#include "modsca/stopping.hpp"
#include "modsca/traces.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace modsca {

struct EpochRecord {
    std::size_t epoch = 0;
    /// Means over the epoch's training batches; total = gamma*ce + omega*mse.
    double total = 0.0;
    double ce = 0.0;
    double mse = 0.0;
    /// Validation GE of the truncated model, when evaluated.
    std::optional<GEVector> ge;
    std::optional<std::size_t> converged;

    friend bool operator==(const EpochRecord &, const EpochRecord &) = default;
};

struct TrainingReport {
    std::vector<EpochRecord> epochs;
    /// Last epoch run (0 when no epoch ran).
    std::size_t stopped_epoch = 0;
    /// The GE stopper fired before the budget ran out.
    bool early_stopped = false;
    /// Epoch whose weights the network holds on return.
    std::optional<std::size_t> best_epoch;
    std::size_t steps = 0;

    friend bool operator==(const TrainingReport &, const TrainingReport &) = default;
};

struct FitConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;
    /// GE stopping on the truncated model.
    bool use_stopper = true;
    StopPolicy policy;
    /// Compute validation GE every epoch even without the stopper.
    bool track_ge = true;
    /// Trailing share of the profiling set held out for GE.
    double validation_fraction = 0.1;
    LeakageModel leakage{LeakageKind::SboxIdentity};
    GeConfig ge;
    AdamConfig adam;
    /// Before each GE evaluation, re-estimate the BatchNorm running
    /// statistics of the encoder and classifier from up to this many
    /// training traces; 0 keeps the momentum estimates.
    std::size_t calibration_traces = 1024;
    /// Upper bound on optimizer steps; 0 means no bound.
    std::size_t max_steps = 0;
    std::function<void(const EpochRecord &)> on_epoch;
};

/// Trains the network in place. Each epoch shuffles the training part,
/// steps Adam on the combined loss per minibatch, then evaluates GE on the
/// held-out tail with the truncated view. When the stopper fires, the
/// weights of the best epoch are restored.
TrainingReport fit(ModularNetwork &net, const TraceSet &profiling, const FitConfig &config);

/// Copies parameter values and BatchNorm statistics of `src` into `dst`.
void copy_weights(ModuleGraph &dst, const ModuleGraph &src);

} // namespace modsca
