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

#include "modsca/trainer.hpp"

#include "modsca/errors.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace modsca {

void copy_weights(ModuleGraph &dst, const ModuleGraph &src) {
    if (dst.specs() != src.specs())
        throw StructureError("cannot copy weights between different layer lists");
    for (std::size_t i = 0; i < dst.layer_count(); ++i) {
        Layer &d = dst.layer(i);
        const Layer &s = src.layer(i);
        for (std::size_t j = 0; j < d.params.size(); ++j)
            d.params[j].value = s.params[j].value;
        d.stats = s.stats;
    }
}

namespace {

struct Snapshot {
    ModuleGraph encoder, decoder, classifier;
};

Snapshot snapshot(const ModularNetwork &net) {
    return {net.encoder(), net.decoder(), net.classifier()};
}

void restore(ModularNetwork &net, const Snapshot &s) {
    copy_weights(net.encoder(), s.encoder);
    copy_weights(net.decoder(), s.decoder);
    copy_weights(net.classifier(), s.classifier);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

void recalibrate(ModularNetwork &net, const TraceSet &train, std::size_t limit) {
    const std::size_t n = std::min(limit, train.count);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const Tensor<float> x = train.batch(idx);
    net.encoder().recalibrate_batch_norm(x);
    net.classifier().recalibrate_batch_norm(net.encoder().predict(x));
}

} // namespace

TrainingReport fit(ModularNetwork &net, const TraceSet &profiling, const FitConfig &config) {
    if (profiling.count == 0)
        throw DataError("profiling set is empty");
    if (profiling.length != net.trace_len())
        throw DimensionError("traces hold " + std::to_string(profiling.length) +
                             " samples, network expects " + std::to_string(net.trace_len()));
    if (!profiling.key)
        throw DataError("profiling set has no key; cannot label it");
    if (config.leakage.class_count() != net.classifier().output_len())
        throw DimensionError("leakage model has " +
                             std::to_string(config.leakage.class_count()) +
                             " classes, classifier emits " +
                             std::to_string(net.classifier().output_len()));
    if (config.batch_size < 2)
        throw ConfigError("batch size must be at least 2");

    TrainingReport report;
    if (config.epochs == 0)
        return report;

    const bool evaluate = config.use_stopper || config.track_ge;
    TraceSet train = profiling;
    std::optional<TraceSet> validation;
    if (evaluate) {
        auto [a, b] = split(profiling, 1.0 - config.validation_fraction);
        train = std::move(a);
        validation = std::move(b);
    }
    const std::vector<std::uint32_t> labels = train.labels(config.leakage);

    Adam<float> adam(config.adam);
    std::vector<Parameter<float> *> params = net.parameters();
    const TruncatedModel truncated = truncated_view(net);
    GeStopper stopper(config.policy);
    std::optional<Snapshot> best;

    std::vector<std::uint32_t> batch_labels;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const std::vector<std::size_t> order = epoch_order(train.count, config.seed, epoch);
        double ce_sum = 0.0, mse_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
            const std::size_t rows = std::min(order.size(), lo + config.batch_size) - lo;
            if (rows < 2)
                break; // batch norm needs two samples
            if (config.max_steps && report.steps >= config.max_steps)
                break;
            const std::span<const std::size_t> idx(order.data() + lo, rows);
            const Tensor<float> x = train.batch(idx);
            batch_labels.resize(rows);
            for (std::size_t r = 0; r < rows; ++r)
                batch_labels[r] = labels[idx[r]];

            net.zero_grad();
            Tape<float> tape;
            const LossTerms loss = combined_loss(tape, net, x, batch_labels, Mode::Train);
            tape.backward(loss.total);
            adam.step(params);
            ++report.steps;

            ce_sum += static_cast<double>(loss.ce.value()[0]) * static_cast<double>(rows);
            mse_sum += static_cast<double>(loss.mse.value()[0]) * static_cast<double>(rows);
            seen += rows;
        }
        net.zero_grad();

        EpochRecord rec;
        rec.epoch = epoch;
        if (seen > 0) {
            rec.ce = ce_sum / static_cast<double>(seen);
            rec.mse = mse_sum / static_cast<double>(seen);
        }
        rec.total = net.gamma() * rec.ce + net.omega() * rec.mse;

        bool stop = false;
        if (evaluate && config.calibration_traces > 0)
            recalibrate(net, train, config.calibration_traces);
        if (evaluate) {
            const StopDecision d =
                stopper.evaluate(truncated, *validation, epoch, config.leakage, config.ge);
            rec.ge = d.ge;
            rec.converged = d.converged;
            if (config.use_stopper) {
                if (d.improved)
                    best = snapshot(net);
                stop = d.stop;
            }
        }
        report.epochs.push_back(rec);
        report.stopped_epoch = epoch;
        if (config.on_epoch)
            config.on_epoch(rec);
        if (stop) {
            report.early_stopped = true;
            break;
        }
        if (config.max_steps && report.steps >= config.max_steps)
            break;
    }

    if (config.use_stopper && best && stopper.best_epoch()) {
        restore(net, *best);
        report.best_epoch = stopper.best_epoch();
    } else {
        report.best_epoch = report.stopped_epoch;
    }
    return report;
}

} // namespace modsca
