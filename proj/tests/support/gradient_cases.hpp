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

// Finite-difference gradient checks for every op, on random small shapes.

#pragma once

#include "support/oracles.hpp"

#include <map>
#include <string>

namespace oracle {

struct OpCheck {
    std::string op;
    std::size_t cases = 0;
    double worst = 0.0;
};

/// Runs `cases` random configurations per op; returns the worst relative
/// error seen for each.
inline std::vector<OpCheck> gradient_suite(std::uint64_t seed, std::size_t cases) {
    namespace o = modsca::ops;
    using modsca::BatchNormMode;
    using modsca::BatchNormStats;
    using modsca::ConvOptions;
    using modsca::Padding;
    using modsca::TransposedConvOptions;

    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    std::map<std::string, OpCheck> out;
    auto run = [&](const std::string &name, const std::vector<Tensor<double>> &inputs,
                   const ScalarFn &f) {
        const GradCheck g = gradient_check(inputs, f);
        OpCheck &c = out[name];
        c.op = name;
        ++c.cases;
        c.worst = std::max(c.worst, g.max_rel_error);
    };

    for (std::size_t rep = 0; rep < cases; ++rep) {
        const std::size_t batch = pick(1, 3), ch = pick(1, 3), outs = pick(1, 3);
        {
            const std::size_t klen = pick(1, 4), dr = pick(1, 3), stride = pick(1, 3);
            const Padding pad = rep % 2 ? Padding::Valid : Padding::Same;
            const std::size_t len = klen + (klen - 1) * (dr - 1) + pick(0, 6);
            const ConvOptions opt{dr, stride, pad};
            const std::size_t out_len = modsca::conv1d_output_length(len, klen, opt);
            const auto r = random_tensor({batch, outs, out_len}, rng);
            run("conv1d", {random_tensor({batch, ch, len}, rng), random_tensor({outs, ch, klen}, rng)},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return project(o::conv1d(v[0], v[1], opt), r);
                });
        }
        {
            const std::size_t klen = pick(1, 5), stride = pick(1, 3), len = pick(1, 5);
            const TransposedConvOptions opt{stride, rep % 2 ? Padding::Valid : Padding::Same};
            const std::size_t out_len =
                modsca::transposed_conv1d_output_length(len, klen, opt);
            const auto r = random_tensor({batch, outs, out_len}, rng);
            run("transposed_conv1d",
                {random_tensor({batch, ch, len}, rng), random_tensor({ch, outs, klen}, rng)},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return project(o::transposed_conv1d(v[0], v[1], opt), r);
                });
        }
        {
            const std::size_t len = pick(1, 6);
            const auto r = random_tensor({batch, ch, len}, rng);
            run("add_bias", {random_tensor({batch, ch, len}, rng), random_tensor({ch}, rng)},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return project(o::add_bias(v[0], v[1]), r);
                });
        }
        {
            const std::size_t pool = pick(1, 4), stride = pick(1, 4);
            const std::size_t len = pool + pick(0, 6);
            const std::size_t out_len = modsca::avg_pool1d_output_length(len, pool, stride);
            const auto r = random_tensor({batch, ch, out_len}, rng);
            run("avg_pool1d", {random_tensor({batch, ch, len}, rng)},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return project(o::avg_pool1d(v[0], pool, stride), r);
                });
        }
        {
            const std::size_t in = pick(1, 6), units = pick(1, 5);
            const auto r = random_tensor({batch, units}, rng);
            run("dense",
                {random_tensor({batch, in}, rng), random_tensor({units, in}, rng),
                 random_tensor({units}, rng)},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return project(o::dense(v[0], v[1], v[2]), r);
                });
        }
        {
            const std::size_t len = pick(1, 4), rows = pick(2, 4);
            const bool conv = rep % 2 == 0;
            const modsca::Shape shape =
                conv ? modsca::Shape{rows, ch, len} : modsca::Shape{rows, ch};
            const auto r = random_tensor(shape, rng);
            BatchNormStats<double> running(ch);
            running.mean = random_tensor({ch}, rng);
            running.variance = random_tensor({ch}, rng, 0.5, 2.0);
            auto gamma = random_tensor({ch}, rng, 0.5, 1.5);
            auto beta = random_tensor({ch}, rng);
            run("batch_norm(train)", {random_tensor(shape, rng, -2, 2), gamma, beta},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return project(o::batch_norm(v[0], v[1], v[2], running, oracle::kNoUpdate,
                                                 BatchNormMode::Train),
                                   r);
                });
            run("batch_norm(infer)", {random_tensor(shape, rng, -2, 2), gamma, beta},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return project(o::batch_norm(v[0], v[1], v[2], running, oracle::kNoUpdate,
                                                 BatchNormMode::Infer),
                                   r);
                });
        }
        {
            const std::size_t len = pick(2, 6);
            const auto r = random_tensor({batch, len * ch}, rng);
            run("reshape+flatten", {random_tensor({batch, len * ch}, rng)},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return project(o::flatten(o::reshape(v[0], {ch, len})), r);
                });
        }
        {
            const std::size_t n = pick(1, 8);
            const auto r = random_tensor({batch, n}, rng);
            run("selu", {random_tensor({batch, n}, rng, -3, 3)},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return project(o::selu(v[0]), r);
                });
            run("sigmoid", {random_tensor({batch, n}, rng, -4, 4)},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return project(o::sigmoid(v[0]), r);
                });
            run("softmax", {random_tensor({batch, n}, rng, -3, 3)},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return project(o::softmax(v[0]), r);
                });
        }
        {
            const std::size_t n = pick(1, 8);
            run("mse_loss", {random_tensor({batch, n}, rng), random_tensor({batch, n}, rng)},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return o::mse_loss(v[0], v[1]);
                });
        }
        {
            const std::size_t classes = pick(2, 8);
            std::vector<std::uint32_t> labels(batch);
            for (auto &l : labels)
                l = static_cast<std::uint32_t>(pick(0, classes - 1));
            const auto mode = rep % 2 ? modsca::Reduction::Sum : modsca::Reduction::Mean;
            run("cross_entropy_loss", {random_tensor({batch, classes}, rng, -2, 2)},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return o::cross_entropy_loss(o::softmax(v[0]), labels, mode);
                });
        }
        {
            const std::size_t n = pick(1, 6);
            const double k = std::uniform_real_distribution<double>(-2, 2)(rng);
            run("add/mul/scale/sum",
                {random_tensor({batch, n}, rng), random_tensor({batch, n}, rng)},
                [=](Tape<double> &, const std::vector<Var<double>> &v) {
                    return o::sum(o::scale(o::mul(o::add(v[0], v[1]), v[0]), k));
                });
        }
    }
    std::vector<OpCheck> list;
    for (auto &[_, c] : out)
        list.push_back(c);
    return list;
}

} // namespace oracle
