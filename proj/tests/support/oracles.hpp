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

// Independent reference implementations shared by the unit tests and the
// acceptance runner.

#pragma once

#include "modsca/autograd.hpp"
#include "modsca/guessing_entropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using modsca::Shape;
using modsca::Tape;
using modsca::Tensor;
using modsca::Var;

/// Typed null for batch_norm calls that skip the running-stat update.
inline modsca::BatchNormStats<double> *const kNoUpdate = nullptr;

inline Tensor<double> random_tensor(const Shape &shape, std::mt19937_64 &rng,
                                    double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor<double> t(shape);
    for (double &v : t.values())
        v = u(rng);
    return t;
}

/// Builds a scalar from the given leaves; called once for the analytic
/// pass and twice per perturbed element.
using ScalarFn = std::function<Var<double>(Tape<double> &, const std::vector<Var<double>> &)>;

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

/// Elementwise |analytic - numeric| / max(|analytic|, |numeric|, floor) over
/// every element of every input, central differences with step h.
inline GradCheck gradient_check(const std::vector<Tensor<double>> &inputs, const ScalarFn &f,
                                double h = 1e-4, double floor = 1e-6) {
    std::vector<Tensor<double>> analytic;
    {
        Tape<double> tape;
        std::vector<Var<double>> vars;
        for (const auto &t : inputs)
            vars.push_back(tape.variable(t));
        tape.backward(f(tape, vars));
        for (const auto &v : vars)
            analytic.push_back(v.grad());
    }
    auto eval = [&](const std::vector<Tensor<double>> &xs) {
        Tape<double> tape;
        std::vector<Var<double>> vars;
        for (const auto &t : xs)
            vars.push_back(tape.constant(t));
        return f(tape, vars).value()[0];
    };
    GradCheck out;
    std::vector<Tensor<double>> probe = inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i)
        for (std::size_t k = 0; k < inputs[i].size(); ++k) {
            const double x0 = inputs[i][k];
            probe[i][k] = x0 + h;
            const double up = eval(probe);
            probe[i][k] = x0 - h;
            const double down = eval(probe);
            probe[i][k] = x0;
            const double numeric = (up - down) / (2 * h);
            const double a = analytic[i][k];
            const double denom = std::max({std::abs(a), std::abs(numeric), floor});
            out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / denom);
            ++out.checked;
        }
    return out;
}

/// Weighted sum <y, r> so every output element reaches the loss.
inline Var<double> project(Var<double> y, const Tensor<double> &r) {
    Tape<double> &tape = *y.tape();
    return modsca::ops::sum(modsca::ops::mul(y, tape.constant(r)));
}

/// Plain dilation-1 convolution with Keras same/valid padding, written
/// directly from the definition.
inline std::vector<double> naive_conv(const std::vector<double> &x, std::size_t channels,
                                      const std::vector<double> &w, std::size_t outs,
                                      std::size_t klen, std::size_t stride, bool same) {
    const std::size_t len = x.size() / channels;
    std::size_t out_len = 0, pad = 0;
    if (same) {
        out_len = (len + stride - 1) / stride;
        const std::ptrdiff_t total =
            static_cast<std::ptrdiff_t>((out_len - 1) * stride + klen) -
            static_cast<std::ptrdiff_t>(len);
        pad = static_cast<std::size_t>(std::max<std::ptrdiff_t>(total, 0) / 2);
    } else {
        out_len = (len - klen) / stride + 1;
    }
    std::vector<double> y(outs * out_len, 0.0);
    for (std::size_t o = 0; o < outs; ++o)
        for (std::size_t t = 0; t < out_len; ++t) {
            double acc = 0;
            for (std::size_t c = 0; c < channels; ++c)
                for (std::size_t k = 0; k < klen; ++k) {
                    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * stride + k) -
                                               static_cast<std::ptrdiff_t>(pad);
                    if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(len))
                        acc += w[(o * channels + c) * klen + k] * x[c * len + pos];
                }
            y[o * out_len + t] = acc;
        }
    return y;
}

/// Kernel [outs, channels, klen] with (dr - 1) zeros between taps.
inline std::vector<double> zero_stuff(const std::vector<double> &w, std::size_t rows,
                                      std::size_t klen, std::size_t dr) {
    const std::size_t span = klen + (klen - 1) * (dr - 1);
    std::vector<double> out(rows * span, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = 0; k < klen; ++k)
            out[r * span + k * dr] = w[r * klen + k];
    return out;
}

/// Rank of `true_key` by full sort: descending score, ascending candidate.
inline std::size_t sorted_rank(const std::vector<double> &scores, std::size_t true_key) {
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b])
            return scores[a] > scores[b];
        return a < b;
    });
    return static_cast<std::size_t>(std::find(order.begin(), order.end(), true_key) -
                                    order.begin());
}

/// GE by recomputing every prefix sum from scratch for each experiment.
inline std::vector<double> brute_force_ge(const modsca::LogLikelihoodTable &table,
                                          std::size_t true_key, std::size_t experiments,
                                          std::uint64_t seed) {
    const std::size_t n = table.traces;
    std::vector<double> mean(n, 0.0);
    for (std::size_t e = 0; e < experiments; ++e) {
        const auto order = modsca::experiment_order(n, seed, e);
        for (std::size_t len = 1; len <= n; ++len) {
            std::vector<double> scores(table.candidates, 0.0);
            for (std::size_t j = 0; j < len; ++j) {
                const auto row = table.row(order[j]);
                for (std::size_t c = 0; c < table.candidates; ++c)
                    scores[c] += row[c];
            }
            mean[len - 1] += static_cast<double>(sorted_rank(scores, true_key));
        }
    }
    for (double &v : mean)
        v /= static_cast<double>(experiments);
    return mean;
}

/// Mean rank over every permutation of the traces.
inline std::vector<double> exhaustive_ge(const modsca::LogLikelihoodTable &table,
                                         std::size_t true_key) {
    const std::size_t n = table.traces;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i)
        perm[i] = i;
    std::vector<double> mean(n, 0.0);
    std::size_t count = 0;
    do {
        std::vector<double> scores(table.candidates, 0.0);
        for (std::size_t len = 1; len <= n; ++len) {
            const auto row = table.row(perm[len - 1]);
            for (std::size_t c = 0; c < table.candidates; ++c)
                scores[c] += row[c];
            mean[len - 1] += static_cast<double>(sorted_rank(scores, true_key));
        }
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (double &v : mean)
        v /= static_cast<double>(count);
    return mean;
}

/// Minimum cost over every monotone alignment path, enumerated explicitly.
inline double brute_force_dtw(std::span<const double> a, std::span<const double> b) {
    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i,
                                                                     std::size_t j, double c) {
        c += std::abs(a[i] - b[j]);
        if (i + 1 == a.size() && j + 1 == b.size()) {
            best = std::min(best, c);
            return;
        }
        if (i + 1 < a.size())
            walk(i + 1, j, c);
        if (j + 1 < b.size())
            walk(i, j + 1, c);
        if (i + 1 < a.size() && j + 1 < b.size())
            walk(i + 1, j + 1, c);
    };
    walk(0, 0, 0.0);
    return best;
}

/// All sequences over `alphabet` with lengths 1..max_len.
inline std::vector<std::vector<double>> all_sequences(const std::vector<double> &alphabet,
                                                      std::size_t max_len) {
    std::vector<std::vector<double>> out;
    std::vector<std::vector<double>> level{{}};
    for (std::size_t len = 1; len <= max_len; ++len) {
        std::vector<std::vector<double>> next;
        for (const auto &s : level)
            for (double v : alphabet) {
                auto t = s;
                t.push_back(v);
                next.push_back(t);
            }
        out.insert(out.end(), next.begin(), next.end());
        level = std::move(next);
    }
    return out;
}

} // namespace oracle
