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

#include "doctest.h"
#include "support/oracles.hpp"

#include "modsca/errors.hpp"
#include "modsca/introspect.hpp"
#include "modsca/network.hpp"

#include <cmath>
#include <random>

using namespace modsca;

namespace {

Tensor<float> latents(std::size_t rows, std::size_t len, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> n(0.0f, 1.0f);
    Tensor<float> t({rows, len});
    for (float &v : t.values())
        v = n(rng);
    return t;
}

ModuleGraph small_classifier(std::uint64_t seed) {
    return build_module({LayerSpec::conv(3, 2, ActivationKind::SELU, 2), LayerSpec::batch_norm(),
                         LayerSpec::avg_pool(2, 2), LayerSpec::flatten(),
                         LayerSpec::dense(5, ActivationKind::SELU),
                         LayerSpec::dense(4, ActivationKind::Softmax)},
                        ModuleKind::Classifier, 10, seed);
}

} // namespace

TEST_CASE("heatmap of a zero-weight conv is zero") {
    auto cls = small_classifier(1);
    cls.layer(0).params[0].value.fill(0.0f);
    const auto h = activation_heatmap(cls, latents(4, 10, 2));
    CHECK(h.kernels == 3);
    CHECK(h.positions == 10);
    for (double v : h.values)
        CHECK(v == 0.0);
}

TEST_CASE("heatmap of an identity kernel on ones") {
    auto cls = build_module({LayerSpec::conv(1, 1, ActivationKind::None), LayerSpec::flatten(),
                             LayerSpec::dense(2, ActivationKind::Softmax)},
                            ModuleKind::Classifier, 6, 0);
    cls.layer(0).params[0].value.fill(1.0f);
    const auto h = activation_heatmap(cls, Tensor<float>({3, 6}, 1.0f));
    for (double v : h.values)
        CHECK(v == 1.0);
}

TEST_CASE("heatmap matches per-sample recomputation") {
    const auto cls = small_classifier(3);
    const auto x = latents(5, 10, 4);
    const auto h = activation_heatmap(cls, x);
    std::vector<double> ref(h.values.size(), 0.0);
    for (std::size_t b = 0; b < 5; ++b) {
        const Tensor<float> one({1, 10}, std::vector<float>(x.data() + b * 10, x.data() + b * 10 + 10));
        Tape<float> tape;
        const auto a = cls.forward_prefix(tape, tape.constant_ref(one), 1).value();
        for (std::size_t i = 0; i < ref.size(); ++i)
            ref[i] += std::abs(double(a[i])) / 5.0;
    }
    for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(h.values[i] == doctest::Approx(ref[i]).epsilon(1e-12));

    // Reversed batch order gives the same map.
    Tensor<float> rev({5, 10});
    for (std::size_t b = 0; b < 5; ++b)
        std::copy(x.data() + b * 10, x.data() + b * 10 + 10, rev.data() + (4 - b) * 10);
    const auto hr = activation_heatmap(cls, rev);
    for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(hr.values[i] == doctest::Approx(h.values[i]).epsilon(1e-12));
}

TEST_CASE("heatmap needs a conv layer") {
    const auto dense = build_module({LayerSpec::dense(3, ActivationKind::Softmax)},
                                    ModuleKind::Classifier, 4, 0);
    CHECK_THROWS_AS(activation_heatmap(dense, Tensor<float>({1, 4})), StructureError);
}

TEST_CASE("saliency of a disconnected input is zero") {
    auto cls = build_module({LayerSpec::dense(4, ActivationKind::SELU),
                             LayerSpec::dense(3, ActivationKind::Softmax)},
                            ModuleKind::Classifier, 6, 2);
    auto &w = cls.layer(0).params[0].value;
    for (std::size_t u = 0; u < 4; ++u)
        w[u * 6 + 2] = 0.0f;
    const std::vector<std::uint32_t> labels{0, 1, 2, 1};
    const auto s = saliency(cls, latents(4, 6, 1), labels);
    CHECK(s.size() == 6);
    CHECK(s[2] == 0.0);
    for (double v : s)
        CHECK(v >= 0.0);
}

TEST_CASE("saliency of a linear classifier matches finite differences") {
    auto cls = build_module({LayerSpec::dense(3, ActivationKind::Softmax)},
                            ModuleKind::Classifier, 5, 6);
    const auto x = latents(3, 5, 9);
    const std::vector<std::uint32_t> labels{2, 0, 1};
    const auto s = saliency(cls, x, labels);

    // Finite differences of each sample's CE, in double, from the weights.
    const auto &W = cls.layer(0).params[0].value;
    const auto &B = cls.layer(0).params[1].value;
    auto ce = [&](const std::vector<double> &in, std::uint32_t label) {
        double z[3], m = -1e300, sum = 0;
        for (int u = 0; u < 3; ++u) {
            z[u] = B[u];
            for (int i = 0; i < 5; ++i)
                z[u] += double(W[u * 5 + i]) * in[i];
            m = std::max(m, z[u]);
        }
        for (double v : z)
            sum += std::exp(v - m);
        return -(z[label] - m - std::log(sum));
    };
    for (std::size_t i = 0; i < 5; ++i) {
        double ref = 0;
        for (std::size_t b = 0; b < 3; ++b) {
            std::vector<double> in(x.data() + b * 5, x.data() + b * 5 + 5);
            const double h = 1e-5;
            in[i] += h;
            const double up = ce(in, labels[b]);
            in[i] -= 2 * h;
            const double down = ce(in, labels[b]);
            ref += std::abs((up - down) / (2 * h)) / 3.0;
        }
        CHECK(s[i] == doctest::Approx(ref).epsilon(1e-3));
    }
}

TEST_CASE("duplicating the batch leaves saliency unchanged") {
    const auto cls = small_classifier(5);
    const auto x = latents(3, 10, 2);
    Tensor<float> twice({6, 10});
    std::copy(x.data(), x.data() + 30, twice.data());
    std::copy(x.data(), x.data() + 30, twice.data() + 30);
    const std::vector<std::uint32_t> l3{0, 3, 1}, l6{0, 3, 1, 0, 3, 1};
    const auto a = saliency(cls, x, l3);
    const auto b = saliency(cls, twice, l6);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-6));
}

TEST_CASE("dtw examples") {
    const std::vector<double> s{0.3, 1.5, -2, 4};
    CHECK(dtw_distance(s, s) == 0.0);
    const std::vector<double> a{1, 2, 3}, b{1, 2, 2, 3};
    CHECK(dtw_distance(a, b) == 0.0);
    const std::vector<double> z{0}, t{3};
    CHECK(dtw_distance(z, t) == 3.0);
    CHECK_THROWS_AS(dtw_distance({}, a), DataError);
}

TEST_CASE("dtw equals exhaustive alignment on short sequences") {
    const auto seqs = oracle::all_sequences({0, 1, 2}, 4);
    for (const auto &x : seqs)
        for (const auto &y : seqs) {
            const double d = dtw_distance(x, y);
            CHECK(d == oracle::brute_force_dtw(x, y));
            CHECK(d == dtw_distance(y, x));
        }
}
