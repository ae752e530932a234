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

#include "modsca/introspect.hpp"

#include "modsca/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace modsca {

namespace {

void check_latents(const ModuleGraph &classifier, const Tensor<float> &latents) {
    if (latents.rank() != 2 || latents.dim(1) != classifier.input_len())
        throw DimensionError("expected a [batch, " + std::to_string(classifier.input_len()) +
                             "] latent batch, got " + shape_string(latents.shape()));
}

} // namespace

Heatmap activation_heatmap(const ModuleGraph &classifier, const Tensor<float> &latents) {
    const auto &layers = classifier.layers();
    const auto first = std::find_if(layers.begin(), layers.end(), [](const Layer &l) {
        return l.spec.kind == LayerKind::Conv1D || l.spec.kind == LayerKind::TransposedConv1D;
    });
    if (first == layers.end())
        throw StructureError("classifier has no convolutional layer");
    check_latents(classifier, latents);
    const auto depth = static_cast<std::size_t>(first - layers.begin()) + 1;

    Tape<float> tape;
    const Var<float> out =
        classifier.forward_prefix(tape, tape.constant_ref(latents), depth);
    const Tensor<float> &a = out.value();
    const std::size_t batch = a.dim(0);
    Heatmap h;
    h.kernels = a.dim(1);
    h.positions = a.dim(2);
    h.values.assign(h.kernels * h.positions, 0.0);
    const std::size_t plane = h.kernels * h.positions;
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < plane; ++i)
            h.values[i] += std::abs(static_cast<double>(a[b * plane + i]));
    for (double &v : h.values)
        v /= static_cast<double>(batch);
    return h;
}

std::vector<double> saliency(const ModuleGraph &classifier, const Tensor<float> &latents,
                             std::span<const std::uint32_t> labels) {
    check_latents(classifier, latents);
    if (labels.size() != latents.dim(0))
        throw DimensionError("saliency needs one label per latent");
    Tape<float> tape;
    const Var<float> x = tape.variable(latents);
    const Var<float> probs = classifier.forward(tape, x);
    tape.backward(ops::cross_entropy_loss(probs, labels, Reduction::Sum));
    const Tensor<float> g = x.grad();
    const std::size_t batch = latents.dim(0), len = latents.dim(1);
    std::vector<double> out(len, 0.0);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < len; ++i)
            out[i] += std::abs(static_cast<double>(g[b * len + i]));
    for (double &v : out)
        v /= static_cast<double>(batch);
    return out;
}

double dtw_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty())
        throw DataError("DTW needs two non-empty sequences");
    const std::size_t m = b.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j <= m; ++j)
            cur[j] = std::abs(a[i - 1] - b[j - 1]) +
                     std::min({prev[j - 1], prev[j], cur[j - 1]});
        std::swap(prev, cur);
    }
    return prev[m];
}

} // namespace modsca
