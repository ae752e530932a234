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

#include "modsca/module.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace modsca {

/// Row-major kernel x position grid.
struct Heatmap {
    std::size_t kernels = 0;
    std::size_t positions = 0;
    std::vector<double> values;

    double at(std::size_t k, std::size_t p) const { return values[k * positions + p]; }
};

/// Mean |activation| of the classifier's first convolution, per kernel and
/// output position, over a [batch, input_len] batch of latents.
Heatmap activation_heatmap(const ModuleGraph &classifier, const Tensor<float> &latents);

/// Mean over the batch of |d CE / d input| per input position.
std::vector<double> saliency(const ModuleGraph &classifier, const Tensor<float> &latents,
                             std::span<const std::uint32_t> labels);

/// DTW with |a_i - b_j| local cost and match/insert/delete steps.
double dtw_distance(std::span<const double> a, std::span<const double> b);

} // namespace modsca
