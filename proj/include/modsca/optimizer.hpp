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

#include "modsca/tensor.hpp"

#include <cmath>
#include <span>
#include <unordered_map>

namespace modsca {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with per-parameter moment state and bias correction. Parameters
/// whose `trainable` flag is false are skipped entirely.
template <typename Real> class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    const AdamConfig &config() const { return config_; }

    void step(std::span<Parameter<Real> *const> params) {
        for (Parameter<Real> *p : params) {
            if (!p->trainable)
                continue;
            if (p->grad.shape() != p->value.shape())
                continue;
            State &st = state_[p];
            if (st.m.size() != p->value.size()) {
                st.m.assign(p->value.size(), 0.0);
                st.v.assign(p->value.size(), 0.0);
                st.steps = 0;
            }
            ++st.steps;
            const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(st.steps));
            const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(st.steps));
            for (std::size_t i = 0; i < p->value.size(); ++i) {
                const double g = p->grad[i];
                st.m[i] = config_.beta1 * st.m[i] + (1 - config_.beta1) * g;
                st.v[i] = config_.beta2 * st.v[i] + (1 - config_.beta2) * g * g;
                const double mhat = st.m[i] / c1;
                const double vhat = st.v[i] / c2;
                p->value[i] = static_cast<Real>(
                    p->value[i] - config_.learning_rate * mhat /
                                      (std::sqrt(vhat) + config_.epsilon));
            }
        }
    }

private:
    struct State {
        std::vector<double> m, v;
        long steps = 0;
    };

    AdamConfig config_;
    std::unordered_map<const Parameter<Real> *, State> state_;
};

} // namespace modsca
