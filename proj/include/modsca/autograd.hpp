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

// Reverse-mode automatic differentiation over batched tensors.
//
// A Tape records a forward computation as a list of nodes. Every op appends
// one node holding its output and a closure that pushes the output gradient
// into its parents. Tape::backward walks the list in reverse.

#include "modsca/tensor.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace modsca {

enum class Padding : std::uint8_t { Same = 0, Valid = 1 };

enum class Reduction : std::uint8_t { Mean, Sum };

enum class BatchNormMode : std::uint8_t { Train, Infer };

/// Number of input samples a dilated kernel spans: l + (l - 1)(dr - 1).
std::size_t receptive_field(std::int64_t kernel_len, std::int64_t dilation_rate);

struct ConvOptions {
    std::size_t dilation = 1;
    std::size_t stride = 1;
    Padding padding = Padding::Same;
};

struct TransposedConvOptions {
    std::size_t stride = 1;
    Padding padding = Padding::Valid;
};

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel_len,
                                 const ConvOptions &options);
std::size_t transposed_conv1d_output_length(std::size_t length,
                                            std::size_t kernel_len,
                                            const TransposedConvOptions &options);
std::size_t avg_pool1d_output_length(std::size_t length, std::size_t pool,
                                     std::size_t stride);

template <typename Real> struct BatchNormStats {
    Tensor<Real> mean;
    Tensor<Real> variance;

    explicit BatchNormStats(std::size_t channels = 1)
        : mean({channels}, Real(0)), variance({channels}, Real(1)) {}
};

struct BatchNormOptions {
    double momentum = 0.99;
    double epsilon = 1e-5;
};

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

template <typename Real> class Tape;

/// Handle to a node of a Tape.
template <typename Real> class Var {
public:
    Var() = default;

    Tape<Real> *tape() const { return tape_; }
    std::size_t index() const { return index_; }
    bool valid() const { return tape_ != nullptr; }

    const Tensor<Real> &value() const;
    const Shape &shape() const { return value().shape(); }

    /// Gradient accumulated by the last backward pass (zeros if none reached).
    Tensor<Real> grad() const;

private:
    friend class Tape<Real>;
    Var(Tape<Real> *tape, std::size_t index) : tape_(tape), index_(index) {}

    Tape<Real> *tape_ = nullptr;
    std::size_t index_ = 0;
};

template <typename Real> class Tape {
public:
    using Backprop = std::function<void(Tape &, std::size_t self)>;

    Tape() = default;
    Tape(const Tape &) = delete;
    Tape &operator=(const Tape &) = delete;

    /// Leaf that never receives a gradient.
    Var<Real> constant(Tensor<Real> value);
    /// Leaf borrowing `value`, which must outlive the tape.
    Var<Real> constant_ref(const Tensor<Real> &value);
    /// Leaf whose gradient is retained and readable through Var::grad().
    Var<Real> variable(Tensor<Real> value);
    /// Leaf bound to a parameter. Gradients accumulate into `p.grad` only
    /// when the parameter is trainable and parameter recording is on.
    Var<Real> param(Parameter<Real> &p);

    /// When false, param() binds parameters as constants.
    void set_record_params(bool on) { record_params_ = on; }

    /// Populates gradients of everything `loss` depends on. `loss` must hold
    /// a single finite value. Node gradients restart from zero on every call;
    /// parameter gradients accumulate.
    void backward(Var<Real> loss);

    std::size_t size() const { return nodes_.size(); }

    // Interface for op implementations.
    Var<Real> record(Tensor<Real> value, std::vector<std::size_t> parents,
                     Backprop backprop);
    const Tensor<Real> &value(std::size_t i) const;
    bool requires_grad(std::size_t i) const { return nodes_[i].requires_grad; }
    Tensor<Real> &grad_buffer(std::size_t i);
    const Tensor<Real> *grad_if_any(std::size_t i) const;

private:
    struct Node {
        Tensor<Real> owned;
        const Tensor<Real> *borrowed = nullptr;
        Tensor<Real> grad;
        bool has_grad = false;
        bool requires_grad = false;
        Parameter<Real> *sink = nullptr;
        Backprop backprop;
    };

    std::vector<Node> nodes_;
    bool record_params_ = true;
};

namespace ops {

/// x: [batch, channels, length], kernels: [out, channels, kernel_len].
/// Dilation spaces the taps; no zero-stuffed kernel is materialized.
template <typename Real>
Var<Real> conv1d(Var<Real> x, Var<Real> kernels, const ConvOptions &options);

/// x: [batch, channels, length], kernels: [channels, out, kernel_len].
/// The adjoint of conv1d under the matching stride and padding.
template <typename Real>
Var<Real> transposed_conv1d(Var<Real> x, Var<Real> kernels,
                            const TransposedConvOptions &options);

/// Adds bias[c] along axis 1 of a [batch, c, ...] tensor.
template <typename Real> Var<Real> add_bias(Var<Real> x, Var<Real> bias);

template <typename Real>
Var<Real> avg_pool1d(Var<Real> x, std::size_t pool, std::size_t stride);

/// x: [batch, in], weights: [units, in], bias: [units].
template <typename Real>
Var<Real> dense(Var<Real> x, Var<Real> weights, Var<Real> bias);

/// Per-channel normalization over batch (and length for 3-D input).
/// Train mode normalizes with batch statistics and, when `update` is given,
/// folds them into it with the configured momentum. Infer mode uses
/// `running`.
template <typename Real>
Var<Real> batch_norm(Var<Real> x, Var<Real> gamma, Var<Real> beta,
                     const BatchNormStats<Real> &running,
                     BatchNormStats<Real> *update, BatchNormMode mode,
                     const BatchNormOptions &options = {});

/// Keeps axis 0, reinterprets the rest as `sample_shape`.
template <typename Real>
Var<Real> reshape(Var<Real> x, const Shape &sample_shape);

template <typename Real> Var<Real> flatten(Var<Real> x);

template <typename Real> Var<Real> selu(Var<Real> x);
template <typename Real> Var<Real> sigmoid(Var<Real> x);
/// Max-shifted softmax over the last axis.
template <typename Real> Var<Real> softmax(Var<Real> x);

template <typename Real> Var<Real> mse_loss(Var<Real> x, Var<Real> target);

/// -log(max(p[label], 1e-12)) per row; averaged or summed over the batch.
template <typename Real>
Var<Real> cross_entropy_loss(Var<Real> probabilities,
                             std::span<const std::uint32_t> labels,
                             Reduction reduction = Reduction::Mean);

template <typename Real> Var<Real> add(Var<Real> a, Var<Real> b);
template <typename Real> Var<Real> mul(Var<Real> a, Var<Real> b);
template <typename Real> Var<Real> scale(Var<Real> x, double factor);
template <typename Real> Var<Real> sum(Var<Real> x);

} // namespace ops

extern template class Tape<float>;
extern template class Tape<double>;
extern template class Var<float>;
extern template class Var<double>;

} // namespace modsca
