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

#include "modsca/autograd.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace modsca {

enum class LayerKind : std::uint8_t {
    Conv1D = 1,
    TransposedConv1D = 2,
    AvgPool1D = 3,
    Dense = 4,
    BatchNorm = 5,
    Flatten = 6,
    Activation = 7,
    Reshape = 8,
};

enum class ActivationKind : std::uint8_t { None = 0, SELU = 1, Sigmoid = 2, Softmax = 3 };

enum class InitKind : std::uint8_t { HeUniform = 0, Zeros = 1 };

enum class ModuleKind : std::uint8_t { Encoder = 0, Decoder = 1, Classifier = 2 };

enum class Mode : std::uint8_t { Train, Infer };

std::string to_string(LayerKind kind);
std::string to_string(ModuleKind kind);

/// Configuration of one layer. Fields a kind does not use keep their
/// defaults and are ignored.
struct LayerSpec {
    LayerKind kind = LayerKind::Flatten;
    std::uint32_t kernel_count = 1;
    std::uint32_t kernel_len = 1;
    std::uint32_t dilation_rate = 1;
    std::uint32_t stride = 1;
    std::uint32_t units = 1;
    std::uint32_t pool = 1;
    Padding padding = Padding::Same;
    ActivationKind activation = ActivationKind::None;
    InitKind init = InitKind::HeUniform;
    // Reshape target.
    std::uint32_t channels = 0;
    std::uint32_t length = 0;

    static LayerSpec conv(std::uint32_t kernels, std::uint32_t kernel_len,
                          ActivationKind act = ActivationKind::SELU,
                          std::uint32_t dilation = 1, std::uint32_t stride = 1,
                          Padding padding = Padding::Same);
    static LayerSpec transposed_conv(std::uint32_t kernels, std::uint32_t kernel_len,
                                     std::uint32_t stride,
                                     ActivationKind act = ActivationKind::SELU,
                                     Padding padding = Padding::Same);
    static LayerSpec avg_pool(std::uint32_t pool, std::uint32_t stride);
    static LayerSpec dense(std::uint32_t units, ActivationKind act = ActivationKind::None);
    static LayerSpec batch_norm();
    static LayerSpec flatten();
    static LayerSpec activation_layer(ActivationKind act);
    static LayerSpec reshape(std::uint32_t channels, std::uint32_t length);

    friend bool operator==(const LayerSpec &, const LayerSpec &) = default;
};

/// A layer bound to its parameters and the per-sample shapes it maps.
struct Layer {
    LayerSpec spec;
    Shape in_shape;
    Shape out_shape;
    /// Conv kinds: kernels, bias. Dense: weights, bias. BatchNorm: gamma, beta.
    std::vector<Parameter<float>> params;
    /// BatchNorm running statistics.
    BatchNormStats<float> stats;
    bool trainable = true;
};

/// An encoder, decoder or classifier: an ordered layer list whose shape chain
/// was validated at construction. Copies are deep.
///
/// Inputs are [batch, input_len]; a module whose first layer is
/// convolutional views them as one channel. Outputs are flattened to
/// [batch, output_len].
class ModuleGraph {
public:
    /// Validates the chain and allocates zero-valued parameters.
    ModuleGraph(ModuleKind kind, std::size_t input_len, std::vector<LayerSpec> specs);

    ModuleKind kind() const { return kind_; }
    std::size_t input_len() const { return input_len_; }
    std::size_t output_len() const { return output_len_; }
    std::size_t layer_count() const { return layers_.size(); }
    const Layer &layer(std::size_t i) const { return layers_.at(i); }
    Layer &layer(std::size_t i) { return layers_.at(i); }
    const std::vector<Layer> &layers() const { return layers_; }
    std::vector<LayerSpec> specs() const;

    std::vector<Parameter<float> *> parameters();
    std::vector<const Parameter<float> *> parameters() const;
    std::size_t parameter_count() const;

    /// Index of the Flatten layer, if any.
    std::optional<std::size_t> flatten_index() const;

    void set_layer_trainable(std::size_t i, bool trainable);
    void zero_grad();

    /// Records a forward pass. Train mode uses batch statistics and updates
    /// the running statistics of trainable BatchNorm layers.
    Var<float> forward(Tape<float> &tape, Var<float> input, Mode mode);
    /// Inference-mode forward pass; parameters are bound as constants.
    Var<float> forward(Tape<float> &tape, Var<float> input) const;
    /// Inference through the first `layers` layers, output left unflattened.
    Var<float> forward_prefix(Tape<float> &tape, Var<float> input,
                              std::size_t layers) const;

    /// Inference on a [batch, input_len] tensor, `chunk` rows at a time.
    Tensor<float> predict(const Tensor<float> &batch, std::size_t chunk = 256) const;

    /// Replaces the running statistics of every trainable BatchNorm layer by
    /// the population mean and biased variance of its input over `inputs`,
    /// front to back, each layer seeing inference-mode outputs of the layers
    /// before it. Frozen layers keep their statistics.
    void recalibrate_batch_norm(const Tensor<float> &inputs, std::size_t chunk = 256);

private:
    friend ModuleGraph build_module(std::vector<LayerSpec>, ModuleKind, std::size_t,
                                    std::uint64_t);

    template <typename Self>
    static Var<float> run(Self &self, Tape<float> &tape, Var<float> input, Mode mode,
                          std::size_t end, bool flatten_output);

    void initialize(std::uint64_t seed);

    ModuleKind kind_;
    std::size_t input_len_;
    std::size_t output_len_ = 0;
    std::vector<Layer> layers_;
};

/// Builds a module and initializes it from a seeded generator: He-uniform
/// weights with bound sqrt(6 / fan_in), zero biases, unit BatchNorm scale.
ModuleGraph build_module(std::vector<LayerSpec> specs, ModuleKind kind,
                         std::size_t input_len, std::uint64_t seed);

struct ModuleHeader {
    std::uint16_t version = 0;
    ModuleKind kind = ModuleKind::Encoder;
    std::uint32_t input_len = 0;
    std::uint32_t output_len = 0;
    std::uint32_t layer_count = 0;
};

inline constexpr std::uint16_t kModuleFormatVersion = 1;

std::vector<std::uint8_t> serialize_module(const ModuleGraph &module);
ModuleGraph deserialize_module(std::span<const std::uint8_t> bytes);
/// Reads only the fixed header (magic, version, kind, lengths).
ModuleHeader read_module_header(std::span<const std::uint8_t> bytes);

/// Raw float payloads of each layer, in file order.
std::vector<std::vector<float>> module_parameter_payloads(const ModuleGraph &module);

void save_module(const ModuleGraph &module, const std::filesystem::path &path);
ModuleGraph load_module(const std::filesystem::path &path);

} // namespace modsca
