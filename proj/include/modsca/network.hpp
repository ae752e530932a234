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
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace modsca {

enum class SharingProtocol : std::uint8_t { NoLock, ConvLock, FCLock, BothLock };

/// Accepts none|conv|fc|both.
SharingProtocol parse_sharing_protocol(const std::string &name);
std::string to_string(SharingProtocol protocol);

/// Layer indices of a classifier's two blocks: everything up to and
/// including Flatten, and the Dense layers after it.
struct ClassifierBlocks {
    std::vector<std::size_t> conv;
    std::vector<std::size_t> fc;
};
ClassifierBlocks classifier_blocks(const ModuleGraph &classifier);

/// Sets every layer's trainable flag: false inside the locked block(s),
/// true elsewhere.
void apply_lock(ModuleGraph &classifier, SharingProtocol protocol);

enum class ArchitecturePreset : std::uint8_t {
    /// The published layer table.
    Standard,
    /// Same topology with narrow convolutions, for desk-scale runs.
    Compact,
};

ArchitecturePreset parse_architecture_preset(const std::string &name);
std::string to_string(ArchitecturePreset preset);

struct ArchitectureConfig {
    ArchitecturePreset preset = ArchitecturePreset::Standard;
    std::size_t trace_len = 700;
    std::size_t latent_dim = 300;
    std::size_t classes = 256;
    /// Extra conv block (no pooling) for 1400-sample traces.
    bool extra_block = false;
};

std::vector<LayerSpec> encoder_layers(const ArchitectureConfig &config);
std::vector<LayerSpec> decoder_layers(const ArchitectureConfig &config);
std::vector<LayerSpec> classifier_layers(const ArchitectureConfig &config);

/// Encoder, decoder and classifier trained under gamma * CE + omega * MSE.
/// Modules are held by shared pointer so truncated views can alias them.
class ModularNetwork {
public:
    ModularNetwork(ModuleGraph encoder, ModuleGraph decoder, ModuleGraph classifier,
                   double gamma);

    ModuleGraph &encoder() { return *encoder_; }
    ModuleGraph &decoder() { return *decoder_; }
    ModuleGraph &classifier() { return *classifier_; }
    const ModuleGraph &encoder() const { return *encoder_; }
    const ModuleGraph &decoder() const { return *decoder_; }
    const ModuleGraph &classifier() const { return *classifier_; }

    std::shared_ptr<const ModuleGraph> shared_encoder() const { return encoder_; }
    std::shared_ptr<const ModuleGraph> shared_classifier() const { return classifier_; }

    double gamma() const { return gamma_; }
    double omega() const { return omega_; }
    std::size_t latent_dim() const { return encoder_->output_len(); }
    std::size_t trace_len() const { return encoder_->input_len(); }

    std::vector<Parameter<float> *> parameters();
    void zero_grad();

    /// Deep copy; the copy shares nothing with this network.
    ModularNetwork clone() const;

private:
    std::shared_ptr<ModuleGraph> encoder_;
    std::shared_ptr<ModuleGraph> decoder_;
    std::shared_ptr<ModuleGraph> classifier_;
    double gamma_;
    double omega_ = 1.0;
};

/// Checks the latent dimensions agree (LatentDimError) and gamma lies in
/// (0, 1] (DomainError).
ModularNetwork assemble(ModuleGraph encoder, ModuleGraph decoder, ModuleGraph classifier,
                        double gamma);

/// Builds the three modules from a preset; the modules draw from seeds
/// derived from `seed`.
ModularNetwork build_network(const ArchitectureConfig &config, double gamma,
                             std::uint64_t seed);

struct LossTerms {
    Var<float> total;
    Var<float> ce;
    Var<float> mse;
};

/// Records gamma * CE(classifier(encoder(x)), labels) + omega * MSE(decoder(encoder(x)), x).
LossTerms combined_loss(Tape<float> &tape, ModularNetwork &net, const Tensor<float> &traces,
                        std::span<const std::uint32_t> labels, Mode mode = Mode::Train);

/// Encoder followed by classifier, aliasing the parent network's modules.
class TruncatedModel {
public:
    TruncatedModel(std::shared_ptr<const ModuleGraph> encoder,
                   std::shared_ptr<const ModuleGraph> classifier);

    const ModuleGraph &encoder() const { return *encoder_; }
    const ModuleGraph &classifier() const { return *classifier_; }

    /// Class probabilities for a [N, trace_len] batch, evaluated in chunks
    /// of `chunk` traces spread over `threads` workers.
    Tensor<float> predict(const Tensor<float> &traces, std::size_t threads = 1,
                          std::size_t chunk = 256) const;

private:
    std::shared_ptr<const ModuleGraph> encoder_;
    std::shared_ptr<const ModuleGraph> classifier_;
};

TruncatedModel truncated_view(const ModularNetwork &net);

/// Copies `donor` into the network in place of its classifier, then applies
/// the protocol. Throws LatentDimError if the donor input differs from the
/// latent dimension.
ModularNetwork swap_classifier(const ModularNetwork &net, const ModuleGraph &donor,
                               SharingProtocol protocol);

} // namespace modsca
