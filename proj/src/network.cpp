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

#include "modsca/network.hpp"

#include "modsca/errors.hpp"
#include "modsca/parallel.hpp"

#include <algorithm>

namespace modsca {

SharingProtocol parse_sharing_protocol(const std::string &name) {
    if (name == "none")
        return SharingProtocol::NoLock;
    if (name == "conv")
        return SharingProtocol::ConvLock;
    if (name == "fc")
        return SharingProtocol::FCLock;
    if (name == "both")
        return SharingProtocol::BothLock;
    throw ConfigError("unknown lock '" + name + "' (expected none, conv, fc or both)");
}

std::string to_string(SharingProtocol protocol) {
    switch (protocol) {
    case SharingProtocol::NoLock: return "none";
    case SharingProtocol::ConvLock: return "conv";
    case SharingProtocol::FCLock: return "fc";
    case SharingProtocol::BothLock: return "both";
    }
    return "?";
}

ClassifierBlocks classifier_blocks(const ModuleGraph &classifier) {
    ClassifierBlocks blocks;
    const auto flat = classifier.flatten_index();
    if (!flat)
        return blocks;
    for (std::size_t i = 0; i <= *flat; ++i)
        blocks.conv.push_back(i);
    for (std::size_t i = *flat + 1; i < classifier.layer_count(); ++i)
        if (classifier.layer(i).spec.kind == LayerKind::Dense)
            blocks.fc.push_back(i);
    return blocks;
}

void apply_lock(ModuleGraph &classifier, SharingProtocol protocol) {
    const ClassifierBlocks blocks = classifier_blocks(classifier);
    const bool lock_conv =
        protocol == SharingProtocol::ConvLock || protocol == SharingProtocol::BothLock;
    const bool lock_fc =
        protocol == SharingProtocol::FCLock || protocol == SharingProtocol::BothLock;
    const auto has_conv = std::any_of(blocks.conv.begin(), blocks.conv.end(), [&](auto i) {
        const LayerKind k = classifier.layer(i).spec.kind;
        return k == LayerKind::Conv1D || k == LayerKind::TransposedConv1D;
    });
    if (lock_conv && !has_conv)
        throw StructureError("classifier has no convolutional block to lock");
    if (lock_fc && blocks.fc.empty())
        throw StructureError("classifier has no fully-connected block to lock");

    for (std::size_t i = 0; i < classifier.layer_count(); ++i)
        classifier.set_layer_trainable(i, true);
    if (lock_conv)
        for (std::size_t i : blocks.conv)
            classifier.set_layer_trainable(i, false);
    if (lock_fc)
        for (std::size_t i : blocks.fc)
            classifier.set_layer_trainable(i, false);
}

ArchitecturePreset parse_architecture_preset(const std::string &name) {
    if (name == "standard")
        return ArchitecturePreset::Standard;
    if (name == "compact")
        return ArchitecturePreset::Compact;
    throw ConfigError("unknown architecture preset '" + name +
                      "' (expected standard or compact)");
}

std::string to_string(ArchitecturePreset preset) {
    return preset == ArchitecturePreset::Standard ? "standard" : "compact";
}

namespace {

struct Widths {
    std::uint32_t c1, c2, c3;
};

Widths encoder_widths(ArchitecturePreset preset) {
    return preset == ArchitecturePreset::Standard ? Widths{32, 64, 128} : Widths{4, 8, 16};
}

std::size_t expected_trace_len(const ArchitectureConfig &c) { return c.extra_block ? 1400 : 700; }

void check_config(const ArchitectureConfig &c) {
    if (c.trace_len != expected_trace_len(c))
        throw ConfigError("preset expects traces of " + std::to_string(expected_trace_len(c)) +
                          " samples, got " + std::to_string(c.trace_len));
    if (c.latent_dim == 0 || c.latent_dim % 2 != 0)
        throw ConfigError("latent dimension must be a positive even number");
    if (c.classes < 2)
        throw ConfigError("classifier needs at least two classes");
}

} // namespace

std::vector<LayerSpec> encoder_layers(const ArchitectureConfig &c) {
    check_config(c);
    const Widths w = encoder_widths(c.preset);
    using L = LayerSpec;
    std::vector<LayerSpec> s{
        L::conv(w.c1, 64, ActivationKind::SELU, 3), L::batch_norm(), L::avg_pool(2, 2),
        L::conv(w.c2, 25), L::batch_norm(), L::avg_pool(25, 25),
        L::conv(w.c3, 3), L::batch_norm(), L::avg_pool(5, 5),
    };
    if (c.extra_block) {
        s.push_back(L::conv(w.c3, 3));
        s.push_back(L::batch_norm());
    }
    s.push_back(L::flatten());
    s.push_back(L::dense(static_cast<std::uint32_t>(c.latent_dim)));
    return s;
}

std::vector<LayerSpec> decoder_layers(const ArchitectureConfig &c) {
    check_config(c);
    const Widths w = encoder_widths(c.preset);
    using L = LayerSpec;
    std::vector<LayerSpec> s{
        L::reshape(static_cast<std::uint32_t>(c.latent_dim / 2), 2),
        L::transposed_conv(w.c3, 3, 7), L::batch_norm(),
        L::transposed_conv(w.c2, 25, 25), L::batch_norm(),
        L::transposed_conv(w.c1, 64, 2), L::batch_norm(),
    };
    if (c.extra_block) {
        s.push_back(L::transposed_conv(w.c1, 64, 2));
        s.push_back(L::batch_norm());
    }
    s.push_back(L::transposed_conv(1, 1, 1, ActivationKind::Sigmoid));
    return s;
}

std::vector<LayerSpec> classifier_layers(const ArchitectureConfig &c) {
    check_config(c);
    using L = LayerSpec;
    return {
        L::conv(4, 1, ActivationKind::SELU, 3), L::batch_norm(), L::avg_pool(2, 2),
        L::flatten(),
        L::dense(10, ActivationKind::SELU), L::dense(10, ActivationKind::SELU),
        L::dense(10, ActivationKind::SELU),
        L::dense(static_cast<std::uint32_t>(c.classes), ActivationKind::Softmax),
    };
}

ModularNetwork::ModularNetwork(ModuleGraph encoder, ModuleGraph decoder,
                               ModuleGraph classifier, double gamma)
    : encoder_(std::make_shared<ModuleGraph>(std::move(encoder))),
      decoder_(std::make_shared<ModuleGraph>(std::move(decoder))),
      classifier_(std::make_shared<ModuleGraph>(std::move(classifier))), gamma_(gamma) {
    if (encoder_->kind() != ModuleKind::Encoder || decoder_->kind() != ModuleKind::Decoder ||
        classifier_->kind() != ModuleKind::Classifier)
        throw StructureError("modules passed in the wrong roles");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw DomainError("gamma must lie in (0, 1], got " + std::to_string(gamma));
    const std::size_t latent = encoder_->output_len();
    if (decoder_->input_len() != latent)
        throw LatentDimError("decoder expects a latent of " +
                             std::to_string(decoder_->input_len()) + ", encoder emits " +
                             std::to_string(latent));
    if (classifier_->input_len() != latent)
        throw LatentDimError("classifier expects a latent of " +
                             std::to_string(classifier_->input_len()) + ", encoder emits " +
                             std::to_string(latent));
    if (decoder_->output_len() != encoder_->input_len())
        throw DimensionError("decoder reconstructs " + std::to_string(decoder_->output_len()) +
                             " samples, encoder reads " +
                             std::to_string(encoder_->input_len()));
}

std::vector<Parameter<float> *> ModularNetwork::parameters() {
    std::vector<Parameter<float> *> out;
    for (ModuleGraph *m : {encoder_.get(), decoder_.get(), classifier_.get()}) {
        auto p = m->parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

void ModularNetwork::zero_grad() {
    encoder_->zero_grad();
    decoder_->zero_grad();
    classifier_->zero_grad();
}

ModularNetwork ModularNetwork::clone() const {
    return ModularNetwork(*encoder_, *decoder_, *classifier_, gamma_);
}

ModularNetwork assemble(ModuleGraph encoder, ModuleGraph decoder, ModuleGraph classifier,
                        double gamma) {
    return ModularNetwork(std::move(encoder), std::move(decoder), std::move(classifier), gamma);
}

ModularNetwork build_network(const ArchitectureConfig &config, double gamma,
                             std::uint64_t seed) {
    return assemble(
        build_module(encoder_layers(config), ModuleKind::Encoder, config.trace_len, seed * 3),
        build_module(decoder_layers(config), ModuleKind::Decoder, config.latent_dim,
                     seed * 3 + 1),
        build_module(classifier_layers(config), ModuleKind::Classifier, config.latent_dim,
                     seed * 3 + 2),
        gamma);
}

LossTerms combined_loss(Tape<float> &tape, ModularNetwork &net, const Tensor<float> &traces,
                        std::span<const std::uint32_t> labels, Mode mode) {
    if (traces.rank() != 2 || traces.dim(1) != net.trace_len())
        throw DimensionError("expected a [batch, " + std::to_string(net.trace_len()) +
                             "] trace batch, got " + shape_string(traces.shape()));
    const Var<float> x = tape.constant_ref(traces);
    const Var<float> z = net.encoder().forward(tape, x, mode);
    const Var<float> recon = net.decoder().forward(tape, z, mode);
    const Var<float> probs = net.classifier().forward(tape, z, mode);
    LossTerms t;
    t.ce = ops::cross_entropy_loss(probs, labels, Reduction::Mean);
    t.mse = ops::mse_loss(recon, x);
    t.total = ops::add(ops::scale(t.ce, net.gamma()), ops::scale(t.mse, net.omega()));
    return t;
}

TruncatedModel::TruncatedModel(std::shared_ptr<const ModuleGraph> encoder,
                               std::shared_ptr<const ModuleGraph> classifier)
    : encoder_(std::move(encoder)), classifier_(std::move(classifier)) {
    if (encoder_->output_len() != classifier_->input_len())
        throw LatentDimError("truncated model: encoder emits " +
                             std::to_string(encoder_->output_len()) +
                             ", classifier expects " + std::to_string(classifier_->input_len()));
}

Tensor<float> TruncatedModel::predict(const Tensor<float> &traces, std::size_t threads,
                                      std::size_t chunk) const {
    if (traces.rank() != 2 || traces.dim(1) != encoder_->input_len())
        throw DimensionError("expected a [batch, " + std::to_string(encoder_->input_len()) +
                             "] trace batch, got " + shape_string(traces.shape()));
    chunk = std::max<std::size_t>(1, chunk);
    const std::size_t n = traces.dim(0), len = traces.dim(1);
    const std::size_t classes = classifier_->output_len();
    Tensor<float> out({n, classes});
    const std::size_t chunks = (n + chunk - 1) / chunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t lo = c * chunk, rows = std::min(n, lo + chunk) - lo;
        Tensor<float> part({rows, len},
                           std::vector<float>(traces.data() + lo * len,
                                              traces.data() + (lo + rows) * len));
        Tape<float> tape;
        const Var<float> z = encoder_->forward(tape, tape.constant_ref(part));
        const Var<float> p = classifier_->forward(tape, z);
        std::copy(p.value().data(), p.value().data() + rows * classes,
                  out.data() + lo * classes);
    });
    return out;
}

TruncatedModel truncated_view(const ModularNetwork &net) {
    return TruncatedModel(net.shared_encoder(), net.shared_classifier());
}

ModularNetwork swap_classifier(const ModularNetwork &net, const ModuleGraph &donor,
                               SharingProtocol protocol) {
    if (donor.kind() != ModuleKind::Classifier)
        throw StructureError("donor module is a " + to_string(donor.kind()) +
                             ", not a classifier");
    if (donor.input_len() != net.latent_dim())
        throw LatentDimError("donor classifier reads a latent of " +
                             std::to_string(donor.input_len()) + ", network latent is " +
                             std::to_string(net.latent_dim()));
    ModuleGraph classifier = donor;
    apply_lock(classifier, protocol);
    return ModularNetwork(net.encoder(), net.decoder(), std::move(classifier), net.gamma());
}

} // namespace modsca
