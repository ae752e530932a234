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

#include "modsca/module.hpp"

#include "modsca/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <type_traits>

namespace modsca {

std::string to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::Conv1D: return "Conv1D";
    case LayerKind::TransposedConv1D: return "TransposedConv1D";
    case LayerKind::AvgPool1D: return "AvgPool1D";
    case LayerKind::Dense: return "Dense";
    case LayerKind::BatchNorm: return "BatchNorm";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::Activation: return "Activation";
    case LayerKind::Reshape: return "Reshape";
    }
    return "Unknown";
}

std::string to_string(ModuleKind kind) {
    switch (kind) {
    case ModuleKind::Encoder: return "encoder";
    case ModuleKind::Decoder: return "decoder";
    case ModuleKind::Classifier: return "classifier";
    }
    return "unknown";
}

LayerSpec LayerSpec::conv(std::uint32_t kernels, std::uint32_t kernel_len,
                          ActivationKind act, std::uint32_t dilation,
                          std::uint32_t stride, Padding padding) {
    LayerSpec s;
    s.kind = LayerKind::Conv1D;
    s.kernel_count = kernels;
    s.kernel_len = kernel_len;
    s.dilation_rate = dilation;
    s.stride = stride;
    s.padding = padding;
    s.activation = act;
    return s;
}

LayerSpec LayerSpec::transposed_conv(std::uint32_t kernels, std::uint32_t kernel_len,
                                     std::uint32_t stride, ActivationKind act,
                                     Padding padding) {
    LayerSpec s;
    s.kind = LayerKind::TransposedConv1D;
    s.kernel_count = kernels;
    s.kernel_len = kernel_len;
    s.stride = stride;
    s.padding = padding;
    s.activation = act;
    return s;
}

LayerSpec LayerSpec::avg_pool(std::uint32_t pool, std::uint32_t stride) {
    LayerSpec s;
    s.kind = LayerKind::AvgPool1D;
    s.pool = pool;
    s.stride = stride;
    return s;
}

LayerSpec LayerSpec::dense(std::uint32_t units, ActivationKind act) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.units = units;
    s.activation = act;
    return s;
}

LayerSpec LayerSpec::batch_norm() {
    LayerSpec s;
    s.kind = LayerKind::BatchNorm;
    return s;
}

LayerSpec LayerSpec::flatten() { return LayerSpec{}; }

LayerSpec LayerSpec::activation_layer(ActivationKind act) {
    LayerSpec s;
    s.kind = LayerKind::Activation;
    s.activation = act;
    return s;
}

LayerSpec LayerSpec::reshape(std::uint32_t channels, std::uint32_t length) {
    LayerSpec s;
    s.kind = LayerKind::Reshape;
    s.channels = channels;
    s.length = length;
    return s;
}

namespace {

bool wants_channels(LayerKind kind) {
    return kind == LayerKind::Conv1D || kind == LayerKind::TransposedConv1D ||
           kind == LayerKind::AvgPool1D;
}

[[noreturn]] void chain_error(std::size_t index, const LayerSpec &spec,
                              const std::string &why) {
    throw DimensionError("layer " + std::to_string(index) + " (" +
                         to_string(spec.kind) + "): " + why);
}

void require_positive(std::size_t index, const LayerSpec &spec, std::uint32_t v,
                      const char *field) {
    if (v == 0)
        throw DomainError("layer " + std::to_string(index) + " (" +
                          to_string(spec.kind) + "): " + field + " must be positive");
}

Shape infer_shape(std::size_t index, const LayerSpec &spec, const Shape &in) {
    auto need_channels = [&] {
        if (in.size() != 2)
            chain_error(index, spec,
                        "expects [channels, length] input, got " + shape_string(in));
    };
    try {
        switch (spec.kind) {
        case LayerKind::Conv1D: {
            need_channels();
            require_positive(index, spec, spec.kernel_count, "kernel_count");
            require_positive(index, spec, spec.kernel_len, "kernel_len");
            require_positive(index, spec, spec.dilation_rate, "dilation_rate");
            require_positive(index, spec, spec.stride, "stride");
            const ConvOptions o{spec.dilation_rate, spec.stride, spec.padding};
            return {spec.kernel_count, conv1d_output_length(in[1], spec.kernel_len, o)};
        }
        case LayerKind::TransposedConv1D: {
            need_channels();
            require_positive(index, spec, spec.kernel_count, "kernel_count");
            require_positive(index, spec, spec.kernel_len, "kernel_len");
            require_positive(index, spec, spec.stride, "stride");
            const TransposedConvOptions o{spec.stride, spec.padding};
            return {spec.kernel_count,
                    transposed_conv1d_output_length(in[1], spec.kernel_len, o)};
        }
        case LayerKind::AvgPool1D:
            need_channels();
            require_positive(index, spec, spec.pool, "pool");
            require_positive(index, spec, spec.stride, "stride");
            return {in[0], avg_pool1d_output_length(in[1], spec.pool, spec.stride)};
        case LayerKind::Dense:
            if (in.size() != 1)
                chain_error(index, spec, "expects flattened input, got " + shape_string(in));
            require_positive(index, spec, spec.units, "units");
            return {spec.units};
        case LayerKind::BatchNorm:
        case LayerKind::Activation:
            return in;
        case LayerKind::Flatten:
            return {shape_size(in)};
        case LayerKind::Reshape:
            if (spec.channels == 0 || spec.length == 0 ||
                std::size_t{spec.channels} * spec.length != shape_size(in))
                chain_error(index, spec,
                            "cannot reshape " + shape_string(in) + " to [" +
                                std::to_string(spec.channels) + "x" +
                                std::to_string(spec.length) + "]");
            return {spec.channels, spec.length};
        }
    } catch (const DimensionError &e) {
        const std::string what = e.what();
        if (what.rfind("layer ", 0) == 0)
            throw;
        chain_error(index, spec, what);
    }
    chain_error(index, spec, "unknown layer kind");
}

// Floats each layer serializes (parameters plus BatchNorm statistics),
// derived from the shape chain without allocating; saturates on overflow.
std::vector<std::uint64_t> stored_floats(std::size_t input_len,
                                         const std::vector<LayerSpec> &specs) {
    constexpr std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
    auto mul = [](std::uint64_t a, std::uint64_t b) { return b && a > cap / b ? cap : a * b; };
    auto add = [](std::uint64_t a, std::uint64_t b) { return a > cap - b ? cap : a + b; };
    std::vector<std::uint64_t> out;
    Shape shape = wants_channels(specs.front().kind) ? Shape{1, input_len} : Shape{input_len};
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const LayerSpec &spec = specs[i];
        const Shape next = infer_shape(i, spec, shape);
        std::uint64_t n = 0;
        switch (spec.kind) {
        case LayerKind::Conv1D:
        case LayerKind::TransposedConv1D:
            n = add(mul(mul(spec.kernel_count, shape[0]), spec.kernel_len), spec.kernel_count);
            break;
        case LayerKind::Dense:
            n = add(mul(spec.units, shape[0]), spec.units);
            break;
        case LayerKind::BatchNorm:
            n = mul(4, shape[0]);
            break;
        default:
            break;
        }
        out.push_back(n);
        shape = next;
    }
    return out;
}

Var<float> activate(Var<float> x, ActivationKind act) {
    switch (act) {
    case ActivationKind::None: return x;
    case ActivationKind::SELU: return ops::selu(x);
    case ActivationKind::Sigmoid: return ops::sigmoid(x);
    case ActivationKind::Softmax: return ops::softmax(x);
    }
    return x;
}

} // namespace

ModuleGraph::ModuleGraph(ModuleKind kind, std::size_t input_len,
                         std::vector<LayerSpec> specs)
    : kind_(kind), input_len_(input_len) {
    if (specs.empty())
        throw DimensionError("a module needs at least one layer");
    if (input_len == 0)
        throw DimensionError("module input length must be positive");
    Shape shape = wants_channels(specs.front().kind) ? Shape{1, input_len}
                                                     : Shape{input_len};
    const std::string prefix = to_string(kind) + ".";
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const LayerSpec &spec = specs[i];
        if (spec.activation == ActivationKind::Softmax &&
            (i + 1 != specs.size() || kind != ModuleKind::Classifier))
            throw DomainError("layer " + std::to_string(i) +
                              ": Softmax is only permitted as the final "
                              "classifier activation");
        Layer layer;
        layer.spec = spec;
        layer.in_shape = shape;
        layer.out_shape = infer_shape(i, spec, shape);
        const std::string id = prefix + std::to_string(i) + ".";
        switch (spec.kind) {
        case LayerKind::Conv1D:
            layer.params.emplace_back(
                id + "kernels",
                Tensor<float>({spec.kernel_count, shape[0], spec.kernel_len}));
            layer.params.emplace_back(id + "bias", Tensor<float>({spec.kernel_count}));
            break;
        case LayerKind::TransposedConv1D:
            layer.params.emplace_back(
                id + "kernels",
                Tensor<float>({shape[0], spec.kernel_count, spec.kernel_len}));
            layer.params.emplace_back(id + "bias", Tensor<float>({spec.kernel_count}));
            break;
        case LayerKind::Dense:
            layer.params.emplace_back(id + "weights",
                                      Tensor<float>({spec.units, shape[0]}));
            layer.params.emplace_back(id + "bias", Tensor<float>({spec.units}));
            break;
        case LayerKind::BatchNorm:
            layer.params.emplace_back(id + "gamma", Tensor<float>({shape[0]}, 1.0f));
            layer.params.emplace_back(id + "beta", Tensor<float>({shape[0]}));
            layer.stats = BatchNormStats<float>(shape[0]);
            break;
        default:
            break;
        }
        shape = layer.out_shape;
        layers_.push_back(std::move(layer));
    }
    output_len_ = shape_size(shape);
}

void ModuleGraph::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (Layer &layer : layers_) {
        if (layer.spec.kind != LayerKind::Conv1D &&
            layer.spec.kind != LayerKind::TransposedConv1D &&
            layer.spec.kind != LayerKind::Dense)
            continue;
        Tensor<float> &w = layer.params[0].value;
        layer.params[1].value.fill(0.0f);
        if (layer.spec.init == InitKind::Zeros) {
            w.fill(0.0f);
            continue;
        }
        const std::size_t fan_in = layer.spec.kind == LayerKind::Dense
                                       ? layer.in_shape[0]
                                       : layer.in_shape[0] * layer.spec.kernel_len;
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (float &v : w.values())
            v = static_cast<float>(dist(rng));
    }
}

ModuleGraph build_module(std::vector<LayerSpec> specs, ModuleKind kind,
                         std::size_t input_len, std::uint64_t seed) {
    ModuleGraph module(kind, input_len, std::move(specs));
    module.initialize(seed);
    return module;
}

std::vector<LayerSpec> ModuleGraph::specs() const {
    std::vector<LayerSpec> out;
    for (const Layer &l : layers_)
        out.push_back(l.spec);
    return out;
}

std::vector<Parameter<float> *> ModuleGraph::parameters() {
    std::vector<Parameter<float> *> out;
    for (Layer &l : layers_)
        for (Parameter<float> &p : l.params)
            out.push_back(&p);
    return out;
}

std::vector<const Parameter<float> *> ModuleGraph::parameters() const {
    std::vector<const Parameter<float> *> out;
    for (const Layer &l : layers_)
        for (const Parameter<float> &p : l.params)
            out.push_back(&p);
    return out;
}

std::size_t ModuleGraph::parameter_count() const {
    std::size_t n = 0;
    for (const Parameter<float> *p : parameters())
        n += p->value.size();
    return n;
}

std::optional<std::size_t> ModuleGraph::flatten_index() const {
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (layers_[i].spec.kind == LayerKind::Flatten)
            return i;
    return std::nullopt;
}

void ModuleGraph::set_layer_trainable(std::size_t i, bool trainable) {
    Layer &l = layers_.at(i);
    l.trainable = trainable;
    for (Parameter<float> &p : l.params)
        p.trainable = trainable;
}

void ModuleGraph::zero_grad() {
    for (Parameter<float> *p : parameters())
        p->zero_grad();
}

template <typename Self>
Var<float> ModuleGraph::run(Self &self, Tape<float> &tape, Var<float> x, Mode mode,
                            std::size_t end, bool flatten_output) {
    constexpr bool is_mutable = !std::is_const_v<Self>;
    const Tensor<float> &in = x.value();
    if (in.rank() != 2 || in.dim(1) != self.input_len_)
        throw DimensionError(to_string(self.kind_) + " expects input [batch, " +
                             std::to_string(self.input_len_) + "], got " +
                             shape_string(in.shape()));
    if (self.layers_.front().in_shape.size() == 2)
        x = ops::reshape(x, self.layers_.front().in_shape);

    auto bind = [&tape](auto &p) {
        if constexpr (is_mutable)
            return tape.param(p);
        else
            return tape.constant_ref(p.value);
    };

    for (std::size_t i = 0; i < end; ++i) {
        auto &layer = self.layers_[i];
        const LayerSpec &s = layer.spec;
        switch (s.kind) {
        case LayerKind::Conv1D:
            x = ops::conv1d(x, bind(layer.params[0]),
                            ConvOptions{s.dilation_rate, s.stride, s.padding});
            x = activate(ops::add_bias(x, bind(layer.params[1])), s.activation);
            break;
        case LayerKind::TransposedConv1D:
            x = ops::transposed_conv1d(x, bind(layer.params[0]),
                                       TransposedConvOptions{s.stride, s.padding});
            x = activate(ops::add_bias(x, bind(layer.params[1])), s.activation);
            break;
        case LayerKind::AvgPool1D:
            x = ops::avg_pool1d(x, s.pool, s.stride);
            break;
        case LayerKind::Dense:
            x = activate(ops::dense(x, bind(layer.params[0]), bind(layer.params[1])),
                         s.activation);
            break;
        case LayerKind::BatchNorm: {
            const bool batch_stats = mode == Mode::Train && layer.trainable;
            BatchNormStats<float> *update = nullptr;
            if constexpr (is_mutable)
                if (batch_stats)
                    update = &layer.stats;
            x = ops::batch_norm(x, bind(layer.params[0]), bind(layer.params[1]),
                                layer.stats, update,
                                batch_stats ? BatchNormMode::Train : BatchNormMode::Infer);
            break;
        }
        case LayerKind::Flatten:
            x = ops::flatten(x);
            break;
        case LayerKind::Activation:
            x = activate(x, s.activation);
            break;
        case LayerKind::Reshape:
            x = ops::reshape(x, Shape{s.channels, s.length});
            break;
        }
    }
    if (flatten_output && x.value().rank() > 2)
        x = ops::flatten(x);
    return x;
}

Var<float> ModuleGraph::forward(Tape<float> &tape, Var<float> input, Mode mode) {
    return run(*this, tape, input, mode, layers_.size(), true);
}

Var<float> ModuleGraph::forward(Tape<float> &tape, Var<float> input) const {
    return run(*this, tape, input, Mode::Infer, layers_.size(), true);
}

Var<float> ModuleGraph::forward_prefix(Tape<float> &tape, Var<float> input,
                                       std::size_t layers) const {
    return run(*this, tape, input, Mode::Infer, std::min(layers, layers_.size()), false);
}

Tensor<float> ModuleGraph::predict(const Tensor<float> &batch, std::size_t chunk) const {
    if (batch.rank() != 2 || batch.dim(0) <= chunk) {
        Tape<float> tape;
        return forward(tape, tape.constant_ref(batch)).value();
    }
    const std::size_t n = batch.dim(0), len = batch.dim(1);
    Tensor<float> out({n, output_len_});
    for (std::size_t lo = 0; lo < n; lo += chunk) {
        const std::size_t rows = std::min(n, lo + chunk) - lo;
        const Tensor<float> part({rows, len},
                                 std::vector<float>(batch.data() + lo * len,
                                                    batch.data() + (lo + rows) * len));
        Tape<float> tape;
        const Tensor<float> &y = forward(tape, tape.constant_ref(part)).value();
        std::copy(y.data(), y.data() + y.size(), out.data() + lo * output_len_);
    }
    return out;
}

void ModuleGraph::recalibrate_batch_norm(const Tensor<float> &inputs, std::size_t chunk) {
    if (inputs.rank() != 2 || inputs.dim(1) != input_len_)
        throw DimensionError("calibration set must be [batch, " + std::to_string(input_len_) +
                             "], got " + shape_string(inputs.shape()));
    chunk = std::max<std::size_t>(1, chunk);
    const std::size_t n = inputs.dim(0), len = inputs.dim(1);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Layer &layer = layers_[i];
        if (layer.spec.kind != LayerKind::BatchNorm || !layer.trainable)
            continue;
        const std::size_t channels = layer.in_shape[0];
        const std::size_t inner = shape_size(layer.in_shape) / channels;
        std::vector<double> sum(channels, 0.0), sq(channels, 0.0);
        for (std::size_t lo = 0; lo < n; lo += chunk) {
            const std::size_t rows = std::min(n, lo + chunk) - lo;
            const Tensor<float> part({rows, len},
                                     std::vector<float>(inputs.data() + lo * len,
                                                        inputs.data() + (lo + rows) * len));
            Tape<float> tape;
            const Tensor<float> &a = forward_prefix(tape, tape.constant_ref(part), i).value();
            for (std::size_t b = 0; b < rows; ++b)
                for (std::size_t c = 0; c < channels; ++c) {
                    const float *row = a.data() + (b * channels + c) * inner;
                    for (std::size_t t = 0; t < inner; ++t) {
                        sum[c] += row[t];
                        sq[c] += static_cast<double>(row[t]) * row[t];
                    }
                }
        }
        const double count = static_cast<double>(n * inner);
        for (std::size_t c = 0; c < channels; ++c) {
            const double mean = sum[c] / count;
            layer.stats.mean[c] = static_cast<float>(mean);
            layer.stats.variance[c] =
                static_cast<float>(std::max(sq[c] / count - mean * mean, 0.0));
        }
    }
}

// ---------------------------------------------------------------- files

namespace {

constexpr std::string_view kModuleMagic = "SCMD";
constexpr std::uint32_t kHyperparameterBytes = 11 * 4;
// magic + version + kind + input_len + output_len + layer_count
constexpr std::size_t kModuleHeaderBytes = 4 + 2 + 1 + 4 + 4 + 4;

std::vector<float> layer_payload(const Layer &layer) {
    std::vector<float> out;
    for (const Parameter<float> &p : layer.params)
        out.insert(out.end(), p.value.values().begin(), p.value.values().end());
    if (layer.spec.kind == LayerKind::BatchNorm) {
        out.insert(out.end(), layer.stats.mean.values().begin(),
                   layer.stats.mean.values().end());
        out.insert(out.end(), layer.stats.variance.values().begin(),
                   layer.stats.variance.values().end());
    }
    return out;
}

ModuleHeader parse_header(ByteReader &in) {
    in.expect_tag(kModuleMagic);
    ModuleHeader h;
    const std::size_t version_at = in.offset();
    h.version = in.u16();
    if (h.version != kModuleFormatVersion)
        throw FormatError("unsupported module format version " +
                              std::to_string(h.version),
                          version_at);
    const std::size_t kind_at = in.offset();
    const std::uint8_t kind = in.u8();
    if (kind > static_cast<std::uint8_t>(ModuleKind::Classifier))
        throw FormatError("unknown module kind " + std::to_string(kind), kind_at);
    h.kind = static_cast<ModuleKind>(kind);
    h.input_len = in.u32();
    h.output_len = in.u32();
    h.layer_count = in.u32();
    return h;
}

template <typename Enum>
Enum checked_enum(std::uint32_t v, std::uint32_t lo, std::uint32_t hi, std::size_t at,
                  const char *what) {
    if (v < lo || v > hi)
        throw FormatError(std::string("invalid ") + what + " " + std::to_string(v), at);
    return static_cast<Enum>(v);
}

} // namespace

std::vector<std::vector<float>> module_parameter_payloads(const ModuleGraph &module) {
    std::vector<std::vector<float>> out;
    for (const Layer &l : module.layers())
        out.push_back(layer_payload(l));
    return out;
}

std::vector<std::uint8_t> serialize_module(const ModuleGraph &module) {
    ByteWriter out;
    out.tag(kModuleMagic);
    out.u16(kModuleFormatVersion);
    out.u8(static_cast<std::uint8_t>(module.kind()));
    out.u32(static_cast<std::uint32_t>(module.input_len()));
    out.u32(static_cast<std::uint32_t>(module.output_len()));
    out.u32(static_cast<std::uint32_t>(module.layer_count()));
    for (const Layer &layer : module.layers()) {
        const LayerSpec &s = layer.spec;
        out.u8(static_cast<std::uint8_t>(s.kind));
        out.u32(kHyperparameterBytes);
        for (std::uint32_t v :
             {s.kernel_count, s.kernel_len, s.dilation_rate, s.stride, s.units, s.pool,
              static_cast<std::uint32_t>(s.padding), static_cast<std::uint32_t>(s.activation),
              static_cast<std::uint32_t>(s.init), s.channels, s.length})
            out.u32(v);
        out.u8(layer.trainable ? 1 : 0);
        const std::vector<float> payload = layer_payload(layer);
        out.u64(static_cast<std::uint64_t>(payload.size()) * 4);
        for (float v : payload)
            out.f32(v);
    }
    out.seal();
    return out.take();
}

ModuleHeader read_module_header(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    return parse_header(in);
}

ModuleGraph deserialize_module(std::span<const std::uint8_t> bytes) {
    {
        ByteReader probe(bytes);
        parse_header(probe);
    }
    ByteReader in(verify_crc(bytes, kModuleHeaderBytes));
    const ModuleHeader h = parse_header(in);
    if (h.layer_count == 0)
        throw FormatError("module has no layers", in.offset() - 4);

    struct Pending {
        LayerSpec spec;
        bool trainable;
        std::span<const std::uint8_t> payload;
        std::size_t payload_at;
    };
    std::vector<Pending> pending;
    for (std::uint32_t i = 0; i < h.layer_count; ++i) {
        const std::size_t kind_at = in.offset();
        LayerSpec s;
        s.kind = checked_enum<LayerKind>(in.u8(), 1, 8, kind_at, "layer kind");
        const std::size_t hp_at = in.offset();
        if (in.u32() != kHyperparameterBytes)
            throw FormatError("unexpected hyperparameter block length", hp_at);
        s.kernel_count = in.u32();
        s.kernel_len = in.u32();
        s.dilation_rate = in.u32();
        s.stride = in.u32();
        s.units = in.u32();
        s.pool = in.u32();
        std::size_t at = in.offset();
        s.padding = checked_enum<Padding>(in.u32(), 0, 1, at, "padding");
        at = in.offset();
        s.activation = checked_enum<ActivationKind>(in.u32(), 0, 3, at, "activation");
        at = in.offset();
        s.init = checked_enum<InitKind>(in.u32(), 0, 1, at, "init");
        s.channels = in.u32();
        s.length = in.u32();
        at = in.offset();
        const std::uint8_t trainable = in.u8();
        if (trainable > 1)
            throw FormatError("invalid trainable flag", at);
        at = in.offset();
        const std::uint64_t payload_bytes = in.u64();
        if (payload_bytes % 4 != 0 || payload_bytes > in.remaining())
            throw FormatError("invalid parameter byte length", at);
        const std::size_t payload_at = in.offset();
        pending.push_back({s, trainable == 1,
                           in.raw(static_cast<std::size_t>(payload_bytes)), payload_at});
    }
    if (in.remaining() != 0)
        throw FormatError("trailing bytes after last layer", in.offset());

    std::vector<LayerSpec> specs;
    for (const Pending &p : pending)
        specs.push_back(p.spec);
    // Sizes implied by the hyperparameters must match the payloads before
    // anything is allocated from them.
    std::vector<std::uint64_t> floats;
    try {
        floats = stored_floats(h.input_len, specs);
    } catch (const std::exception &e) {
        throw FormatError(std::string("layer chain rejected: ") + e.what(),
                          kModuleHeaderBytes);
    }
    for (std::size_t i = 0; i < pending.size(); ++i)
        if (floats[i] > pending[i].payload.size() / 4 ||
            floats[i] * 4 != pending[i].payload.size())
            throw FormatError("layer " + std::to_string(i) + " carries " +
                                  std::to_string(pending[i].payload.size()) +
                                  " parameter bytes, hyperparameters imply " +
                                  std::to_string(floats[i]) + " floats",
                              pending[i].payload_at);

    std::optional<ModuleGraph> built;
    try {
        built.emplace(h.kind, h.input_len, std::move(specs));
    } catch (const std::exception &e) {
        throw FormatError(std::string("layer chain rejected: ") + e.what(),
                          kModuleHeaderBytes);
    }
    ModuleGraph &module = *built;
    if (module.output_len() != h.output_len)
        throw FormatError("header output_len " + std::to_string(h.output_len) +
                              " disagrees with layer chain (" +
                              std::to_string(module.output_len()) + ")",
                          4 + 2 + 1 + 4);

    for (std::size_t i = 0; i < pending.size(); ++i) {
        Layer &layer = module.layer(i);
        std::size_t expected = 0;
        for (const Parameter<float> &p : layer.params)
            expected += p.value.size();
        if (layer.spec.kind == LayerKind::BatchNorm)
            expected += layer.stats.mean.size() + layer.stats.variance.size();
        if (pending[i].payload.size() != expected * 4)
            throw FormatError("layer " + std::to_string(i) + " carries " +
                                  std::to_string(pending[i].payload.size()) +
                                  " parameter bytes, expected " +
                                  std::to_string(expected * 4),
                              pending[i].payload_at);
        ByteReader values(pending[i].payload);
        for (Parameter<float> &p : layer.params)
            for (float &v : p.value.values())
                v = values.f32();
        if (layer.spec.kind == LayerKind::BatchNorm) {
            for (float &v : layer.stats.mean.values())
                v = values.f32();
            for (float &v : layer.stats.variance.values())
                v = values.f32();
        }
        module.set_layer_trainable(i, pending[i].trainable);
    }
    return std::move(*built);
}

void save_module(const ModuleGraph &module, const std::filesystem::path &path) {
    write_file_bytes(path, serialize_module(module));
}

ModuleGraph load_module(const std::filesystem::path &path) {
    return deserialize_module(read_file_bytes(path));
}

} // namespace modsca
