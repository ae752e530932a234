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

#include "modsca/autograd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace modsca {

std::size_t receptive_field(std::int64_t kernel_len, std::int64_t dilation_rate) {
    if (kernel_len < 1 || dilation_rate < 1)
        throw DomainError("receptive_field needs kernel_len >= 1 and "
                          "dilation_rate >= 1");
    return static_cast<std::size_t>(kernel_len +
                                    (kernel_len - 1) * (dilation_rate - 1));
}

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

void check_positive(std::size_t v, const char *name) {
    if (v == 0)
        throw DomainError(std::string(name) + " must be positive");
}

struct ConvGeometry {
    std::size_t out_len;
    std::size_t pad_left;
};

ConvGeometry conv_geometry(std::size_t length, std::size_t kernel_len,
                           const ConvOptions &o) {
    check_positive(o.stride, "stride");
    const std::size_t span = receptive_field(static_cast<std::int64_t>(kernel_len),
                                             static_cast<std::int64_t>(o.dilation));
    if (o.padding == Padding::Valid) {
        if (length < span)
            throw DimensionError("input length " + std::to_string(length) +
                                 " is shorter than receptive field " +
                                 std::to_string(span));
        return {(length - span) / o.stride + 1, 0};
    }
    const std::size_t out = ceil_div(length, o.stride);
    const std::size_t needed = (out - 1) * o.stride + span;
    const std::size_t pad_total = needed > length ? needed - length : 0;
    return {out, pad_total / 2};
}

struct TransposedGeometry {
    std::size_t out_len;
    std::size_t crop_left;
};

TransposedGeometry transposed_geometry(std::size_t length, std::size_t kernel_len,
                                       const TransposedConvOptions &o) {
    check_positive(o.stride, "stride");
    check_positive(kernel_len, "kernel_len");
    if (o.padding == Padding::Valid)
        return {(length - 1) * o.stride + kernel_len, 0};
    const std::size_t crop = kernel_len > o.stride ? kernel_len - o.stride : 0;
    return {length * o.stride, crop / 2};
}

// Index range [lo, hi) of output positions t with 0 <= t*stride + offset < length.
std::pair<std::size_t, std::size_t> valid_range(std::ptrdiff_t offset,
                                                std::size_t stride,
                                                std::size_t length,
                                                std::size_t out_len) {
    const auto s = static_cast<std::ptrdiff_t>(stride);
    std::ptrdiff_t lo = 0;
    if (offset < 0)
        lo = (-offset + s - 1) / s;
    const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(length) - 1 - offset;
    if (last < 0)
        return {0, 0};
    std::ptrdiff_t hi = last / s + 1;
    hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(out_len));
    if (lo >= hi)
        return {0, 0};
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

template <typename Real> Tape<Real> &same_tape(Var<Real> a, Var<Real> b) {
    if (!a.valid() || a.tape() != b.tape())
        throw DomainError("operands belong to different tapes");
    return *a.tape();
}

template <typename Real> void require_rank(const Tensor<Real> &t, std::size_t rank,
                                           const char *what) {
    if (t.rank() != rank)
        throw DimensionError(std::string(what) + " expects a rank-" +
                             std::to_string(rank) + " tensor, got " +
                             shape_string(t.shape()));
}

} // namespace

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel_len,
                                 const ConvOptions &options) {
    return conv_geometry(length, kernel_len, options).out_len;
}

std::size_t transposed_conv1d_output_length(std::size_t length,
                                            std::size_t kernel_len,
                                            const TransposedConvOptions &options) {
    return transposed_geometry(length, kernel_len, options).out_len;
}

std::size_t avg_pool1d_output_length(std::size_t length, std::size_t pool,
                                     std::size_t stride) {
    check_positive(pool, "pool");
    check_positive(stride, "stride");
    if (pool > length)
        throw DimensionError("pool " + std::to_string(pool) +
                             " exceeds input length " + std::to_string(length));
    return (length - pool) / stride + 1;
}

// ---------------------------------------------------------------- Var / Tape

template <typename Real> const Tensor<Real> &Var<Real>::value() const {
    return tape_->value(index_);
}

template <typename Real> Tensor<Real> Var<Real>::grad() const {
    if (const Tensor<Real> *g = tape_->grad_if_any(index_))
        return *g;
    return Tensor<Real>(value().shape(), Real(0));
}

template <typename Real> Var<Real> Tape<Real>::constant(Tensor<Real> value) {
    Node n;
    n.owned = std::move(value);
    nodes_.push_back(std::move(n));
    return Var<Real>(this, nodes_.size() - 1);
}

template <typename Real>
Var<Real> Tape<Real>::constant_ref(const Tensor<Real> &value) {
    Node n;
    n.borrowed = &value;
    nodes_.push_back(std::move(n));
    return Var<Real>(this, nodes_.size() - 1);
}

template <typename Real> Var<Real> Tape<Real>::variable(Tensor<Real> value) {
    Node n;
    n.owned = std::move(value);
    n.requires_grad = true;
    nodes_.push_back(std::move(n));
    return Var<Real>(this, nodes_.size() - 1);
}

template <typename Real> Var<Real> Tape<Real>::param(Parameter<Real> &p) {
    Node n;
    n.borrowed = &p.value;
    if (record_params_ && p.trainable) {
        n.requires_grad = true;
        n.sink = &p;
    }
    nodes_.push_back(std::move(n));
    return Var<Real>(this, nodes_.size() - 1);
}

template <typename Real>
Var<Real> Tape<Real>::record(Tensor<Real> value, std::vector<std::size_t> parents,
                             Backprop backprop) {
    Node n;
    n.owned = std::move(value);
    for (std::size_t p : parents)
        n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
    if (n.requires_grad)
        n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var<Real>(this, nodes_.size() - 1);
}

template <typename Real> const Tensor<Real> &Tape<Real>::value(std::size_t i) const {
    const Node &n = nodes_[i];
    return n.borrowed ? *n.borrowed : n.owned;
}

template <typename Real> Tensor<Real> &Tape<Real>::grad_buffer(std::size_t i) {
    Node &n = nodes_[i];
    if (!n.has_grad) {
        n.grad = Tensor<Real>(value(i).shape(), Real(0));
        n.has_grad = true;
    }
    return n.grad;
}

template <typename Real>
const Tensor<Real> *Tape<Real>::grad_if_any(std::size_t i) const {
    const Node &n = nodes_[i];
    return n.has_grad ? &n.grad : nullptr;
}

template <typename Real> void Tape<Real>::backward(Var<Real> loss) {
    if (loss.tape() != this)
        throw DomainError("loss belongs to another tape");
    const Tensor<Real> &lv = value(loss.index());
    if (lv.size() != 1)
        throw DomainError("backward needs a scalar loss, got shape " +
                          shape_string(lv.shape()));
    if (!std::isfinite(lv[0]))
        throw NumericError("loss is not finite");
    for (Node &n : nodes_) {
        n.has_grad = false;
        n.grad = Tensor<Real>();
    }
    if (!nodes_[loss.index()].requires_grad)
        return;
    grad_buffer(loss.index())[0] = Real(1);
    for (std::size_t i = loss.index() + 1; i-- > 0;) {
        Node &n = nodes_[i];
        if (!n.has_grad || !n.requires_grad)
            continue;
        if (n.backprop)
            n.backprop(*this, i);
        if (n.sink) {
            Tensor<Real> &dst = n.sink->grad;
            if (dst.shape() != n.grad.shape())
                dst = Tensor<Real>(n.grad.shape(), Real(0));
            for (std::size_t k = 0; k < dst.size(); ++k)
                dst[k] += n.grad[k];
        }
    }
}

// ---------------------------------------------------------------- ops

namespace ops {

template <typename Real>
Var<Real> conv1d(Var<Real> x, Var<Real> kernels, const ConvOptions &options) {
    Tape<Real> &tape = same_tape(x, kernels);
    const Tensor<Real> &xv = x.value();
    const Tensor<Real> &wv = kernels.value();
    require_rank(xv, 3, "conv1d input");
    require_rank(wv, 3, "conv1d kernels");
    const std::size_t batch = xv.dim(0), channels = xv.dim(1), length = xv.dim(2);
    const std::size_t outs = wv.dim(0), klen = wv.dim(2);
    if (wv.dim(1) != channels)
        throw DimensionError("conv1d kernels expect " + std::to_string(wv.dim(1)) +
                             " channels, input has " + std::to_string(channels));
    const ConvGeometry g = conv_geometry(length, klen, options);
    const std::size_t T = g.out_len, s = options.stride, d = options.dilation;

    Tensor<Real> y({batch, outs, T}, Real(0));
    const Real *X = xv.data();
    const Real *W = wv.data();
    Real *Y = y.data();
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < outs; ++o) {
            Real *yrow = Y + (b * outs + o) * T;
            for (std::size_t c = 0; c < channels; ++c) {
                const Real *xrow = X + (b * channels + c) * length;
                const Real *wrow = W + (o * channels + c) * klen;
                for (std::size_t k = 0; k < klen; ++k) {
                    const Real w = wrow[k];
                    const auto off = static_cast<std::ptrdiff_t>(k * d) -
                                     static_cast<std::ptrdiff_t>(g.pad_left);
                    const auto [lo, hi] = valid_range(off, s, length, T);
                    if (s == 1) {
                        for (std::size_t t = lo; t < hi; ++t)
                            yrow[t] += w * xrow[static_cast<std::ptrdiff_t>(t) + off];
                    } else {
                        for (std::size_t t = lo; t < hi; ++t)
                            yrow[t] += w * xrow[static_cast<std::ptrdiff_t>(t * s) + off];
                    }
                }
            }
        }

    const std::size_t xi = x.index(), wi = kernels.index();
    return tape.record(std::move(y), {xi, wi}, [=](Tape<Real> &tp, std::size_t self) {
        const Real *DY = tp.grad_buffer(self).data();
        const Real *X = tp.value(xi).data();
        const Real *W = tp.value(wi).data();
        Real *DX = tp.requires_grad(xi) ? tp.grad_buffer(xi).data() : nullptr;
        Real *DW = tp.requires_grad(wi) ? tp.grad_buffer(wi).data() : nullptr;
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t o = 0; o < outs; ++o) {
                const Real *dyrow = DY + (b * outs + o) * T;
                for (std::size_t c = 0; c < channels; ++c) {
                    const Real *xrow = X + (b * channels + c) * length;
                    Real *dxrow = DX ? DX + (b * channels + c) * length : nullptr;
                    const std::size_t wbase = (o * channels + c) * klen;
                    for (std::size_t k = 0; k < klen; ++k) {
                        const auto off = static_cast<std::ptrdiff_t>(k * d) -
                                         static_cast<std::ptrdiff_t>(g.pad_left);
                        const auto [lo, hi] = valid_range(off, s, length, T);
                        if (DX) {
                            const Real w = W[wbase + k];
                            for (std::size_t t = lo; t < hi; ++t)
                                dxrow[static_cast<std::ptrdiff_t>(t * s) + off] += w * dyrow[t];
                        }
                        if (DW) {
                            Real acc = 0;
                            for (std::size_t t = lo; t < hi; ++t)
                                acc += dyrow[t] * xrow[static_cast<std::ptrdiff_t>(t * s) + off];
                            DW[wbase + k] += acc;
                        }
                    }
                }
            }
    });
}

template <typename Real>
Var<Real> transposed_conv1d(Var<Real> x, Var<Real> kernels,
                            const TransposedConvOptions &options) {
    Tape<Real> &tape = same_tape(x, kernels);
    const Tensor<Real> &xv = x.value();
    const Tensor<Real> &wv = kernels.value();
    require_rank(xv, 3, "transposed_conv1d input");
    require_rank(wv, 3, "transposed_conv1d kernels");
    const std::size_t batch = xv.dim(0), channels = xv.dim(1), length = xv.dim(2);
    const std::size_t outs = wv.dim(1), klen = wv.dim(2);
    if (wv.dim(0) != channels)
        throw DimensionError("transposed_conv1d kernels expect " +
                             std::to_string(wv.dim(0)) + " channels, input has " +
                             std::to_string(channels));
    const TransposedGeometry g = transposed_geometry(length, klen, options);
    const std::size_t T = g.out_len, s = options.stride;

    // Output position j = i*s + k - crop; for each input sample the valid
    // taps form a contiguous k range, which keeps the inner loops unit-stride.
    const auto crop = static_cast<std::ptrdiff_t>(g.crop_left);
    auto taps = [=](std::size_t i) {
        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(i * s) - crop;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -base);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
            static_cast<std::ptrdiff_t>(klen), static_cast<std::ptrdiff_t>(T) - base);
        return std::array<std::ptrdiff_t, 3>{base, lo, std::max(lo, hi)};
    };

    Tensor<Real> y({batch, outs, T}, Real(0));
    const Real *X = xv.data();
    const Real *W = wv.data();
    Real *Y = y.data();
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c) {
            const Real *xrow = X + (b * channels + c) * length;
            for (std::size_t o = 0; o < outs; ++o) {
                Real *yrow = Y + (b * outs + o) * T;
                const Real *wrow = W + (c * outs + o) * klen;
                for (std::size_t i = 0; i < length; ++i) {
                    const auto [base, lo, hi] = taps(i);
                    const Real xi = xrow[i];
                    Real *dst = yrow + base;
                    for (std::ptrdiff_t k = lo; k < hi; ++k)
                        dst[k] += xi * wrow[k];
                }
            }
        }

    const std::size_t xi = x.index(), wi = kernels.index();
    return tape.record(std::move(y), {xi, wi}, [=](Tape<Real> &tp, std::size_t self) {
        const Real *DY = tp.grad_buffer(self).data();
        const Real *X = tp.value(xi).data();
        const Real *W = tp.value(wi).data();
        Real *DX = tp.requires_grad(xi) ? tp.grad_buffer(xi).data() : nullptr;
        Real *DW = tp.requires_grad(wi) ? tp.grad_buffer(wi).data() : nullptr;
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < channels; ++c) {
                const Real *xrow = X + (b * channels + c) * length;
                Real *dxrow = DX ? DX + (b * channels + c) * length : nullptr;
                for (std::size_t o = 0; o < outs; ++o) {
                    const Real *dyrow = DY + (b * outs + o) * T;
                    const Real *wrow = W + (c * outs + o) * klen;
                    Real *dwrow = DW ? DW + (c * outs + o) * klen : nullptr;
                    for (std::size_t i = 0; i < length; ++i) {
                        const auto [base, lo, hi] = taps(i);
                        const Real *src = dyrow + base;
                        if (dxrow) {
                            Real acc = 0;
                            for (std::ptrdiff_t k = lo; k < hi; ++k)
                                acc += wrow[k] * src[k];
                            dxrow[i] += acc;
                        }
                        if (dwrow) {
                            const Real xv_i = xrow[i];
                            for (std::ptrdiff_t k = lo; k < hi; ++k)
                                dwrow[k] += xv_i * src[k];
                        }
                    }
                }
            }
    });
}

template <typename Real> Var<Real> add_bias(Var<Real> x, Var<Real> bias) {
    Tape<Real> &tape = same_tape(x, bias);
    const Tensor<Real> &xv = x.value();
    const Tensor<Real> &bv = bias.value();
    if (xv.rank() < 2 || bv.rank() != 1 || bv.dim(0) != xv.dim(1))
        throw DimensionError("add_bias cannot broadcast " + shape_string(bv.shape()) +
                             " over " + shape_string(xv.shape()));
    const std::size_t batch = xv.dim(0), channels = xv.dim(1);
    const std::size_t inner = xv.size() / (batch * channels);
    Tensor<Real> y = xv;
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c) {
            Real *row = y.data() + (b * channels + c) * inner;
            for (std::size_t t = 0; t < inner; ++t)
                row[t] += bv[c];
        }
    const std::size_t xi = x.index(), bi = bias.index();
    return tape.record(std::move(y), {xi, bi}, [=](Tape<Real> &tp, std::size_t self) {
        const Tensor<Real> &dy = tp.grad_buffer(self);
        if (tp.requires_grad(xi)) {
            Tensor<Real> &dx = tp.grad_buffer(xi);
            for (std::size_t k = 0; k < dx.size(); ++k)
                dx[k] += dy[k];
        }
        if (tp.requires_grad(bi)) {
            Tensor<Real> &db = tp.grad_buffer(bi);
            for (std::size_t c = 0; c < channels; ++c) {
                double acc = 0;
                for (std::size_t b = 0; b < batch; ++b) {
                    const Real *row = dy.data() + (b * channels + c) * inner;
                    for (std::size_t t = 0; t < inner; ++t)
                        acc += row[t];
                }
                db[c] += static_cast<Real>(acc);
            }
        }
    });
}

template <typename Real>
Var<Real> avg_pool1d(Var<Real> x, std::size_t pool, std::size_t stride) {
    Tape<Real> &tape = *x.tape();
    const Tensor<Real> &xv = x.value();
    require_rank(xv, 3, "avg_pool1d input");
    const std::size_t batch = xv.dim(0), channels = xv.dim(1), length = xv.dim(2);
    const std::size_t T = avg_pool1d_output_length(length, pool, stride);
    const std::size_t rows = batch * channels;
    Tensor<Real> y({batch, channels, T});
    for (std::size_t r = 0; r < rows; ++r) {
        const Real *xrow = xv.data() + r * length;
        for (std::size_t t = 0; t < T; ++t) {
            double acc = 0;
            for (std::size_t k = 0; k < pool; ++k)
                acc += xrow[t * stride + k];
            y[r * T + t] = static_cast<Real>(acc / static_cast<double>(pool));
        }
    }
    const std::size_t xi = x.index();
    return tape.record(std::move(y), {xi}, [=](Tape<Real> &tp, std::size_t self) {
        const Tensor<Real> &dy = tp.grad_buffer(self);
        Tensor<Real> &dx = tp.grad_buffer(xi);
        const Real inv = Real(1) / static_cast<Real>(pool);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t t = 0; t < T; ++t) {
                const Real g = dy[r * T + t] * inv;
                Real *dxrow = dx.data() + r * length + t * stride;
                for (std::size_t k = 0; k < pool; ++k)
                    dxrow[k] += g;
            }
    });
}

template <typename Real>
Var<Real> dense(Var<Real> x, Var<Real> weights, Var<Real> bias) {
    Tape<Real> &tape = same_tape(x, weights);
    same_tape(x, bias);
    const Tensor<Real> &xv = x.value();
    const Tensor<Real> &wv = weights.value();
    const Tensor<Real> &bv = bias.value();
    require_rank(xv, 2, "dense input");
    require_rank(wv, 2, "dense weights");
    const std::size_t batch = xv.dim(0), in = xv.dim(1), units = wv.dim(0);
    if (wv.dim(1) != in)
        throw DimensionError("dense weights " + shape_string(wv.shape()) +
                             " do not match input " + shape_string(xv.shape()));
    if (bv.rank() != 1 || bv.dim(0) != units)
        throw DimensionError("dense bias " + shape_string(bv.shape()) +
                             " does not match " + std::to_string(units) + " units");
    Tensor<Real> y({batch, units});
    for (std::size_t b = 0; b < batch; ++b) {
        const Real *xrow = xv.data() + b * in;
        for (std::size_t u = 0; u < units; ++u) {
            const Real *wrow = wv.data() + u * in;
            Real acc = 0;
            for (std::size_t f = 0; f < in; ++f)
                acc += wrow[f] * xrow[f];
            y[b * units + u] = acc + bv[u];
        }
    }
    const std::size_t xi = x.index(), wi = weights.index(), bi = bias.index();
    return tape.record(std::move(y), {xi, wi, bi}, [=](Tape<Real> &tp, std::size_t self) {
        const Tensor<Real> &dy = tp.grad_buffer(self);
        const Tensor<Real> &X = tp.value(xi);
        const Tensor<Real> &W = tp.value(wi);
        if (tp.requires_grad(xi)) {
            Tensor<Real> &dx = tp.grad_buffer(xi);
            for (std::size_t b = 0; b < batch; ++b) {
                Real *dxrow = dx.data() + b * in;
                for (std::size_t u = 0; u < units; ++u) {
                    const Real g = dy[b * units + u];
                    const Real *wrow = W.data() + u * in;
                    for (std::size_t f = 0; f < in; ++f)
                        dxrow[f] += g * wrow[f];
                }
            }
        }
        if (tp.requires_grad(wi)) {
            Tensor<Real> &dw = tp.grad_buffer(wi);
            for (std::size_t b = 0; b < batch; ++b) {
                const Real *xrow = X.data() + b * in;
                for (std::size_t u = 0; u < units; ++u) {
                    const Real g = dy[b * units + u];
                    Real *dwrow = dw.data() + u * in;
                    for (std::size_t f = 0; f < in; ++f)
                        dwrow[f] += g * xrow[f];
                }
            }
        }
        if (tp.requires_grad(bi)) {
            Tensor<Real> &db = tp.grad_buffer(bi);
            for (std::size_t u = 0; u < units; ++u) {
                double acc = 0;
                for (std::size_t b = 0; b < batch; ++b)
                    acc += dy[b * units + u];
                db[u] += static_cast<Real>(acc);
            }
        }
    });
}

template <typename Real>
Var<Real> batch_norm(Var<Real> x, Var<Real> gamma, Var<Real> beta,
                     const BatchNormStats<Real> &running,
                     BatchNormStats<Real> *update, BatchNormMode mode,
                     const BatchNormOptions &options) {
    Tape<Real> &tape = same_tape(x, gamma);
    same_tape(x, beta);
    const Tensor<Real> &xv = x.value();
    if (xv.rank() != 2 && xv.rank() != 3)
        throw DimensionError("batch_norm expects [batch, channels(, length)], got " +
                             shape_string(xv.shape()));
    const std::size_t batch = xv.dim(0), channels = xv.dim(1);
    const std::size_t inner = xv.rank() == 3 ? xv.dim(2) : 1;
    for (const Tensor<Real> *t : {&gamma.value(), &beta.value(), &running.mean,
                                  &running.variance})
        if (t->size() != channels)
            throw DimensionError("batch_norm parameters must have " +
                                 std::to_string(channels) + " entries");
    if (mode == BatchNormMode::Train && batch < 2)
        throw DegenerateBatchError("batch_norm in Train mode needs a batch of at "
                                   "least 2 samples");

    const double n = static_cast<double>(batch * inner);
    std::vector<double> mean(channels), inv_std(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        if (mode == BatchNormMode::Train) {
            double s = 0;
            for (std::size_t b = 0; b < batch; ++b) {
                const Real *row = xv.data() + (b * channels + c) * inner;
                for (std::size_t t = 0; t < inner; ++t)
                    s += row[t];
            }
            const double mu = s / n;
            double v = 0;
            for (std::size_t b = 0; b < batch; ++b) {
                const Real *row = xv.data() + (b * channels + c) * inner;
                for (std::size_t t = 0; t < inner; ++t) {
                    const double dlt = row[t] - mu;
                    v += dlt * dlt;
                }
            }
            v /= n;
            mean[c] = mu;
            inv_std[c] = 1.0 / std::sqrt(v + options.epsilon);
            if (update) {
                const double m = options.momentum;
                update->mean[c] = static_cast<Real>(m * update->mean[c] + (1 - m) * mu);
                update->variance[c] =
                    static_cast<Real>(m * update->variance[c] + (1 - m) * v);
            }
        } else {
            mean[c] = running.mean[c];
            inv_std[c] = 1.0 / std::sqrt(static_cast<double>(running.variance[c]) +
                                         options.epsilon);
        }
    }

    Tensor<Real> normalized(xv.shape());
    Tensor<Real> y(xv.shape());
    const Tensor<Real> &gv = gamma.value();
    const Tensor<Real> &bv = beta.value();
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t base = (b * channels + c) * inner;
            for (std::size_t t = 0; t < inner; ++t) {
                const Real xh = static_cast<Real>((xv[base + t] - mean[c]) * inv_std[c]);
                normalized[base + t] = xh;
                y[base + t] = gv[c] * xh + bv[c];
            }
        }

    const std::size_t xi = x.index(), gi = gamma.index(), bi = beta.index();
    const bool batch_stats = mode == BatchNormMode::Train;
    return tape.record(
        std::move(y), {xi, gi, bi},
        [=, normalized = std::move(normalized)](Tape<Real> &tp, std::size_t self) {
            const Tensor<Real> &dy = tp.grad_buffer(self);
            const Tensor<Real> &G = tp.value(gi);
            std::vector<double> sum_dy(channels, 0.0), sum_dy_xh(channels, 0.0);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t c = 0; c < channels; ++c) {
                    const std::size_t base = (b * channels + c) * inner;
                    for (std::size_t t = 0; t < inner; ++t) {
                        sum_dy[c] += dy[base + t];
                        sum_dy_xh[c] += static_cast<double>(dy[base + t]) *
                                        normalized[base + t];
                    }
                }
            if (tp.requires_grad(gi)) {
                Tensor<Real> &dg = tp.grad_buffer(gi);
                for (std::size_t c = 0; c < channels; ++c)
                    dg[c] += static_cast<Real>(sum_dy_xh[c]);
            }
            if (tp.requires_grad(bi)) {
                Tensor<Real> &db = tp.grad_buffer(bi);
                for (std::size_t c = 0; c < channels; ++c)
                    db[c] += static_cast<Real>(sum_dy[c]);
            }
            if (tp.requires_grad(xi)) {
                Tensor<Real> &dx = tp.grad_buffer(xi);
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t c = 0; c < channels; ++c) {
                        const std::size_t base = (b * channels + c) * inner;
                        const double k = G[c] * inv_std[c];
                        for (std::size_t t = 0; t < inner; ++t) {
                            double g = dy[base + t];
                            if (batch_stats)
                                g -= (sum_dy[c] + normalized[base + t] * sum_dy_xh[c]) / n;
                            dx[base + t] += static_cast<Real>(k * g);
                        }
                    }
            }
        });
}

template <typename Real>
Var<Real> reshape(Var<Real> x, const Shape &sample_shape) {
    Tape<Real> &tape = *x.tape();
    const Tensor<Real> &xv = x.value();
    Shape shape{xv.dim(0)};
    shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
    Tensor<Real> y = xv;
    y.reshape(shape);
    const std::size_t xi = x.index();
    return tape.record(std::move(y), {xi}, [=](Tape<Real> &tp, std::size_t self) {
        const Tensor<Real> &dy = tp.grad_buffer(self);
        Tensor<Real> &dx = tp.grad_buffer(xi);
        for (std::size_t k = 0; k < dx.size(); ++k)
            dx[k] += dy[k];
    });
}

template <typename Real> Var<Real> flatten(Var<Real> x) {
    const Tensor<Real> &xv = x.value();
    return reshape(x, Shape{xv.size() / xv.dim(0)});
}

namespace {

template <typename Real, typename Fwd, typename Deriv>
Var<Real> elementwise(Var<Real> x, Fwd fwd, Deriv deriv) {
    Tape<Real> &tape = *x.tape();
    const Tensor<Real> &xv = x.value();
    Tensor<Real> y(xv.shape());
    for (std::size_t k = 0; k < y.size(); ++k)
        y[k] = fwd(xv[k]);
    const std::size_t xi = x.index();
    return tape.record(std::move(y), {xi}, [=](Tape<Real> &tp, std::size_t self) {
        const Tensor<Real> &dy = tp.grad_buffer(self);
        const Tensor<Real> &X = tp.value(xi);
        const Tensor<Real> &Y = tp.value(self);
        Tensor<Real> &dx = tp.grad_buffer(xi);
        for (std::size_t k = 0; k < dx.size(); ++k)
            dx[k] += dy[k] * deriv(X[k], Y[k]);
    });
}

} // namespace

template <typename Real> Var<Real> selu(Var<Real> x) {
    const Real lambda = static_cast<Real>(kSeluLambda);
    const Real la = static_cast<Real>(kSeluLambda * kSeluAlpha);
    return elementwise(
        x,
        [=](Real v) { return v > 0 ? lambda * v : la * std::expm1(v); },
        [=](Real v, Real out) { return v > 0 ? lambda : out + la; });
}

template <typename Real> Var<Real> sigmoid(Var<Real> x) {
    return elementwise(
        x, [](Real v) { return Real(1) / (Real(1) + std::exp(-v)); },
        [](Real, Real out) { return out * (Real(1) - out); });
}

template <typename Real> Var<Real> softmax(Var<Real> x) {
    Tape<Real> &tape = *x.tape();
    const Tensor<Real> &xv = x.value();
    if (xv.rank() < 1)
        throw DimensionError("softmax needs at least one axis");
    const std::size_t width = xv.dim(xv.rank() - 1);
    const std::size_t rows = xv.size() / width;
    Tensor<Real> y(xv.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const Real *in = xv.data() + r * width;
        Real *out = y.data() + r * width;
        const Real peak = *std::max_element(in, in + width);
        double total = 0;
        for (std::size_t j = 0; j < width; ++j) {
            const double e = std::exp(static_cast<double>(in[j] - peak));
            out[j] = static_cast<Real>(e);
            total += e;
        }
        for (std::size_t j = 0; j < width; ++j)
            out[j] = static_cast<Real>(out[j] / total);
    }
    const std::size_t xi = x.index();
    return tape.record(std::move(y), {xi}, [=](Tape<Real> &tp, std::size_t self) {
        const Tensor<Real> &dy = tp.grad_buffer(self);
        const Tensor<Real> &Y = tp.value(self);
        Tensor<Real> &dx = tp.grad_buffer(xi);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t base = r * width;
            double dot = 0;
            for (std::size_t j = 0; j < width; ++j)
                dot += static_cast<double>(dy[base + j]) * Y[base + j];
            for (std::size_t j = 0; j < width; ++j)
                dx[base + j] += static_cast<Real>(Y[base + j] * (dy[base + j] - dot));
        }
    });
}

template <typename Real> Var<Real> mse_loss(Var<Real> x, Var<Real> target) {
    Tape<Real> &tape = same_tape(x, target);
    const Tensor<Real> &a = x.value();
    const Tensor<Real> &b = target.value();
    if (a.shape() != b.shape())
        throw DimensionError("mse_loss shapes differ: " + shape_string(a.shape()) +
                             " vs " + shape_string(b.shape()));
    double acc = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = static_cast<double>(a[k]) - b[k];
        acc += d * d;
    }
    const double n = static_cast<double>(a.size());
    Tensor<Real> y({1}, static_cast<Real>(acc / n));
    const std::size_t ai = x.index(), bi = target.index();
    return tape.record(std::move(y), {ai, bi}, [=](Tape<Real> &tp, std::size_t self) {
        const double g = tp.grad_buffer(self)[0];
        const Tensor<Real> &A = tp.value(ai);
        const Tensor<Real> &B = tp.value(bi);
        const double k = 2.0 * g / n;
        if (tp.requires_grad(ai)) {
            Tensor<Real> &da = tp.grad_buffer(ai);
            for (std::size_t i = 0; i < da.size(); ++i)
                da[i] += static_cast<Real>(k * (static_cast<double>(A[i]) - B[i]));
        }
        if (tp.requires_grad(bi)) {
            Tensor<Real> &db = tp.grad_buffer(bi);
            for (std::size_t i = 0; i < db.size(); ++i)
                db[i] -= static_cast<Real>(k * (static_cast<double>(A[i]) - B[i]));
        }
    });
}

template <typename Real>
Var<Real> cross_entropy_loss(Var<Real> probabilities,
                             std::span<const std::uint32_t> labels,
                             Reduction reduction) {
    Tape<Real> &tape = *probabilities.tape();
    const Tensor<Real> &pv = probabilities.value();
    require_rank(pv, 2, "cross_entropy_loss scores");
    const std::size_t batch = pv.dim(0), classes = pv.dim(1);
    if (labels.size() != batch)
        throw DimensionError("cross_entropy_loss got " + std::to_string(labels.size()) +
                             " labels for a batch of " + std::to_string(batch));
    std::vector<std::uint32_t> owned(labels.begin(), labels.end());
    double acc = 0;
    for (std::size_t b = 0; b < batch; ++b) {
        if (owned[b] >= classes)
            throw DomainError("label " + std::to_string(owned[b]) +
                              " out of range for " + std::to_string(classes) +
                              " classes");
        const double p = pv[b * classes + owned[b]];
        acc -= std::log(std::max(p, kProbabilityFloor));
    }
    const double divisor = reduction == Reduction::Mean ? static_cast<double>(batch) : 1.0;
    Tensor<Real> y({1}, static_cast<Real>(acc / divisor));
    if (!y.all_finite())
        throw NumericError("cross_entropy_loss is not finite");
    const std::size_t pi = probabilities.index();
    return tape.record(
        std::move(y), {pi}, [=, owned = std::move(owned)](Tape<Real> &tp, std::size_t self) {
            const double g = tp.grad_buffer(self)[0] / divisor;
            const Tensor<Real> &P = tp.value(pi);
            Tensor<Real> &dp = tp.grad_buffer(pi);
            for (std::size_t b = 0; b < batch; ++b) {
                const std::size_t at = b * classes + owned[b];
                const double p = P[at];
                if (p > kProbabilityFloor)
                    dp[at] -= static_cast<Real>(g / p);
            }
        });
}

template <typename Real> Var<Real> add(Var<Real> a, Var<Real> b) {
    Tape<Real> &tape = same_tape(a, b);
    if (a.shape() != b.shape())
        throw DimensionError("add shapes differ");
    Tensor<Real> y = a.value();
    for (std::size_t k = 0; k < y.size(); ++k)
        y[k] += b.value()[k];
    const std::size_t ai = a.index(), bi = b.index();
    return tape.record(std::move(y), {ai, bi}, [=](Tape<Real> &tp, std::size_t self) {
        const Tensor<Real> &dy = tp.grad_buffer(self);
        for (std::size_t idx : {ai, bi})
            if (tp.requires_grad(idx)) {
                Tensor<Real> &d = tp.grad_buffer(idx);
                for (std::size_t k = 0; k < d.size(); ++k)
                    d[k] += dy[k];
            }
    });
}

template <typename Real> Var<Real> mul(Var<Real> a, Var<Real> b) {
    Tape<Real> &tape = same_tape(a, b);
    if (a.shape() != b.shape())
        throw DimensionError("mul shapes differ");
    Tensor<Real> y = a.value();
    for (std::size_t k = 0; k < y.size(); ++k)
        y[k] *= b.value()[k];
    const std::size_t ai = a.index(), bi = b.index();
    return tape.record(std::move(y), {ai, bi}, [=](Tape<Real> &tp, std::size_t self) {
        const Tensor<Real> &dy = tp.grad_buffer(self);
        const Tensor<Real> &A = tp.value(ai);
        const Tensor<Real> &B = tp.value(bi);
        if (tp.requires_grad(ai)) {
            Tensor<Real> &d = tp.grad_buffer(ai);
            for (std::size_t k = 0; k < d.size(); ++k)
                d[k] += dy[k] * B[k];
        }
        if (tp.requires_grad(bi)) {
            Tensor<Real> &d = tp.grad_buffer(bi);
            for (std::size_t k = 0; k < d.size(); ++k)
                d[k] += dy[k] * A[k];
        }
    });
}

template <typename Real> Var<Real> scale(Var<Real> x, double factor) {
    Tape<Real> &tape = *x.tape();
    Tensor<Real> y = x.value();
    for (std::size_t k = 0; k < y.size(); ++k)
        y[k] = static_cast<Real>(y[k] * factor);
    const std::size_t xi = x.index();
    return tape.record(std::move(y), {xi}, [=](Tape<Real> &tp, std::size_t self) {
        const Tensor<Real> &dy = tp.grad_buffer(self);
        Tensor<Real> &dx = tp.grad_buffer(xi);
        for (std::size_t k = 0; k < dx.size(); ++k)
            dx[k] += static_cast<Real>(dy[k] * factor);
    });
}

template <typename Real> Var<Real> sum(Var<Real> x) {
    Tape<Real> &tape = *x.tape();
    double acc = 0;
    for (Real v : x.value().values())
        acc += v;
    const std::size_t xi = x.index();
    return tape.record(Tensor<Real>({1}, static_cast<Real>(acc)), {xi},
                       [=](Tape<Real> &tp, std::size_t self) {
                           const Real g = tp.grad_buffer(self)[0];
                           Tensor<Real> &dx = tp.grad_buffer(xi);
                           for (std::size_t k = 0; k < dx.size(); ++k)
                               dx[k] += g;
                       });
}

#define MODSCA_INSTANTIATE_OPS(Real)                                                     \
    template Var<Real> conv1d(Var<Real>, Var<Real>, const ConvOptions &);                \
    template Var<Real> transposed_conv1d(Var<Real>, Var<Real>,                           \
                                         const TransposedConvOptions &);                 \
    template Var<Real> add_bias(Var<Real>, Var<Real>);                                   \
    template Var<Real> avg_pool1d(Var<Real>, std::size_t, std::size_t);                  \
    template Var<Real> dense(Var<Real>, Var<Real>, Var<Real>);                           \
    template Var<Real> batch_norm(Var<Real>, Var<Real>, Var<Real>,                       \
                                  const BatchNormStats<Real> &, BatchNormStats<Real> *,  \
                                  BatchNormMode, const BatchNormOptions &);              \
    template Var<Real> reshape(Var<Real>, const Shape &);                                \
    template Var<Real> flatten(Var<Real>);                                               \
    template Var<Real> selu(Var<Real>);                                                  \
    template Var<Real> sigmoid(Var<Real>);                                               \
    template Var<Real> softmax(Var<Real>);                                               \
    template Var<Real> mse_loss(Var<Real>, Var<Real>);                                   \
    template Var<Real> cross_entropy_loss(Var<Real>, std::span<const std::uint32_t>,     \
                                          Reduction);                                    \
    template Var<Real> add(Var<Real>, Var<Real>);                                        \
    template Var<Real> mul(Var<Real>, Var<Real>);                                        \
    template Var<Real> scale(Var<Real>, double);                                         \
    template Var<Real> sum(Var<Real>);

MODSCA_INSTANTIATE_OPS(float)
MODSCA_INSTANTIATE_OPS(double)

#undef MODSCA_INSTANTIATE_OPS

} // namespace ops

template class Tape<float>;
template class Tape<double>;
template class Var<float>;
template class Var<double>;

} // namespace modsca
