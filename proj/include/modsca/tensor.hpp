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

#include "modsca/errors.hpp"

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace modsca {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape &shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
}

std::string shape_string(const Shape &shape);

/// Dense row-major array. The last axis is contiguous.
template <typename Real> class Tensor {
public:
    using value_type = Real;

    Tensor() = default;

    explicit Tensor(Shape shape, Real fill = Real(0))
        : shape_(std::move(shape)), values_(shape_size(shape_), fill) {
        check_extents();
    }

    Tensor(Shape shape, std::vector<Real> values)
        : shape_(std::move(shape)), values_(std::move(values)) {
        check_extents();
        if (values_.size() != shape_size(shape_))
            throw DimensionError("tensor of shape " + shape_string(shape_) +
                                 " cannot hold " +
                                 std::to_string(values_.size()) + " values");
    }

    const Shape &shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    std::span<Real> values() { return values_; }
    std::span<const Real> values() const { return values_; }
    Real *data() { return values_.data(); }
    const Real *data() const { return values_.data(); }

    Real &operator[](std::size_t i) { return values_[i]; }
    Real operator[](std::size_t i) const { return values_[i]; }

    void fill(Real v) { std::fill(values_.begin(), values_.end(), v); }

    /// Reinterprets the values under a new shape with the same element count.
    void reshape(Shape shape) {
        if (shape_size(shape) != values_.size())
            throw DimensionError("cannot reshape " + shape_string(shape_) +
                                 " to " + shape_string(shape));
        shape_ = std::move(shape);
    }

    bool all_finite() const;

    friend bool operator==(const Tensor &, const Tensor &) = default;

private:
    void check_extents() const {
        for (std::size_t extent : shape_)
            if (extent == 0)
                throw DimensionError("tensor extents must be positive, got " +
                                     shape_string(shape_));
    }

    Shape shape_;
    std::vector<Real> values_;
};

/// A learnable tensor. Optimizers leave it bit-identical while `trainable`
/// is false, and the tape never accumulates into its gradient.
template <typename Real> struct Parameter {
    std::string id;
    Tensor<Real> value;
    Tensor<Real> grad;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string id_, Tensor<Real> value_)
        : id(std::move(id_)), value(std::move(value_)),
          grad(value.shape(), Real(0)) {}

    void zero_grad() { grad = Tensor<Real>(value.shape(), Real(0)); }
};

extern template class Tensor<float>;
extern template class Tensor<double>;

} // namespace modsca
