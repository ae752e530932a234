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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace modsca {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor or layer shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Argument outside its mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Batch normalization asked to train on a single sample.
class DegenerateBatchError : public Error {
public:
    using Error::Error;
};

/// NaN or infinity reached a loss.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Encoder output and classifier input disagree.
class LatentDimError : public Error {
public:
    using Error::Error;
};

/// A module lacks the block an operation needs.
class StructureError : public Error {
public:
    using Error::Error;
};

/// Empty or unlabeled data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid generator or command configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed binary container. `offset()` is the byte where parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string &what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

} // namespace modsca
