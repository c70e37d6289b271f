/*
 * Copyright 2026 The maxlin Authors
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

#ifndef MAXLIN_ERROR_HPP
#define MAXLIN_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace maxlin {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unreadable model / input file.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Inconsistent shapes between consecutive layers. `layer()` is 1-based,
/// matching the usual f^1 ... f^K numbering.
class ShapeError : public Error {
public:
    ShapeError(std::size_t layer, const std::string& what)
        : Error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}

    std::size_t layer() const noexcept { return layer_; }

private:
    std::size_t layer_;
};

class UnsupportedLayerError : public Error {
public:
    using Error::Error;
};

/// Dimension mismatch or violated precondition in a numeric routine.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A bound computation produced NaN; always indicates a relaxation bug.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace maxlin

#endif  // MAXLIN_ERROR_HPP
