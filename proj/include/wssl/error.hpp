// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace wssl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor, image or mask dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf produced or consumed, or a value outside an op's domain.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Argument outside its documented range (factors, labels, configs).
class ArgumentError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed or incompatible checkpoint file.
class CheckpointError : public Error {
public:
    using Error::Error;
};

} // namespace wssl
