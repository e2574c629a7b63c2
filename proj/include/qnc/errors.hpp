// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace qnc {

/// Base class for all tool-reported failures. Subclasses map onto the CLI
/// exit-code contract, so every throw site picks the class deliberately.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or invalid input documents: model JSON, dataset CSV, shape
/// violations, non-finite weights. CLI exit code 2.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Semantically invalid configuration: unknown layer names, bad format
/// strings, unsatisfiable precision requests. CLI exit code 3.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures: unreadable inputs, unwritable outputs. CLI exit code 4.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace qnc
