#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nonholo {

/// Base class for everything this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the expression parser; carries the byte offset of the fault.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Raised when a numeric evaluation cannot proceed.
class EvalError : public Error {
public:
    enum class Kind { UnboundVariable, DivisionByZero, NegativeSqrt };

    EvalError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Chart mismatches, singular frames, shape violations and the like.
class StructureError : public Error {
public:
    using Error::Error;
};

/// Bad configuration files, unknown presets, inconsistent dimensions.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace nonholo
