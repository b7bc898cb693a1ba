#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace muvos {

/// Argument shapes disagree with an operation's contract.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value or configuration violates a precondition (other than shape).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Memory read was attempted before any reference frame was stored.
class NoReferenceError : public std::logic_error {
public:
    NoReferenceError() : std::logic_error("memory bank holds no reference frame") {}
};

/// Filesystem failure (open, read, write).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file payload; carries the byte offset where parsing stopped.
class ParseError : public IoError {
public:
    ParseError(const std::string& what, std::size_t offset)
        : IoError(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace muvos
