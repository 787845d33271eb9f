#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pgm {

/// Malformed or mismatched input data (wrong channel count, dimension mismatch, empty set).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numeric parameter outside its accepted domain.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Binary file with a bad magic tag, truncated payload or absurd header.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text file with a malformed line. `line()` is 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace pgm
