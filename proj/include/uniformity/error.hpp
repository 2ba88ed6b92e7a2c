#pragma once

#include <stdexcept>
#include <string>

namespace uniformity {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI's single-line error output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Malformed input text (JSONL, CSV, TOML).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error("parse", what) {}
};

/// Well-formed input that violates a precondition or invariant.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

/// A numerical routine could not produce a meaningful answer.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error("numerical", what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace uniformity
