#pragma once

#include <stdexcept>
#include <string>

namespace forge {

// Error categories map 1:1 onto CLI exit codes (see tools/forge.cpp --help).
enum class ErrorKind {
    Input = 2,    // bad arguments, empty datasets, shape mismatches
    Format = 3,   // malformed files: manifests, headers, configs
    Numeric = 4,  // NaN distances, non-positive probabilities
    Io = 5,       // unreadable/unwritable paths
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

struct InputError : Error {
    explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};
struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

// Shape violations are a species of input error.
struct ShapeError : InputError {
    explicit ShapeError(const std::string& what) : InputError(what) {}
};

}  // namespace forge
