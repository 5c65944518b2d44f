#pragma once

#include <stdexcept>
#include <string>

namespace steklov {

/// Base of all library errors. `exit_code()` is what the CLI returns.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 4; }
};

/// Argument outside the mathematical domain of a function (z <= 0, p < 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class OverflowError : public Error {
public:
    using Error::Error;
};

/// Bad obstacle description, obstacle not inside B_L, bad mesh file contents.
class GeometryError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

class MeshingError : public GeometryError {
public:
    using GeometryError::GeometryError;
};

class ParseError : public GeometryError {
public:
    ParseError(const std::string& what, int line)
        : GeometryError("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class SolverError : public Error {
public:
    using Error::Error;
};

class ToleranceError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 5; }
};

}  // namespace steklov
