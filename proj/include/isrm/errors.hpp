#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace isrm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A quadrature did not reach its tolerance; carries the residual estimate.
class QuadratureFailure : public Error {
public:
    QuadratureFailure(const std::string& what, double residual)
        : Error(what + " (residual estimate " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class Divergent : public Error {
public:
    using Error::Error;
};

/// A radial functional violated |h(r)| <= C min{1, r^2}.
class IntegrandBoundViolated : public Error {
public:
    using Error::Error;
};

class UnsupportedLevyVariant : public Error {
public:
    using Error::Error;
};

class PointMassAtZero : public Error {
public:
    using Error::Error;
};

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

class DegenerateSpec : public Error {
public:
    using Error::Error;
};

class NotIntegrable : public Error {
public:
    using Error::Error;
};

class OverlappingPieces : public Error {
public:
    using Error::Error;
};

class PartitionMismatch : public Error {
public:
    using Error::Error;
};

/// Schema or invariant violation while loading a spec/field document.
class SpecError : public Error {
public:
    using Error::Error;
};

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, std::size_t offset, std::vector<std::string> expected)
        : Error(what + " at byte " + std::to_string(offset)), offset_(offset), expected_(std::move(expected)) {}
    std::size_t offset() const noexcept { return offset_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

class UnknownIdentifier : public Error {
public:
    UnknownIdentifier(const std::string& name, std::size_t offset)
        : Error("unknown identifier '" + name + "' at byte " + std::to_string(offset)), name_(name), offset_(offset) {}
    const std::string& name() const noexcept { return name_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::string name_;
    std::size_t offset_;
};

class EvalError : public Error {
public:
    EvalError(const std::string& what, std::size_t offset)
        : Error(what + " (expression byte " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace isrm
