#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace nvsplit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Writes f(x) into a preallocated `out` of the same dimension as x.
using VectorField = std::function<void(const Vector& x, Vector& out)>;

/// Writes D f(x) v into `out`; the Jacobian of a vector field acting on v.
using JacobianAction = std::function<void(const Vector& x, const Vector& v, Vector& out)>;

/// Time-parameterized map x -> Phi_t(x), written into `out` (never aliased with x).
using FlowMap = std::function<void(double t, const Vector& x, Vector& out)>;

enum class ErrorKind {
    Configuration,
    Argument,
    Capability,
    Overflow,
    Inconclusive,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Configuration, what) {}
};

struct ArgumentError : Error {
    explicit ArgumentError(const std::string& what) : Error(ErrorKind::Argument, what) {}
};

struct CapabilityError : Error {
    explicit CapabilityError(const std::string& what) : Error(ErrorKind::Capability, what) {}
};

/// Non-finite state produced somewhere inside a simulation.
/// Step and path indices are -1 when not known at the throw site.
class OverflowError : public Error {
public:
    OverflowError(const std::string& where, long step = -1, long path = -1);
    OverflowError with_step(long step) const { return OverflowError(where_, step, path_); }
    OverflowError with_path(long path) const { return OverflowError(where_, step_, path); }

    const std::string& where() const noexcept { return where_; }
    long step() const noexcept { return step_; }
    long path() const noexcept { return path_; }

private:
    std::string where_;
    long step_;
    long path_;
};

struct InconclusiveError : Error {
    explicit InconclusiveError(const std::string& what) : Error(ErrorKind::Inconclusive, what) {}
};

inline bool all_finite(const Vector& x) { return x.allFinite(); }

} // namespace nvsplit
