#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace qlbdf {

/// Argument outside the admissible range of an operation (e.g. BDF order k = 0).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Request that is mathematically valid but intentionally not provided
/// (e.g. a multiplier for k = 6).
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A Dahlquist certificate could not be produced for the requested pair (delta, mu).
class CertificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The diffusion coefficient was non-positive (or not finite) at a face of the grid.
/// Carries the node whose stencil touched the face, the offending coefficient value,
/// and, once the error has escaped a time loop, the time step index.
class CoefficientPositivityError : public std::runtime_error {
public:
    CoefficientPositivityError(std::size_t node, double argument, double value,
                               std::optional<std::size_t> step = std::nullopt)
        : std::runtime_error(describe(node, argument, value, step)),
          node_(node), argument_(argument), value_(value), step_(step) {}

    std::size_t node() const noexcept { return node_; }
    double argument() const noexcept { return argument_; }
    double value() const noexcept { return value_; }
    std::optional<std::size_t> step() const noexcept { return step_; }

    CoefficientPositivityError at_step(std::size_t n) const {
        return CoefficientPositivityError(node_, argument_, value_, n);
    }

private:
    static std::string describe(std::size_t node, double argument, double value,
                                std::optional<std::size_t> step) {
        std::string msg = "coefficient a(u) = " + std::to_string(value) +
                          " is not positive at node " + std::to_string(node) +
                          " (u = " + std::to_string(argument) + ")";
        if (step) msg += " in step " + std::to_string(*step);
        return msg;
    }

    std::size_t node_;
    double argument_;
    double value_;
    std::optional<std::size_t> step_;
};

/// Linear solver breakdown or iteration cap; the relative residual is attached.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what + " (relative residual " + std::to_string(residual) + ")"),
          residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Generic failure of a time step, annotated with its index.
class StepError : public std::runtime_error {
public:
    StepError(std::size_t step, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Malformed study configuration; `field` names the offending key when known.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace qlbdf
