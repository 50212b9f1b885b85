#pragma once

#include <stdexcept>
#include <string>

namespace trifloq {

/// Base of every error thrown by the library. Each error names the module
/// and the check that failed so the CLI can report it verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string check, const std::string& what)
        : std::runtime_error(module + "/" + check + ": " + what),
          module_(std::move(module)), check_(std::move(check)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& check() const noexcept { return check_; }

private:
    std::string module_;
    std::string check_;
};

/// Input rejected before any computation (bad shape, zero vector, bad option).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A structural property guaranteed by the theory did not hold numerically:
/// sigma labels, positivity/simplicity of multipliers, cooperative floor,
/// sign conventions. Signals either numerical breakdown or a violated
/// precondition of the input system.
class StructureFailure : public Error {
public:
    using Error::Error;
};

/// The integrator or an iterative solver could not produce a result.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Probe rate lies inside, or too close to, an estimated spectral interval.
class NoDichotomy : public Error {
public:
    using Error::Error;
};

}  // namespace trifloq
