#pragma once

#include <stdexcept>
#include <string>

namespace wpt {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
    input,            ///< malformed or inconsistent input data
    config,           ///< invalid configuration document or flag
    degenerate_plan,  ///< a coupling row/column carries no mass
    solver,           ///< OT solver failure (infeasible, underflow, ...)
    numerical,        ///< linear algebra or integration failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InputError : Error {
    explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct DegeneratePlanError : Error {
    explicit DegeneratePlanError(const std::string& what) : Error(ErrorKind::degenerate_plan, what) {}
};

struct SolverError : Error {
    explicit SolverError(const std::string& what) : Error(ErrorKind::solver, what) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

}  // namespace wpt
