#pragma once

#include <stdexcept>
#include <string>

namespace cfxcert {

// Input/weight dimensions do not line up.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A file (model JSON, feature spec, CSV) could not be parsed.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration values (negative learning rate, missing path, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical breakdown inside the LP/MILP machinery.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A resource limit (node budget) was exhausted before convergence.
struct ResourceError : std::runtime_error {
    double incumbent_bound;
    ResourceError(const std::string& msg, double bound)
        : std::runtime_error(msg), incumbent_bound(bound) {}
};

// Training produced a non-finite loss.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The shift set is not sound at the query input, so a robustness
// verdict would be vacuous.
struct UnsoundShiftError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace cfxcert
