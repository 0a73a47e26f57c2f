#pragma once

#include <stdexcept>
#include <string>

namespace qm {

// Malformed inputs: broken MDP invariants, schema violations, bad config.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A fixed-point iteration ran out of sweeps before reaching its threshold.
struct SolverError : std::runtime_error {
    SolverError(const std::string& what, double residual, int sweeps)
        : std::runtime_error(what), residual(residual), sweeps(sweeps) {}

    double residual = 0.0;
    int sweeps = 0;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace qm
