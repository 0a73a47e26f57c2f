#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qmanip/domains.hpp"
#include "qmanip/solve.hpp"

namespace qm {

struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Runs the invariant suite against one bundle: operator contraction and
// uniqueness, bound ordering against value iteration, monotone tightening,
// non-expansiveness, initialization bracketing, pruning optimality, and
// noise widening. Each property reports pass/fail with a short detail.
std::vector<PropertyResult> verify_bundle(const DomainBundle& bundle, const SolveConfig& cfg,
                                          std::uint64_t seed);

} // namespace qm
