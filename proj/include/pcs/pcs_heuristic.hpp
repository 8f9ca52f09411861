#pragma once

#include <string>
#include <vector>

#include "pcs/constellation.hpp"

namespace pcs {

struct C0Range {
    double min = 1.0;
    double max = 1.0;
    std::vector<double> argmin;  // ring masses attaining min
    std::vector<double> argmax;  // ring masses attaining max
};

/// Extremes of sum_w m_w A_w^4 over ring masses with m >= 0, sum m = 1 and
/// sum m A_w^2 = 1, each solved as a linear program.
C0Range feasible_c0_range(const Constellation& c);

struct HeuristicResult {
    Distribution distribution;
    std::vector<double> ring_mass;
    double c0_requested = 0.0;
    double c0_used = 0.0;       // after clamping to the feasible range
    double fourth_moment = 0.0; // achieved
    bool clamped = false;
    std::string branch;         // "exact", "projected-gradient", "single-ring"
    std::string note;           // why the exact branch was left, if it was
};

/// Ring masses matching the requested fourth moment under the power and
/// simplex constraints. Out-of-range targets are clamped to the nearest
/// endpoint (reported through `clamped`).
HeuristicResult solve_heuristic(const Constellation& c, double c0);

/// Projected-gradient minimizer of (sum m A^4 - c0)^2 over the ring-mass
/// polytope, started from `start` (must be feasible). Exposed for tests.
std::vector<double> minimize_moment_gap(const Constellation& c, double c0, std::vector<double> start);

/// Euclidean projection of v onto {m >= 0, sum m = 1, sum m a = 1}.
std::vector<double> project_ring_polytope(const std::vector<double>& v, const std::vector<double>& a);

}  // namespace pcs
