#pragma once

#include <vector>

namespace pcs {

struct LpResult {
    enum class Status { optimal, infeasible, unbounded };
    Status status = Status::infeasible;
    std::vector<double> x;
    double objective = 0.0;
};

/// Minimizes c'x subject to A x = b, x >= 0 with a dense two-phase simplex
/// (Bland's rule). Intended for the handful of variables the ring systems
/// produce; `a` is row-major with one vector per constraint.
LpResult solve_lp(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                  const std::vector<double>& c);

}  // namespace pcs
