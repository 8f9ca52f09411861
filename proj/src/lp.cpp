#include "pcs/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pcs {

namespace {

constexpr double kPivotTol = 1e-12;

// Tableau with m constraint rows and one objective row; the last column is
// the right-hand side. basis[i] is the variable basic in row i.
struct Tableau {
    std::size_t rows, cols;
    std::vector<double> t;
    std::vector<std::size_t> basis;

    double& at(std::size_t i, std::size_t j) { return t[i * cols + j]; }

    void pivot(std::size_t r, std::size_t c) {
        const double p = at(r, c);
        for (std::size_t j = 0; j < cols; ++j) at(r, j) /= p;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r) continue;
            const double f = at(i, c);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < cols; ++j) at(i, j) -= f * at(r, j);
        }
        basis[r] = c;
    }

    // Runs simplex iterations on objective row `obj` over columns [0, ncols).
    // Returns false if unbounded.
    bool run(std::size_t obj, std::size_t ncols) {
        const std::size_t m = basis.size();
        for (int iter = 0; iter < 10000; ++iter) {
            std::size_t enter = ncols;
            for (std::size_t j = 0; j < ncols; ++j)
                if (at(obj, j) < -kPivotTol) {
                    enter = j;
                    break;
                }
            if (enter == ncols) return true;
            std::size_t leave = m;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                const double a = at(i, enter);
                if (a > kPivotTol) {
                    const double ratio = at(i, cols - 1) / a;
                    if (ratio < best - kPivotTol || (leave != m && std::abs(ratio - best) <= kPivotTol && basis[i] < basis[leave])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave == m) return false;
            pivot(leave, enter);
        }
        throw std::runtime_error("simplex iteration limit reached");
    }
};

}  // namespace

LpResult solve_lp(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                  const std::vector<double>& c) {
    const std::size_t m = a.size();
    const std::size_t n = c.size();
    if (b.size() != m) throw std::invalid_argument("solve_lp: b has wrong length");
    for (const auto& row : a)
        if (row.size() != n) throw std::invalid_argument("solve_lp: ragged constraint matrix");

    // Columns: n structural, m artificial, rhs. Rows: m constraints, phase-2
    // objective, phase-1 objective.
    Tableau tab{m + 2, n + m + 1, {}, std::vector<std::size_t>(m)};
    tab.t.assign(tab.rows * tab.cols, 0.0);
    const std::size_t rhs = n + m, obj2 = m, obj1 = m + 1;
    for (std::size_t i = 0; i < m; ++i) {
        const double sign = b[i] < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign * a[i][j];
        tab.at(i, n + i) = 1.0;
        tab.at(i, rhs) = sign * b[i];
        tab.basis[i] = n + i;
    }
    for (std::size_t j = 0; j < n; ++j) tab.at(obj2, j) = c[j];
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) tab.at(obj1, j) -= tab.at(i, j);
    for (std::size_t i = 0; i < m; ++i) tab.at(obj1, rhs) -= tab.at(i, rhs);

    LpResult result;
    tab.run(obj1, n + m);
    if (-tab.at(obj1, rhs) > 1e-9) return result;

    // Drive remaining artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
        if (tab.basis[i] < n) continue;
        for (std::size_t j = 0; j < n; ++j)
            if (std::abs(tab.at(i, j)) > kPivotTol) {
                tab.pivot(i, j);
                break;
            }
    }
    // Artificial columns are excluded from phase 2 entering candidates.
    if (!tab.run(obj2, n)) {
        result.status = LpResult::Status::unbounded;
        return result;
    }
    result.status = LpResult::Status::optimal;
    result.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if (tab.basis[i] < n) result.x[tab.basis[i]] = std::max(0.0, tab.at(i, rhs));
    result.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) result.objective += c[j] * result.x[j];
    return result;
}

}  // namespace pcs
