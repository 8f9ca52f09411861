#include "pcs/pcs_heuristic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pcs/lp.hpp"

namespace pcs {

namespace {

constexpr double kEndpointTol = 1e-12;

double dot(const std::vector<double>& x, const std::vector<double>& y) {
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

std::vector<double> fourth_powers(const Constellation& c) {
    std::vector<double> b;
    for (double a2 : c.ring_amp2()) b.push_back(a2 * a2);
    return b;
}

// Minimum-norm correction on `support` so that sum m = 1, sum m a = 1 and,
// when `b` is given, sum m b = target. Returns false if the correction would
// leave the nonnegative orthant or the system is singular.
bool polish(std::vector<double>& m, const std::vector<double>& a, const std::vector<double>* b,
            double target) {
    const int rows = b ? 3 : 2;
    std::vector<int> support;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i] > 0.0) support.push_back(static_cast<int>(i));
    if (static_cast<int>(support.size()) < rows) return false;
    Eigen::MatrixXd C(rows, support.size());
    Eigen::VectorXd r(rows);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
        const int i = support[k];
        C(0, k) = 1.0;
        C(1, k) = a[i];
        if (b) C(2, k) = (*b)[i];
        s0 += m[i];
        s1 += m[i] * a[i];
        if (b) s2 += m[i] * (*b)[i];
    }
    r(0) = 1.0 - s0;
    r(1) = 1.0 - s1;
    if (b) r(2) = target - s2;
    const Eigen::MatrixXd G = C * C.transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    if (!lu.isInvertible()) return false;
    const Eigen::VectorXd delta = C.transpose() * lu.solve(r);
    std::vector<double> out = m;
    for (std::size_t k = 0; k < support.size(); ++k) {
        out[support[k]] += delta(k);
        if (out[support[k]] < 0.0) return false;
    }
    m = std::move(out);
    return true;
}

}  // namespace

C0Range feasible_c0_range(const Constellation& c) {
    const std::vector<double> a(c.ring_amp2().begin(), c.ring_amp2().end());
    const std::vector<double> b = fourth_powers(c);
    const std::vector<std::vector<double>> rows = {std::vector<double>(a.size(), 1.0), a};
    const std::vector<double> rhs = {1.0, 1.0};

    const LpResult lo = solve_lp(rows, rhs, b);
    std::vector<double> neg(b.size());
    std::transform(b.begin(), b.end(), neg.begin(), [](double v) { return -v; });
    const LpResult hi = solve_lp(rows, rhs, neg);
    if (lo.status != LpResult::Status::optimal || hi.status != LpResult::Status::optimal)
        throw std::invalid_argument("no ring masses reach unit power for constellation " + c.id());

    C0Range range;
    range.argmin = lo.x;
    range.argmax = hi.x;
    range.min = dot(lo.x, b);
    range.max = dot(hi.x, b);
    return range;
}

std::vector<double> project_ring_polytope(const std::vector<double>& v, const std::vector<double>& a) {
    const std::size_t n = v.size();
    // Projection onto the affine set {sum m = 1, sum m a = 1}.
    const double sa = std::accumulate(a.begin(), a.end(), 0.0);
    const double saa = dot(a, a);
    const double det = n * saa - sa * sa;
    auto affine = [&](std::vector<double> x) {
        const double r0 = 1.0 - std::accumulate(x.begin(), x.end(), 0.0);
        const double r1 = 1.0 - dot(x, a);
        const double mu0 = (saa * r0 - sa * r1) / det;
        const double mu1 = (n * r1 - sa * r0) / det;
        for (std::size_t i = 0; i < n; ++i) x[i] += mu0 + mu1 * a[i];
        return x;
    };

    // Dykstra's alternating projections between the affine set and the orthant.
    std::vector<double> x = v, p(n, 0.0), q(n, 0.0);
    for (int iter = 0; iter < 100000; ++iter) {
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + p[i];
        std::vector<double> y_aff = affine(y);
        for (std::size_t i = 0; i < n; ++i) p[i] = y[i] - y_aff[i];
        std::vector<double> z(n);
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = y_aff[i] + q[i];
            z[i] = std::max(0.0, t);
            q[i] = t - z[i];
            change += (z[i] - x[i]) * (z[i] - x[i]);
        }
        x = std::move(z);
        if (change < 1e-30) break;
    }
    // On the identified support the projection is an affine projection; solve it exactly.
    std::vector<double> exact(n, 0.0);
    std::vector<double> va, aa;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > 1e-14) idx.push_back(i);
    if (idx.size() >= 2) {
        double s0 = 0, s1 = 0, sa_s = 0, saa_s = 0;
        for (std::size_t i : idx) {
            s0 += v[i];
            s1 += v[i] * a[i];
            sa_s += a[i];
            saa_s += a[i] * a[i];
        }
        const double k = static_cast<double>(idx.size());
        const double d = k * saa_s - sa_s * sa_s;
        if (std::abs(d) > 1e-14) {
            const double r0 = 1.0 - s0, r1 = 1.0 - s1;
            const double mu0 = (saa_s * r0 - sa_s * r1) / d;
            const double mu1 = (k * r1 - sa_s * r0) / d;
            bool ok = true;
            for (std::size_t i : idx) {
                exact[i] = v[i] + mu0 + mu1 * a[i];
                if (exact[i] < 0.0) ok = false;
            }
            if (ok) return exact;
        }
    }
    polish(x, a, nullptr, 0.0);
    return x;
}

std::vector<double> minimize_moment_gap(const Constellation& c, double c0, std::vector<double> m) {
    const std::vector<double> a(c.ring_amp2().begin(), c.ring_amp2().end());
    const std::vector<double> b = fourth_powers(c);
    if (m.size() != a.size()) throw std::invalid_argument("start point has wrong length");
    const std::size_t n = a.size();
    double step = 1.0;
    for (int iter = 0; iter < 20000; ++iter) {
        const double r = dot(m, b) - c0;
        if (std::abs(r) <= 1e-13) break;
        std::vector<double> trial(n);
        for (std::size_t i = 0; i < n; ++i) trial[i] = m[i] - step * 2.0 * r * b[i];
        trial = project_ring_polytope(trial, a);
        std::vector<double> dir(n);
        for (std::size_t i = 0; i < n; ++i) dir[i] = trial[i] - m[i];
        const double slope = dot(b, dir);
        if (slope == 0.0 || r * slope >= 0.0) {
            step *= 2.0;
            if (step > 1e12) break;
            continue;
        }
        const double s = std::clamp(-r / slope, 0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) m[i] = std::max(0.0, m[i] + s * dir[i]);
        // The full projected step did not reach the target: take longer steps.
        if (s >= 1.0) step *= 2.0;
    }
    std::vector<double> polished = m;
    if (polish(polished, a, &b, c0)) m = std::move(polished);
    return m;
}

HeuristicResult solve_heuristic(const Constellation& c, double c0) {
    if (!std::isfinite(c0)) throw std::invalid_argument("c0 must be finite");
    const C0Range range = feasible_c0_range(c);
    HeuristicResult res;
    res.c0_requested = c0;
    res.c0_used = std::clamp(c0, range.min, range.max);
    res.clamped = c0 < range.min - kEndpointTol || c0 > range.max + kEndpointTol;
    const std::size_t W = c.ring_count();
    const std::vector<double> a(c.ring_amp2().begin(), c.ring_amp2().end());
    const std::vector<double> b = fourth_powers(c);

    if (W == 1) {
        res.ring_mass = {1.0};
        res.branch = "single-ring";
    } else if (std::abs(res.c0_used - range.min) <= kEndpointTol) {
        res.ring_mass = range.argmin;
        res.branch = "lp-vertex";
    } else if (std::abs(res.c0_used - range.max) <= kEndpointTol) {
        res.ring_mass = range.argmax;
        res.branch = "lp-vertex";
    } else {
        if (W == 3) {
            Eigen::Matrix3d M;
            Eigen::Vector3d rhs(res.c0_used, 1.0, 1.0);
            for (int w = 0; w < 3; ++w) {
                M(0, w) = b[w];
                M(1, w) = a[w];
                M(2, w) = 1.0;
            }
            const Eigen::Vector3d sol = M.fullPivLu().solve(rhs);
            int negative = -1;
            for (int w = 0; w < 3; ++w)
                if (sol(w) < -1e-12) negative = w;
            if (negative < 0) {
                res.ring_mass = {std::max(0.0, sol(0)), std::max(0.0, sol(1)), std::max(0.0, sol(2))};
                res.branch = "exact";
            } else {
                res.note = "exact ring solve gave negative mass on ring " + std::to_string(negative);
            }
        }
        if (res.ring_mass.empty()) {
            std::vector<double> start(W);
            for (std::size_t w = 0; w < W; ++w)
                start[w] = static_cast<double>(c.ring_size(w)) / static_cast<double>(c.size());
            res.ring_mass = minimize_moment_gap(c, res.c0_used, std::move(start));
            res.branch = "projected-gradient";
        }
    }
    const double total = std::accumulate(res.ring_mass.begin(), res.ring_mass.end(), 0.0);
    if (std::abs(total - 1.0) > kValidationTol)
        throw std::runtime_error("ring-mass solver left the simplex (sum " + std::to_string(total) + ")");
    res.distribution = expand_ring_mass(c, res.ring_mass);
    res.fourth_moment = dot(res.ring_mass, b);
    return res;
}

}  // namespace pcs
