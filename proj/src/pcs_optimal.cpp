#include "pcs/pcs_optimal.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "pcs/parallel.hpp"
#include "pcs/pcs_heuristic.hpp"
#include "pcs/rng.hpp"

namespace pcs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kBoundaryTol = 1e-9;

double norm2(const Vec2& v) { return std::hypot(v[0], v[1]); }

std::string lambda_text(double l1, double l2) {
    return "(" + std::to_string(l1) + ", " + std::to_string(l2) + ")";
}

// Exponents D - l1 A^4 - l2 A^2 and their maximum.
std::vector<double> exponents(double l1, double l2, const ResidualInput& in, double& max_e) {
    const std::size_t n = in.integrals.size();
    if (in.amp2.size() != n || in.weight.size() != n)
        throw std::invalid_argument("residual input vectors differ in length");
    std::vector<double> e(n);
    max_e = kNegInf;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = in.amp2[i];
        e[i] = in.integrals[i] - l1 * a * a - l2 * a;
        if (in.weight[i] > 0.0) max_e = std::max(max_e, e[i]);
    }
    return e;
}

std::vector<double> sample_outputs(const Constellation& c, const Distribution& p, double sigma2, int n,
                                   std::uint64_t seed) {
    std::vector<double> cdf(c.size());
    double acc = 0.0;
    for (std::size_t q = 0; q < c.size(); ++q) cdf[q] = (acc += p.per_point[q]);
    std::vector<double> out(2 * static_cast<std::size_t>(n));
    Rng rng(seed);
    for (int m = 0; m < n; ++m) {
        std::size_t q = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), rng.uniform() * acc) - cdf.begin());
        if (q >= c.size()) q = c.size() - 1;
        while (p.per_point[q] <= 0.0 && q > 0) --q;
        const cplx y = c.symbol(q) + rng.complex_normal(sigma2);
        out[2 * m] = y.real();
        out[2 * m + 1] = y.imag();
    }
    return out;
}

// Estimated F(p, q) = sum_x p(x) [D_x - log p(x)] in nats, with D from the
// table of q and importance weights relative to `sampling_log_py`.
double objective(const Distribution& p, const QTable& table, std::span<const double> sampling_log_py,
                 std::vector<double>* integrals) {
    double f = 0.0;
    if (integrals) integrals->assign(p.per_point.size(), kNegInf);
    for (std::size_t x = 0; x < p.per_point.size(); ++x) {
        if (p.per_point[x] <= 0.0) continue;
        const double dx = mc_integral(x, table, sampling_log_py).value;
        if (integrals) (*integrals)[x] = dx;
        f += p.per_point[x] * (dx - std::log(p.per_point[x]));
    }
    return f;
}

}  // namespace

double QTable::q(std::size_t m, std::size_t x) const { return std::exp(log_q[m * points + x]); }

QTable q_update(const Distribution& p, std::span<const cplx> y, const Constellation& c, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    if (p.per_point.size() != c.size()) throw std::invalid_argument("distribution length differs from constellation order");
    QTable t;
    t.samples = y.size();
    t.points = c.size();
    t.log_lik.resize(t.samples * t.points);
    t.log_q.resize(t.samples * t.points);
    t.log_py.resize(t.samples);
    std::vector<double> log_p(c.size());
    for (std::size_t x = 0; x < c.size(); ++x) log_p[x] = p.per_point[x] > 0.0 ? std::log(p.per_point[x]) : kNegInf;
    const double log_norm = std::log(std::numbers::pi * sigma2);

    parallel_for(t.samples, [&](std::size_t m) {
        double* ll = &t.log_lik[m * t.points];
        double peak = kNegInf;
        for (std::size_t x = 0; x < t.points; ++x) {
            ll[x] = -std::norm(y[m] - c.symbol(x)) / sigma2 - log_norm;
            if (log_p[x] > kNegInf) peak = std::max(peak, log_p[x] + ll[x]);
        }
        if (peak == kNegInf) throw std::runtime_error("q_update: output has zero density under p");
        double acc = 0.0;
        for (std::size_t x = 0; x < t.points; ++x)
            if (log_p[x] > kNegInf) acc += std::exp(log_p[x] + ll[x] - peak);
        const double lpy = peak + std::log(acc);
        t.log_py[m] = lpy;
        double* lq = &t.log_q[m * t.points];
        for (std::size_t x = 0; x < t.points; ++x) lq[x] = log_p[x] > kNegInf ? log_p[x] + ll[x] - lpy : kNegInf;
    });
    return t;
}

McValue mc_integral(std::size_t x, const QTable& table) { return mc_integral(x, table, table.log_py); }

McValue mc_integral(std::size_t x, const QTable& table, std::span<const double> sampling_log_py) {
    if (x >= table.points) throw std::invalid_argument("mc_integral: point index out of range");
    if (sampling_log_py.size() != table.samples)
        throw std::invalid_argument("mc_integral: sample count differs from the q table");
    if (table.samples == 0) throw std::invalid_argument("mc_integral: empty sample set");
    double s = 0.0, s2 = 0.0;
    for (std::size_t m = 0; m < table.samples; ++m) {
        const double lq = table.log_q[m * table.points + x];
        const double w = std::exp(table.log_lik[m * table.points + x] - sampling_log_py[m]);
        // Points outside the support of q contribute 0 log 0 = 0 only if never reached.
        const double v = w == 0.0 ? 0.0 : w * lq;
        s += v;
        s2 += v * v;
    }
    const double n = static_cast<double>(table.samples);
    McValue out;
    out.value = s / n;
    out.std_error = n > 1 ? std::sqrt(std::max(0.0, (s2 - n * out.value * out.value) / (n - 1.0)) / n) : 0.0;
    return out;
}

MultiplierEval multiplier_residuals(double lambda1, double lambda2, const ResidualInput& in, double shift) {
    double max_e;
    const std::vector<double> e = exponents(lambda1, lambda2, in, max_e);
    MultiplierEval out;
    out.shift = shift;
    out.g.resize(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double g = std::exp(e[i] - shift);
        if (!std::isfinite(g))
            throw std::overflow_error("multiplier weights overflow at lambda = " + lambda_text(lambda1, lambda2));
        out.g[i] = g;
        const double a = in.amp2[i], b = a * a, wg = in.weight[i] * g;
        out.f[0] += (a - 1.0) * wg;
        out.f[1] += (b - in.c0) * wg;
        out.jacobian[0][0] -= (a - 1.0) * b * wg;
        out.jacobian[0][1] -= (a - 1.0) * a * wg;
        out.jacobian[1][0] -= (b - in.c0) * b * wg;
        out.jacobian[1][1] -= (b - in.c0) * a * wg;
    }
    return out;
}

MultiplierEval multiplier_residuals(double lambda1, double lambda2, const ResidualInput& in) {
    double max_e;
    exponents(lambda1, lambda2, in, max_e);
    if (!std::isfinite(max_e))
        throw std::overflow_error("multiplier exponents are not finite at lambda = " + lambda_text(lambda1, lambda2));
    return multiplier_residuals(lambda1, lambda2, in, max_e);
}

MultiplierEval normalized_residuals(double lambda1, double lambda2, const ResidualInput& in) {
    MultiplierEval raw = multiplier_residuals(lambda1, lambda2, in);
    double z = 0.0, ea = 0.0, eb = 0.0;
    for (std::size_t i = 0; i < raw.g.size(); ++i) {
        const double wg = in.weight[i] * raw.g[i];
        z += wg;
        ea += wg * in.amp2[i];
        eb += wg * in.amp2[i] * in.amp2[i];
    }
    ea /= z;
    eb /= z;
    // Centered second moments, computed directly to avoid cancellation.
    double caa = 0.0, cab = 0.0, cbb = 0.0;
    for (std::size_t i = 0; i < raw.g.size(); ++i) {
        const double wg = in.weight[i] * raw.g[i] / z;
        const double da = in.amp2[i] - ea, db = in.amp2[i] * in.amp2[i] - eb;
        caa += wg * da * da;
        cab += wg * da * db;
        cbb += wg * db * db;
    }
    MultiplierEval out;
    out.shift = raw.shift + std::log(z);
    out.g = std::move(raw.g);
    for (double& g : out.g) g /= z;
    out.f = {ea - 1.0, eb - in.c0};
    out.jacobian = {{{-cab, -caa}, {-cbb, -cab}}};
    return out;
}

GridResult grid_init(const std::function<double(double, double)>& norm_fn, const GridSpec& grid) {
    if (!(grid.step > 0.0) || !std::isfinite(grid.lambda1_min) || !std::isfinite(grid.lambda1_max) ||
        !std::isfinite(grid.lambda2_min) || !std::isfinite(grid.lambda2_max))
        throw std::invalid_argument("grid ranges must be finite with a positive step");
    auto scan = [&](double lo1, double hi1, double lo2, double hi2, double step, GridResult& best) {
        const long n1 = std::lround(std::floor((hi1 - lo1) / step + 1e-9));
        const long n2 = std::lround(std::floor((hi2 - lo2) / step + 1e-9));
        for (long i = 0; i <= n1; ++i)
            for (long j = 0; j <= n2; ++j) {
                const double l1 = lo1 + i * step, l2 = lo2 + j * step;
                const double v = norm_fn(l1, l2);
                if (v < best.norm) best = {l1, l2, v};
            }
    };
    GridResult best{grid.lambda1_min, grid.lambda2_min, std::numeric_limits<double>::infinity()};
    scan(grid.lambda1_min, grid.lambda1_max, grid.lambda2_min, grid.lambda2_max, grid.step, best);
    if (grid.refine) {
        const GridResult center = best;
        scan(center.lambda1 - grid.step, center.lambda1 + grid.step, center.lambda2 - grid.step,
             center.lambda2 + grid.step, grid.step / 10.0, best);
    }
    return best;
}

NewtonResult newton_solve(const std::function<NewtonEval(const Vec2&)>& fn, Vec2 lambda, double tol,
                          int max_iter) {
    NewtonResult res;
    NewtonEval cur = fn(lambda);
    double cur_norm = norm2(cur.f);
    for (int it = 0; it < max_iter; ++it) {
        if (cur_norm == 0.0) {
            res.converged = true;
            break;
        }
        Eigen::Matrix2d J;
        J << cur.jacobian[0][0], cur.jacobian[0][1], cur.jacobian[1][0], cur.jacobian[1][1];
        const Eigen::Vector2d F(cur.f[0], cur.f[1]);
        Eigen::JacobiSVD<Eigen::Matrix2d> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto sv = svd.singularValues();
        const double cond = sv(1) > 0.0 ? sv(0) / sv(1) : std::numeric_limits<double>::infinity();
        Eigen::Vector2d step;
        const bool regular = std::isfinite(cond) && cond <= 1e12;
        if (regular) {
            step = -J.partialPivLu().solve(F);
        } else {
            svd.setThreshold(1e-12);
            step = -svd.solve(F);
            ++res.fallbacks;
        }
        if (!step.allFinite()) break;
        ++res.iterations;
        // A vanishing pseudo-inverse step only means a least-squares stationary point.
        if (!regular && step.squaredNorm() <= tol) break;
        if (step.squaredNorm() <= tol) {
            lambda = {lambda[0] + step(0), lambda[1] + step(1)};
            cur = fn(lambda);
            cur_norm = norm2(cur.f);
            res.converged = true;
            break;
        }
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h < 50; ++h, t *= 0.5) {
            const Vec2 trial{lambda[0] + t * step(0), lambda[1] + t * step(1)};
            NewtonEval e;
            try {
                e = fn(trial);
            } catch (const std::overflow_error&) {
                continue;
            }
            const double n = norm2(e.f);
            if (std::isfinite(n) && n < cur_norm) {
                lambda = trial;
                cur = e;
                cur_norm = n;
                accepted = true;
                break;
            }
        }
        if (!accepted || t * t * step.squaredNorm() <= tol) break;
    }
    res.lambda = lambda;
    res.residual_norm = cur_norm;
    return res;
}

PCSResult run_mba(const Constellation& c, const MBAConfig& cfg, std::uint64_t seed) {
    if (!(cfg.sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    if (!(cfg.epsilon > 0.0) || !(cfg.newton_tol > 0.0) || cfg.max_iter < 1 || cfg.newton_max_iter < 1)
        throw std::invalid_argument("MBA tolerances and iteration limits must be positive");
    if (cfg.n_mc < 1) throw std::invalid_argument("MBA n_mc must be positive");
    const C0Range range = feasible_c0_range(c);
    if (cfg.c0 < range.min - kBoundaryTol || cfg.c0 > range.max + kBoundaryTol)
        throw std::invalid_argument("c0 = " + std::to_string(cfg.c0) + " outside the feasible range [" +
                                    std::to_string(range.min) + ", " + std::to_string(range.max) + "]");

    PCSResult res;
    res.c0 = cfg.c0;
    const std::size_t W = c.ring_count();
    const std::size_t Q = c.size();

    // At an endpoint the feasible set is the single LP vertex.
    const bool at_min = std::abs(cfg.c0 - range.min) <= kBoundaryTol;
    const bool at_max = std::abs(cfg.c0 - range.max) <= kBoundaryTol;
    res.boundary = at_min || at_max;
    Distribution p = res.boundary ? expand_ring_mass(c, at_min ? range.argmin : range.argmax)
                                  : uniform_distribution(c);

    ResidualInput in;
    in.c0 = cfg.c0;
    if (cfg.ring_collapsed) {
        in.amp2.assign(c.ring_amp2().begin(), c.ring_amp2().end());
        for (std::size_t w = 0; w < W; ++w) in.weight.push_back(c.ring_size(w));
    } else {
        for (std::size_t q = 0; q < Q; ++q) in.amp2.push_back(c.ring_amp2(c.ring_of(q)));
        in.weight.assign(Q, 1.0);
    }

    const std::uint64_t mba_seed = derive_seed(seed, "mba");
    Vec2 lambda{0.0, 0.0};
    for (int k = 0; k < cfg.max_iter; ++k) {
        const std::vector<double> flat = sample_outputs(c, p, cfg.sigma2, cfg.n_mc, derive_seed(mba_seed, k));
        const std::span<const cplx> y(reinterpret_cast<const cplx*>(flat.data()), cfg.n_mc);
        const QTable table = q_update(p, y, c, cfg.sigma2);
        std::vector<double> d;
        const double f_before = objective(p, table, table.log_py, &d);

        // Ring averages of the integrals; the update sees x only through its ring.
        std::vector<double> ring_d(W, 0.0);
        std::vector<int> ring_hits(W, 0);
        for (std::size_t q = 0; q < Q; ++q)
            if (p.per_point[q] > 0.0) {
                ring_d[c.ring_of(q)] += d[q];
                ++ring_hits[c.ring_of(q)];
            }
        for (std::size_t w = 0; w < W; ++w) ring_d[w] = ring_hits[w] ? ring_d[w] / ring_hits[w] : kNegInf;
        res.ring_integrals = ring_d;

        Distribution next = p;
        if (!res.boundary) {
            in.integrals.clear();
            if (cfg.ring_collapsed)
                in.integrals = ring_d;
            else
                for (std::size_t q = 0; q < Q; ++q) in.integrals.push_back(ring_d[c.ring_of(q)]);

            const GridResult start = grid_init(
                [&](double l1, double l2) {
                    try {
                        return norm2(normalized_residuals(l1, l2, in).f);
                    } catch (const std::overflow_error&) {
                        return std::numeric_limits<double>::infinity();
                    }
                },
                cfg.grid);
            const NewtonResult nr = newton_solve(
                [&](const Vec2& l) {
                    const MultiplierEval e = normalized_residuals(l[0], l[1], in);
                    return NewtonEval{e.f, e.jacobian};
                },
                {start.lambda1, start.lambda2}, cfg.newton_tol, cfg.newton_max_iter);
            res.newton_iterations += nr.iterations;
            res.newton_fallbacks += nr.fallbacks;
            lambda = nr.lambda;
            const MultiplierEval e = normalized_residuals(lambda[0], lambda[1], in);

            std::vector<double> per_point(Q);
            if (cfg.ring_collapsed) {
                for (std::size_t q = 0; q < Q; ++q) per_point[q] = e.g[c.ring_of(q)];
            } else {
                per_point = e.g;
            }
            next = distribution_from_points(c, std::move(per_point));
        }

        // Objective of the update on the same draws: Bayes posterior of the
        // new input, integrals weighted against the sampling density.
        const QTable next_table = q_update(next, y, c, cfg.sigma2);
        const double f_after = objective(next, next_table, table.log_py, nullptr);
        res.trace_before.push_back(f_before / std::numbers::ln2);
        res.trace.push_back(f_after / std::numbers::ln2);

        double change = 0.0;
        for (std::size_t q = 0; q < Q; ++q) change += std::pow(next.per_point[q] - p.per_point[q], 2);
        p = std::move(next);
        res.iterations = k + 1;
        if (change <= cfg.epsilon || std::abs(f_after - f_before) <= cfg.epsilon * std::abs(f_before)) {
            res.converged = true;
            break;
        }
    }

    res.lambda1 = lambda[0];
    res.lambda2 = lambda[1];
    res.ring_mass = p.ring_mass;
    res.distribution = std::move(p);
    res.fourth_moment = moment(c, res.distribution, 4);
    const MIEstimate air = mutual_information(c, res.distribution, ChannelSpec{cfg.sigma2}, cfg.air_n_mc,
                                              derive_seed(seed, "air"));
    res.air_bits = air.mi_bits;
    res.air_std_error = air.std_error;
    return res;
}

}  // namespace pcs
