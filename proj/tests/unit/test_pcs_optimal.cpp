#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pcs/pcs_heuristic.hpp"
#include "pcs/pcs_optimal.hpp"
#include "pcs/rng.hpp"

using namespace pcs;

namespace {

std::vector<cplx> channel_outputs(const Constellation& c, const Distribution& d, double sigma2, int n,
                                  std::uint64_t seed) {
    const auto m = sample_symbols(c, d, OFDMConfig{n, 1.0, 1.0, 1}, seed);
    Rng rng(seed + 1);
    std::vector<cplx> y(m.data);
    for (auto& v : y) v += rng.complex_normal(sigma2);
    return y;
}

ResidualInput ring_input(const Constellation& c, std::vector<double> integrals, double c0) {
    ResidualInput in;
    in.integrals = std::move(integrals);
    in.amp2.assign(c.ring_amp2().begin(), c.ring_amp2().end());
    for (std::size_t w = 0; w < c.ring_count(); ++w) in.weight.push_back(c.ring_size(w));
    in.c0 = c0;
    return in;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_SUITE("pcs_optimal") {

TEST_CASE("posterior table") {
    const auto c = make_constellation(Family::qam, 16);
    const auto d = uniform_distribution(c);
    const auto y = channel_outputs(c, d, 1.0, 500, 3);
    const auto t = q_update(d, y, c, 1.0);
    for (std::size_t m = 0; m < y.size(); ++m) {
        double col = 0.0, denom = 0.0;
        for (std::size_t x = 0; x < c.size(); ++x) denom += d.per_point[x] * std::exp(-std::norm(y[m] - c.symbol(x)));
        for (std::size_t x = 0; x < c.size(); ++x) {
            const double bayes = d.per_point[x] * std::exp(-std::norm(y[m] - c.symbol(x))) / denom;
            CHECK(std::abs(t.q(m, x) - bayes) <= 1e-12);
            col += t.q(m, x);
        }
        CHECK(col == doctest::Approx(1.0).epsilon(1e-12));
    }

    std::vector<double> point(16, 0.0);
    point[7] = 1.0;
    const auto pm = distribution_from_points(c, point);
    const auto tp = q_update(pm, y, c, 1.0);
    for (std::size_t m = 0; m < y.size(); ++m) CHECK(tp.q(m, 7) == 1.0);

    const std::vector<cplx> exact{c.symbol(4)};
    const auto sharp = q_update(d, exact, c, 1e-6);
    CHECK(sharp.q(0, 4) > 1.0 - 1e-12);
}

TEST_CASE("importance-weighted integral") {
    const auto c = make_constellation(Family::qam, 16);
    std::vector<double> point(16, 0.0);
    point[1] = 1.0;
    const auto pm = distribution_from_points(c, point);
    const auto tp = q_update(pm, channel_outputs(c, pm, 1.0, 1000, 2), c, 1.0);
    CHECK(mc_integral(1, tp).value == 0.0);

    const auto d = uniform_distribution(c);
    const double sigma2 = 1.0;
    const std::size_t x = 5;
    // Deterministic tensor-grid quadrature of p(y|x) log q(x|y).
    const double half = c.ring_amplitude(c.ring_count() - 1) + 6.0;
    const int n = 600;
    const double h = 2 * half / n;
    double quad = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const cplx y(-half + (i + 0.5) * h, -half + (k + 0.5) * h);
            const double lik = std::exp(-std::norm(y - c.symbol(x)) / sigma2) / (std::numbers::pi * sigma2);
            double py = 0.0;
            for (std::size_t q = 0; q < c.size(); ++q)
                py += d.per_point[q] * std::exp(-std::norm(y - c.symbol(q)) / sigma2) / (std::numbers::pi * sigma2);
            quad += lik * std::log(d.per_point[x] * lik / py) * h * h;
        }
    const auto a = mc_integral(x, q_update(d, channel_outputs(c, d, sigma2, 50000, 10), c, sigma2));
    const auto b = mc_integral(x, q_update(d, channel_outputs(c, d, sigma2, 50000, 20), c, sigma2));
    CHECK(std::abs(a.value - quad) <= 3 * a.std_error);
    CHECK(std::abs(a.value - b.value) <= 3 * std::hypot(a.std_error, b.std_error));

    QTable empty;
    CHECK_THROWS_AS(mc_integral(0, empty), std::invalid_argument);
    const std::vector<double> wrong(3, 0.0);
    CHECK_THROWS_AS(mc_integral(0, tp, wrong), std::invalid_argument);
}

TEST_CASE("multiplier residuals on constant modulus") {
    const auto psk = make_constellation(Family::psk, 16);
    for (double c0 : {1.0, 1.2}) {
        const auto in = ring_input(psk, {-0.3}, c0);
        for (auto [l1, l2] : {std::pair{0.0, 0.0}, {3.0, -2.0}, {-7.5, 11.0}}) {
            const auto e = multiplier_residuals(l1, l2, in);
            CHECK(e.f[0] == 0.0);
            if (c0 == 1.0) CHECK(e.f[1] == 0.0);
            else CHECK(e.f[1] != 0.0);
        }
    }
}

TEST_CASE("multiplier Jacobians match finite differences") {
    const auto c = make_constellation(Family::qam, 64);
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-2.0, 2.0), lam(-3.0, 3.0);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> d(c.ring_count());
        for (auto& v : d) v = u(gen);
        const auto in = ring_input(c, d, 1.2);
        const double l1 = lam(gen), l2 = lam(gen);
        const double shift = multiplier_residuals(l1, l2, in).shift;
        const auto e = multiplier_residuals(l1, l2, in, shift);
        const auto fd = oracle::fd_jacobian([&](double a, double b) { return multiplier_residuals(a, b, in, shift).f; },
                                            l1, l2, 1e-5);
        const auto n = normalized_residuals(l1, l2, in);
        const auto fdn = oracle::fd_jacobian([&](double a, double b) { return normalized_residuals(a, b, in).f; },
                                             l1, l2, 1e-5);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                CHECK(rel(e.jacobian[i][j], fd[i][j]) <= 1e-4);
                CHECK(rel(n.jacobian[i][j], fdn[i][j]) <= 1e-4);
            }
    }
}

TEST_CASE("scaling the weights scales the residuals but not the Newton step") {
    const auto c = make_constellation(Family::qam, 16);
    const auto in = ring_input(c, {-0.5, -0.1, -0.9}, 1.15);
    const auto a = multiplier_residuals(0.7, -1.2, in, 0.0);
    const auto b = multiplier_residuals(0.7, -1.2, in, std::log(0.25));  // g scaled by 4
    CHECK(b.f[0] == doctest::Approx(4 * a.f[0]).epsilon(1e-12));
    CHECK(b.f[1] == doctest::Approx(4 * a.f[1]).epsilon(1e-12));
    auto step = [](const MultiplierEval& e) {
        const double det = e.jacobian[0][0] * e.jacobian[1][1] - e.jacobian[0][1] * e.jacobian[1][0];
        return Vec2{-(e.jacobian[1][1] * e.f[0] - e.jacobian[0][1] * e.f[1]) / det,
                    -(-e.jacobian[1][0] * e.f[0] + e.jacobian[0][0] * e.f[1]) / det};
    };
    const Vec2 sa = step(a), sb = step(b);
    CHECK(sa[0] == doctest::Approx(sb[0]).epsilon(1e-10));
    CHECK(sa[1] == doctest::Approx(sb[1]).epsilon(1e-10));
}

TEST_CASE("grid search") {
    GridSpec g;
    g.refine = false;
    const auto r = grid_init([](double a, double b) { return std::hypot(a - 3.3, b + 7.1); }, g);
    CHECK(r.lambda1 == doctest::Approx(3.5));
    CHECK(r.lambda2 == doctest::Approx(-7.0));

    const auto psk = make_constellation(Family::psk, 8);
    const auto in = ring_input(psk, {0.0}, 1.0);
    const auto tie = grid_init([&](double a, double b) {
        const auto f = multiplier_residuals(a, b, in).f;
        return std::hypot(f[0], f[1]);
    }, g);
    CHECK(tie.norm == 0.0);
    CHECK(tie.lambda1 == -20.0);
    CHECK(tie.lambda2 == -20.0);

    // f = M (lambda - target)
    const double m00 = 2.0, m01 = 0.5, m10 = -1.0, m11 = 3.0;
    const double t1 = -4.2, t2 = 12.8;
    const auto lin = grid_init([&](double a, double b) {
        return std::hypot(m00 * (a - t1) + m01 * (b - t2), m10 * (a - t1) + m11 * (b - t2));
    }, g);
    CHECK(lin.lambda1 == doctest::Approx(-4.0));
    CHECK(lin.lambda2 == doctest::Approx(13.0));

    g.refine = true;
    const auto fine = grid_init([](double a, double b) { return std::hypot(a - 3.33, b + 7.12); }, g);
    CHECK(fine.lambda1 == doctest::Approx(3.35));
    CHECK(fine.lambda2 == doctest::Approx(-7.1));
}

TEST_CASE("Newton iteration") {
    const auto lin = newton_solve([](const Vec2& l) { return NewtonEval{{l[0] - 2.0, l[1] + 1.0}, {{{1, 0}, {0, 1}}}}; },
                                  {10.0, 10.0}, 1e-20, 50);
    CHECK(lin.converged);
    CHECK(lin.iterations == 1);
    CHECK(lin.lambda[0] == 2.0);
    CHECK(lin.lambda[1] == -1.0);

    const auto quad = newton_solve(
        [](const Vec2& l) { return NewtonEval{{l[0] * l[0] - 2, l[1] * l[1] - 3}, {{{2 * l[0], 0}, {0, 2 * l[1]}}}}; },
        {1.5, 1.5}, 1e-20, 50);
    CHECK(quad.converged);
    CHECK(quad.iterations <= 8);
    CHECK(std::abs(quad.lambda[0] - std::sqrt(2.0)) <= 1e-10);
    CHECK(std::abs(quad.lambda[1] - std::sqrt(3.0)) <= 1e-10);

    // Rank-deficient Jacobian: the pseudo-inverse step is used and reported.
    const auto sing = newton_solve(
        [](const Vec2& l) { return NewtonEval{{l[0] + l[1] - 1, 2 * (l[0] + l[1] - 1)}, {{{1, 1}, {2, 2}}}}; },
        {3.0, 0.0}, 1e-20, 50);
    CHECK(sing.fallbacks >= 1);
    CHECK(sing.lambda[0] + sing.lambda[1] == doctest::Approx(1.0));

    const auto none = newton_solve([](const Vec2& l) { return NewtonEval{{l[0] * l[0] + 1, l[1]}, {{{2 * l[0], 0}, {0, 1}}}}; },
                                   {1.0, 1.0}, 1e-20, 30);
    CHECK_FALSE(none.converged);
}

TEST_CASE("Newton root against a dense grid on an MBA instance") {
    const auto c = make_constellation(Family::qam, 16);
    MBAConfig cfg;
    cfg.c0 = 1.1;
    cfg.sigma2 = 0.1;
    cfg.air_n_mc = 1000;
    const auto r = run_mba(c, cfg, 7);
    const auto in = ring_input(c, r.ring_integrals, cfg.c0);
    auto norm = [&](double a, double b) {
        const auto f = normalized_residuals(a, b, in).f;
        return std::hypot(f[0], f[1]);
    };
    const auto start = grid_init(norm, GridSpec{});
    const auto nr = newton_solve([&](const Vec2& l) {
        const auto e = normalized_residuals(l[0], l[1], in);
        return NewtonEval{e.f, e.jacobian};
    }, {start.lambda1, start.lambda2}, 1e-20, 100);
    CHECK(nr.converged);
    const auto dense = oracle::dense_grid_min(norm, -20, 20, -20, 20, 2001);
    CHECK(norm(nr.lambda[0], nr.lambda[1]) <= dense.value);
    // The residual is anisotropic (Jacobian condition number ~ 55 here), so
    // the best lattice point can sit a few cells along the valley.
    CHECK(std::abs(nr.lambda[0] - dense.x1) <= 4 * dense.cell);
    CHECK(std::abs(nr.lambda[1] - dense.x2) <= 4 * dense.cell);
}

TEST_CASE("run_mba reference cases") {
    const auto q16 = make_constellation(Family::qam, 16);
    MBAConfig cfg;
    cfg.sigma2 = 0.01;
    cfg.c0 = 1.32;
    const auto uni = run_mba(q16, cfg, 1);
    for (double p : uni.distribution.per_point) CHECK(std::abs(p - 1.0 / 16) <= 1e-3);
    CHECK(std::abs(uni.air_bits - 4.0) <= 0.02);

    cfg.c0 = 1.0;
    const auto psk8 = run_mba(q16, cfg, 1);
    CHECK(psk8.boundary);
    CHECK(std::abs(psk8.ring_mass[1] - 1.0) <= 1e-12);

    const auto q64 = make_constellation(Family::qam, 64);
    cfg.c0 = 1.0363;
    cfg.air_n_mc = 1000;
    const auto two = run_mba(q64, cfg, 1);
    CHECK(std::abs(two.ring_mass[4] - 0.5) <= 1e-3);
    CHECK(std::abs(two.ring_mass[5] - 0.5) <= 1e-3);

    cfg.c0 = 1.7;
    CHECK_THROWS_AS(run_mba(q16, cfg, 1), std::invalid_argument);
}

TEST_CASE("ring-collapsed and per-point iterations agree") {
    const auto c = make_constellation(Family::qam, 64);
    MBAConfig cfg;
    cfg.c0 = 1.2;
    cfg.sigma2 = 0.05;
    cfg.air_n_mc = 1000;
    const auto ring = run_mba(c, cfg, 3);
    cfg.ring_collapsed = false;
    const auto point = run_mba(c, cfg, 3);
    REQUIRE(ring.iterations == point.iterations);
    for (std::size_t q = 0; q < c.size(); ++q)
        CHECK(std::abs(ring.distribution.per_point[q] - point.distribution.per_point[q]) <= 1e-6);
    CHECK(validate(c, point.distribution).pass);
}

TEST_CASE("property: ascent, feasibility and dominance") {
    std::mt19937_64 gen(12);
    const auto c = make_constellation(Family::qam, 64);
    const auto range = feasible_c0_range(c);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 4; ++t) {
        MBAConfig cfg;
        cfg.c0 = range.min + (1.3805 - range.min) * u(gen);
        cfg.sigma2 = std::pow(10.0, -2.0 + 2.0 * u(gen));
        cfg.air_n_mc = 20000;
        const auto r = run_mba(c, cfg, 100 + t);
        for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k] >= r.trace_before[k] - 1e-9);
        CHECK(std::abs(moment(c, r.distribution, 4) - cfg.c0) <= 1e-4);
        CHECK(std::abs(moment(c, r.distribution, 2) - 1.0) <= 1e-4);
        double s = 0.0;
        for (double p : r.distribution.per_point) {
            CHECK(p >= 0.0);
            s += p;
        }
        CHECK(std::abs(s - 1.0) <= 1e-9);
        const auto h = solve_heuristic(c, cfg.c0);
        const auto mh = mutual_information(c, h.distribution, ChannelSpec{cfg.sigma2}, 20000, derive_seed(100 + t, "air"));
        CHECK(r.air_bits >= mh.mi_bits - 3 * std::hypot(r.air_std_error, mh.std_error));
    }
}

TEST_CASE("property: 16-QAM optimal and heuristic masses coincide") {
    const auto c = make_constellation(Family::qam, 16);
    for (double c0 : {1.0, 1.05, 1.1, 1.2, 1.32}) {
        MBAConfig cfg;
        cfg.c0 = c0;
        cfg.sigma2 = 0.05;
        cfg.air_n_mc = 1000;
        const auto r = run_mba(c, cfg, 9);
        const auto h = solve_heuristic(c, c0);
        for (std::size_t w = 0; w < 3; ++w) CHECK(std::abs(r.ring_mass[w] - h.ring_mass[w]) <= 1e-3);
    }
}

TEST_CASE("run_mba is reproducible") {
    const auto c = make_constellation(Family::qam, 64);
    MBAConfig cfg;
    cfg.c0 = 1.25;
    cfg.sigma2 = 0.02;
    cfg.air_n_mc = 2000;
    const auto a = run_mba(c, cfg, 5);
    setenv("PCS_THREADS", "3", 1);
    const auto b = run_mba(c, cfg, 5);
    unsetenv("PCS_THREADS");
    CHECK(a.ring_mass == b.ring_mass);
    CHECK(a.trace == b.trace);
    CHECK(a.air_bits == b.air_bits);
}

}  // TEST_SUITE
