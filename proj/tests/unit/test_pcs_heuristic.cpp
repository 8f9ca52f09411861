#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "pcs/lp.hpp"
#include "pcs/pcs_heuristic.hpp"

using namespace pcs;

namespace {

std::vector<double> amp2_of(const Constellation& c) { return {c.ring_amp2().begin(), c.ring_amp2().end()}; }

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void check_constraints(const Constellation& c, const std::vector<double>& m) {
    const auto a = amp2_of(c);
    CHECK(std::abs(std::accumulate(m.begin(), m.end(), 0.0) - 1.0) <= 1e-10);
    CHECK(std::abs(dot(m, a) - 1.0) <= 1e-10);
    for (double v : m) CHECK(v >= -1e-12);
}

double fourth(const Constellation& c, const std::vector<double>& m) {
    double s = 0.0;
    for (std::size_t w = 0; w < m.size(); ++w) s += m[w] * c.ring_amp2(w) * c.ring_amp2(w);
    return s;
}

}  // namespace

TEST_SUITE("pcs_heuristic") {

TEST_CASE("simplex solver on small programs") {
    // min -x - y  s.t. x + y + s = 4, x + 3y + t = 6
    const auto r = solve_lp({{1, 1, 1, 0}, {1, 3, 0, 1}}, {4, 6}, {-1, -1, 0, 0});
    REQUIRE(r.status == LpResult::Status::optimal);
    CHECK(r.objective == doctest::Approx(-4.0));
    const auto inf = solve_lp({{1, 1}}, {-1}, {1, 1});
    CHECK(inf.status == LpResult::Status::infeasible);
    const auto unb = solve_lp({{1, -1}}, {0}, {-1, 0});
    CHECK(unb.status == LpResult::Status::unbounded);
}

TEST_CASE("feasible range matches vertex enumeration") {
    for (auto [f, order] : {std::pair{Family::qam, 16}, {Family::qam, 64}, {Family::qam, 256}}) {
        const auto c = make_constellation(f, order);
        const auto range = feasible_c0_range(c);
        const auto ref = oracle::vertex_c0_range(amp2_of(c));
        CHECK(range.min == doctest::Approx(ref.min).epsilon(1e-12));
        CHECK(range.max == doctest::Approx(ref.max).epsilon(1e-12));
        check_constraints(c, range.argmin);
        check_constraints(c, range.argmax);
    }
}

TEST_CASE("feasible range endpoints") {
    const auto q16 = make_constellation(Family::qam, 16);
    const auto r16 = feasible_c0_range(q16);
    CHECK(r16.min == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r16.max == doctest::Approx(1.64).epsilon(1e-12));
    CHECK(r16.argmax[0] == doctest::Approx(0.5));
    CHECK(r16.argmax[2] == doctest::Approx(0.5));

    const auto q64 = make_constellation(Family::qam, 64);
    const auto r64 = feasible_c0_range(q64);
    CHECK(std::abs(r64.min - 1.0363) <= 1e-4);
    // Rings 34/42 and 50/42 sit at indices 4 and 5.
    CHECK(q64.ring_amp2(4) * 42 == doctest::Approx(34));
    CHECK(q64.ring_amp2(5) * 42 == doctest::Approx(50));
    CHECK(r64.argmin[4] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r64.argmin[5] == doctest::Approx(0.5).epsilon(1e-12));

    const auto psk = feasible_c0_range(make_constellation(Family::psk, 32));
    CHECK(psk.min == doctest::Approx(1.0));
    CHECK(psk.max == doctest::Approx(1.0));
}

TEST_CASE("16-QAM exact ring solve") {
    const auto c = make_constellation(Family::qam, 16);
    // Hand solve: m0 = m2 by symmetry of the power row around 1, and
    // 2 m0 * 0.8^2 = c0 - 1, so m0 = (c0 - 1) / 1.28.
    const auto r = solve_heuristic(c, 1.2);
    CHECK(r.branch == "exact");
    CHECK(r.ring_mass[0] == doctest::Approx(0.15625).epsilon(1e-12));
    CHECK(r.ring_mass[1] == doctest::Approx(0.6875).epsilon(1e-12));
    CHECK(r.ring_mass[2] == doctest::Approx(0.15625).epsilon(1e-12));
    CHECK(r.fourth_moment == doctest::Approx(1.2).epsilon(1e-12));
    check_constraints(c, r.ring_mass);

    const auto psk8 = solve_heuristic(c, 1.0);
    CHECK(std::abs(psk8.ring_mass[0]) <= 1e-10);
    CHECK(std::abs(psk8.ring_mass[1] - 1.0) <= 1e-10);
    CHECK(std::abs(psk8.ring_mass[2]) <= 1e-10);
}

TEST_CASE("64-QAM at the lower endpoint picks the two rings around unit power") {
    const auto c = make_constellation(Family::qam, 64);
    const auto r = solve_heuristic(c, 1.0363);
    check_constraints(c, r.ring_mass);
    CHECK(r.fourth_moment == doctest::Approx(1.0363).epsilon(1e-8));
    const auto ref = oracle::vertex_c0_range(amp2_of(c));
    for (std::size_t w = 0; w < c.ring_count(); ++w) CHECK(std::abs(r.ring_mass[w] - ref.argmin[w]) < 2e-3);
}

TEST_CASE("clamping outside the range") {
    const auto c = make_constellation(Family::qam, 16);
    const auto hi = solve_heuristic(c, 2.0);
    CHECK(hi.clamped);
    CHECK(hi.fourth_moment == doctest::Approx(1.64).epsilon(1e-12));
    const auto lo = solve_heuristic(c, 0.5);
    CHECK(lo.clamped);
    CHECK(lo.fourth_moment == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(solve_heuristic(c, 1.3).clamped);
}

TEST_CASE("property: residuals and objective across the range") {
    for (int order : {16, 64, 256}) {
        const auto c = make_constellation(Family::qam, order);
        const auto range = feasible_c0_range(c);
        for (int i = 0; i <= 20; ++i) {
            const double c0 = range.min + (range.max - range.min) * i / 20.0;
            const auto r = solve_heuristic(c, c0);
            check_constraints(c, r.ring_mass);
            CHECK(std::abs(r.fourth_moment - c0) <= 1e-8);
            CHECK(validate(c, r.distribution).pass);
        }
    }
}

TEST_CASE("property: projected gradient is insensitive to the start") {
    const auto c = make_constellation(Family::qam, 64);
    const auto vertices = oracle::ring_polytope_vertices(amp2_of(c));
    std::mt19937_64 gen(21);
    std::exponential_distribution<double> e(1.0);
    for (double c0 : {1.1, 1.25, 1.38}) {
        for (int t = 0; t < 10; ++t) {
            std::vector<double> weights(vertices.size());
            double s = 0.0;
            for (auto& w : weights) s += (w = e(gen));
            std::vector<double> start(c.ring_count(), 0.0);
            for (std::size_t v = 0; v < vertices.size(); ++v)
                for (std::size_t w = 0; w < start.size(); ++w) start[w] += weights[v] / s * vertices[v][w];
            const auto m = minimize_moment_gap(c, c0, start);
            check_constraints(c, m);
            CHECK(std::abs(fourth(c, m) - c0) <= 1e-8);
        }
    }
}

TEST_CASE("projection onto the ring polytope") {
    const std::vector<double> a{0.2, 1.0, 1.8};
    const auto p = project_ring_polytope({0.5, 0.5, 0.5}, a);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(dot(p, a) == doctest::Approx(1.0).epsilon(1e-14));
    // Brute force over a fine parametrization of the feasible segment.
    double best = 1e9, best_t = 0;
    for (int i = 0; i <= 100000; ++i) {
        const double t = 0.5 * i / 100000.0;  // m0 = m2 = t, m1 = 1 - 2t
        const double d = std::pow(t - 0.5, 2) * 2 + std::pow(1 - 2 * t - 0.5, 2);
        if (d < best) {
            best = d;
            best_t = t;
        }
    }
    CHECK(p[0] == doctest::Approx(best_t).epsilon(1e-4));
}

}  // TEST_SUITE
