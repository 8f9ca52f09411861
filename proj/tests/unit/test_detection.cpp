#include <doctest.h>

#include <cmath>
#include <random>

#include "pcs/detection.hpp"
#include "pcs/pcs_heuristic.hpp"
#include "pcs/rng.hpp"

using namespace pcs;

namespace {

DetectionScenario scenario(const Constellation& c, const Distribution& d, int n_mc = 1000) {
    DetectionScenario sc;
    sc.constellation = c;
    sc.distribution = d;
    sc.ofdm.L = 64;
    sc.n_mc = n_mc;
    return sc;
}

DetectionScenario qam64(int n_mc = 1000) {
    const auto c = make_constellation(Family::qam, 64);
    return scenario(c, uniform_distribution(c), n_mc);
}

DetectionScenario psk64(int n_mc = 1000) {
    const auto c = make_constellation(Family::psk, 64);
    return scenario(c, uniform_distribution(c), n_mc);
}

// Empirical false-alarm rate of the rule at `cell` on fresh exponential noise.
double empirical_pfa(const DetectionScenario& sc, double alpha, long tests, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> profile(sc.ofdm.L);
    long alarms = 0;
    for (long t = 0; t < tests; ++t) {
        for (auto& v : profile) v = e(gen);
        const auto stat = so_cfar_statistic(profile, sc.target_cell, sc.window);
        alarms += profile[sc.target_cell] > alpha * *stat;
    }
    return static_cast<double>(alarms) / tests;
}

}  // namespace

TEST_SUITE("detection") {

TEST_CASE("scenario validation") {
    auto sc = qam64();
    CHECK_NOTHROW(validate(sc));
    sc.target_cell = 0;
    CHECK_THROWS_AS(validate(sc), std::invalid_argument);
    sc = qam64();
    sc.pfa = 1.0;
    CHECK_THROWS_AS(validate(sc), std::invalid_argument);
    sc = qam64();
    sc.window.ref_cells = 40;
    CHECK_THROWS_AS(validate(sc), std::invalid_argument);
}

TEST_CASE("noise-only profiles sit at the noise floor") {
    auto sc = qam64();
    sc.target_snr_db = -INFINITY;
    sc.si_to_noise_db = -INFINITY;
    double sum = 0.0;
    long n = 0;
    for (const auto& p : simulate_profiles(sc, 500, 2))
        for (double v : p.power) {
            CHECK(v >= 0.0);
            sum += v;
            ++n;
        }
    CHECK(std::abs(sum / n - 1.0) <= 0.05);
}

TEST_CASE("batch profiles equal single draws") {
    const auto sc = qam64();
    const auto batch = simulate_profiles(sc, 3, 9);
    for (int t = 0; t < 3; ++t) CHECK(batch[t].power == simulate_profile(sc, derive_seed(9, t)).power);
}

TEST_CASE("a strong target dominates the profile") {
    auto sc = qam64();
    sc.target_snr_db = 40.0;
    int hits = 0;
    const int trials = 300;
    for (const auto& prof : simulate_profiles(sc, trials, 3)) {
        const auto& p = prof.power;
        const auto best = std::max_element(p.begin() + 1, p.end()) - p.begin();
        hits += best == sc.target_cell;
    }
    CHECK(hits >= 0.99 * trials);
}

TEST_CASE("QAM leaks more interference next to the interferer than PSK") {
    auto mean_near = [](DetectionScenario sc) {
        sc.target_snr_db = -INFINITY;
        double acc = 0.0;
        for (const auto& p : simulate_profiles(sc, 5000, 1))
            for (int k = 1; k <= 6; ++k) acc += p.power[k];
        return acc / (5000 * 6);
    };
    CHECK(mean_near(qam64()) > mean_near(psk64()));
}

TEST_CASE("smallest-of decisions") {
    const CfarWindow w{4, 1};
    const std::vector<double> ones(32, 1.0);
    for (bool b : so_cfar_detect(ones, 2.0, w)) CHECK_FALSE(b);

    std::vector<double> spike(32, 1.0);
    spike[15] = 1e6;
    const auto det = so_cfar_detect(spike, 10.0, w);
    CHECK(det[15]);

    // Edge cells fall back to the side that fits.
    std::vector<double> ramp(32);
    for (int k = 0; k < 32; ++k) ramp[k] = k + 1.0;
    CHECK(*so_cfar_statistic(ramp, 0, w) == doctest::Approx((3 + 4 + 5 + 6) / 4.0));
    CHECK(*so_cfar_statistic(ramp, 31, w) == doctest::Approx((27 + 28 + 29 + 30) / 4.0));
    CHECK(*so_cfar_statistic(ramp, 10, w) == doctest::Approx((6 + 7 + 8 + 9) / 4.0));

    const std::vector<double> tiny(8, 1.0);
    CHECK_THROWS_AS(so_cfar_detect(tiny, 2.0, w), std::invalid_argument);
}

TEST_CASE("threshold calibration") {
    auto sc = qam64();
    sc.pfa = 0.5;
    const double median = calibrate_so_cfar(sc, 10000, 1);
    CHECK(median > 0.5);
    CHECK(median < 2.0);

    double prev = 0.0;
    for (double pfa : {1e-2, 1e-3, 1e-4}) {
        sc.pfa = pfa;
        const double a = calibrate_so_cfar(sc, default_calibration_count(pfa), 2);
        CHECK(a > prev);
        prev = a;
    }
    sc.pfa = 1e-4;
    CHECK_THROWS_AS(calibrate_so_cfar(sc, 99999, 1), std::invalid_argument);
    CHECK(calibrate_so_cfar(sc, 100000, 5) == calibrate_so_cfar(sc, 100000, 5));
}

TEST_CASE("property: false-alarm rate holds on fresh noise") {
    for (int cell : {8, 32}) {
        auto sc = qam64();
        sc.target_cell = cell;
        sc.pfa = 1e-4;
        const double alpha = calibrate_so_cfar(sc, default_calibration_count(sc.pfa), 3);
        const double pfa = empirical_pfa(sc, alpha, 1000000, 77 + cell);
        CHECK(pfa >= 5e-5);
        CHECK(pfa <= 2e-4);
    }
    // Single-sided closed form (1 + a/R)^-R as a cross-check of the cell-8 layout.
    auto sc = qam64();
    const double alpha = calibrate_so_cfar(sc, default_calibration_count(sc.pfa), 3);
    const double closed = std::pow(1.0 + alpha / sc.window.ref_cells, -sc.window.ref_cells);
    CHECK(closed == doctest::Approx(1e-4).epsilon(0.2));
}

TEST_CASE("Wilson interval") {
    const auto [lo, hi] = wilson_interval(50, 100);
    CHECK(lo == doctest::Approx(0.4038).epsilon(1e-3));
    CHECK(hi == doctest::Approx(0.5962).epsilon(1e-3));
    const auto [z0, z1] = wilson_interval(0, 20);
    CHECK(z0 == 0.0);
    CHECK(z1 == doctest::Approx(0.1611).epsilon(1e-3));
}

TEST_CASE("detection curve behaviour") {
    auto sc = qam64(1500);
    const std::vector<double> snr{6, 9, 12, 15, 18};
    const auto curve = pd_curve(sc, snr, 4);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].pd >= curve[i - 1].pd);
    for (const auto& p : curve) {
        CHECK(p.ci_lo <= p.pd);
        CHECK(p.pd <= p.ci_hi);
        CHECK(p.trials == 1500);
    }
    setenv("PCS_THREADS", "2", 1);
    const auto again = pd_curve(sc, snr, 4);
    unsetenv("PCS_THREADS");
    for (std::size_t i = 0; i < curve.size(); ++i) CHECK(curve[i].detections == again[i].detections);
}

TEST_CASE("interferer is kept out of the target threshold") {
    auto on = qam64(3000);
    auto off = on;
    off.si_to_noise_db = -INFINITY;
    const std::vector<double> snr{15.0};
    const double alpha = calibrate_so_cfar(on, default_calibration_count(on.pfa), 6);
    const double pd_on = pd_curve(on, snr, 8, alpha)[0].pd;
    const double pd_off = pd_curve(off, snr, 8, alpha)[0].pd;
    CHECK(std::abs(pd_on - pd_off) <= 0.05);
}

TEST_CASE("property: detection does not improve with a larger fourth moment") {
    const auto c = make_constellation(Family::qam, 64);
    const auto range = feasible_c0_range(c);
    const std::vector<double> snr{12.0};
    PdPoint prev{};
    bool first = true;
    for (double c0 : {range.min, 1.2, 1.3805}) {
        auto sc = scenario(c, solve_heuristic(c, c0).distribution, 3000);
        const auto p = pd_curve(sc, snr, 10)[0];
        if (!first) CHECK(p.ci_lo <= prev.ci_hi);
        prev = p;
        first = false;
    }
}

}  // TEST_SUITE
