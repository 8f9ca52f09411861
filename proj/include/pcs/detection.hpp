#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pcs/constellation.hpp"
#include "pcs/ofdm_af.hpp"

namespace pcs {

struct CfarWindow {
    int ref_cells = 16;   // per side
    int guard_cells = 2;  // per side
};

/// Weak target next to a strong self-interference return. Powers are per
/// range cell after matched filtering, relative to unit noise power.
struct DetectionScenario {
    Constellation constellation;
    Distribution distribution;
    OFDMConfig ofdm;
    int target_cell = 8;
    double target_snr_db = 10.0;
    int si_cell = 0;
    double si_to_noise_db = 10.0;  // -inf disables the interferer
    double pfa = 1e-4;
    int n_mc = 5000;
    CfarWindow window;
};

/// Throws std::invalid_argument on an inconsistent scenario.
void validate(const DetectionScenario& sc);

struct RangeProfile {
    std::vector<double> power;  // |z_k|^2 for k = 0 .. L-1
    std::uint64_t seed = 0;
};

/// One trial: a random OFDM symbol, random echo phases and unit-power
/// complex noise in every cell. The echo of a unit return at cell k0 seen in
/// cell k is Lambda((k - k0) T_p / L, 0) / (L T_p).
RangeProfile simulate_profile(const DetectionScenario& sc, std::uint64_t seed);

/// `count` profiles; profile t equals simulate_profile(sc, derive_seed(seed, t)).
std::vector<RangeProfile> simulate_profiles(const DetectionScenario& sc, int count, std::uint64_t seed);

/// Reference statistic of the smallest-of rule at `cell`: the smaller of the
/// leading and lagging window means, using only the sides that fit inside
/// the profile. Empty if neither side fits.
std::optional<double> so_cfar_statistic(std::span<const double> profile, int cell, const CfarWindow& window);

/// Per-cell decisions profile[k] > alpha * statistic(k).
/// Throws std::invalid_argument if the two-sided window exceeds the profile.
std::vector<bool> so_cfar_detect(std::span<const double> profile, double alpha, const CfarWindow& window);

/// Threshold factor reaching the scenario's false-alarm probability at its
/// target cell, from n_cal noise-only tests with that cell's window layout.
/// Requires n_cal >= 10 / pfa.
double calibrate_so_cfar(const DetectionScenario& sc, long n_cal, std::uint64_t seed);

/// Default number of calibration tests: 100 / pfa.
long default_calibration_count(double pfa);

struct PdPoint {
    double snr_db = 0.0;
    double pd = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    long detections = 0;
    long trials = 0;
};

/// 95% Wilson score interval for k successes in n trials.
std::pair<double, double> wilson_interval(long k, long n);

/// Detection probability of the target cell across the SNR grid. Every SNR
/// point reuses the same per-trial symbols, phases and noise. The threshold
/// is calibrated from (seed, "cfar") unless `alpha` is given.
std::vector<PdPoint> pd_curve(const DetectionScenario& sc, std::span<const double> snr_db,
                              std::uint64_t seed, std::optional<double> alpha = std::nullopt);

}  // namespace pcs
