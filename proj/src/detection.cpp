#include "pcs/detection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pcs/parallel.hpp"
#include "pcs/rng.hpp"

namespace pcs {

namespace {

struct Sides {
    bool lead = false;
    bool lag = false;
};

Sides window_sides(int cell, int length, const CfarWindow& w) {
    return {cell - w.guard_cells - w.ref_cells >= 0, cell + w.guard_cells + w.ref_cells <= length - 1};
}

double db_to_amplitude(double db) { return std::sqrt(std::pow(10.0, db / 10.0)); }

// Unit-amplitude echo responses of one trial in every cell, for returns at
// the interferer and target cells.
struct TrialEchoes {
    std::vector<cplx> si, target, noise;
    double si_phase = 0.0, target_phase = 0.0;
};

class EchoModel {
public:
    explicit EchoModel(const DetectionScenario& sc) : sc_(sc) {
        const int L = sc.ofdm.L;
        OFDMConfig one = sc.ofdm;
        one.N = 1;
        // Only the cell offsets that the two returns can produce.
        lag_min_ = -std::max(sc.si_cell, sc.target_cell);
        lag_max_ = L - 1 - std::min(sc.si_cell, sc.target_cell);
        for (int lag = lag_min_; lag <= lag_max_; ++lag)
            kernels_.emplace_back(one, 1, lag * sc.ofdm.t_p / L, 0.0);
        scale_ = 1.0 / (L * sc.ofdm.t_p);
    }

    TrialEchoes draw(std::uint64_t seed) const {
        const int L = sc_.ofdm.L;
        OFDMConfig one = sc_.ofdm;
        one.N = 1;
        const SymbolMatrix sym = sample_symbols(sc_.constellation, sc_.distribution, one, derive_seed(seed, "symbols"));
        Rng rng(derive_seed(seed, "channel"));
        TrialEchoes e;
        e.si_phase = rng.phase();
        e.target_phase = rng.phase();
        std::vector<cplx> lam(kernels_.size());
        for (std::size_t i = 0; i < kernels_.size(); ++i) lam[i] = kernels_[i].evaluate_row(sym.row(0)) * scale_;
        e.si.resize(L);
        e.target.resize(L);
        e.noise.resize(L);
        for (int k = 0; k < L; ++k) {
            e.si[k] = lam[k - sc_.si_cell - lag_min_];
            e.target[k] = lam[k - sc_.target_cell - lag_min_];
            e.noise[k] = rng.complex_normal(1.0);
        }
        return e;
    }

private:
    const DetectionScenario& sc_;
    std::vector<AfKernel> kernels_;
    int lag_min_ = 0, lag_max_ = 0;
    double scale_ = 1.0;
};

void combine(const TrialEchoes& e, double si_amp, double target_amp, std::vector<double>& power) {
    const cplx si = std::polar(si_amp, e.si_phase);
    const cplx tg = std::polar(target_amp, e.target_phase);
    power.resize(e.noise.size());
    for (std::size_t k = 0; k < e.noise.size(); ++k) power[k] = std::norm(si * e.si[k] + tg * e.target[k] + e.noise[k]);
}

}  // namespace

void validate(const DetectionScenario& sc) {
    validate(sc.ofdm);
    require_valid(sc.constellation, sc.distribution);
    const int L = sc.ofdm.L;
    if (sc.target_cell < 0 || sc.target_cell >= L) throw std::invalid_argument("target cell outside the profile");
    if (sc.si_cell < 0 || sc.si_cell >= L) throw std::invalid_argument("interferer cell outside the profile");
    if (sc.target_cell == sc.si_cell) throw std::invalid_argument("target and interferer share a range cell");
    if (!(sc.pfa > 0.0 && sc.pfa < 1.0)) throw std::invalid_argument("false-alarm probability must lie in (0, 1)");
    if (sc.n_mc < 1) throw std::invalid_argument("detection n_mc must be positive");
    if (sc.window.ref_cells < 1 || sc.window.guard_cells < 0) throw std::invalid_argument("invalid CFAR window");
    if (2 * (sc.window.ref_cells + sc.window.guard_cells) + 1 > L)
        throw std::invalid_argument("CFAR window does not fit the range profile");
}

RangeProfile simulate_profile(const DetectionScenario& sc, std::uint64_t seed) {
    validate(sc);
    const EchoModel model(sc);
    RangeProfile p;
    p.seed = seed;
    combine(model.draw(seed), db_to_amplitude(sc.si_to_noise_db), db_to_amplitude(sc.target_snr_db), p.power);
    return p;
}

std::vector<RangeProfile> simulate_profiles(const DetectionScenario& sc, int count, std::uint64_t seed) {
    validate(sc);
    const EchoModel model(sc);
    std::vector<RangeProfile> out(count);
    const double si_amp = db_to_amplitude(sc.si_to_noise_db), tg_amp = db_to_amplitude(sc.target_snr_db);
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t t) {
        out[t].seed = derive_seed(seed, t);
        combine(model.draw(out[t].seed), si_amp, tg_amp, out[t].power);
    });
    return out;
}

std::optional<double> so_cfar_statistic(std::span<const double> profile, int cell, const CfarWindow& w) {
    const int n = static_cast<int>(profile.size());
    const Sides sides = window_sides(cell, n, w);
    auto mean = [&](int first) {
        double acc = 0.0;
        for (int i = 0; i < w.ref_cells; ++i) acc += profile[first + i];
        return acc / w.ref_cells;
    };
    std::optional<double> stat;
    if (sides.lead) stat = mean(cell - w.guard_cells - w.ref_cells);
    if (sides.lag) {
        const double m = mean(cell + w.guard_cells + 1);
        stat = stat ? std::min(*stat, m) : m;
    }
    return stat;
}

std::vector<bool> so_cfar_detect(std::span<const double> profile, double alpha, const CfarWindow& w) {
    const int n = static_cast<int>(profile.size());
    if (w.ref_cells < 1 || w.guard_cells < 0) throw std::invalid_argument("invalid CFAR window");
    if (2 * (w.ref_cells + w.guard_cells) + 1 > n)
        throw std::invalid_argument("CFAR window of " + std::to_string(2 * (w.ref_cells + w.guard_cells) + 1) +
                                    " cells exceeds the profile length " + std::to_string(n));
    std::vector<bool> out(n, false);
    for (int k = 0; k < n; ++k) {
        const auto stat = so_cfar_statistic(profile, k, w);
        out[k] = stat && profile[k] > alpha * *stat;
    }
    return out;
}

long default_calibration_count(double pfa) { return static_cast<long>(std::ceil(100.0 / pfa)); }

double calibrate_so_cfar(const DetectionScenario& sc, long n_cal, std::uint64_t seed) {
    validate(sc);
    if (static_cast<double>(n_cal) < 10.0 / sc.pfa)
        throw std::invalid_argument("calibration needs at least 10 / pfa = " +
                                    std::to_string(static_cast<long>(std::ceil(10.0 / sc.pfa))) + " tests");
    const Sides sides = window_sides(sc.target_cell, sc.ofdm.L, sc.window);
    const int R = sc.window.ref_cells;

    constexpr long kBlock = 1 << 14;
    const long blocks = (n_cal + kBlock - 1) / kBlock;
    std::vector<double> ratio(n_cal);
    parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        const long begin = static_cast<long>(b) * kBlock;
        const long end = std::min(n_cal, begin + kBlock);
        for (long i = begin; i < end; ++i) {
            const double cut = rng.exponential();
            double stat = INFINITY;
            if (sides.lead) {
                double acc = 0.0;
                for (int r = 0; r < R; ++r) acc += rng.exponential();
                stat = std::min(stat, acc / R);
            }
            if (sides.lag) {
                double acc = 0.0;
                for (int r = 0; r < R; ++r) acc += rng.exponential();
                stat = std::min(stat, acc / R);
            }
            ratio[i] = cut / stat;
        }
    });
    // alpha is the (1 - pfa) empirical quantile of cell / statistic.
    const long rank = std::clamp<long>(static_cast<long>(std::ceil((1.0 - sc.pfa) * n_cal)) - 1, 0, n_cal - 1);
    std::nth_element(ratio.begin(), ratio.begin() + rank, ratio.end());
    return ratio[rank];
}

std::pair<double, double> wilson_interval(long k, long n) {
    if (n <= 0) return {0.0, 1.0};
    constexpr double z = 1.959963984540054;
    const double p = static_cast<double>(k) / n;
    const double z2n = z * z / n;
    const double center = (p + z2n / 2.0) / (1.0 + z2n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2n / (4.0 * n)) / (1.0 + z2n);
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::vector<PdPoint> pd_curve(const DetectionScenario& sc, std::span<const double> snr_db, std::uint64_t seed,
                              std::optional<double> alpha) {
    validate(sc);
    if (snr_db.empty()) throw std::invalid_argument("empty SNR grid");
    const double a = alpha ? *alpha : calibrate_so_cfar(sc, default_calibration_count(sc.pfa), derive_seed(seed, "cfar"));
    const EchoModel model(sc);
    const double si_amp = db_to_amplitude(sc.si_to_noise_db);
    std::vector<double> target_amp;
    for (double s : snr_db) target_amp.push_back(db_to_amplitude(s));

    const std::size_t S = snr_db.size();
    std::vector<unsigned char> hit(static_cast<std::size_t>(sc.n_mc) * S, 0);
    const std::uint64_t trial_seed = derive_seed(seed, "trials");
    parallel_for(static_cast<std::size_t>(sc.n_mc), [&](std::size_t t) {
        const TrialEchoes e = model.draw(derive_seed(trial_seed, t));
        std::vector<double> power;
        for (std::size_t j = 0; j < S; ++j) {
            combine(e, si_amp, target_amp[j], power);
            const auto stat = so_cfar_statistic(power, sc.target_cell, sc.window);
            hit[t * S + j] = stat && power[sc.target_cell] > a * *stat;
        }
    });

    std::vector<PdPoint> out(S);
    for (std::size_t j = 0; j < S; ++j) {
        long k = 0;
        for (int t = 0; t < sc.n_mc; ++t) k += hit[static_cast<std::size_t>(t) * S + j];
        const auto [lo, hi] = wilson_interval(k, sc.n_mc);
        out[j] = {snr_db[j], static_cast<double>(k) / sc.n_mc, lo, hi, k, sc.n_mc};
    }
    return out;
}

}  // namespace pcs
