#include "pcs/ofdm_af.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "pcs/parallel.hpp"
#include "pcs/rng.hpp"

namespace pcs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_finite(double tau, double nu) {
    if (!std::isfinite(tau) || !std::isfinite(nu))
        throw std::invalid_argument("ambiguity function evaluated at a non-finite (tau, nu)");
}

}  // namespace

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

void validate(const OFDMConfig& cfg) {
    if (cfg.L < 1) throw std::invalid_argument("OFDM subcarrier count must be >= 1");
    if (cfg.N < 1) throw std::invalid_argument("OFDM symbol count must be >= 1");
    if (!(cfg.t_p > 0.0) || !(cfg.delta_f > 0.0))
        throw std::invalid_argument("OFDM delta_f and t_p must be positive");
    if (std::abs(cfg.delta_f * cfg.t_p - 1.0) > kConstructionTol)
        throw std::invalid_argument("OFDM config requires delta_f * t_p = 1");
}

std::string distribution_id(const Distribution& d) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (double p : d.per_point) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof p);
        std::memcpy(&bits, &p, sizeof bits);
        h = mix64(h ^ bits);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SymbolMatrix sample_symbols(const Constellation& c, const Distribution& d, const OFDMConfig& cfg,
                            std::uint64_t seed) {
    require_probabilities(c, d);
    validate(cfg);
    std::vector<double> cdf(c.size());
    double acc = 0.0;
    for (std::size_t q = 0; q < c.size(); ++q) cdf[q] = (acc += d.per_point[q]);

    SymbolMatrix m;
    m.N = cfg.N;
    m.L = cfg.L;
    m.seed = seed;
    m.constellation_id = c.id();
    m.distribution_id = distribution_id(d);
    const std::size_t count = static_cast<std::size_t>(cfg.N) * cfg.L;
    m.data.resize(count);
    m.index.resize(count);
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const double u = rng.uniform() * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t q = static_cast<std::size_t>(it - cdf.begin());
        if (q >= c.size()) q = c.size() - 1;
        // Never land on a zero-probability point through a flat cdf segment.
        while (d.per_point[q] <= 0.0 && q > 0) --q;
        m.index[i] = static_cast<int>(q);
        m.data[i] = c.symbol(q);
    }
    return m;
}

std::vector<SymbolMatrix> sample_trials(const Constellation& c, const Distribution& d,
                                        const OFDMConfig& cfg, int n_mc, std::uint64_t seed) {
    if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");
    std::vector<SymbolMatrix> trials(n_mc);
    parallel_for(static_cast<std::size_t>(n_mc), [&](std::size_t m) {
        trials[m] = sample_symbols(c, d, cfg, derive_seed(seed, m));
    });
    return trials;
}

AfKernel::AfKernel(const OFDMConfig& cfg, int N, double tau, double nu) : L_(cfg.L), N_(N) {
    require_finite(tau, nu);
    if (N < 1) throw std::invalid_argument("symbol count must be >= 1");
    if (std::abs(tau) >= N * cfg.t_p) {
        zero_ = true;
        return;
    }
    by_lag_.resize(2 * N - 1);
    for (int lag = -(N - 1); lag <= N - 1; ++lag) {
        const double s = tau + lag * cfg.t_p;
        const double t_min = std::max(0.0, s);
        const double t_max = std::min(cfg.t_p, cfg.t_p + s);
        const double t_diff = t_max - t_min;
        if (!(t_diff > 0.0)) continue;
        const double t_avg = 0.5 * (t_min + t_max);
        Pair& p = by_lag_[lag + N - 1];
        p.active = true;
        p.k.resize(2 * L_ - 1);
        for (int d = -(L_ - 1); d <= L_ - 1; ++d) {
            const double f = d * cfg.delta_f - nu;
            p.k[d + L_ - 1] = t_diff * sinc(f * t_diff) * std::polar(1.0, kTwoPi * f * t_avg);
        }
        p.w.resize(L_);
        for (int l = 0; l < L_; ++l) p.w[l] = std::polar(1.0, kTwoPi * l * cfg.delta_f * s);
    }
    doppler_.resize(N);
    for (int n = 0; n < N; ++n) doppler_[n] = std::polar(1.0, -kTwoPi * n * nu * cfg.t_p);
}

// sum_d k_d sum_l2 a[l2 + d] conj(b[l2]) w[l2]
cplx AfKernel::apply(const Pair& p, std::span<const cplx> a, std::span<const cplx> b) const {
    thread_local std::vector<cplx> scratch;
    scratch.resize(L_);
    for (int l = 0; l < L_; ++l) scratch[l] = std::conj(b[l]) * p.w[l];
    cplx total = 0.0;
    for (int d = -(L_ - 1); d <= L_ - 1; ++d) {
        const int lo = std::max(0, -d);
        const int hi = std::min(L_, L_ - d);
        double re = 0.0, im = 0.0;
        for (int l2 = lo; l2 < hi; ++l2) {
            const cplx x = a[l2 + d];
            const cplx y = scratch[l2];
            re += x.real() * y.real() - x.imag() * y.imag();
            im += x.real() * y.imag() + x.imag() * y.real();
        }
        total += p.k[d + L_ - 1] * cplx(re, im);
    }
    return total;
}

cplx AfKernel::evaluate(const SymbolMatrix& m) const {
    if (m.N != N_ || m.L != L_) throw std::invalid_argument("symbol matrix shape differs from the kernel");
    if (zero_) return 0.0;
    cplx total = 0.0;
    for (int n1 = 0; n1 < N_; ++n1) {
        cplx inner = 0.0;
        for (int n2 = 0; n2 < N_; ++n2) {
            const Pair& p = by_lag_[n2 - n1 + N_ - 1];
            if (p.active) inner += apply(p, m.row(n1), m.row(n2));
        }
        total += doppler_[n1] * inner;
    }
    return total;
}

cplx AfKernel::evaluate_row(std::span<const cplx> row) const {
    if (N_ != 1) throw std::invalid_argument("evaluate_row needs a single-symbol kernel");
    if (static_cast<int>(row.size()) != L_) throw std::invalid_argument("symbol row length differs from L");
    if (zero_ || !by_lag_[0].active) return 0.0;
    return apply(by_lag_[0], row, row);
}

cplx af_single(std::span<const cplx> row, const OFDMConfig& cfg, double tau, double nu) {
    return AfKernel(cfg, 1, tau, nu).evaluate_row(row);
}

cplx af_sequence(const SymbolMatrix& m, const OFDMConfig& cfg, double tau, double nu) {
    if (m.L != cfg.L) throw std::invalid_argument("symbol matrix width differs from L");
    return AfKernel(cfg, m.N, tau, nu).evaluate(m);
}

std::vector<cplx> af_trials(const std::vector<SymbolMatrix>& trials, const OFDMConfig& cfg,
                            double tau, double nu) {
    std::vector<cplx> out(trials.size(), 0.0);
    if (trials.empty()) return out;
    const AfKernel kernel(cfg, trials.front().N, tau, nu);
    parallel_for(trials.size(), [&](std::size_t m) { out[m] = kernel.evaluate(trials[m]); });
    return out;
}

AFGrid average_af(const Constellation& c, const Distribution& d, const OFDMConfig& cfg,
                  std::span<const double> tau_axis, std::span<const double> nu_axis, int n_mc,
                  std::uint64_t seed, bool normalize) {
    if (tau_axis.empty() || nu_axis.empty()) throw std::invalid_argument("empty AF grid");
    for (std::size_t i = 1; i < tau_axis.size(); ++i)
        if (!(tau_axis[i] > tau_axis[i - 1])) throw std::invalid_argument("tau axis must be strictly increasing");
    for (std::size_t j = 1; j < nu_axis.size(); ++j)
        if (!(nu_axis[j] > nu_axis[j - 1])) throw std::invalid_argument("nu axis must be strictly increasing");
    validate(cfg);
    const auto trials = sample_trials(c, d, cfg, n_mc, seed);

    AFGrid grid;
    grid.tau_axis.assign(tau_axis.begin(), tau_axis.end());
    grid.nu_axis.assign(nu_axis.begin(), nu_axis.end());
    grid.units = Units::db;
    const std::size_t cells = tau_axis.size() * nu_axis.size();
    std::vector<double> power(cells + 1, 0.0);

    // The extra cell is the origin used for normalization.
    parallel_for(cells + 1, [&](std::size_t idx) {
        double tau = 0.0, nu = 0.0;
        if (idx < cells) {
            tau = tau_axis[idx / nu_axis.size()] * cfg.t_p;
            nu = nu_axis[idx % nu_axis.size()] * cfg.delta_f;
        }
        const AfKernel kernel(cfg, cfg.N, tau, nu);
        double acc = 0.0;
        for (const auto& m : trials) acc += std::norm(kernel.evaluate(m));
        power[idx] = acc / n_mc;
    });

    const double ref = normalize ? power[cells] : 1.0;
    grid.values.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) grid.values[i] = 10.0 * std::log10(power[i] / ref);
    return grid;
}

AFMoments analytic_moments(const Constellation& c, const Distribution& d, const OFDMConfig& cfg,
                           double tau, double nu, SincConvention conv) {
    require_finite(tau, nu);
    validate(cfg);
    const double m4 = moment(c, d, 4);
    const int L = cfg.L;
    const double arg_scale = conv == SincConvention::two_pi ? kTwoPi : 1.0;

    // Sum over subcarrier offsets d of (L - |d|) sinc^2, optionally without d = 0.
    auto cross_sum = [&](double t_diff, bool include_zero) {
        double acc = 0.0;
        for (int dd = -(L - 1); dd <= L - 1; ++dd) {
            if (dd == 0 && !include_zero) continue;
            const double sc = sinc(arg_scale * (dd * cfg.delta_f - nu) * t_diff);
            acc += (L - std::abs(dd)) * sc * sc;
        }
        return t_diff * t_diff * acc;
    };

    AFMoments out;
    if (std::abs(tau) < cfg.t_p) {
        const double t_min = std::max(0.0, tau);
        const double t_max = std::min(cfg.t_p, cfg.t_p + tau);
        const double t_diff = t_max - t_min;
        const double t_avg = 0.5 * (t_min + t_max);
        const double s0 = sinc(-nu * t_diff);
        cplx phase_sum = 0.0;
        for (int l = 0; l < L; ++l) phase_sum += std::polar(1.0, kTwoPi * l * cfg.delta_f * tau);
        out.mean_lambda_s = t_diff * s0 * std::polar(1.0, -kTwoPi * nu * t_avg) * phase_sum;
        out.var_s = t_diff * t_diff * s0 * s0 * L * (m4 - 1.0);
        out.var_c = cross_sum(t_diff, false);
    }
    out.var_s_seq = cfg.N * out.var_s;
    out.var_c_seq = cfg.N * out.var_c;
    // Pairs of distinct symbols that still overlap at this delay.
    for (int lag = -(cfg.N - 1); lag <= cfg.N - 1; ++lag) {
        if (lag == 0) continue;
        const double s = tau + lag * cfg.t_p;
        if (std::abs(s) >= cfg.t_p) continue;
        const int pairs = cfg.N - std::abs(lag);
        const double t_diff = std::min(cfg.t_p, cfg.t_p + s) - std::max(0.0, s);
        out.var_c_seq += pairs * cross_sum(t_diff, true);
    }
    return out;
}

}  // namespace pcs
