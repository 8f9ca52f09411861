#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcs/constellation.hpp"

namespace pcs {

using cplx = std::complex<double>;

struct OFDMConfig {
    int L = 64;             // subcarriers
    double delta_f = 1.0;   // subcarrier spacing
    double t_p = 1.0;       // symbol duration
    int N = 1;              // symbols per train
};

/// Throws std::invalid_argument unless L >= 1, N >= 1 and delta_f * t_p = 1.
void validate(const OFDMConfig& cfg);

/// N x L symbols, row-major (row n holds the L subcarriers of symbol n).
struct SymbolMatrix {
    int N = 0;
    int L = 0;
    std::vector<cplx> data;
    std::vector<int> index;  // constellation point of every entry
    std::uint64_t seed = 0;
    std::string constellation_id;
    std::string distribution_id;

    std::span<const cplx> row(int n) const {
        return std::span<const cplx>(data).subspan(static_cast<std::size_t>(n) * L, L);
    }
};

/// Short fingerprint of a distribution, used for provenance only.
std::string distribution_id(const Distribution& d);

/// Draws the N x L entries i.i.d. from d using one stream seeded by `seed`.
SymbolMatrix sample_symbols(const Constellation& c, const Distribution& d, const OFDMConfig& cfg,
                            std::uint64_t seed);

/// n_mc independent matrices; trial m uses derive_seed(seed, m).
std::vector<SymbolMatrix> sample_trials(const Constellation& c, const Distribution& d,
                                        const OFDMConfig& cfg, int n_mc, std::uint64_t seed);

/// Precomputed delay/Doppler factors for repeated evaluation of the
/// ambiguity function at one (tau, nu) over many symbol draws.
class AfKernel {
public:
    AfKernel(const OFDMConfig& cfg, int N, double tau, double nu);

    /// Lambda of an N-symbol train (N as given to the constructor).
    cplx evaluate(const SymbolMatrix& m) const;
    /// Lambda of a single symbol; requires N = 1.
    cplx evaluate_row(std::span<const cplx> row) const;

private:
    struct Pair {
        bool active = false;
        std::vector<cplx> k;  // per subcarrier offset d, index d + L - 1
        std::vector<cplx> w;  // per subcarrier l
    };
    cplx apply(const Pair& p, std::span<const cplx> a, std::span<const cplx> b) const;

    int L_ = 0;
    int N_ = 1;
    bool zero_ = false;
    std::vector<Pair> by_lag_;       // index (n2 - n1) + N - 1
    std::vector<cplx> doppler_;      // exp(-j 2 pi n nu T_p)
};

/// Ambiguity function of one OFDM symbol with rectangular window:
/// integral of s(t) s*(t - tau) exp(-j 2 pi nu t) dt. Zero for |tau| >= T_p.
cplx af_single(std::span<const cplx> row, const OFDMConfig& cfg, double tau, double nu);

/// Ambiguity function of the N-symbol train. Zero for |tau| >= N T_p.
cplx af_sequence(const SymbolMatrix& m, const OFDMConfig& cfg, double tau, double nu);

/// Lambda at one (tau, nu) for every trial, in trial order.
std::vector<cplx> af_trials(const std::vector<SymbolMatrix>& trials, const OFDMConfig& cfg,
                            double tau, double nu);

enum class Units { linear, db };

struct AFGrid {
    std::vector<double> tau_axis;  // delay / T_p
    std::vector<double> nu_axis;   // Doppler / delta_f
    std::vector<double> values;    // row-major: values[i * nu_axis.size() + j] at (tau_i, nu_j)
    Units units = Units::db;

    double at(std::size_t i, std::size_t j) const { return values[i * nu_axis.size() + j]; }
};

/// 10 log10 of the mean |Lambda|^2 over n_mc independent draws. With
/// `normalize` the grid is divided by the mean |Lambda(0,0)|^2 of the same
/// draws, so the origin sits at 0 dB.
AFGrid average_af(const Constellation& c, const Distribution& d, const OFDMConfig& cfg,
                  std::span<const double> tau_axis, std::span<const double> nu_axis, int n_mc,
                  std::uint64_t seed, bool normalize = true);

/// Argument convention for the sinc factors of the cross-term variance.
/// `integral` uses sinc([d delta_f - nu] T); `two_pi` multiplies the argument
/// by 2 pi, the alternative reading of the variance expression.
enum class SincConvention { integral, two_pi };

struct AFMoments {
    cplx mean_lambda_s;
    double var_s = 0.0;
    double var_c = 0.0;
    double var_s_seq = 0.0;
    double var_c_seq = 0.0;

    /// E|Lambda|^2 of a single symbol.
    double mean_power() const { return std::norm(mean_lambda_s) + var_s + var_c; }
};

/// Closed-form mean of the self term and the self/cross variances for a
/// single symbol and for the N-symbol train. Delays and Dopplers are in
/// absolute units (tau in units of time, nu in units of frequency).
AFMoments analytic_moments(const Constellation& c, const Distribution& d, const OFDMConfig& cfg,
                           double tau, double nu,
                           SincConvention conv = SincConvention::integral);

/// sin(pi x) / (pi x) with sinc(0) = 1.
double sinc(double x);

}  // namespace pcs
