#pragma once

#include <complex>
#include <cstdint>

#include "pcs/constellation.hpp"
#include "pcs/ofdm_af.hpp"

namespace pcs {

struct ChannelSpec {
    double sigma2 = 0.01;  // total variance of circular complex AWGN
};

struct MIEstimate {
    double mi_bits = 0.0;
    double std_error = 0.0;  // bits
    int n_mc = 0;
    double sigma2 = 0.0;
};

inline constexpr int kMinMiDraws = 1000;
inline constexpr int kDefaultMiDraws = 100000;

/// log sum_x p(x) exp(-|y - x|^2 / sigma2) / (pi sigma2), max-shifted.
/// Throws std::invalid_argument when every probability is zero.
double gm_log_pdf(cplx y, const Constellation& c, const Distribution& d, const ChannelSpec& spec);

/// Monte-Carlo mutual information of the discrete input over AWGN. Draws are
/// grouped in fixed blocks seeded from (seed, block), so the estimate does
/// not depend on the worker count. Negative estimates are reported as 0.
MIEstimate mutual_information(const Constellation& c, const Distribution& d, const ChannelSpec& spec,
                              int n_mc, std::uint64_t seed);

struct AirEstimate {
    double total_bits = 0.0;          // bits per OFDM symbol
    double per_subcarrier_bits = 0.0; // bits/s/Hz
    double std_error = 0.0;           // of the total
};

/// L times the per-subcarrier mutual information.
AirEstimate air_total(const Constellation& c, const Distribution& d, const ChannelSpec& spec,
                      const OFDMConfig& cfg, int n_mc, std::uint64_t seed);

/// sigma2 = 10^(-snr_db / 10) for unit symbol power.
double sigma2_from_snr_db(double snr_db);

}  // namespace pcs
