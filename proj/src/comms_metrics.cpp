#include "pcs/comms_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "pcs/parallel.hpp"
#include "pcs/rng.hpp"

namespace pcs {

namespace {

constexpr int kBlock = 4096;

void check_spec(const ChannelSpec& spec) {
    if (!(spec.sigma2 > 0.0) || !std::isfinite(spec.sigma2))
        throw std::invalid_argument("noise power sigma2 must be positive and finite");
}

}  // namespace

double sigma2_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

double gm_log_pdf(cplx y, const Constellation& c, const Distribution& d, const ChannelSpec& spec) {
    check_spec(spec);
    if (d.per_point.size() != c.size())
        throw std::invalid_argument("distribution length differs from constellation order");
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < c.size(); ++q)
        if (d.per_point[q] > 0.0)
            peak = std::max(peak, std::log(d.per_point[q]) - std::norm(y - c.symbol(q)) / spec.sigma2);
    if (peak == -std::numeric_limits<double>::infinity())
        throw std::invalid_argument("distribution assigns zero probability to every point");
    double acc = 0.0;
    for (std::size_t q = 0; q < c.size(); ++q)
        if (d.per_point[q] > 0.0)
            acc += std::exp(std::log(d.per_point[q]) - std::norm(y - c.symbol(q)) / spec.sigma2 - peak);
    return peak + std::log(acc) - std::log(std::numbers::pi * spec.sigma2);
}

MIEstimate mutual_information(const Constellation& c, const Distribution& d, const ChannelSpec& spec,
                              int n_mc, std::uint64_t seed) {
    check_spec(spec);
    if (n_mc < kMinMiDraws)
        throw std::invalid_argument("mutual_information needs n_mc >= " + std::to_string(kMinMiDraws));
    require_probabilities(c, d);

    std::vector<double> cdf(c.size());
    double acc = 0.0;
    for (std::size_t q = 0; q < c.size(); ++q) cdf[q] = (acc += d.per_point[q]);

    const std::size_t blocks = (static_cast<std::size_t>(n_mc) + kBlock - 1) / kBlock;
    std::vector<double> sum(blocks, 0.0), sum_sq(blocks, 0.0);
    parallel_for(blocks, [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        const std::size_t begin = b * kBlock;
        const std::size_t end = std::min<std::size_t>(n_mc, begin + kBlock);
        double s = 0.0, s2 = 0.0;
        for (std::size_t m = begin; m < end; ++m) {
            const double u = rng.uniform() * acc;
            std::size_t q = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            if (q >= c.size()) q = c.size() - 1;
            while (d.per_point[q] <= 0.0 && q > 0) --q;
            const cplx y = c.symbol(q) + rng.complex_normal(spec.sigma2);
            const double v = -gm_log_pdf(y, c, d, spec);
            s += v;
            s2 += v * v;
        }
        sum[b] = s;
        sum_sq[b] = s2;
    });

    double s = 0.0, s2 = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        s += sum[b];
        s2 += sum_sq[b];
    }
    const double n = static_cast<double>(n_mc);
    const double h_y = s / n;
    const double var = std::max(0.0, (s2 - n * h_y * h_y) / (n - 1.0));
    const double h_y_given_x = std::log(std::numbers::pi * std::numbers::e * spec.sigma2);

    MIEstimate est;
    est.mi_bits = std::max(0.0, (h_y - h_y_given_x) / std::numbers::ln2);
    est.std_error = std::sqrt(var / n) / std::numbers::ln2;
    est.n_mc = n_mc;
    est.sigma2 = spec.sigma2;
    return est;
}

AirEstimate air_total(const Constellation& c, const Distribution& d, const ChannelSpec& spec,
                      const OFDMConfig& cfg, int n_mc, std::uint64_t seed) {
    validate(cfg);
    const MIEstimate mi = mutual_information(c, d, spec, n_mc, seed);
    return {cfg.L * mi.mi_bits, mi.mi_bits, cfg.L * mi.std_error};
}

}  // namespace pcs
