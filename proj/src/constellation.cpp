#include "pcs/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pcs {

std::string_view to_string(Family f) {
    switch (f) {
        case Family::qam: return "qam";
        case Family::psk: return "psk";
        case Family::custom: return "custom";
    }
    return "custom";
}

Family family_from_string(std::string_view name) {
    if (name == "qam") return Family::qam;
    if (name == "psk") return Family::psk;
    if (name == "custom") return Family::custom;
    throw std::invalid_argument("unknown constellation family '" + std::string(name) +
                                "' (expected qam, psk or custom)");
}

std::string Constellation::id() const {
    return std::string(to_string(family_)) + std::to_string(order());
}

Constellation Constellation::from_rings(Family family, std::vector<double> ring_amp2,
                                        std::vector<int> ring_counts,
                                        std::vector<int> ring_index, std::vector<double> phases) {
    if (ring_amp2.size() != ring_counts.size() || ring_index.size() != phases.size())
        throw std::invalid_argument("ring tables have inconsistent sizes");
    Constellation c;
    c.family_ = family;
    c.ring_amp2_ = std::move(ring_amp2);
    c.ring_counts_ = std::move(ring_counts);
    c.ring_index_ = std::move(ring_index);
    c.phase_ = std::move(phases);
    c.ring_amplitude_.reserve(c.ring_amp2_.size());
    for (double a2 : c.ring_amp2_) c.ring_amplitude_.push_back(std::sqrt(a2));
    c.symbols_.reserve(c.ring_index_.size());
    for (std::size_t q = 0; q < c.ring_index_.size(); ++q)
        c.symbols_.push_back(std::polar(c.ring_amplitude_[c.ring_index_[q]], c.phase_[q]));
    return c;
}

namespace {

Constellation make_qam(int order) {
    const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
    if (order < 4 || k * k != order || k % 2 != 0)
        throw std::invalid_argument("QAM order must be the square of an even integer >= 2 (got " +
                                    std::to_string(order) + ")");
    // Lattice +-1, +-3, ..., +-(k-1) on both axes; mean power 2(k^2-1)/3.
    const double mean_power = 2.0 * (k * k - 1) / 3.0;
    std::map<int, std::vector<std::pair<int, int>>> by_radius;
    for (int i = -(k - 1); i <= k - 1; i += 2)
        for (int j = -(k - 1); j <= k - 1; j += 2) by_radius[i * i + j * j].emplace_back(i, j);

    std::vector<double> amp2;
    std::vector<int> counts, ring_index;
    std::vector<double> phases;
    int w = 0;
    for (const auto& [r2, pts] : by_radius) {
        amp2.push_back(r2 / mean_power);
        counts.push_back(static_cast<int>(pts.size()));
        for (auto [i, j] : pts) {
            ring_index.push_back(w);
            phases.push_back(std::atan2(static_cast<double>(j), static_cast<double>(i)));
        }
        ++w;
    }
    return Constellation::from_rings(Family::qam, std::move(amp2), std::move(counts),
                                     std::move(ring_index), std::move(phases));
}

Constellation make_psk(int order) {
    if (order < 2)
        throw std::invalid_argument("PSK order must be >= 2 (got " + std::to_string(order) + ")");
    std::vector<int> ring_index(order, 0);
    std::vector<double> phases(order);
    for (int m = 0; m < order; ++m) phases[m] = 2.0 * std::numbers::pi * m / order;
    return Constellation::from_rings(Family::psk, {1.0}, {order}, std::move(ring_index),
                                     std::move(phases));
}

}  // namespace

Constellation make_constellation(Family family, int order) {
    switch (family) {
        case Family::qam: return make_qam(order);
        case Family::psk: return make_psk(order);
        case Family::custom: break;
    }
    throw std::invalid_argument("custom constellations are built from a ring list");
}

Constellation make_custom_constellation(std::span<const RingSpec> rings) {
    if (rings.empty()) throw std::invalid_argument("custom constellation needs at least one ring");
    std::vector<RingSpec> sorted(rings.begin(), rings.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const RingSpec& a, const RingSpec& b) { return a.amplitude < b.amplitude; });
    double total_power = 0.0;
    int total = 0;
    for (std::size_t w = 0; w < sorted.size(); ++w) {
        const auto& r = sorted[w];
        if (!(r.amplitude >= 0.0) || !std::isfinite(r.amplitude))
            throw std::invalid_argument("ring amplitude must be finite and nonnegative");
        if (r.count < 1) throw std::invalid_argument("ring count must be positive");
        if (r.amplitude > 0.0 && r.count < 2)
            throw std::invalid_argument("a ring with nonzero amplitude needs >= 2 points to stay centered");
        if (w > 0 && !(r.amplitude > sorted[w - 1].amplitude))
            throw std::invalid_argument("ring amplitudes must be distinct");
        total_power += r.count * r.amplitude * r.amplitude;
        total += r.count;
    }
    if (!(total_power > 0.0)) throw std::invalid_argument("constellation has zero power");
    const double mean_power = total_power / total;
    const double scale2 = std::abs(mean_power - 1.0) <= kConstructionTol ? 1.0 : 1.0 / mean_power;

    std::vector<double> amp2;
    std::vector<int> counts, ring_index;
    std::vector<double> phases;
    for (std::size_t w = 0; w < sorted.size(); ++w) {
        const auto& r = sorted[w];
        amp2.push_back(r.amplitude * r.amplitude * scale2);
        counts.push_back(r.count);
        for (int m = 0; m < r.count; ++m) {
            ring_index.push_back(static_cast<int>(w));
            phases.push_back(r.phase_offset + 2.0 * std::numbers::pi * m / r.count);
        }
    }
    return Constellation::from_rings(Family::custom, std::move(amp2), std::move(counts),
                                     std::move(ring_index), std::move(phases));
}

Distribution uniform_distribution(const Constellation& c) {
    Distribution d;
    d.per_point.assign(c.size(), 1.0 / static_cast<double>(c.size()));
    d.ring_mass.resize(c.ring_count());
    for (std::size_t w = 0; w < c.ring_count(); ++w)
        d.ring_mass[w] = static_cast<double>(c.ring_size(w)) / static_cast<double>(c.size());
    return d;
}

Distribution expand_ring_mass(const Constellation& c, std::span<const double> masses) {
    if (masses.size() != c.ring_count())
        throw std::invalid_argument("expected " + std::to_string(c.ring_count()) + " ring masses, got " +
                                    std::to_string(masses.size()));
    double sum = 0.0;
    for (std::size_t w = 0; w < masses.size(); ++w) {
        if (!(masses[w] >= 0.0))
            throw std::invalid_argument("ring " + std::to_string(w) + " has negative mass");
        sum += masses[w];
    }
    if (std::abs(sum - 1.0) > kValidationTol)
        throw std::invalid_argument("ring masses sum to " + std::to_string(sum) + ", not 1");
    Distribution d;
    d.ring_mass.assign(masses.begin(), masses.end());
    d.per_point.resize(c.size());
    for (std::size_t q = 0; q < c.size(); ++q) {
        const int w = c.ring_of(q);
        d.per_point[q] = masses[w] / c.ring_size(w);
    }
    return d;
}

Distribution distribution_from_points(const Constellation& c, std::vector<double> per_point) {
    Distribution d;
    d.ring_mass.assign(c.ring_count(), 0.0);
    if (per_point.size() == c.size())
        for (std::size_t q = 0; q < c.size(); ++q) d.ring_mass[c.ring_of(q)] += per_point[q];
    d.per_point = std::move(per_point);
    return d;
}

double moment(const Constellation& c, const Distribution& d, int order) {
    if (order != 2 && order != 4) throw std::invalid_argument("moment order must be 2 or 4");
    if (d.per_point.size() != c.size())
        throw std::invalid_argument("distribution has " + std::to_string(d.per_point.size()) +
                                    " entries for a constellation of " + std::to_string(c.size()));
    double acc = 0.0;
    for (std::size_t q = 0; q < c.size(); ++q) {
        const double a2 = c.ring_amp2(c.ring_of(q));
        acc += d.per_point[q] * (order == 2 ? a2 : a2 * a2);
    }
    return acc;
}

double entropy_nats(const Distribution& d) {
    double h = 0.0;
    for (double p : d.per_point)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

double entropy_bits(const Distribution& d) { return entropy_nats(d) / std::numbers::ln2; }

std::string Diagnostics::summary() const {
    if (pass) return "ok";
    std::ostringstream os;
    for (std::size_t i = 0; i < issues.size(); ++i) {
        if (i) os << "; ";
        os << issues[i].what << " (residual " << issues[i].residual;
        if (issues[i].ring >= 0) os << ", ring " << issues[i].ring;
        os << ")";
    }
    return os.str();
}

Diagnostics validate(const Constellation& c, const Distribution& d, double tol) {
    Diagnostics diag;
    auto fail = [&](std::string what, double residual, int ring = -1) {
        diag.pass = false;
        diag.issues.push_back({std::move(what), residual, ring});
    };

    const std::size_t Q = c.size();
    if (d.per_point.size() != Q) {
        fail("per_point length differs from constellation order",
             std::abs(static_cast<double>(d.per_point.size()) - static_cast<double>(Q)));
        return diag;
    }
    if (d.ring_mass.size() != c.ring_count()) {
        fail("ring_mass length differs from ring count",
             std::abs(static_cast<double>(d.ring_mass.size()) - static_cast<double>(c.ring_count())));
        return diag;
    }

    // Constellation structure.
    int total = 0;
    double power = 0.0;
    std::complex<double> center = 0.0;
    for (std::size_t w = 0; w < c.ring_count(); ++w) {
        total += c.ring_size(w);
        if (w > 0 && !(c.ring_amp2(w) > c.ring_amp2(w - 1)))
            fail("ring amplitudes not strictly increasing", c.ring_amp2(w - 1) - c.ring_amp2(w),
                 static_cast<int>(w));
    }
    if (total != static_cast<int>(Q)) fail("ring counts do not sum to the order", std::abs(total - static_cast<double>(Q)));
    for (std::size_t q = 0; q < Q; ++q) {
        power += c.ring_amp2(c.ring_of(q));
        center += c.symbol(q);
    }
    power /= static_cast<double>(Q);
    if (std::abs(power - 1.0) > tol) fail("mean power under uniform distribution is not 1", std::abs(power - 1.0));

    // Distribution.
    double sum = 0.0;
    double most_negative = 0.0;
    for (double p : d.per_point) {
        sum += p;
        most_negative = std::min(most_negative, p);
    }
    if (most_negative < 0.0) fail("negative probability", -most_negative);
    if (std::abs(sum - 1.0) > tol) fail("probabilities do not sum to 1", std::abs(sum - 1.0));

    std::vector<double> lo(c.ring_count(), INFINITY), hi(c.ring_count(), -INFINITY), agg(c.ring_count(), 0.0);
    for (std::size_t q = 0; q < Q; ++q) {
        const int w = c.ring_of(q);
        lo[w] = std::min(lo[w], d.per_point[q]);
        hi[w] = std::max(hi[w], d.per_point[q]);
        agg[w] += d.per_point[q];
    }
    bool ring_uniform = true;
    for (std::size_t w = 0; w < c.ring_count(); ++w) {
        if (hi[w] - lo[w] > tol) {
            ring_uniform = false;
            fail("probability not constant within ring", hi[w] - lo[w], static_cast<int>(w));
        }
        if (std::abs(agg[w] - d.ring_mass[w]) > tol)
            fail("ring_mass disagrees with per_point", std::abs(agg[w] - d.ring_mass[w]), static_cast<int>(w));
    }

    if (ring_uniform) {
        std::complex<double> mean = 0.0;
        for (std::size_t q = 0; q < Q; ++q) mean += d.per_point[q] * c.symbol(q);
        if (std::abs(mean) > tol) fail("distribution is not zero-mean", std::abs(mean));
    }
    return diag;
}

void require_valid(const Constellation& c, const Distribution& d) {
    const Diagnostics diag = validate(c, d);
    if (!diag.pass) throw std::invalid_argument("invalid distribution: " + diag.summary());
}

void require_probabilities(const Constellation& c, const Distribution& d) {
    if (d.per_point.size() != c.size())
        throw std::invalid_argument("distribution has " + std::to_string(d.per_point.size()) +
                                    " entries for a constellation of " + std::to_string(c.size()));
    double sum = 0.0;
    for (double p : d.per_point) {
        if (!(p >= 0.0)) throw std::invalid_argument("distribution has a negative or NaN probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kValidationTol)
        throw std::invalid_argument("probabilities sum to " + std::to_string(sum) + ", not 1");
}

}  // namespace pcs
