#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pcs {

/// Residual tolerance used when validating probabilities and normalization.
inline constexpr double kValidationTol = 1e-9;
/// Residual tolerance guaranteed by constructors.
inline constexpr double kConstructionTol = 1e-12;

enum class Family { qam, psk, custom };

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);

/// One concentric ring of a custom constellation: `count` points spaced
/// evenly in phase starting at `phase_offset`.
struct RingSpec {
    double amplitude = 1.0;
    int count = 1;
    double phase_offset = 0.0;
};

/// Finite alphabet partitioned into concentric rings. Points of one ring
/// share the ring amplitude bit-for-bit, rings are sorted by amplitude and
/// the alphabet has unit mean power under the uniform distribution.
class Constellation {
public:
    Family family() const { return family_; }
    int order() const { return static_cast<int>(symbols_.size()); }
    std::size_t size() const { return symbols_.size(); }
    std::size_t ring_count() const { return ring_amp2_.size(); }

    std::complex<double> symbol(std::size_t q) const { return symbols_[q]; }
    std::span<const std::complex<double>> symbols() const { return symbols_; }
    double amplitude(std::size_t q) const { return ring_amplitude_[ring_index_[q]]; }
    double phase(std::size_t q) const { return phase_[q]; }
    int ring_of(std::size_t q) const { return ring_index_[q]; }
    std::span<const int> ring_index() const { return ring_index_; }

    /// Squared amplitude A_w^2 of ring w.
    double ring_amp2(std::size_t w) const { return ring_amp2_[w]; }
    std::span<const double> ring_amp2() const { return ring_amp2_; }
    double ring_amplitude(std::size_t w) const { return ring_amplitude_[w]; }
    std::span<const double> ring_amplitudes() const { return ring_amplitude_; }
    int ring_size(std::size_t w) const { return ring_counts_[w]; }
    std::span<const int> ring_counts() const { return ring_counts_; }

    /// Short identifier such as "qam16" or "psk64".
    std::string id() const;

    /// Points as (ring, phase) pairs; amplitude comes from the ring.
    static Constellation from_rings(Family family, std::vector<double> ring_amp2,
                                    std::vector<int> ring_counts,
                                    std::vector<int> ring_index, std::vector<double> phases);

private:
    Family family_ = Family::custom;
    std::vector<std::complex<double>> symbols_;
    std::vector<double> phase_;
    std::vector<int> ring_index_;
    std::vector<double> ring_amp2_;
    std::vector<double> ring_amplitude_;
    std::vector<int> ring_counts_;
};

/// Square QAM (order = k^2, k even) or M-PSK (order >= 2), unit mean power.
Constellation make_constellation(Family family, int order);

/// Ring-list constellation. Amplitudes must be distinct; rings with a
/// nonzero amplitude need at least two points so the alphabet is centered.
/// The result is rescaled to unit mean power.
Constellation make_custom_constellation(std::span<const RingSpec> rings);

/// Input distribution. `per_point` holds p_q; `ring_mass` holds the
/// aggregate mass of every ring (sum of p_q over the ring).
struct Distribution {
    std::vector<double> per_point;
    std::vector<double> ring_mass;
};

Distribution uniform_distribution(const Constellation& c);

/// Per-point probabilities from aggregate ring masses.
/// Throws std::invalid_argument on negative mass or a sum away from 1.
Distribution expand_ring_mass(const Constellation& c, std::span<const double> masses);

/// Wraps arbitrary per-point values without checking them (ring masses are
/// aggregated). Use validate() to inspect the result.
Distribution distribution_from_points(const Constellation& c, std::vector<double> per_point);

/// sum_q p_q A_q^order for order 2 or 4.
double moment(const Constellation& c, const Distribution& d, int order);

double entropy_nats(const Distribution& d);
double entropy_bits(const Distribution& d);

struct Diagnostics {
    struct Issue {
        std::string what;
        double residual = 0.0;
        int ring = -1;
    };
    bool pass = true;
    std::vector<Issue> issues;

    std::string summary() const;
};

/// Checks every constellation and distribution invariant and reports the
/// measured residual of each violation.
Diagnostics validate(const Constellation& c, const Distribution& d, double tol = kValidationTol);

/// Throws std::invalid_argument carrying the diagnostics summary if invalid.
void require_valid(const Constellation& c, const Distribution& d);

/// Weaker check for samplers: right length, nonnegative, sums to one.
/// Distributions that are not ring-uniform (a point mass, say) pass.
void require_probabilities(const Constellation& c, const Distribution& d);

}  // namespace pcs
