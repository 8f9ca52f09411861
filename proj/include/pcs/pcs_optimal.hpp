#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pcs/comms_metrics.hpp"
#include "pcs/constellation.hpp"

namespace pcs {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

/// Search box and resolution for the multiplier grid.
struct GridSpec {
    double lambda1_min = -20.0, lambda1_max = 20.0;
    double lambda2_min = -20.0, lambda2_max = 20.0;
    double step = 0.5;
    bool refine = true;  // second pass at step/10 over +-step around the best point
};

struct MBAConfig {
    double c0 = 1.32;
    double sigma2 = 0.01;
    int n_mc = 10000;            // channel draws per outer iteration
    double epsilon = 1e-5;
    int max_iter = 200;
    double newton_tol = 1e-20;   // on the squared step length
    int newton_max_iter = 100;
    GridSpec grid;
    bool ring_collapsed = true;  // iterate on W ring masses instead of Q points
    int air_n_mc = kDefaultMiDraws;
};

struct PCSResult {
    std::string method = "optimal";
    Distribution distribution;
    std::vector<double> ring_mass;
    double c0 = 0.0;
    double fourth_moment = 0.0;
    double lambda1 = 0.0, lambda2 = 0.0;
    std::vector<double> trace;         // objective after each update, bits
    std::vector<double> trace_before;  // objective before each update on the same draws, bits
    double air_bits = 0.0;
    double air_std_error = 0.0;
    bool converged = false;
    int iterations = 0;
    int newton_iterations = 0;
    int newton_fallbacks = 0;
    bool boundary = false;                // c0 at an endpoint of the feasible range
    std::vector<double> ring_integrals;   // ring-averaged integrals of the final update
};

/// Posterior table of the reverse channel for one set of channel outputs.
/// Entries are row-major [sample][point].
struct QTable {
    std::size_t samples = 0;
    std::size_t points = 0;
    std::vector<double> log_lik;  // log p(y_m | x)
    std::vector<double> log_q;    // log q(x | y_m), -inf where p(x) = 0
    std::vector<double> log_py;   // log sum_x p(x) p(y_m | x)

    double q(std::size_t m, std::size_t x) const;
};

QTable q_update(const Distribution& p, std::span<const cplx> y, const Constellation& c, double sigma2);

struct McValue {
    double value = 0.0;
    double std_error = 0.0;
};

/// (1/M) sum_m p(y_m|x) / p_s(y_m) log q(x|y_m), where p_s is the output
/// density the samples were drawn from (by default the table's own).
McValue mc_integral(std::size_t x, const QTable& table);
McValue mc_integral(std::size_t x, const QTable& table, std::span<const double> sampling_log_py);

/// Exponential weights g = exp(D - lambda1 A^4 - lambda2 A^2) over entries
/// that are either points (weight 1) or rings (weight = ring size).
struct ResidualInput {
    std::vector<double> integrals;  // D per entry
    std::vector<double> amp2;       // A^2 per entry
    std::vector<double> weight;     // multiplicity per entry
    double c0 = 1.0;
};

struct MultiplierEval {
    Vec2 f{};
    Mat2 jacobian{};
    std::vector<double> g;
    double shift = 0.0;
};

/// f1 = sum w (A^2 - 1) g, f2 = sum w (A^4 - c0) g with g evaluated after
/// subtracting `shift` in the exponent, plus the analytic Jacobian.
MultiplierEval multiplier_residuals(double lambda1, double lambda2, const ResidualInput& in, double shift);

/// Same with the max-shift that keeps the largest exponent at zero.
MultiplierEval multiplier_residuals(double lambda1, double lambda2, const ResidualInput& in);

/// Residuals divided by sum w g: (E_g[A^2] - 1, E_g[A^4] - c0). Their
/// Jacobian is minus the covariance of (A^2, A^4) under g.
MultiplierEval normalized_residuals(double lambda1, double lambda2, const ResidualInput& in);

struct GridResult {
    double lambda1 = 0.0, lambda2 = 0.0;
    double norm = 0.0;
};

/// Argmin of `norm_fn` over the grid, scanning lambda1 outer and lambda2
/// inner in ascending order; ties keep the first point.
GridResult grid_init(const std::function<double(double, double)>& norm_fn, const GridSpec& grid);

struct NewtonEval {
    Vec2 f{};
    Mat2 jacobian{};
};

struct NewtonResult {
    Vec2 lambda{};
    bool converged = false;
    int iterations = 0;
    int fallbacks = 0;  // steps taken with the pseudo-inverse
    double residual_norm = 0.0;
};

/// Damped Newton iteration: full step -J^{-1} F, halved until the residual
/// norm decreases. Ill-conditioned Jacobians (cond > 1e12) switch to the
/// pseudo-inverse step. Converged when a regular squared step length <= tol.
NewtonResult newton_solve(const std::function<NewtonEval(const Vec2&)>& fn, Vec2 lambda0, double tol,
                          int max_iter);

/// Modified Blahut-Arimoto iteration maximizing mutual information under the
/// power and fourth-moment constraints. Throws std::invalid_argument when
/// c0 lies outside the feasible range by more than 1e-9.
PCSResult run_mba(const Constellation& c, const MBAConfig& cfg, std::uint64_t seed);

}  // namespace pcs
