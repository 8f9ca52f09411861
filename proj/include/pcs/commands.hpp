#pragma once

#include <ostream>
#include <vector>

#include "pcs/config.hpp"
#include "pcs/io.hpp"
#include "pcs/pcs_heuristic.hpp"

namespace pcs {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNoConvergence = 3;

/// c0 moved into the feasible range; prints a warning on `diag` if it moved.
double clamp_c0(double c0, const C0Range& range, std::ostream& diag);

/// Sweep points after resolving open ends to the feasible endpoints and
/// clamping. Throws ConfigError if the sweep misses the range entirely.
std::vector<double> sweep_points(const RunConfig& cfg, const C0Range& range, std::ostream& diag);

/// One shaping run at c0 (already clamped). Both methods use the sub-seed
/// (seed, "shape"), so results do not depend on the surrounding sweep.
struct ShapePoint {
    Method method = Method::optimal;
    double c0 = 0.0;
    Distribution distribution;
    std::vector<double> ring_mass;
    double air_bits = 0.0;
    double air_std_error = 0.0;
    bool converged = true;
    Json json;
};

ShapePoint shape_point(const RunConfig& cfg, Method method, double c0);

struct TradeoffRow {
    double c0 = 0.0;
    ShapePoint optimal;
    ShapePoint heuristic;
    double pd_optimal = 0.0;
    double pd_heuristic = 0.0;
};

std::vector<TradeoffRow> run_tradeoff(const RunConfig& cfg, std::ostream& diag);

/// The distribution the af, air and detect commands analyze: shaped at the
/// configured c0 by the configured method, uniform when no c0 is set.
ShapePoint analysis_distribution(const RunConfig& cfg, std::ostream& diag);

/// Each command writes its artifacts under cfg.out_dir and returns an exit code.
int cmd_tradeoff(const RunConfig& cfg, std::ostream& diag);
int cmd_af(const RunConfig& cfg, std::ostream& diag);
int cmd_air(const RunConfig& cfg, std::ostream& diag);
int cmd_shape(const RunConfig& cfg, std::ostream& diag);
int cmd_detect(const RunConfig& cfg, std::ostream& diag);
int cmd_lut_export(const RunConfig& cfg, std::ostream& diag);

}  // namespace pcs
