#include "pcs/commands.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcs/comms_metrics.hpp"
#include "pcs/detection.hpp"
#include "pcs/rng.hpp"

namespace pcs {

namespace {

std::string num(double v) { return format_number(v); }

std::string range_text(const C0Range& r) { return "[" + num(r.min) + ", " + num(r.max) + "]"; }

DetectionScenario make_scenario(const RunConfig& cfg, const Constellation& c, const Distribution& d) {
    DetectionScenario sc;
    sc.constellation = c;
    sc.distribution = d;
    sc.ofdm = cfg.ofdm;
    sc.ofdm.N = 1;
    sc.target_cell = cfg.detection.target_cell;
    sc.target_snr_db = cfg.detection.sensing_snr_db;
    sc.si_cell = cfg.detection.si_cell;
    sc.si_to_noise_db = cfg.detection.si_to_noise_db;
    sc.pfa = cfg.detection.pfa;
    sc.n_mc = cfg.n_mc_detect;
    sc.window = cfg.detection.window;
    return sc;
}

std::uint64_t detect_seed(const RunConfig& cfg) { return derive_seed(cfg.seed, "detect"); }

// The threshold sees noise only, so one calibration serves every distribution.
double detection_threshold(const RunConfig& cfg, const DetectionScenario& sc) {
    const long n_cal = cfg.detection.n_cal > 0 ? cfg.detection.n_cal : default_calibration_count(sc.pfa);
    return calibrate_so_cfar(sc, n_cal, derive_seed(detect_seed(cfg), "cfar"));
}

}  // namespace

double clamp_c0(double c0, const C0Range& range, std::ostream& diag) {
    if (c0 >= range.min && c0 <= range.max) return c0;
    const double used = c0 < range.min ? range.min : range.max;
    // Rounding-level excursions are not worth a warning.
    if (std::abs(used - c0) > 1e-12)
        diag << "warning: c0 = " << num(c0) << " lies outside the feasible range " << range_text(range)
             << "; using " << num(used) << "\n";
    return used;
}

std::vector<double> sweep_points(const RunConfig& cfg, const C0Range& range, std::ostream& diag) {
    if (!cfg.c0_sweep) {
        if (cfg.c0) return {clamp_c0(*cfg.c0, range, diag)};
        return expand_range({range.min, range.max, 0.05});
    }
    Range r = *cfg.c0_sweep;
    if (std::isnan(r.min)) r.min = range.min;
    if (std::isnan(r.max)) r.max = range.max;
    if (r.min > r.max) throw ConfigError("shaping.c0_min", "sweep is empty (c0_min > c0_max)");
    if (r.max < range.min - 1e-12 || r.min > range.max + 1e-12)
        throw ConfigError("shaping", "c0 sweep [" + num(r.min) + ", " + num(r.max) +
                                         "] lies outside the feasible range " + range_text(range));
    std::vector<double> out;
    for (double c0 : expand_range(r)) {
        const double used = clamp_c0(c0, range, diag);
        if (out.empty() || used != out.back()) out.push_back(used);
    }
    return out;
}

ShapePoint shape_point(const RunConfig& cfg, Method method, double c0) {
    const Constellation c = cfg.constellation();
    const std::uint64_t seed = derive_seed(cfg.seed, "shape");
    ShapePoint out;
    out.method = method;
    out.c0 = c0;
    if (method == Method::optimal) {
        MBAConfig mba = cfg.mba;
        mba.c0 = c0;
        mba.sigma2 = cfg.sigma2;
        mba.n_mc = cfg.n_mc_mba;
        mba.air_n_mc = cfg.n_mc_mi;
        const PCSResult r = run_mba(c, mba, seed);
        out.distribution = r.distribution;
        out.ring_mass = r.ring_mass;
        out.air_bits = r.air_bits;
        out.air_std_error = r.air_std_error;
        out.converged = r.converged;
        out.json = result_to_json(r);
    } else {
        const HeuristicResult h = solve_heuristic(c, c0);
        // Same draws as the optimal solver's rate estimate.
        const MIEstimate air =
            mutual_information(c, h.distribution, ChannelSpec{cfg.sigma2}, cfg.n_mc_mi, derive_seed(seed, "air"));
        out.distribution = h.distribution;
        out.ring_mass = h.ring_mass;
        out.air_bits = air.mi_bits;
        out.air_std_error = air.std_error;
        out.json = result_to_json(h, air);
    }
    return out;
}

std::vector<TradeoffRow> run_tradeoff(const RunConfig& cfg, std::ostream& diag) {
    const Constellation c = cfg.constellation();
    const C0Range range = feasible_c0_range(c);
    const auto points = sweep_points(cfg, range, diag);

    const DetectionScenario base = make_scenario(cfg, c, uniform_distribution(c));
    const double alpha = detection_threshold(cfg, base);
    const double snr[] = {cfg.detection.sensing_snr_db};
    auto pd = [&](const Distribution& d) {
        DetectionScenario sc = base;
        sc.distribution = d;
        return pd_curve(sc, snr, detect_seed(cfg), alpha).front().pd;
    };

    std::vector<TradeoffRow> rows;
    for (double c0 : points) {
        TradeoffRow row;
        row.c0 = c0;
        row.optimal = shape_point(cfg, Method::optimal, c0);
        row.heuristic = shape_point(cfg, Method::heuristic, c0);
        row.pd_optimal = pd(row.optimal.distribution);
        row.pd_heuristic = pd(row.heuristic.distribution);
        if (!row.optimal.converged)
            diag << "warning: optimal shaping did not converge at c0 = " << num(c0) << "\n";
        rows.push_back(std::move(row));
    }
    return rows;
}

ShapePoint analysis_distribution(const RunConfig& cfg, std::ostream& diag) {
    const Constellation c = cfg.constellation();
    if (!cfg.c0) {
        ShapePoint u;
        u.distribution = uniform_distribution(c);
        u.ring_mass = u.distribution.ring_mass;
        u.c0 = moment(c, u.distribution, 4);
        return u;
    }
    const double c0 = clamp_c0(*cfg.c0, feasible_c0_range(c), diag);
    ShapePoint p = shape_point(cfg, cfg.method, c0);
    if (!p.converged) diag << "warning: optimal shaping did not converge at c0 = " << num(c0) << "\n";
    return p;
}

int cmd_tradeoff(const RunConfig& cfg, std::ostream& diag) {
    const Constellation c = cfg.constellation();
    const auto rows = run_tradeoff(cfg, diag);

    std::vector<std::string> header = {"c0",
                                       "air_optimal_bits",
                                       "air_optimal_std_err",
                                       "air_heuristic_bits",
                                       "air_heuristic_std_err",
                                       "pd_optimal",
                                       "pd_heuristic",
                                       "converged"};
    for (std::size_t w = 0; w < c.ring_count(); ++w) header.push_back("mass_optimal_" + std::to_string(w));
    for (std::size_t w = 0; w < c.ring_count(); ++w) header.push_back("mass_heuristic_" + std::to_string(w));
    CsvTable csv(header);

    std::vector<LutEntry> lut;
    bool all_converged = true;
    for (const auto& r : rows) {
        std::vector<double> cells = {r.c0,
                                     r.optimal.air_bits,
                                     r.optimal.air_std_error,
                                     r.heuristic.air_bits,
                                     r.heuristic.air_std_error,
                                     r.pd_optimal,
                                     r.pd_heuristic,
                                     r.optimal.converged ? 1.0 : 0.0};
        for (double m : r.optimal.ring_mass) cells.push_back(m);
        for (double m : r.heuristic.ring_mass) cells.push_back(m);
        csv.add_row(cells);
        lut.push_back({r.c0, cfg.sigma2, r.optimal.ring_mass, r.optimal.air_bits, "optimal"});
        lut.push_back({r.c0, cfg.sigma2, r.heuristic.ring_mass, r.heuristic.air_bits, "heuristic"});
        all_converged = all_converged && r.optimal.converged;
    }
    write_text(cfg.out_dir / "tradeoff.csv", csv.str());
    write_text(cfg.out_dir / "tradeoff_lut.json", dump(lut_to_json(lut)));
    return all_converged ? kExitOk : kExitNoConvergence;
}

int cmd_af(const RunConfig& cfg, std::ostream& diag) {
    const Constellation c = cfg.constellation();
    const ShapePoint p = analysis_distribution(cfg, diag);
    const std::uint64_t seed = derive_seed(cfg.seed, "af");

    const auto tau = expand_range(cfg.af.tau);
    const auto nu = expand_range(cfg.af.nu);
    const AFGrid grid = average_af(c, p.distribution, cfg.ofdm, tau, nu, cfg.n_mc_af, seed, cfg.af.normalize);
    write_text(cfg.out_dir / "af_grid.csv", af_grid_csv(grid).str());

    const int L = cfg.ofdm.L;
    const int cells = cfg.af.slice_cells > 0 ? cfg.af.slice_cells : L;
    std::vector<double> slice_tau;
    for (int k = 0; k < cells; ++k) slice_tau.push_back(static_cast<double>(k) / L);
    const double zero[] = {0.0};
    const AFGrid slice = average_af(c, p.distribution, cfg.ofdm, slice_tau, zero, cfg.n_mc_af, seed, cfg.af.normalize);

    // E|Lambda|^2 of the train at zero Doppler: the self term has mean N times
    // the single-symbol mean; cross terms are zero-mean.
    auto analytic_power = [&](double tau_abs, AFMoments* keep) {
        const AFMoments m = analytic_moments(c, p.distribution, cfg.ofdm, tau_abs, 0.0);
        if (keep) *keep = m;
        return std::norm(static_cast<double>(cfg.ofdm.N) * m.mean_lambda_s) + m.var_s_seq + m.var_c_seq;
    };
    const double ref = cfg.af.normalize ? analytic_power(0.0, nullptr) : 1.0;

    CsvTable csv({"tau", "value_db", "analytic_db", "var_s", "var_c"});
    for (int k = 0; k < cells; ++k) {
        AFMoments m;
        const double power = analytic_power(slice_tau[k] * cfg.ofdm.t_p, &m);
        csv.add_row({slice_tau[k], slice.at(k, 0), 10.0 * std::log10(power / ref), m.var_s_seq, m.var_c_seq});
    }
    write_text(cfg.out_dir / "af_slice.csv", csv.str());
    return p.converged ? kExitOk : kExitNoConvergence;
}

int cmd_air(const RunConfig& cfg, std::ostream& diag) {
    const Constellation c = cfg.constellation();
    const ShapePoint p = analysis_distribution(cfg, diag);
    const std::uint64_t seed = derive_seed(cfg.seed, "air");
    CsvTable csv({"snr_db", "mi_bits", "std_err"});
    for (double snr : expand_range(cfg.snr_db)) {
        const MIEstimate mi = mutual_information(c, p.distribution, ChannelSpec{sigma2_from_snr_db(snr)}, cfg.n_mc_mi, seed);
        csv.add_row({snr, mi.mi_bits, mi.std_error});
    }
    write_text(cfg.out_dir / "air.csv", csv.str());
    return p.converged ? kExitOk : kExitNoConvergence;
}

int cmd_shape(const RunConfig& cfg, std::ostream& diag) {
    if (!cfg.c0) throw ConfigError("shaping.c0", "shape needs a target fourth moment (shaping.c0 or --c0)");
    const Constellation c = cfg.constellation();
    const double c0 = clamp_c0(*cfg.c0, feasible_c0_range(c), diag);
    const ShapePoint p = shape_point(cfg, cfg.method, c0);
    write_text(cfg.out_dir / "shape.json", dump(p.json));
    if (!p.converged) {
        diag << "warning: optimal shaping did not converge at c0 = " << num(c0) << "\n";
        return kExitNoConvergence;
    }
    return kExitOk;
}

int cmd_detect(const RunConfig& cfg, std::ostream& diag) {
    const Constellation c = cfg.constellation();
    const ShapePoint p = analysis_distribution(cfg, diag);
    const DetectionScenario sc = make_scenario(cfg, c, p.distribution);
    const double alpha = detection_threshold(cfg, sc);
    const auto snr = expand_range(cfg.detection.snr_db);
    CsvTable csv({"snr_db", "pd", "ci_lo", "ci_hi"});
    for (const auto& pt : pd_curve(sc, snr, detect_seed(cfg), alpha)) csv.add_row({pt.snr_db, pt.pd, pt.ci_lo, pt.ci_hi});
    write_text(cfg.out_dir / "detect.csv", csv.str());
    return p.converged ? kExitOk : kExitNoConvergence;
}

int cmd_lut_export(const RunConfig& cfg, std::ostream& diag) {
    const Constellation c = cfg.constellation();
    const auto points = sweep_points(cfg, feasible_c0_range(c), diag);
    if (points.empty()) throw ConfigError("shaping", "empty c0 sweep");
    std::vector<LutEntry> lut;
    bool all_converged = true;
    for (double c0 : points) {
        const ShapePoint p = shape_point(cfg, cfg.method, c0);
        if (!p.converged) diag << "warning: optimal shaping did not converge at c0 = " << num(c0) << "\n";
        all_converged = all_converged && p.converged;
        lut.push_back({c0, cfg.sigma2, p.ring_mass, p.air_bits, std::string(to_string(cfg.method))});
    }
    write_text(cfg.out_dir / "lut.json", dump(lut_to_json(lut)));
    return all_converged ? kExitOk : kExitNoConvergence;
}

}  // namespace pcs
