#include "pcs/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace pcs {

namespace {

double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ConfigError(key, "expected a finite number, got \"" + text + "\"");
    return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
    long long v = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(key, "expected an integer, got \"" + text + "\"");
    return v;
}

int parse_int(const std::string& key, const std::string& text) {
    const long long v = parse_integer(key, text);
    if (v < -2147483647LL || v > 2147483647LL) throw ConfigError(key, "integer out of range");
    return static_cast<int>(v);
}

std::uint64_t parse_seed(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(key, "expected an unsigned integer, got \"" + text + "\"");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(key, "expected true or false, got \"" + text + "\"");
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

Range& sweep(RunConfig& c) {
    if (!c.c0_sweep) c.c0_sweep = Range{std::nan(""), std::nan(""), 0.05};
    return *c.c0_sweep;
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = parse_seed(k, v); }},
        {"out_dir", [](RunConfig& c, auto&, auto& v) { c.out_dir = v; }},

        {"constellation.family",
         [](RunConfig& c, auto& k, auto& v) {
             try {
                 c.family = family_from_string(v);
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(k, e.what());
             }
         }},
        {"constellation.order", [](RunConfig& c, auto& k, auto& v) { c.order = parse_int(k, v); }},

        {"ofdm.subcarriers", [](RunConfig& c, auto& k, auto& v) { c.ofdm.L = parse_int(k, v); }},
        {"ofdm.delta_f_hz", [](RunConfig& c, auto& k, auto& v) { c.ofdm.delta_f = parse_double(k, v); }},
        {"ofdm.t_p_s", [](RunConfig& c, auto& k, auto& v) { c.ofdm.t_p = parse_double(k, v); }},
        {"ofdm.symbols", [](RunConfig& c, auto& k, auto& v) { c.ofdm.N = parse_int(k, v); }},

        {"channel.sigma2", [](RunConfig& c, auto& k, auto& v) { c.sigma2 = parse_double(k, v); }},
        {"channel.snr_db_min", [](RunConfig& c, auto& k, auto& v) { c.snr_db.min = parse_double(k, v); }},
        {"channel.snr_db_max", [](RunConfig& c, auto& k, auto& v) { c.snr_db.max = parse_double(k, v); }},
        {"channel.snr_db_step", [](RunConfig& c, auto& k, auto& v) { c.snr_db.step = parse_double(k, v); }},

        {"shaping.method",
         [](RunConfig& c, auto& k, auto& v) {
             if (v == "optimal") c.method = Method::optimal;
             else if (v == "heuristic") c.method = Method::heuristic;
             else throw ConfigError(k, "expected optimal or heuristic, got \"" + v + "\"");
         }},
        {"shaping.c0", [](RunConfig& c, auto& k, auto& v) { c.c0 = parse_double(k, v); }},
        {"shaping.c0_min", [](RunConfig& c, auto& k, auto& v) { sweep(c).min = parse_double(k, v); }},
        {"shaping.c0_max", [](RunConfig& c, auto& k, auto& v) { sweep(c).max = parse_double(k, v); }},
        {"shaping.c0_step", [](RunConfig& c, auto& k, auto& v) { sweep(c).step = parse_double(k, v); }},

        {"mc.n_mc_af", [](RunConfig& c, auto& k, auto& v) { c.n_mc_af = parse_int(k, v); }},
        {"mc.n_mc_mi", [](RunConfig& c, auto& k, auto& v) { c.n_mc_mi = parse_int(k, v); }},
        {"mc.n_mc_mba", [](RunConfig& c, auto& k, auto& v) { c.n_mc_mba = parse_int(k, v); }},
        {"mc.n_mc_detect", [](RunConfig& c, auto& k, auto& v) { c.n_mc_detect = parse_int(k, v); }},

        {"af.tau_min_tp", [](RunConfig& c, auto& k, auto& v) { c.af.tau.min = parse_double(k, v); }},
        {"af.tau_max_tp", [](RunConfig& c, auto& k, auto& v) { c.af.tau.max = parse_double(k, v); }},
        {"af.tau_step_tp", [](RunConfig& c, auto& k, auto& v) { c.af.tau.step = parse_double(k, v); }},
        {"af.nu_min_df", [](RunConfig& c, auto& k, auto& v) { c.af.nu.min = parse_double(k, v); }},
        {"af.nu_max_df", [](RunConfig& c, auto& k, auto& v) { c.af.nu.max = parse_double(k, v); }},
        {"af.nu_step_df", [](RunConfig& c, auto& k, auto& v) { c.af.nu.step = parse_double(k, v); }},
        {"af.slice_cells", [](RunConfig& c, auto& k, auto& v) { c.af.slice_cells = parse_int(k, v); }},
        {"af.normalize", [](RunConfig& c, auto& k, auto& v) { c.af.normalize = parse_bool(k, v); }},

        {"detection.target_cell", [](RunConfig& c, auto& k, auto& v) { c.detection.target_cell = parse_int(k, v); }},
        {"detection.si_cell", [](RunConfig& c, auto& k, auto& v) { c.detection.si_cell = parse_int(k, v); }},
        {"detection.si_to_noise_db",
         [](RunConfig& c, auto& k, auto& v) { c.detection.si_to_noise_db = parse_double(k, v); }},
        {"detection.pfa", [](RunConfig& c, auto& k, auto& v) { c.detection.pfa = parse_double(k, v); }},
        {"detection.ref_cells",
         [](RunConfig& c, auto& k, auto& v) { c.detection.window.ref_cells = parse_int(k, v); }},
        {"detection.guard_cells",
         [](RunConfig& c, auto& k, auto& v) { c.detection.window.guard_cells = parse_int(k, v); }},
        {"detection.sensing_snr_db",
         [](RunConfig& c, auto& k, auto& v) { c.detection.sensing_snr_db = parse_double(k, v); }},
        {"detection.snr_db_min", [](RunConfig& c, auto& k, auto& v) { c.detection.snr_db.min = parse_double(k, v); }},
        {"detection.snr_db_max", [](RunConfig& c, auto& k, auto& v) { c.detection.snr_db.max = parse_double(k, v); }},
        {"detection.snr_db_step",
         [](RunConfig& c, auto& k, auto& v) { c.detection.snr_db.step = parse_double(k, v); }},
        {"detection.n_cal", [](RunConfig& c, auto& k, auto& v) { c.detection.n_cal = parse_integer(k, v); }},

        {"mba.epsilon", [](RunConfig& c, auto& k, auto& v) { c.mba.epsilon = parse_double(k, v); }},
        {"mba.max_iter", [](RunConfig& c, auto& k, auto& v) { c.mba.max_iter = parse_int(k, v); }},
        {"mba.newton_tol", [](RunConfig& c, auto& k, auto& v) { c.mba.newton_tol = parse_double(k, v); }},
        {"mba.newton_max_iter", [](RunConfig& c, auto& k, auto& v) { c.mba.newton_max_iter = parse_int(k, v); }},
        {"mba.lambda_min",
         [](RunConfig& c, auto& k, auto& v) { c.mba.grid.lambda1_min = c.mba.grid.lambda2_min = parse_double(k, v); }},
        {"mba.lambda_max",
         [](RunConfig& c, auto& k, auto& v) { c.mba.grid.lambda1_max = c.mba.grid.lambda2_max = parse_double(k, v); }},
        {"mba.grid_step", [](RunConfig& c, auto& k, auto& v) { c.mba.grid.step = parse_double(k, v); }},
        {"mba.grid_refine", [](RunConfig& c, auto& k, auto& v) { c.mba.grid.refine = parse_bool(k, v); }},
        {"mba.ring_collapsed", [](RunConfig& c, auto& k, auto& v) { c.mba.ring_collapsed = parse_bool(k, v); }},
    };
    return table;
}

void apply(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown setting");
    it->second(cfg, key, value);
}

void check_range(const std::string& key, const Range& r) {
    if (!(r.step > 0.0)) throw ConfigError(key + "_step", "step must be positive");
    if (r.min > r.max) throw ConfigError(key + "_min", "range is empty (min > max)");
}

}  // namespace

std::vector<double> expand_range(const Range& r) {
    if (!(r.step > 0.0) || !(r.min <= r.max)) throw std::invalid_argument("empty or malformed range");
    std::vector<double> out;
    for (long k = 0;; ++k) {
        const double v = r.min + k * r.step;
        if (v > r.max + 1e-9 * r.step) break;
        out.push_back(v);
    }
    if (out.back() < r.max - 1e-9 * r.step) out.push_back(r.max);
    return out;
}

std::string_view to_string(Method m) { return m == Method::optimal ? "optimal" : "heuristic"; }

Constellation RunConfig::constellation() const { return make_constellation(family, order); }

void check_config(const RunConfig& cfg) {
    if (cfg.family == Family::custom)
        throw ConfigError("constellation.family", "only qam and psk can be configured");
    try {
        (void)cfg.constellation();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("constellation.order", e.what());
    }
    try {
        validate(cfg.ofdm);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("ofdm", e.what());
    }
    if (!(cfg.sigma2 > 0.0)) throw ConfigError("channel.sigma2", "must be positive");
    check_range("channel.snr_db", cfg.snr_db);
    if (cfg.c0_sweep && !(cfg.c0_sweep->step > 0.0)) throw ConfigError("shaping.c0_step", "step must be positive");
    if (cfg.c0_sweep && cfg.c0_sweep->min > cfg.c0_sweep->max)
        throw ConfigError("shaping.c0_min", "sweep is empty (c0_min > c0_max)");

    if (cfg.n_mc_af < 1) throw ConfigError("mc.n_mc_af", "must be positive");
    if (cfg.n_mc_mi < kMinMiDraws)
        throw ConfigError("mc.n_mc_mi", "must be at least " + std::to_string(kMinMiDraws));
    if (cfg.n_mc_mba < 1) throw ConfigError("mc.n_mc_mba", "must be positive");
    if (cfg.n_mc_detect < 1) throw ConfigError("mc.n_mc_detect", "must be positive");

    check_range("af.tau", cfg.af.tau);
    check_range("af.nu", cfg.af.nu);
    if (cfg.af.slice_cells < 0 || cfg.af.slice_cells > cfg.ofdm.L)
        throw ConfigError("af.slice_cells", "must lie in [0, subcarriers]");

    check_range("detection.snr_db", cfg.detection.snr_db);
    DetectionScenario sc;
    sc.constellation = cfg.constellation();
    sc.distribution = uniform_distribution(sc.constellation);
    sc.ofdm = cfg.ofdm;
    sc.ofdm.N = 1;
    sc.target_cell = cfg.detection.target_cell;
    sc.si_cell = cfg.detection.si_cell;
    sc.si_to_noise_db = cfg.detection.si_to_noise_db;
    sc.pfa = cfg.detection.pfa;
    sc.n_mc = cfg.n_mc_detect;
    sc.window = cfg.detection.window;
    try {
        validate(sc);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("detection", e.what());
    }
    if (cfg.detection.n_cal != 0 && cfg.detection.n_cal < static_cast<long>(std::ceil(10.0 / cfg.detection.pfa)))
        throw ConfigError("detection.n_cal", "needs at least 10 / pfa calibration tests");

    const auto& m = cfg.mba;
    if (!(m.epsilon > 0.0)) throw ConfigError("mba.epsilon", "must be positive");
    if (m.max_iter < 1) throw ConfigError("mba.max_iter", "must be positive");
    if (!(m.newton_tol > 0.0)) throw ConfigError("mba.newton_tol", "must be positive");
    if (m.newton_max_iter < 1) throw ConfigError("mba.newton_max_iter", "must be positive");
    if (!(m.grid.step > 0.0)) throw ConfigError("mba.grid_step", "must be positive");
    if (!(m.grid.lambda1_min < m.grid.lambda1_max)) throw ConfigError("mba.lambda_min", "must be below mba.lambda_max");
}

RunConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()), e.message());
    }
    static const std::set<std::string> sections = {"constellation", "ofdm", "channel", "shaping",
                                                   "mc", "af", "detection", "mba"};
    RunConfig cfg;
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            if (node.data().empty() && sections.count(name)) continue;  // empty section
            apply(cfg, name, node.data());
            continue;
        }
        for (const auto& [key, leaf] : node) apply(cfg, name + "." + key, leaf.data());
    }
    check_config(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("--config", "cannot read " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

}  // namespace pcs
