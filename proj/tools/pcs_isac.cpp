// pcs_isac: shaping, ambiguity-function, rate, detection and tradeoff runs
// driven by an INI config. See README.md for the keys.

#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"

#include "pcs/commands.hpp"
#include "pcs/config.hpp"

namespace {

struct Flags {
    std::string config;
    std::string method;
    std::optional<double> c0;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> n_mc;
};

pcs::RunConfig resolve(const Flags& f, const std::string& command) {
    pcs::RunConfig cfg = f.config.empty() ? pcs::RunConfig{} : pcs::load_config(f.config);
    if (!f.method.empty()) cfg.method = f.method == "optimal" ? pcs::Method::optimal : pcs::Method::heuristic;
    if (f.c0) {
        cfg.c0 = *f.c0;
        cfg.c0_sweep.reset();
    }
    if (f.seed) cfg.seed = *f.seed;
    if (!f.out.empty()) cfg.out_dir = f.out;
    if (f.n_mc) {
        if (command == "af") cfg.n_mc_af = *f.n_mc;
        else if (command == "air") cfg.n_mc_mi = *f.n_mc;
        else if (command == "detect") cfg.n_mc_detect = *f.n_mc;
        else cfg.n_mc_mba = *f.n_mc;
    }
    pcs::check_config(cfg);
    return cfg;
}

int run(const std::string& command, const pcs::RunConfig& cfg) {
    if (command == "tradeoff") return pcs::cmd_tradeoff(cfg, std::cerr);
    if (command == "af") return pcs::cmd_af(cfg, std::cerr);
    if (command == "air") return pcs::cmd_air(cfg, std::cerr);
    if (command == "shape") return pcs::cmd_shape(cfg, std::cerr);
    if (command == "detect") return pcs::cmd_detect(cfg, std::cerr);
    return pcs::cmd_lut_export(cfg, std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic constellation shaping for OFDM sensing and communication"};
    app.require_subcommand(1);
    app.fallthrough();

    Flags f;
    app.add_option("--config", f.config, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--method", f.method, "Shaping method")->check(CLI::IsMember({"optimal", "heuristic"}));
    app.add_option("--c0", f.c0, "Target fourth moment (a single point for sweeps)");
    app.add_option("--seed", f.seed, "Master seed");
    app.add_option("--out", f.out, "Output directory");
    app.add_option("--n-mc", f.n_mc, "Sample count of the command's main Monte-Carlo estimate")
        ->check(CLI::PositiveNumber);

    app.add_subcommand("tradeoff", "AIR and detection probability across a c0 sweep, both solvers");
    app.add_subcommand("af", "Average ambiguity function grid and zero-Doppler slice");
    app.add_subcommand("air", "Mutual information against SNR");
    app.add_subcommand("shape", "Shaped distribution at one c0");
    app.add_subcommand("detect", "Detection probability against SNR");
    app.add_subcommand("lut", "Look-up table of shaped distributions across a c0 sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : pcs::kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        return run(command, resolve(f, command));
    } catch (const pcs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return pcs::kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return pcs::kExitConfig;
    } catch (const std::overflow_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return pcs::kExitNoConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
