#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcs/constellation.hpp"
#include "pcs/detection.hpp"
#include "pcs/ofdm_af.hpp"
#include "pcs/pcs_optimal.hpp"

namespace pcs {

/// Bad or inconsistent configuration. `key` names the offending entry as
/// "section.name" (or just the section for cross-field checks).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct Range {
    double min = 0.0;
    double max = 0.0;
    double step = 1.0;
};

/// min, min + step, ... up to max; max itself is appended when the last
/// step falls short of it by more than 1e-9 step.
std::vector<double> expand_range(const Range& r);

struct AfSettings {
    Range tau{-0.9375, 0.9375, 0.0625};  // units of T_p
    Range nu{-4.0, 4.0, 0.25};           // units of delta_f
    int slice_cells = 0;  // zero-Doppler slice at tau = k T_p / L for k < slice_cells; 0 means L
    bool normalize = true;
};

struct DetectionSettings {
    int target_cell = 8;
    int si_cell = 0;
    double si_to_noise_db = 10.0;
    double pfa = 1e-4;
    CfarWindow window;
    double sensing_snr_db = 10.0;  // operating point used by the tradeoff sweep
    Range snr_db{0.0, 20.0, 1.0};
    long n_cal = 0;                // 0 means 100 / pfa
};

enum class Method { optimal, heuristic };

std::string_view to_string(Method m);

struct RunConfig {
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "out";

    Family family = Family::qam;
    int order = 16;
    OFDMConfig ofdm;

    double sigma2 = 0.01;
    Range snr_db{0.0, 30.0, 2.0};  // rate curves

    Method method = Method::optimal;
    std::optional<double> c0;      // single shaping target
    std::optional<Range> c0_sweep; // tradeoff / look-up-table sweep

    int n_mc_af = 1000;
    int n_mc_mi = kDefaultMiDraws;
    int n_mc_mba = 10000;
    int n_mc_detect = 5000;

    AfSettings af;
    DetectionSettings detection;
    MBAConfig mba;  // c0, sigma2 and sample counts are filled per run

    Constellation constellation() const;
};

/// Parses an INI file. Unknown sections or keys, unparsable values and
/// out-of-range settings raise ConfigError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text);

/// Cross-field checks shared by the loader and flag overrides.
void check_config(const RunConfig& cfg);

}  // namespace pcs
