#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "pcs/comms_metrics.hpp"
#include "pcs/constellation.hpp"
#include "pcs/ofdm_af.hpp"
#include "pcs/pcs_heuristic.hpp"
#include "pcs/pcs_optimal.hpp"

namespace pcs {

using Json = nlohmann::ordered_json;

/// Nine significant digits, as written to every CSV cell.
std::string format_number(double v);

/// Comma-separated table with a header row and '\n' line endings.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(const std::vector<double>& values);
    std::size_t rows() const { return rows_.size(); }
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

CsvTable af_grid_csv(const AFGrid& grid);

/// Writes `text` to `path`, creating parent directories.
/// Throws std::runtime_error if the file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& text);

/// {"family", "order", "rings": [{"amp2", "count", "mass"}]}
Json constellation_to_json(const Constellation& c, const Distribution& d);

/// Inverse of constellation_to_json for QAM and PSK documents: rebuilds the
/// alphabet from family/order, checks the ring table against it and expands
/// the ring masses. Throws std::invalid_argument on any mismatch.
std::pair<Constellation, Distribution> constellation_from_json(const Json& j);

Json result_to_json(const PCSResult& r);
/// Heuristic results carry no multipliers or trace; the rate comes from `air`.
Json result_to_json(const HeuristicResult& r, const MIEstimate& air);

struct LutEntry {
    double c0 = 0.0;
    double sigma2 = 0.0;
    std::vector<double> ring_mass;
    double air_bits = 0.0;
    std::string method;
};

/// JSON array sorted by c0 (ties keep their input order).
Json lut_to_json(std::vector<LutEntry> entries);
std::vector<LutEntry> lut_from_json(const Json& j);

/// Two-space indented JSON followed by a newline.
std::string dump(const Json& j);

}  // namespace pcs
