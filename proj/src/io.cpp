#include "pcs/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pcs {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw std::invalid_argument("CSV header is empty");
}

void CsvTable::add_row(const std::vector<double>& values) {
    if (values.size() != header_.size())
        throw std::invalid_argument("CSV row has " + std::to_string(values.size()) + " cells, header has " +
                                    std::to_string(header_.size()));
    rows_.push_back(values);
}

std::string CsvTable::str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) out += ',';
        out += header_[i];
    }
    out += '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

CsvTable af_grid_csv(const AFGrid& grid) {
    CsvTable t({"tau", "nu", grid.units == Units::db ? "value_db" : "value"});
    for (std::size_t i = 0; i < grid.tau_axis.size(); ++i)
        for (std::size_t j = 0; j < grid.nu_axis.size(); ++j)
            t.add_row({grid.tau_axis[i], grid.nu_axis[j], grid.at(i, j)});
    return t;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw std::runtime_error("write to " + path.string() + " failed");
}

Json constellation_to_json(const Constellation& c, const Distribution& d) {
    if (d.ring_mass.size() != c.ring_count())
        throw std::invalid_argument("distribution does not match the constellation's rings");
    Json j;
    j["family"] = std::string(to_string(c.family()));
    j["order"] = c.order();
    Json rings = Json::array();
    for (std::size_t w = 0; w < c.ring_count(); ++w) {
        Json r;
        r["amp2"] = c.ring_amp2(w);
        r["count"] = c.ring_size(w);
        r["mass"] = d.ring_mass[w];
        rings.push_back(std::move(r));
    }
    j["rings"] = std::move(rings);
    return j;
}

std::pair<Constellation, Distribution> constellation_from_json(const Json& j) {
    try {
        const Family family = family_from_string(j.at("family").get<std::string>());
        const int order = j.at("order").get<int>();
        const Json& rings = j.at("rings");
        if (!rings.is_array() || rings.empty()) throw std::invalid_argument("\"rings\" must be a nonempty array");

        Constellation c;
        if (family == Family::custom) {
            // Phase offsets are not stored; custom rings come back at phase 0.
            std::vector<RingSpec> spec;
            for (const auto& r : rings)
                spec.push_back({std::sqrt(r.at("amp2").get<double>()), r.at("count").get<int>(), 0.0});
            c = make_custom_constellation(spec);
        } else {
            c = make_constellation(family, order);
        }
        if (c.order() != order) throw std::invalid_argument("ring counts do not add up to \"order\"");
        if (rings.size() != c.ring_count())
            throw std::invalid_argument("expected " + std::to_string(c.ring_count()) + " rings, found " +
                                        std::to_string(rings.size()));
        std::vector<double> mass;
        for (std::size_t w = 0; w < rings.size(); ++w) {
            const auto& r = rings[w];
            const double amp2 = r.at("amp2").get<double>();
            if (r.at("count").get<int>() != c.ring_size(w) || std::abs(amp2 - c.ring_amp2(w)) > 1e-12 * c.ring_amp2(w))
                throw std::invalid_argument("ring " + std::to_string(w) + " does not match the " + c.id() + " alphabet");
            mass.push_back(r.at("mass").get<double>());
        }
        Distribution d = expand_ring_mass(c, mass);
        return {std::move(c), std::move(d)};
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("constellation document: ") + e.what());
    }
}

Json result_to_json(const PCSResult& r) {
    Json j;
    j["c0"] = r.c0;
    j["lambda"] = {r.lambda1, r.lambda2};
    j["ring_mass"] = r.ring_mass;
    j["air_bits"] = r.air_bits;
    j["converged"] = r.converged;
    j["iters"] = r.iterations;
    j["trace"] = r.trace;
    j["method"] = r.method;
    j["fourth_moment"] = r.fourth_moment;
    j["air_std_error"] = r.air_std_error;
    j["boundary"] = r.boundary;
    j["newton_iterations"] = r.newton_iterations;
    j["newton_fallbacks"] = r.newton_fallbacks;
    return j;
}

Json result_to_json(const HeuristicResult& r, const MIEstimate& air) {
    Json j;
    j["c0"] = r.c0_used;
    j["ring_mass"] = r.ring_mass;
    j["air_bits"] = air.mi_bits;
    j["converged"] = true;
    j["iters"] = 0;
    j["trace"] = Json::array();
    j["method"] = "heuristic";
    j["fourth_moment"] = r.fourth_moment;
    j["air_std_error"] = air.std_error;
    j["c0_requested"] = r.c0_requested;
    j["clamped"] = r.clamped;
    j["branch"] = r.branch;
    return j;
}

Json lut_to_json(std::vector<LutEntry> entries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const LutEntry& a, const LutEntry& b) { return a.c0 < b.c0; });
    Json out = Json::array();
    for (const auto& e : entries) {
        Json j;
        j["c0"] = e.c0;
        j["sigma2"] = e.sigma2;
        j["ring_mass"] = e.ring_mass;
        j["air_bits"] = e.air_bits;
        j["method"] = e.method;
        out.push_back(std::move(j));
    }
    return out;
}

std::vector<LutEntry> lut_from_json(const Json& j) {
    if (!j.is_array()) throw std::invalid_argument("look-up table must be a JSON array");
    std::vector<LutEntry> out;
    try {
        for (const auto& e : j)
            out.push_back({e.at("c0").get<double>(), e.at("sigma2").get<double>(),
                           e.at("ring_mass").get<std::vector<double>>(), e.at("air_bits").get<double>(),
                           e.at("method").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("look-up table entry: ") + e.what());
    }
    return out;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace pcs
