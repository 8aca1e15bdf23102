// output.hpp: CSV and JSON sidecar emission

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "sct/bench/config.hpp"
#include "sct/bench/csv.hpp"
#include "sct/bench/experiments.hpp"

namespace sct::bench {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kCsvFormatVersion = 1;

inline std::string config_hash(const ExperimentConfig& cfg) { return "fnv1a64:" + hex64(fnv1a64(canonical_text(cfg))); }

/// out.csv -> out.json; a path without extension gets ".json" appended.
inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
    std::filesystem::path p = csv;
    return p.has_extension() ? p.replace_extension(".json") : std::filesystem::path(csv.string() + ".json");
}

inline std::string render_csv(const ExperimentConfig& cfg, const SweepResult& r) {
    std::ostringstream os;
    write_csv(os, r.table,
              {"sct-bench csv v" + std::to_string(kCsvFormatVersion), "experiment: " + to_string(cfg.experiment),
               "config_hash: " + config_hash(cfg)});
    return os.str();
}

inline nlohmann::json render_sidecar(const ExperimentConfig& cfg, const SweepResult& r, const std::string& csv_name) {
    nlohmann::json j;
    j["tool"] = "sct-bench";
    j["tool_version"] = kToolVersion;
    j["csv_format_version"] = kCsvFormatVersion;
    j["experiment"] = to_string(cfg.experiment);
    j["backend"] = to_string(cfg.backend);
    j["csv"] = csv_name;
    j["config_hash"] = config_hash(cfg);
    nlohmann::json echo = nlohmann::json::object();
    for (const auto& [k, v] : cfg.effective) {
        const auto dot = k.find('.');
        echo[k.substr(0, dot)][k.substr(dot + 1)] = v;
    }
    j["config"] = echo;
    j["columns"] = r.table.columns;
    j["rows"] = r.table.rows.size();
    nlohmann::json inv;
    inv["checks"] = r.hard_checks;
    inv["violations"] = r.violations.size();
    inv["passed"] = r.ok();
    nlohmann::json details = nlohmann::json::array();
    for (const auto& v : r.violations) details.push_back({{"row", v.row}, {"check", v.check}, {"excess", v.excess}});
    inv["details"] = details;
    j["hard_invariants"] = inv;
    if (r.invariants) {
        nlohmann::json suite;
        suite["passed"] = r.invariants->passed();
        suite["failed"] = r.invariants->failed();
        j["invariant_suite"] = suite;
    }
    return j;
}

/// Writes the CSV and its sidecar; returns the sidecar path.
inline std::filesystem::path write_outputs(const ExperimentConfig& cfg, const SweepResult& r,
                                           const std::filesystem::path& csv_path) {
    if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
    const auto json_path = sidecar_path(csv_path);
    {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + csv_path.string());
        out << render_csv(cfg, r);
    }
    {
        std::ofstream out(json_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + json_path.string());
        out << render_sidecar(cfg, r, csv_path.filename().string()).dump(2) << "\n";
    }
    return json_path;
}

} // namespace sct::bench
