// config.hpp: INI experiment configuration, schema and validation
//
// Layout (sections and keys; everything except experiment.name has a default):
//   [experiment] name, backend, seed, output
//   [sweep]      g_grid, n_steps
//   [system]     model, rho_s
//   [thermal]    beta, beta_hot, beta_cold, beta_s
//   [bath]       n_osc, omega_max, lamb
//   [cl]         mass, omega, t_wait_factor, exact_dynamics, window_factor, window_max, dt
// Keys that the chosen experiment does not read are rejected.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace sct::bench {

class ConfigFileError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Diagnostic {
    std::string key;
    std::string message;

    std::string to_string() const { return key + ": " + message; }
};

enum class Experiment { WorkSweep, HeatSweep, CarnotSweep, PowerSweep, ClFig1, ClEquilibration, Invariants };
enum class Backend { Exact, Gaussian };

inline const std::vector<std::pair<std::string, Experiment>>& experiment_names() {
    static const std::vector<std::pair<std::string, Experiment>> names{
        {"work_sweep", Experiment::WorkSweep},   {"heat_sweep", Experiment::HeatSweep},
        {"carnot_sweep", Experiment::CarnotSweep}, {"power_sweep", Experiment::PowerSweep},
        {"cl_fig1", Experiment::ClFig1},         {"cl_equilibration", Experiment::ClEquilibration},
        {"invariants", Experiment::Invariants}};
    return names;
}

inline std::string to_string(Experiment e) {
    for (const auto& [n, v] : experiment_names())
        if (v == e) return n;
    return "?";
}

inline std::string to_string(Backend b) { return b == Backend::Exact ? "exact" : "gaussian"; }

inline Backend native_backend(Experiment e) {
    return (e == Experiment::ClFig1 || e == Experiment::ClEquilibration) ? Backend::Gaussian : Backend::Exact;
}

struct ExperimentConfig {
    Experiment experiment = Experiment::WorkSweep;
    Backend backend = Backend::Exact;
    std::uint64_t seed = 1;
    std::string output;

    std::vector<double> g_grid;
    int n_steps = 0;

    std::string model = "qubit";
    std::vector<double> rho_s{0.3, 0.7};

    double beta = 1.0;
    double beta_hot = 0.5;
    double beta_cold = 1.0;
    double beta_s = 1.0;

    int n_osc = 165;
    double omega_max = 1.2;
    double lamb = 1.0;

    double mass = 1.0;
    double omega = 1.0;
    double t_wait_factor = 10.0;
    bool exact_dynamics = true;
    double window_factor = 60.0;
    double window_max = 800.0;
    double dt = 0.2;

    /// effective "section.key" -> value text for every key the experiment reads
    std::map<std::string, std::string> effective;
};

namespace config_detail {

enum class Kind { Text, Real, Integer, Unsigned, Bool, RealList };

struct KeySpec {
    std::string key;
    Kind kind;
    std::string default_value;
    std::set<Experiment> used_by;
};

inline std::set<Experiment> all_experiments() {
    std::set<Experiment> s;
    for (const auto& [n, e] : experiment_names()) s.insert(e);
    return s;
}

inline const std::vector<KeySpec>& schema() {
    using E = Experiment;
    const std::set<E> exact_work{E::WorkSweep, E::HeatSweep};
    const std::set<E> engine{E::CarnotSweep, E::PowerSweep};
    const std::set<E> sweeps{E::WorkSweep, E::HeatSweep, E::CarnotSweep, E::PowerSweep, E::ClFig1, E::ClEquilibration};
    const std::set<E> cl{E::ClFig1, E::ClEquilibration};
    std::set<E> steps = exact_work;
    steps.insert(engine.begin(), engine.end());
    steps.insert(E::ClFig1);
    std::set<E> beta_users = exact_work;
    beta_users.insert(cl.begin(), cl.end());
    static const std::vector<KeySpec> s{
        {"experiment.name", Kind::Text, "", all_experiments()},
        {"experiment.backend", Kind::Text, "", all_experiments()},
        {"experiment.seed", Kind::Unsigned, "1", all_experiments()},
        {"experiment.output", Kind::Text, "", all_experiments()},
        {"sweep.g_grid", Kind::RealList, "", sweeps},
        {"sweep.n_steps", Kind::Integer, "", steps},
        {"system.model", Kind::Text, "qubit", exact_work},
        {"system.rho_s", Kind::RealList, "0.3, 0.7", exact_work},
        {"thermal.beta", Kind::Real, "", beta_users},
        {"thermal.beta_hot", Kind::Real, "0.5", engine},
        {"thermal.beta_cold", Kind::Real, "1", engine},
        {"thermal.beta_s", Kind::Real, "1", cl},
        {"bath.n_osc", Kind::Integer, "", cl},
        {"bath.omega_max", Kind::Real, "", cl},
        {"bath.lamb", Kind::Real, "1", cl},
        {"cl.mass", Kind::Real, "1", cl},
        {"cl.omega", Kind::Real, "1", cl},
        {"cl.t_wait_factor", Kind::Real, "10", {E::ClFig1}},
        {"cl.exact_dynamics", Kind::Bool, "true", {E::ClFig1}},
        {"cl.window_factor", Kind::Real, "60", {E::ClEquilibration}},
        {"cl.window_max", Kind::Real, "800", {E::ClEquilibration}},
        {"cl.dt", Kind::Real, "0.2", {E::ClEquilibration}},
    };
    return s;
}

/// Defaults that depend on the experiment.
inline std::string dependent_default(const std::string& key, Experiment e) {
    const bool cl = native_backend(e) == Backend::Gaussian;
    if (key == "experiment.backend") return to_string(native_backend(e));
    if (key == "experiment.output") return "sct_" + to_string(e) + ".csv";
    if (key == "sweep.n_steps") return e == Experiment::ClFig1 ? "200" : "0";
    if (key == "thermal.beta") return cl ? "3.5" : "1";
    if (key == "bath.n_osc") return e == Experiment::ClFig1 ? "165" : "300";
    if (key == "bath.omega_max") return e == Experiment::ClFig1 ? "1.2" : "2.1";
    return "";
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_real(const std::string& text) {
    const std::string s = trim(text);
    double x = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(x)) return std::nullopt;
    return x;
}

template <class I>
std::optional<I> parse_integer(const std::string& text) {
    const std::string s = trim(text);
    I x{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return x;
}

inline std::optional<bool> parse_bool(const std::string& text) {
    const std::string s = trim(text);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    return std::nullopt;
}

inline std::optional<std::vector<double>> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto x = parse_real(item);
        if (!x) return std::nullopt;
        out.push_back(*x);
    }
    if (out.empty()) return std::nullopt;
    return out;
}

inline std::string format_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        s += (i ? ", " : "") + std::string(buf);
    }
    return s;
}

} // namespace config_detail

struct ConfigResult {
    std::optional<ExperimentConfig> config;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return config.has_value() && diagnostics.empty(); }
};

/// Command-line overrides applied on top of the file before validation.
struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
};

/// Validates and decodes an INI tree. Every problem is reported; the config is
/// returned only when there are none.
inline ConfigResult decode_config(const boost::property_tree::ptree& tree, const ConfigOverrides& overrides = {}) {
    using namespace config_detail;
    ConfigResult res;
    auto diag = [&](const std::string& key, const std::string& msg) { res.diagnostics.push_back({key, msg}); };

    // flatten, rejecting keys outside any section and unknown keys
    std::map<std::string, std::string> raw;
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            if (!body.data().empty()) diag(section, "key outside any section");
            continue;
        }
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            const bool known = std::any_of(schema().begin(), schema().end(), [&](const KeySpec& k) { return k.key == full; });
            if (!known) diag(full, "unknown key");
            else raw[full] = trim(value.data());
        }
    }
    if (overrides.seed) raw["experiment.seed"] = std::to_string(*overrides.seed);
    if (overrides.output) raw["experiment.output"] = *overrides.output;

    const auto name_it = raw.find("experiment.name");
    if (name_it == raw.end()) {
        diag("experiment.name", "required key is missing");
        return res;
    }
    std::optional<Experiment> exp;
    for (const auto& [n, e] : experiment_names())
        if (n == name_it->second) exp = e;
    if (!exp) {
        std::string list;
        for (const auto& [n, e] : experiment_names()) list += (list.empty() ? "" : ", ") + n;
        diag("experiment.name", "unknown experiment '" + name_it->second + "' (expected one of: " + list + ")");
        return res;
    }

    ExperimentConfig cfg;
    cfg.experiment = *exp;
    for (const auto& spec : schema()) {
        const bool used = spec.used_by.count(*exp) > 0;
        const auto it = raw.find(spec.key);
        if (!used) {
            if (it != raw.end() && !(spec.key == "experiment.seed" && overrides.seed) &&
                !(spec.key == "experiment.output" && overrides.output))
                diag(spec.key, "not used by experiment '" + to_string(*exp) + "'");
            continue;
        }
        std::string text = it != raw.end() ? it->second : spec.default_value;
        if (text.empty() && it == raw.end()) text = dependent_default(spec.key, *exp);
        cfg.effective[spec.key] = text;
    }

    auto real = [&](const std::string& key, double& out) {
        if (!cfg.effective.count(key)) return false;
        const auto x = parse_real(cfg.effective[key]);
        if (!x) {
            diag(key, "expected a finite real number, got '" + cfg.effective[key] + "'");
            return false;
        }
        out = *x;
        return true;
    };
    auto positive = [&](const std::string& key, double& out) {
        if (real(key, out) && !(out > 0.0)) diag(key, "must be > 0");
    };
    auto integer = [&](const std::string& key, int& out, int lo, int hi) {
        if (!cfg.effective.count(key)) return;
        const auto x = parse_integer<int>(cfg.effective[key]);
        if (!x) diag(key, "expected an integer, got '" + cfg.effective[key] + "'");
        else if (*x < lo || *x > hi) diag(key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        else out = *x;
    };

    // experiment
    const std::string backend = cfg.effective["experiment.backend"];
    if (backend != "exact" && backend != "gaussian") {
        diag("experiment.backend", "expected 'exact' or 'gaussian', got '" + backend + "'");
    } else {
        cfg.backend = backend == "exact" ? Backend::Exact : Backend::Gaussian;
        if (*exp != Experiment::Invariants && cfg.backend != native_backend(*exp))
            diag("experiment.backend", "experiment '" + to_string(*exp) + "' runs on the " +
                                           to_string(native_backend(*exp)) + " backend, not " + backend);
    }
    if (const auto s = parse_integer<std::uint64_t>(cfg.effective["experiment.seed"])) cfg.seed = *s;
    else diag("experiment.seed", "expected a non-negative 64-bit integer, got '" + cfg.effective["experiment.seed"] + "'");
    cfg.output = cfg.effective["experiment.output"];
    if (cfg.output.empty()) diag("experiment.output", "must not be empty");

    // sweep
    if (cfg.effective.count("sweep.g_grid")) {
        const std::string& text = cfg.effective["sweep.g_grid"];
        const auto list = text.empty() ? std::nullopt : parse_list(text);
        if (!list) {
            diag("sweep.g_grid", text.empty() ? "required key is missing" : "expected a comma-separated list of reals");
        } else {
            cfg.g_grid = *list;
            if (std::any_of(cfg.g_grid.begin(), cfg.g_grid.end(), [](double g) { return g < 0.0; }))
                diag("sweep.g_grid", "values must be >= 0");
            for (std::size_t i = 1; i < cfg.g_grid.size(); ++i)
                if (!(cfg.g_grid[i] > cfg.g_grid[i - 1])) {
                    diag("sweep.g_grid", "values must be strictly ascending");
                    break;
                }
        }
    }
    integer("sweep.n_steps", cfg.n_steps, *exp == Experiment::ClFig1 ? 1 : 0, 100000);

    // system
    if (cfg.effective.count("system.model")) {
        cfg.model = cfg.effective["system.model"];
        if (cfg.model != "qubit" && cfg.model != "qubit_commuting")
            diag("system.model", "expected 'qubit' or 'qubit_commuting', got '" + cfg.model + "'");
    }
    if (cfg.effective.count("system.rho_s")) {
        const auto list = parse_list(cfg.effective["system.rho_s"]);
        if (!list || list->size() != 2) {
            diag("system.rho_s", "expected two populations");
        } else {
            cfg.rho_s = *list;
            if (!((*list)[0] > 0.0 && (*list)[1] > 0.0)) diag("system.rho_s", "populations must be > 0");
            else if (std::abs((*list)[0] + (*list)[1] - 1.0) > 1e-12) diag("system.rho_s", "populations must sum to 1");
        }
    }

    // thermal
    positive("thermal.beta", cfg.beta);
    positive("thermal.beta_s", cfg.beta_s);
    const bool bh = cfg.effective.count("thermal.beta_hot") > 0;
    positive("thermal.beta_hot", cfg.beta_hot);
    positive("thermal.beta_cold", cfg.beta_cold);
    if (bh && cfg.beta_hot > 0.0 && cfg.beta_cold > 0.0 && !(cfg.beta_hot < cfg.beta_cold))
        diag("thermal.beta_hot", "must be < thermal.beta_cold (hot bath is the warmer one)");

    // bath and oscillator
    integer("bath.n_osc", cfg.n_osc, 1, 5000);
    positive("bath.omega_max", cfg.omega_max);
    if (real("bath.lamb", cfg.lamb) && cfg.lamb < 0.0) diag("bath.lamb", "must be >= 0");
    positive("cl.mass", cfg.mass);
    positive("cl.omega", cfg.omega);
    positive("cl.t_wait_factor", cfg.t_wait_factor);
    if (cfg.effective.count("cl.exact_dynamics")) {
        const auto b = parse_bool(cfg.effective["cl.exact_dynamics"]);
        if (!b) diag("cl.exact_dynamics", "expected true or false");
        else cfg.exact_dynamics = *b;
    }
    positive("cl.window_factor", cfg.window_factor);
    positive("cl.window_max", cfg.window_max);
    positive("cl.dt", cfg.dt);
    if (*exp == Experiment::ClEquilibration && cfg.dt > 0.0 && cfg.window_max > 0.0 && cfg.dt * 4.0 > cfg.window_max)
        diag("cl.dt", "window must hold at least four samples");
    if (*exp == Experiment::ClFig1 && cfg.exact_dynamics &&
        std::any_of(cfg.g_grid.begin(), cfg.g_grid.end(), [](double g) { return g == 0.0; }))
        diag("sweep.g_grid", "exact dynamics waits t_wait_factor / g^2, so g must be > 0");
    if (*exp == Experiment::ClEquilibration &&
        std::any_of(cfg.g_grid.begin(), cfg.g_grid.end(), [](double g) { return g == 0.0; }))
        diag("sweep.g_grid", "the window is window_factor / g^2, so g must be > 0");

    // normalized echo for lists
    if (!cfg.g_grid.empty()) cfg.effective["sweep.g_grid"] = format_list(cfg.g_grid);
    if (cfg.effective.count("system.rho_s")) cfg.effective["system.rho_s"] = format_list(cfg.rho_s);

    if (res.diagnostics.empty()) res.config = std::move(cfg);
    return res;
}

/// Parses INI text; syntax errors become a diagnostic naming the line.
inline ConfigResult parse_config_text(const std::string& text, const ConfigOverrides& overrides = {}) {
    boost::property_tree::ptree tree;
    std::istringstream is(text);
    try {
        boost::property_tree::ini_parser::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        ConfigResult r;
        r.diagnostics.push_back({"line " + std::to_string(e.line()), e.message()});
        return r;
    }
    return decode_config(tree, overrides);
}

inline ConfigResult load_config(const std::string& path, const ConfigOverrides& overrides = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigFileError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), overrides);
}

/// "section.key = value" lines, sorted, one per effective key. The output path is
/// left out: it does not change what is computed.
inline std::string canonical_text(const ExperimentConfig& cfg) {
    std::string s;
    for (const auto& [k, v] : cfg.effective)
        if (k != "experiment.output") s += k + " = " + v + "\n";
    return s;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

} // namespace sct::bench
