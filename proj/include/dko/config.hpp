#ifndef DKO_CONFIG_HPP
#define DKO_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dko/errors.hpp"
#include "dko/rng.hpp"

namespace dko {

// Shortest deterministic round-trip formatting for doubles; shared by the
// CSV exporter and the config canonicalizer.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

enum class SolverKind { kCentralized, kRichardson, kAdmm, kAdmmDirect };

inline std::string to_string(SolverKind s) {
    switch (s) {
        case SolverKind::kCentralized: return "centralized";
        case SolverKind::kRichardson: return "richardson";
        case SolverKind::kAdmm: return "admm";
        case SolverKind::kAdmmDirect: return "admm_direct";
    }
    return "?";
}

inline SolverKind solver_from_string(const std::string& s) {
    if (s == "centralized") return SolverKind::kCentralized;
    if (s == "richardson") return SolverKind::kRichardson;
    if (s == "admm") return SolverKind::kAdmm;
    if (s == "admm_direct") return SolverKind::kAdmmDirect;
    throw ConfigError("unknown solver '" + s + "'");
}

// Cooperative localization scenario configuration (planar double integrators,
// state [p; v] per agent). Loaded from a flat key=value file; unknown keys
// are rejected.
struct ScenarioConfig {
    int n_agents = 10;
    int n_anchors = 3;
    double ts = 0.05;
    long steps = 6000;
    std::uint64_t seed = 1;

    double workspace_size = 1.0;
    double graph_radius = 0.45;                  // proximity threshold, absolute
    std::vector<std::pair<int, int>> edges;      // explicit directed edges; overrides proximity
    bool explicit_edges = false;

    std::string gamma_mode = "diagonal";         // "scalar" | "diagonal"
    double gamma = -1.0;                         // scalar mode; <0 derives exp(-5 ts)
    double gamma_pos = -1.0;                     // diagonal mode; <0 derives exp(-5 ts)
    double gamma_vel = -1.0;                     // diagonal mode; <0 derives exp(-50 ts)

    double epsilon = 1.0;

    // Information weights as used in the additive update. With r_as_inverse
    // the stored values are read as the inverses of the weights instead.
    double r_local = 0.2;
    double r_relative = 2.0;
    bool r_as_inverse = false;

    SolverKind solver = SolverKind::kAdmm;
    double alpha_r = 0.05;
    double rho = 1.0;
    double alpha = 0.95;
    int h_iters = 1;

    std::vector<double> p0 = {1.0, 1.0, 0.1, 0.1};

    std::string input = "zero";                  // "zero" | "random_accel"
    double input_bound = 0.0;
    double meas_noise = 0.0;
    double vel_std = 0.2;                        // initial true velocity std dev

    long gramian_window = 40;
    int max_retries = 25;
    bool record_dist = true;
    long dist_max_steps = -1;                    // <0 records every step

    double local_weight() const { return r_as_inverse ? 1.0 / r_local : r_local; }
    double relative_weight() const { return r_as_inverse ? 1.0 / r_relative : r_relative; }
    double resolved_gamma() const { return gamma > 0.0 ? gamma : std::exp(-5.0 * ts); }
    double resolved_gamma_pos() const { return gamma_pos > 0.0 ? gamma_pos : std::exp(-5.0 * ts); }
    double resolved_gamma_vel() const { return gamma_vel > 0.0 ? gamma_vel : std::exp(-50.0 * ts); }

    void validate() const {
        if (n_agents <= 0) throw ConfigError("n_agents must be positive");
        if (n_anchors < 0 || n_anchors > n_agents)
            throw ConfigError("n_anchors must be in [0, n_agents]");
        if (ts <= 0.0) throw ConfigError("ts must be positive");
        if (steps < 0) throw ConfigError("steps must be nonnegative");
        if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in (0,1]");
        if (r_local <= 0.0 || r_relative <= 0.0) throw ConfigError("weights must be positive");
        if (gamma_mode != "scalar" && gamma_mode != "diagonal")
            throw ConfigError("gamma_mode must be scalar or diagonal");
        if (p0.size() != 4) throw ConfigError("p0 needs 4 entries (px,py,vx,vy)");
        for (double v : p0)
            if (v <= 0.0) throw ConfigError("p0 entries must be positive");
        if (input != "zero" && input != "random_accel")
            throw ConfigError("input must be zero or random_accel");
        if (h_iters < 1) throw ConfigError("h_iters must be >= 1");
        if (alpha_r <= 0.0) throw ConfigError("alpha_r must be positive");
        if (rho <= 0.0) throw ConfigError("rho must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
        if (gramian_window < 1) throw ConfigError("gramian_window must be >= 1");
        if (meas_noise < 0.0 || input_bound < 0.0 || vel_std < 0.0)
            throw ConfigError("noise/bound parameters must be nonnegative");
    }

    // Canonical `key = value` listing; the config hash and the summary echo
    // are both derived from it.
    std::vector<std::pair<std::string, std::string>> canonical_items() const {
        std::vector<std::pair<std::string, std::string>> kv;
        kv.emplace_back("alpha", format_double(alpha));
        kv.emplace_back("alpha_r", format_double(alpha_r));
        kv.emplace_back("dist_max_steps", std::to_string(dist_max_steps));
        if (explicit_edges) {
            std::string edge_str;
            for (std::size_t i = 0; i < edges.size(); ++i) {
                if (i) edge_str += ",";
                edge_str += std::to_string(edges[i].first) + ">" + std::to_string(edges[i].second);
            }
            kv.emplace_back("edges", edge_str);
        }
        kv.emplace_back("epsilon", format_double(epsilon));
        kv.emplace_back("gamma", format_double(gamma));
        kv.emplace_back("gamma_mode", gamma_mode);
        kv.emplace_back("gamma_pos", format_double(gamma_pos));
        kv.emplace_back("gamma_vel", format_double(gamma_vel));
        kv.emplace_back("gramian_window", std::to_string(gramian_window));
        kv.emplace_back("graph_radius", format_double(graph_radius));
        kv.emplace_back("h_iters", std::to_string(h_iters));
        kv.emplace_back("input", input);
        kv.emplace_back("input_bound", format_double(input_bound));
        kv.emplace_back("max_retries", std::to_string(max_retries));
        kv.emplace_back("meas_noise", format_double(meas_noise));
        kv.emplace_back("n_agents", std::to_string(n_agents));
        kv.emplace_back("n_anchors", std::to_string(n_anchors));
        std::string p0_str;
        for (std::size_t i = 0; i < p0.size(); ++i) {
            if (i) p0_str += ",";
            p0_str += format_double(p0[i]);
        }
        kv.emplace_back("p0", p0_str);
        kv.emplace_back("r_as_inverse", r_as_inverse ? "true" : "false");
        kv.emplace_back("r_local", format_double(r_local));
        kv.emplace_back("r_relative", format_double(r_relative));
        kv.emplace_back("record_dist", record_dist ? "true" : "false");
        kv.emplace_back("rho", format_double(rho));
        kv.emplace_back("seed", std::to_string(seed));
        kv.emplace_back("solver", to_string(solver));
        kv.emplace_back("steps", std::to_string(steps));
        kv.emplace_back("ts", format_double(ts));
        kv.emplace_back("vel_std", format_double(vel_std));
        kv.emplace_back("workspace_size", format_double(workspace_size));
        return kv;
    }

    std::string canonical_text() const {
        std::string out;
        for (const auto& [k, v] : canonical_items()) out += k + " = " + v + "\n";
        return out;
    }

    std::string hash() const {
        const std::string text = canonical_text();
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
        return std::string(buf);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + v + "' as number");
    }
}

inline long parse_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + v + "' as integer");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': cannot parse '" + v + "' as bool");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

}  // namespace detail

inline void apply_config_entry(ScenarioConfig& cfg, const std::string& key,
                               const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_long;
    if (key == "n_agents") cfg.n_agents = static_cast<int>(parse_long(key, value));
    else if (key == "n_anchors") cfg.n_anchors = static_cast<int>(parse_long(key, value));
    else if (key == "ts") cfg.ts = parse_double(key, value);
    else if (key == "steps") cfg.steps = parse_long(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
    else if (key == "workspace_size") cfg.workspace_size = parse_double(key, value);
    else if (key == "graph_radius") cfg.graph_radius = parse_double(key, value);
    else if (key == "edges") {
        cfg.edges.clear();
        cfg.explicit_edges = true;
        if (!value.empty()) {
            for (const auto& tok : detail::split(value, ',')) {
                const auto gt = tok.find('>');
                if (gt == std::string::npos)
                    throw ConfigError("edge '" + tok + "' must look like i>j");
                cfg.edges.emplace_back(
                    static_cast<int>(parse_long(key, detail::trim(tok.substr(0, gt)))),
                    static_cast<int>(parse_long(key, detail::trim(tok.substr(gt + 1)))));
            }
        }
    } else if (key == "gamma_mode") cfg.gamma_mode = value;
    else if (key == "gamma") cfg.gamma = parse_double(key, value);
    else if (key == "gamma_pos") cfg.gamma_pos = parse_double(key, value);
    else if (key == "gamma_vel") cfg.gamma_vel = parse_double(key, value);
    else if (key == "epsilon") cfg.epsilon = parse_double(key, value);
    else if (key == "r_local") cfg.r_local = parse_double(key, value);
    else if (key == "r_relative") cfg.r_relative = parse_double(key, value);
    else if (key == "r_as_inverse") cfg.r_as_inverse = parse_bool(key, value);
    else if (key == "solver") cfg.solver = solver_from_string(value);
    else if (key == "alpha_r") cfg.alpha_r = parse_double(key, value);
    else if (key == "rho") cfg.rho = parse_double(key, value);
    else if (key == "alpha") cfg.alpha = parse_double(key, value);
    else if (key == "h_iters") cfg.h_iters = static_cast<int>(parse_long(key, value));
    else if (key == "p0") {
        cfg.p0.clear();
        for (const auto& tok : detail::split(value, ',')) cfg.p0.push_back(parse_double(key, tok));
    } else if (key == "input") cfg.input = value;
    else if (key == "input_bound") cfg.input_bound = parse_double(key, value);
    else if (key == "meas_noise") cfg.meas_noise = parse_double(key, value);
    else if (key == "vel_std") cfg.vel_std = parse_double(key, value);
    else if (key == "gramian_window") cfg.gramian_window = parse_long(key, value);
    else if (key == "max_retries") cfg.max_retries = static_cast<int>(parse_long(key, value));
    else if (key == "record_dist") cfg.record_dist = parse_bool(key, value);
    else if (key == "dist_max_steps") cfg.dist_max_steps = parse_long(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

inline ScenarioConfig parse_config_text(const std::string& text) {
    ScenarioConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        apply_config_entry(cfg, detail::trim(line.substr(0, eq)),
                           detail::trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace dko

#endif  // DKO_CONFIG_HPP
