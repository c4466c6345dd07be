#ifndef DKO_TRACE_IO_HPP
#define DKO_TRACE_IO_HPP

#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>

#include <json.hpp>

#include "dko/config.hpp"
#include "dko/errors.hpp"
#include "dko/sim.hpp"

namespace dko {

inline constexpr const char* kTraceCsvHeader =
    "k,err_state_norm,err_corr_norm,lyapunov_v,dist_qeq,solver,seed";

// One row per step, formatted with round-trip precision so identical runs
// produce byte-identical files.
inline void export_trace_csv(const SimTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write trace CSV '" + path + "'");
    out << kTraceCsvHeader << "\n";
    for (long i = 0; i < trace.size(); ++i) {
        out << trace.k[static_cast<std::size_t>(i)] << ','
            << format_double(trace.err_state_norm[static_cast<std::size_t>(i)]) << ','
            << format_double(trace.err_corr_norm[static_cast<std::size_t>(i)]) << ','
            << format_double(trace.lyapunov_v[static_cast<std::size_t>(i)]) << ','
            << format_double(trace.dist_qeq[static_cast<std::size_t>(i)]) << ','
            << trace.solver << ',' << trace.seed << "\n";
    }
    if (!out) throw IoError("write failure on '" + path + "'");
}

inline nlohmann::json config_to_json(const ScenarioConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : cfg.canonical_items()) j[k] = v;
    return j;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    ScenarioConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it)
        apply_config_entry(cfg, it.key(), it.value().get<std::string>());
    cfg.validate();
    return cfg;
}

// Summary of one run. `analysis` is filled by the analyze subcommand.
inline nlohmann::json summary_json(const SimTrace& trace, const ScenarioConfig& cfg,
                                   const nlohmann::json* analysis = nullptr) {
    nlohmann::json j;
    j["schema"] = "dko-summary-v1";
    j["config"] = config_to_json(cfg);
    j["config_hash"] = trace.config_hash;
    j["solver"] = trace.solver;
    j["seed"] = trace.seed;
    j["steps"] = trace.size();
    j["scenario_retries"] = trace.scenario_retries;
    j["initial_err_state_norm"] = trace.initial_err_norm;
    j["final_err_state_norm"] = trace.size() ? trace.err_state_norm.back() : 0.0;
    j["mean_err_corr_norm"] =
        trace.size() ? std::accumulate(trace.err_corr_norm.begin(), trace.err_corr_norm.end(),
                                       0.0) / static_cast<double>(trace.size())
                     : 0.0;
    j["final_per_agent_err"] = nlohmann::json::array();
    for (int i = 0; i < trace.final_per_agent_err.size(); ++i)
        j["final_per_agent_err"].push_back(trace.final_per_agent_err[i]);
    j["wall_time_s"] = trace.wall_time_s;
    j["analysis"] = analysis ? *analysis : nlohmann::json();
    return j;
}

inline void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failure on '" + path + "'");
}

inline nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse '" + path + "': " + e.what());
    }
    return j;
}

}  // namespace dko

#endif  // DKO_TRACE_IO_HPP
