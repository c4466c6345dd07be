#ifndef DKO_CLI_HPP
#define DKO_CLI_HPP

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dko/config.hpp"
#include "dko/diagnostics.hpp"
#include "dko/sim.hpp"
#include "dko/trace_io.hpp"

namespace dko {

namespace cli_detail {

inline void write_run(const ScenarioConfig& cfg, const SimTrace& trace,
                      const std::string& out_dir, std::ostream& log) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir + "'");
    export_trace_csv(trace, out_dir + "/trace.csv");
    write_json(summary_json(trace, cfg), out_dir + "/summary.json");
    log << "wrote " << out_dir << "/trace.csv (" << trace.size() << " rows), "
        << out_dir << "/summary.json\n";
    log << "solver=" << trace.solver << " seed=" << trace.seed
        << " err0=" << format_double(trace.initial_err_norm)
        << " errEnd=" << format_double(trace.size() ? trace.err_state_norm.back() : 0.0) << "\n";
}

inline int simulate_cmd(const std::string& config_path, const std::string& solver,
                        long seed, long steps, const std::string& out_dir, std::ostream& log) {
    ScenarioConfig cfg = load_config(config_path);
    if (!solver.empty()) cfg.solver = solver_from_string(solver);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (steps >= 0) cfg.steps = steps;
    cfg.validate();
    const SimTrace trace = run(cfg);
    write_run(cfg, trace, out_dir, log);
    return 0;
}

inline int analyze_cmd(const std::string& trace_dir, long max_steps, std::string out_path,
                       std::ostream& log) {
    const nlohmann::json summary = read_json(trace_dir + "/summary.json");
    if (!summary.contains("config"))
        throw IoError("'" + trace_dir + "/summary.json' has no config echo");
    const ScenarioConfig cfg = config_from_json(summary["config"]);
    DiagnosticsOptions opt;
    if (max_steps > 0) opt.max_steps = max_steps;
    const DiagnosticsReport rep = run_diagnostics(cfg, opt);
    const nlohmann::json j = to_json(rep);
    if (out_path.empty()) out_path = trace_dir + "/analysis.json";
    write_json(j, out_path);

    log << "analyzed " << rep.steps << " steps (" << rep.solver << ")\n";
    if (rep.has_kernel)
        log << "kernel: dim=" << rep.kernel.structural_dim
            << " max angle=" << format_double(rep.kernel.max_principal_angle)
            << " min sigma+=" << format_double(rep.kernel.min_sigma_min_plus) << "\n";
    if (rep.has_contraction)
        log << "contraction: mu_hat=" << format_double(rep.mu_hat)
            << (rep.contraction_monotone ? " (monotone)" : " (NOT monotone)") << "\n";
    log << "lyapunov: worst ratio=" << format_double(rep.lyapunov.worst_ratio) << " vs gamma="
        << format_double(rep.lyapunov_gamma) << (rep.lyapunov.decays ? " ok" : " VIOLATED")
        << "\n";
    log << "certificate: rho(A)=" << format_double(rep.certificate.spectral_radius)
        << (rep.certificate.schur ? " Schur" : " not Schur")
        << " eps_bound=" << format_double(rep.certificate.eps_bound)
        << " envelope slope=" << format_double(rep.certificate.envelope_slope) << "\n";
    log << "forgetting bounds: exact=" << format_double(rep.forgetting.exact_bound)
        << " conditioned=" << format_double(rep.forgetting.conditioned_bound)
        << " uniform=" << format_double(rep.forgetting.uniform_bound)
        << (rep.forgetting.ordered ? " (ordered)" : " (ORDER VIOLATED)") << "\n";
    log << "error dynamics: max residual="
        << format_double(rep.error_dynamics.max_relative_residual) << "\n";
    log << "wrote " << out_path << "\n";
    return 0;
}

inline int sweep_cmd(const std::string& config_path, const std::string& param,
                     const std::string& values_csv, const std::string& out_dir,
                     std::ostream& log) {
    const ScenarioConfig base = load_config(config_path);
    const auto values = detail::split(values_csv, ',');
    if (values.empty()) throw ConfigError("sweep needs at least one value");

    std::string table = "param,value,final_err_state_norm,mean_err_corr_norm\n";
    for (const auto& v : values) {
        ScenarioConfig cfg = base;
        apply_config_entry(cfg, param, v);
        cfg.validate();
        const SimTrace trace = run(cfg);
        double mean_corr = 0.0;
        for (double e : trace.err_corr_norm) mean_corr += e;
        if (trace.size()) mean_corr /= static_cast<double>(trace.size());
        table += param + "," + v + "," +
                 format_double(trace.size() ? trace.err_state_norm.back() : 0.0) + "," +
                 format_double(mean_corr) + "\n";
        log << param << "=" << v
            << ": errEnd=" << format_double(trace.size() ? trace.err_state_norm.back() : 0.0)
            << " mean_corr_err=" << format_double(mean_corr) << "\n";
    }
    if (!out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create output directory '" + out_dir + "'");
        std::ofstream out(out_dir + "/sweep.csv", std::ios::binary);
        if (!out) throw IoError("cannot write '" + out_dir + "/sweep.csv'");
        out << table;
        log << "wrote " << out_dir << "/sweep.csv\n";
    }
    return 0;
}

}  // namespace cli_detail

// Entry point shared by the binary and the tests. Returns the process exit
// code: 0 on success, 2 on usage errors, 1 on runtime failures.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"distributed Kalman-like observer toolkit"};
    app.require_subcommand(1);

    std::string config_path, solver, out_dir = "out";
    long seed = -1, steps = -1;
    auto* sim = app.add_subcommand("simulate", "run one scenario and export the trace");
    sim->add_option("--config", config_path, "scenario config file")->required();
    sim->add_option("--solver", solver, "centralized|richardson|admm|admm_direct");
    sim->add_option("--seed", seed, "override config seed");
    sim->add_option("--steps", steps, "override config steps");
    sim->add_option("--out", out_dir, "output directory (default: out)");

    std::string trace_dir, analysis_out;
    long max_steps = 500;
    auto* ana = app.add_subcommand("analyze", "re-run a trace's config with diagnostics");
    ana->add_option("--trace", trace_dir, "directory containing summary.json")->required();
    ana->add_option("--max-steps", max_steps, "cap on re-run length (default 500)");
    ana->add_option("--out", analysis_out, "output file (default: <trace>/analysis.json)");

    std::string param, values, sweep_out;
    std::string sweep_config;
    auto* swp = app.add_subcommand("sweep", "run the scenario across parameter values");
    swp->add_option("--config", sweep_config, "scenario config file")->required();
    swp->add_option("--param", param, "config key to vary")->required();
    swp->add_option("--values", values, "comma-separated values")->required();
    swp->add_option("--out", sweep_out, "output directory for sweep.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (sim->parsed())
            return cli_detail::simulate_cmd(config_path, solver, seed, steps, out_dir, out);
        if (ana->parsed()) return cli_detail::analyze_cmd(trace_dir, max_steps, analysis_out, out);
        if (swp->parsed()) return cli_detail::sweep_cmd(sweep_config, param, values, sweep_out, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace dko

#endif  // DKO_CLI_HPP
