#ifndef DKO_DIAGNOSTICS_HPP
#define DKO_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <json.hpp>

#include "dko/analysis.hpp"
#include "dko/sim.hpp"
#include "dko/trace_io.hpp"

namespace dko {

struct DiagnosticsOptions {
    long max_steps = 500;       // horizon of the diagnostic re-run
    int contraction_samples = 5;
    int contraction_iters = 150;
};

// Post-run numerical verification bundle: kernel invariance and contraction of
// the frozen ADMM operators, Lyapunov decay, the trace-fitted small-gain
// certificate, matrix-forgetting conditions, and the error-dynamics identity.
struct DiagnosticsReport {
    long steps = 0;
    std::string solver;

    bool has_kernel = false;
    KernelInvarianceReport kernel;

    bool has_contraction = false;
    double mu_hat = 0.0;
    bool contraction_monotone = true;

    LyapunovReport lyapunov;
    double lyapunov_gamma = 0.0;  // bound the ratio test ran against

    StabilityCertificate certificate;

    MatrixForgettingReport forgetting;

    ErrorDynamicsReport error_dynamics;
};

// Re-runs the scenario deterministically with analysis hooks attached and
// evaluates every checker on the regenerated data.
inline DiagnosticsReport run_diagnostics(ScenarioConfig cfg, const DiagnosticsOptions& opt = {}) {
    cfg.validate();
    cfg.steps = std::min(cfg.steps, opt.max_steps);
    cfg.record_dist = true;
    cfg.dist_max_steps = -1;
    if (cfg.steps < 2) throw InsufficientData("diagnostics need at least 2 steps");

    const bool is_admm =
        cfg.solver == SolverKind::kAdmm || cfg.solver == SolverKind::kAdmmDirect;

    // The scenario generator is pure, so topology and layout can be built
    // ahead of the run for the streaming checkers.
    Scenario sc = generate_scenario(cfg);
    const SensingTopology topo = sc.model.topology;
    const DualLayout layout = build_dual_layout(topo);

    std::optional<KernelInvarianceChecker> kernel_checker;
    if (is_admm) kernel_checker.emplace(topo, layout);
    ErrorDynamicsChecker error_checker(cfg.epsilon);
    std::vector<Eigen::MatrixXd> S_posts;
    double mu_hat = 0.0;
    bool contraction_monotone = true;
    int contraction_count = 0;

    const long sample_stride =
        std::max<long>(1, cfg.steps / std::max(1, opt.contraction_samples));

    RunHooks hooks;
    hooks.build_operators = is_admm;
    hooks.decompose_operators = is_admm;
    hooks.on_step = [&](const StepData& sd) {
        error_checker.absorb(*sd.xtilde, *sd.xi_exact - *sd.xi_hat, *sd.S_prior, *sd.S_post,
                             *sd.A);
        S_posts.push_back(*sd.S_post);
        if (sd.op && kernel_checker) kernel_checker->absorb(*sd.op);
        if (sd.op && sd.q0 && sd.k % sample_stride == 0) {
            const auto rep = measure_contraction(*sd.op, layout, *sd.q0, opt.contraction_iters);
            mu_hat = std::max(mu_hat, rep.mu_hat);
            contraction_monotone = contraction_monotone && rep.monotone;
            ++contraction_count;
        }
    };

    const SimTrace trace = run(cfg, hooks);

    DiagnosticsReport rep;
    rep.steps = trace.size();
    rep.solver = trace.solver;

    if (kernel_checker) {
        rep.kernel = kernel_checker->report();
        rep.has_kernel = true;
    }
    rep.has_contraction = contraction_count > 0;
    rep.mu_hat = mu_hat;
    rep.contraction_monotone = contraction_monotone;

    // Matrix-forgetting conditions, evaluated with the applied diagonal (a
    // scalar gamma is the special case of a constant diagonal).
    Eigen::VectorXd gdiag(4);
    if (cfg.gamma_mode == "scalar")
        gdiag.setConstant(cfg.resolved_gamma());
    else
        gdiag << cfg.resolved_gamma_pos(), cfg.resolved_gamma_pos(), cfg.resolved_gamma_vel(),
            cfg.resolved_gamma_vel();
    Eigen::VectorXd gglobal(topo.n_agents * 4);
    for (int i = 0; i < topo.n_agents; ++i) gglobal.segment(i * 4, 4) = gdiag;
    rep.forgetting = matrix_ff_conditions(S_posts, gglobal);

    // Ratio test against the scalar gamma, or against the tightest verified
    // matrix-forgetting bound when a diagonal is in use.
    rep.lyapunov_gamma =
        cfg.gamma_mode == "scalar" ? cfg.resolved_gamma() : rep.forgetting.exact_bound;
    rep.lyapunov = lyapunov_decay_check(trace.lyapunov_v, rep.lyapunov_gamma);

    std::vector<double> w(trace.lyapunov_v.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sqrt(std::max(0.0, trace.lyapunov_v[i]));
    const long fit_begin = std::min<long>(50, trace.size() / 5);
    rep.certificate = small_gain_certificate(w, trace.dist_qeq, cfg.epsilon, rep.lyapunov_gamma,
                                             is_admm ? mu_hat : 0.0, cfg.h_iters, fit_begin,
                                             trace.size());

    rep.error_dynamics = error_checker.report();
    return rep;
}

inline nlohmann::json to_json(const DiagnosticsReport& rep) {
    nlohmann::json j;
    j["schema"] = "dko-analysis-v1";
    j["steps"] = rep.steps;
    j["solver"] = rep.solver;
    if (rep.has_kernel) {
        j["kernel"] = {{"structural_dim", rep.kernel.structural_dim},
                       {"rank_stable", rep.kernel.rank_stable},
                       {"max_principal_angle", rep.kernel.max_principal_angle},
                       {"min_sigma_min_plus", rep.kernel.min_sigma_min_plus},
                       {"n_operators", rep.kernel.n_operators}};
    }
    if (rep.has_contraction) {
        j["contraction"] = {{"mu_hat", rep.mu_hat}, {"monotone", rep.contraction_monotone}};
    }
    j["lyapunov"] = {{"gamma", rep.lyapunov_gamma},
                     {"worst_ratio", rep.lyapunov.worst_ratio},
                     {"worst_excess", rep.lyapunov.worst_excess},
                     {"worst_k", rep.lyapunov.worst_k},
                     {"decays", rep.lyapunov.decays}};
    j["certificate"] = {{"gamma", rep.certificate.gamma},
                        {"mu", rep.certificate.mu},
                        {"h_iters", rep.certificate.h_iters},
                        {"eps", rep.certificate.eps},
                        {"c12", rep.certificate.c12},
                        {"c21", rep.certificate.c21},
                        {"c22", rep.certificate.c22},
                        {"spectral_radius", rep.certificate.spectral_radius},
                        {"schur", rep.certificate.schur},
                        {"eps_bound", rep.certificate.eps_bound},
                        {"envelope_slope", rep.certificate.envelope_slope},
                        {"envelope_rms", rep.certificate.envelope_rms},
                        {"fit_begin", rep.certificate.fit_begin},
                        {"fit_end", rep.certificate.fit_end}};
    j["matrix_forgetting"] = {{"exact_bound", rep.forgetting.exact_bound},
                              {"conditioned_bound", rep.forgetting.conditioned_bound},
                              {"uniform_bound", rep.forgetting.uniform_bound},
                              {"ordered", rep.forgetting.ordered},
                              {"all_finite", rep.forgetting.all_finite},
                              {"s_min", rep.forgetting.s_min},
                              {"s_max", rep.forgetting.s_max}};
    j["error_dynamics"] = {{"max_relative_residual", rep.error_dynamics.max_relative_residual},
                           {"worst_k", rep.error_dynamics.worst_k},
                           {"n_steps", rep.error_dynamics.n_steps}};
    return j;
}

}  // namespace dko

#endif  // DKO_DIAGNOSTICS_HPP
