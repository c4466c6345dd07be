#ifndef DKO_SIM_HPP
#define DKO_SIM_HPP

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dko/analysis.hpp"
#include "dko/config.hpp"
#include "dko/errors.hpp"
#include "dko/model.hpp"
#include "dko/observer.hpp"
#include "dko/rng.hpp"
#include "dko/solvers.hpp"
#include "dko/topology.hpp"

namespace dko {

struct Scenario {
    NetworkModel model;
    Eigen::VectorXd x0;
    Eigen::VectorXd xhat0;
    Eigen::MatrixXd p0_block;  // per-agent prior covariance diagonal block
    int retries_used = 0;
};

inline Forgetting forgetting_from_config(const ScenarioConfig& cfg) {
    if (cfg.gamma_mode == "scalar") return cfg.resolved_gamma();
    Eigen::VectorXd g(4);
    g << cfg.resolved_gamma_pos(), cfg.resolved_gamma_pos(), cfg.resolved_gamma_vel(),
        cfg.resolved_gamma_vel();
    return g;
}

// Deterministic scenario generation: planar double integrators in a square
// workspace, proximity sensing edges in both directions (or an explicit edge
// list), anchors chosen by a seeded shuffle. Degenerate graphs are redrawn
// with an incremented rotation until the observability Gramian clears the
// threshold.
inline Scenario generate_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    constexpr int d = 4;
    const double ws = cfg.workspace_size;

    for (int retry = 0; retry <= cfg.max_retries; ++retry) {
        CounterRng rng_graph(cfg.seed, CounterRng::kGraph, static_cast<std::uint64_t>(retry));
        CounterRng rng_init(cfg.seed, CounterRng::kInit, static_cast<std::uint64_t>(retry));

        std::vector<Eigen::Vector2d> pos(static_cast<std::size_t>(cfg.n_agents));
        for (auto& p : pos) p = Eigen::Vector2d(rng_graph.uniform(0.0, ws), rng_graph.uniform(0.0, ws));

        std::vector<int> order(static_cast<std::size_t>(cfg.n_agents));
        for (int i = 0; i < cfg.n_agents; ++i) order[static_cast<std::size_t>(i)] = i;
        rng_graph.shuffle(order);
        std::vector<int> anchors(order.begin(), order.begin() + cfg.n_anchors);

        std::vector<std::pair<int, int>> sensing;
        if (cfg.explicit_edges) {
            sensing = cfg.edges;
        } else {
            for (int i = 0; i < cfg.n_agents; ++i)
                for (int j = i + 1; j < cfg.n_agents; ++j)
                    if ((pos[static_cast<std::size_t>(i)] - pos[static_cast<std::size_t>(j)])
                            .norm() <= cfg.graph_radius) {
                        sensing.emplace_back(i, j);
                        sensing.emplace_back(j, i);
                    }
        }

        Scenario sc;
        sc.retries_used = retry;
        sc.model.topology = build_topology(cfg.n_agents, sensing, anchors, d);

        const auto [A, B] = double_integrator(cfg.ts);
        const double w_local = cfg.local_weight();
        const double w_rel = cfg.relative_weight();
        Eigen::MatrixXd Hl = Eigen::MatrixXd::Zero(2, d);
        Hl.leftCols(2).setIdentity();

        sc.model.agents.resize(static_cast<std::size_t>(cfg.n_agents));
        for (int i = 0; i < cfg.n_agents; ++i) {
            auto& agent = sc.model.agents[static_cast<std::size_t>(i)];
            agent.dynamics = [A](long) { return A; };
            agent.input_map = [B](long) { return B; };
            if (cfg.input == "random_accel" && cfg.input_bound > 0.0) {
                CounterRng rng_u(cfg.seed, CounterRng::kInput, static_cast<std::uint64_t>(i));
                const double bound = cfg.input_bound;
                agent.input = [rng_u, bound](long k) {
                    Eigen::VectorXd u(2);
                    u << bound * (2.0 * rng_u.uniform_at(2 * static_cast<std::uint64_t>(k)) - 1.0),
                        bound * (2.0 * rng_u.uniform_at(2 * static_cast<std::uint64_t>(k) + 1) - 1.0);
                    return u;
                };
            } else {
                agent.input = [](long) { return Eigen::VectorXd::Zero(2); };
            }
            if (sc.model.topology.is_anchor(i)) {
                agent.local_map = Hl;
                agent.local_weight = w_local * Eigen::MatrixXd::Identity(2, 2);
            }
        }
        for (std::size_t e = 0; e < sc.model.topology.sensing_edges.size(); ++e) {
            sc.model.relative.map_from.push_back(Hl);
            sc.model.relative.map_to.push_back(-Hl);
            sc.model.relative.weight.push_back(w_rel * Eigen::MatrixXd::Identity(2, 2));
        }

        sc.x0.resize(cfg.n_agents * d);
        for (int i = 0; i < cfg.n_agents; ++i) {
            sc.x0.segment(i * d, 2) = pos[static_cast<std::size_t>(i)];
            sc.x0[i * d + 2] = cfg.vel_std * rng_init.gaussian();
            sc.x0[i * d + 3] = cfg.vel_std * rng_init.gaussian();
        }

        const long K = cfg.gramian_window;
        const double alpha1 = observability_gramian(sc.model, K, K).lambda_min;
        if (alpha1 <= 1e-8) {
            if (cfg.explicit_edges)
                throw UnobservableScenario(
                    "explicit edge list fails the Gramian check (alpha1 = " +
                    format_double(alpha1) + ")");
            continue;
        }

        sc.p0_block = Eigen::Vector4d(cfg.p0[0], cfg.p0[1], cfg.p0[2], cfg.p0[3]).asDiagonal();
        sc.xhat0 = sc.x0;
        for (int i = 0; i < cfg.n_agents; ++i)
            for (int n = 0; n < d; ++n)
                sc.xhat0[i * d + n] += std::sqrt(cfg.p0[static_cast<std::size_t>(n)]) *
                                       rng_init.gaussian();
        return sc;
    }
    throw UnobservableScenario("no observable scenario after " +
                               std::to_string(cfg.max_retries) + " retries (seed " +
                               std::to_string(cfg.seed) + ")");
}

// Per-step view handed to analysis hooks. Pointers are null when the
// corresponding object was not built for this run.
struct StepData {
    long k = 0;
    const Eigen::VectorXd* x_truth = nullptr;
    const Eigen::VectorXd* xhat_prior = nullptr;
    const Eigen::VectorXd* xtilde = nullptr;
    const Eigen::MatrixXd* S_prior = nullptr;
    const Eigen::MatrixXd* S_post = nullptr;
    const Eigen::VectorXd* b = nullptr;
    const Eigen::VectorXd* xi_exact = nullptr;
    const Eigen::VectorXd* xi_hat = nullptr;
    const Eigen::MatrixXd* A = nullptr;
    const FrozenAdmmOperator* op = nullptr;
    const Eigen::VectorXd* q0 = nullptr;
};

struct RunHooks {
    std::function<void(const StepData&)> on_step;
    bool build_operators = false;      // construct the frozen ADMM operator per step
    bool decompose_operators = false;  // additionally eigendecompose it
};

struct SimTrace {
    std::vector<long> k;
    std::vector<double> err_state_norm;
    std::vector<double> err_corr_norm;
    std::vector<double> lyapunov_v;
    std::vector<double> dist_qeq;
    std::vector<Eigen::VectorXd> per_agent_err;
    std::string solver;
    std::uint64_t seed = 0;
    std::string config_hash;
    double wall_time_s = 0.0;
    double initial_err_norm = 0.0;
    Eigen::VectorXd final_per_agent_err;
    int scenario_retries = 0;

    long size() const { return static_cast<long>(k.size()); }
};

// Runs the full observer loop: measurement update, correction by the selected
// solver, state update, forgetting prediction. The exact correction is solved
// densely at every step in lockstep, so the trace always carries the
// correction error against the centralized oracle.
inline SimTrace run(const ScenarioConfig& cfg, const RunHooks& hooks = {}) {
    const auto t_start = std::chrono::steady_clock::now();
    cfg.validate();
    Scenario sc = generate_scenario(cfg);
    const SensingTopology& topo = sc.model.topology;
    const int d = topo.state_dim;
    const DualLayout layout = build_dual_layout(topo);
    const SelectionStructure sel(topo, layout);
    const Forgetting forgetting = forgetting_from_config(cfg);

    ObserverState obs = make_observer(topo, sc.xhat0, sc.p0_block, cfg.epsilon, forgetting);

    AdmmState admm;
    admm.rho = cfg.rho;
    admm.alpha = cfg.alpha;
    admm.h_iters = cfg.h_iters;
    RichardsonState richardson;
    richardson.alpha_R = cfg.alpha_r;

    const bool is_admm = cfg.solver == SolverKind::kAdmm || cfg.solver == SolverKind::kAdmmDirect;
    const bool want_dist = is_admm && cfg.record_dist;
    Eigen::MatrixXd structural_kernel;
    if (want_dist || hooks.build_operators)
        structural_kernel = structural_dual_kernel(topo, layout);

    CounterRng rng_noise(cfg.seed, CounterRng::kMeasNoise);

    SimTrace trace;
    trace.solver = to_string(cfg.solver);
    trace.seed = cfg.seed;
    trace.config_hash = cfg.hash();
    trace.scenario_retries = sc.retries_used;
    trace.initial_err_norm = (sc.x0 - sc.xhat0).norm();

    Eigen::VectorXd x = sc.x0;
    for (long k = 0; k < cfg.steps; ++k) {
        MeasurementSet meas = measure(sc.model, x, k);
        if (cfg.meas_noise > 0.0) {
            for (auto& y : meas.local)
                if (y.has_value())
                    for (int n = 0; n < y->size(); ++n) (*y)[n] += cfg.meas_noise * rng_noise.gaussian();
            for (auto& y : meas.relative)
                for (int n = 0; n < y.size(); ++n) y[n] += cfg.meas_noise * rng_noise.gaussian();
        }

        const Eigen::MatrixXd S_prior = obs.contrib.assemble_matrix().assemble_dense();
        measurement_update(obs, sc.model, meas, k);
        const Eigen::MatrixXd S_post = obs.contrib.assemble_matrix().assemble_dense();
        const Eigen::VectorXd b = innovation_vector(obs);
        const Eigen::VectorXd xi_exact = solve_centralized(S_post, b);
        const Eigen::VectorXd xtilde = x - obs.xhat;

        const Eigen::VectorXd q0 = admm.q.size() ? admm.q : Eigen::VectorXd::Zero(layout.total);

        FrozenAdmmOperator op;
        bool have_op = false;
        const bool dist_this_step =
            want_dist && (cfg.dist_max_steps < 0 || k < cfg.dist_max_steps);
        if (dist_this_step || hooks.build_operators) {
            if (cfg.solver == SolverKind::kAdmmDirect) {
                const Eigen::VectorXd xi_local = local_closed_form_correction(obs.contrib);
                const auto residual = residual_edge_innovations(obs.contrib, xi_local);
                op = build_frozen_operator(obs.contrib, sel, cfg.rho, cfg.alpha,
                                           hooks.decompose_operators, &residual);
            } else {
                op = build_frozen_operator(obs.contrib, sel, cfg.rho, cfg.alpha,
                                           hooks.decompose_operators);
            }
            have_op = true;
        }

        CorrectionResult corr;
        switch (cfg.solver) {
            case SolverKind::kCentralized:
                corr.xi = xi_exact;
                break;
            case SolverKind::kRichardson:
                corr = richardson_run(obs.contrib, richardson, cfg.h_iters);
                break;
            case SolverKind::kAdmm:
                corr = admm_run(obs.contrib, sel, admm, cfg.h_iters);
                break;
            case SolverKind::kAdmmDirect:
                corr = residual_split_solve(obs.contrib, sel, admm, cfg.h_iters);
                break;
        }

        trace.k.push_back(k);
        trace.err_state_norm.push_back(xtilde.norm());
        trace.err_corr_norm.push_back((xi_exact - corr.xi).norm());
        trace.lyapunov_v.push_back(xtilde.dot(S_prior * xtilde));
        trace.dist_qeq.push_back(
            dist_this_step ? fast_equilibrium_distance(op, structural_kernel, q0) : 0.0);
        Eigen::VectorXd agent_err(topo.n_agents);
        for (int i = 0; i < topo.n_agents; ++i)
            agent_err[i] = xtilde.segment(i * d, d).norm();
        trace.per_agent_err.push_back(agent_err);

        if (hooks.on_step) {
            const Eigen::MatrixXd A_dense = sc.model.dense_dynamics(k);
            StepData sd;
            sd.k = k;
            sd.x_truth = &x;
            sd.xhat_prior = &obs.xhat;
            sd.xtilde = &xtilde;
            sd.S_prior = &S_prior;
            sd.S_post = &S_post;
            sd.b = &b;
            sd.xi_exact = &xi_exact;
            sd.xi_hat = &corr.xi;
            sd.A = &A_dense;
            sd.op = have_op ? &op : nullptr;
            sd.q0 = is_admm ? &q0 : nullptr;
            hooks.on_step(sd);
        }

        apply_correction(obs, corr.xi);
        x = step_truth(sc.model, x, k);
        forgetting_prediction(obs.contrib, sc.model, forgetting, k);
        predict_state(obs, sc.model, k);

        if (!std::isfinite(trace.err_state_norm.back() + trace.err_corr_norm.back() +
                           trace.lyapunov_v.back() + trace.dist_qeq.back()))
            throw InternalInvariantViolation("non-finite trace entry at step " +
                                             std::to_string(k));
        if (!obs.xhat.allFinite())
            throw InternalInvariantViolation("non-finite estimate at step " + std::to_string(k));
    }

    trace.final_per_agent_err.resize(topo.n_agents);
    for (int i = 0; i < topo.n_agents; ++i)
        trace.final_per_agent_err[i] = (x.segment(i * d, d) - obs.xhat.segment(i * d, d)).norm();
    trace.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return trace;
}

}  // namespace dko

#endif  // DKO_SIM_HPP
