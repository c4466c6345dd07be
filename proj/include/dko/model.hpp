#ifndef DKO_MODEL_HPP
#define DKO_MODEL_HPP

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dko/errors.hpp"
#include "dko/topology.hpp"

namespace dko {

using MatrixGen = std::function<Eigen::MatrixXd(long k)>;
using InputGen = std::function<Eigen::VectorXd(long k)>;

// Per-agent dynamics and optional local measurement map. Time variation is
// expressed through pure generator functions of the step index, so the same
// model object can be evaluated concurrently at distinct k.
struct AgentModel {
    MatrixGen dynamics;               // A_i(k), d x d
    MatrixGen input_map;              // B_i(k), d x m
    InputGen input;                   // u_i(k), m
    Eigen::MatrixXd local_map;        // H_i^l, q_l x d (empty if not an anchor)
    Eigen::MatrixXd local_weight;     // R_i^l, q_l x q_l SPD information weight

    bool has_local() const { return local_map.size() > 0; }
};

// Measurement maps and weights for every directed sensing edge, stored in the
// topology's canonical sensing-edge order.
struct RelativeMeasurementModel {
    std::vector<Eigen::MatrixXd> map_from;   // H_{ij,i}^r, q_r x d
    std::vector<Eigen::MatrixXd> map_to;     // H_{ij,j}^r, q_r x d
    std::vector<Eigen::MatrixXd> weight;     // R_{ij}^r, q_r x q_r SPD
};

struct NetworkModel {
    SensingTopology topology;
    std::vector<AgentModel> agents;
    RelativeMeasurementModel relative;

    int n() const { return topology.n_agents; }
    int d() const { return topology.state_dim; }
    int nd() const { return n() * d(); }

    Eigen::MatrixXd dynamics_block(int i, long k) const {
        return agents[static_cast<std::size_t>(i)].dynamics(k);
    }

    // Dense blkdiag A_k; diagnostics only.
    Eigen::MatrixXd dense_dynamics(long k) const {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nd(), nd());
        for (int i = 0; i < n(); ++i) A.block(i * d(), i * d(), d(), d()) = dynamics_block(i, k);
        return A;
    }

    // Dense stacked measurement matrix H_k: local rows first (anchor order),
    // then one block row per directed sensing edge. Block-incidence sparsity.
    Eigen::MatrixXd dense_measurement_matrix(long k) const {
        (void)k;  // maps are constant in this toolkit; k kept for symmetry
        int rows = 0;
        for (int a : topology.anchors)
            rows += static_cast<int>(agents[static_cast<std::size_t>(a)].local_map.rows());
        for (const auto& H : relative.map_from) rows += static_cast<int>(H.rows());
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(rows, nd());
        int r = 0;
        for (int a : topology.anchors) {
            const auto& Hl = agents[static_cast<std::size_t>(a)].local_map;
            H.block(r, a * d(), Hl.rows(), d()) = Hl;
            r += static_cast<int>(Hl.rows());
        }
        for (std::size_t e = 0; e < topology.sensing_edges.size(); ++e) {
            const auto [i, j] = topology.sensing_edges[e];
            H.block(r, i * d(), relative.map_from[e].rows(), d()) = relative.map_from[e];
            H.block(r, j * d(), relative.map_to[e].rows(), d()) = relative.map_to[e];
            r += static_cast<int>(relative.map_from[e].rows());
        }
        return H;
    }

    // Dense blkdiag R_k in the same row order as dense_measurement_matrix.
    Eigen::MatrixXd dense_weight_matrix() const {
        int rows = 0;
        for (int a : topology.anchors)
            rows += static_cast<int>(agents[static_cast<std::size_t>(a)].local_weight.rows());
        for (const auto& R : relative.weight) rows += static_cast<int>(R.rows());
        Eigen::MatrixXd R = Eigen::MatrixXd::Zero(rows, rows);
        int r = 0;
        for (int a : topology.anchors) {
            const auto& Rl = agents[static_cast<std::size_t>(a)].local_weight;
            R.block(r, r, Rl.rows(), Rl.cols()) = Rl;
            r += static_cast<int>(Rl.rows());
        }
        for (const auto& Re : relative.weight) {
            R.block(r, r, Re.rows(), Re.cols()) = Re;
            r += static_cast<int>(Re.rows());
        }
        return R;
    }
};

// Noiseless measurement snapshot. Relative entries follow the canonical
// sensing-edge order; an empty vector marks an absent measurement. Noise
// injection is a harness concern.
struct MeasurementSet {
    std::vector<std::optional<Eigen::VectorXd>> local;  // size N, set iff anchor
    std::vector<Eigen::VectorXd> relative;              // size |E_s|

    // Convenience with topology validation.
    void set_relative(const SensingTopology& topo, int i, int j, const Eigen::VectorXd& y) {
        const auto it = std::lower_bound(topo.sensing_edges.begin(), topo.sensing_edges.end(),
                                         std::make_pair(i, j));
        if (it == topo.sensing_edges.end() || *it != std::make_pair(i, j))
            throw TopologyMismatch("no sensing edge (" + std::to_string(i) + "," +
                                   std::to_string(j) + ")");
        relative[static_cast<std::size_t>(it - topo.sensing_edges.begin())] = y;
    }
};

// Double integrator blocks of the cooperative localization scenario:
// state [p; v] in R^4, input acceleration in R^2.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> double_integrator(double Ts) {
    if (Ts <= 0.0) throw InvalidParameter("sampling time must be positive");
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
    A(0, 2) = Ts;
    A(1, 3) = Ts;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, 2);
    B(0, 0) = 0.5 * Ts * Ts;
    B(1, 1) = 0.5 * Ts * Ts;
    B(2, 0) = Ts;
    B(3, 1) = Ts;
    return {A, B};
}

// One step of the decoupled truth dynamics; agent blocks never interact.
inline Eigen::VectorXd step_truth(const NetworkModel& model, const Eigen::VectorXd& x, long k) {
    if (x.size() != model.nd())
        throw DimensionError("state length " + std::to_string(x.size()) + " != " +
                             std::to_string(model.nd()));
    const int d = model.d();
    Eigen::VectorXd next(model.nd());
    for (int i = 0; i < model.n(); ++i) {
        const auto& agent = model.agents[static_cast<std::size_t>(i)];
        next.segment(i * d, d) = agent.dynamics(k) * x.segment(i * d, d) +
                                 agent.input_map(k) * agent.input(k);
    }
    return next;
}

// Noiseless measurements of the current state.
inline MeasurementSet measure(const NetworkModel& model, const Eigen::VectorXd& x, long k) {
    (void)k;
    const int d = model.d();
    MeasurementSet meas;
    meas.local.assign(static_cast<std::size_t>(model.n()), std::nullopt);
    for (int a : model.topology.anchors) {
        meas.local[static_cast<std::size_t>(a)] =
            model.agents[static_cast<std::size_t>(a)].local_map * x.segment(a * d, d);
    }
    meas.relative.reserve(model.topology.sensing_edges.size());
    for (std::size_t e = 0; e < model.topology.sensing_edges.size(); ++e) {
        const auto [i, j] = model.topology.sensing_edges[e];
        meas.relative.push_back(model.relative.map_from[e] * x.segment(i * d, d) +
                                model.relative.map_to[e] * x.segment(j * d, d));
    }
    return meas;
}

// State transition matrix Phi(k, k0) = A_{k-1} ... A_{k0}, Phi(k0,k0) = I.
inline Eigen::MatrixXd transition_matrix(const NetworkModel& model, long k, long k0) {
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Identity(model.nd(), model.nd());
    for (long t = k0; t < k; ++t) Phi = model.dense_dynamics(t) * Phi;
    return Phi;
}

struct GramianResult {
    Eigen::MatrixXd gramian;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

// Observability Gramian over K samples ending at k (unit-weighted, as in the
// uniform observability condition).
inline GramianResult observability_gramian(const NetworkModel& model, long k, long K) {
    if (K < 1 || k < K) throw InvalidWindow("need k >= K >= 1");
    const long k0 = k - K;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(model.nd(), model.nd());
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Identity(model.nd(), model.nd());
    for (long t = k0; t <= k; ++t) {
        if (t > k0) Phi = model.dense_dynamics(t - 1) * Phi;
        const Eigen::MatrixXd H = model.dense_measurement_matrix(t);
        const Eigen::MatrixXd HPhi = H * Phi;
        G.noalias() += HPhi.transpose() * HPhi;
    }
    GramianResult res;
    res.gramian = 0.5 * (G + G.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(res.gramian,
                                                       Eigen::EigenvaluesOnly);
    res.lambda_min = eig.eigenvalues().minCoeff();
    res.lambda_max = eig.eigenvalues().maxCoeff();
    return res;
}

// Numerical check of the boundedness / observability / invertibility
// assumptions over a finite horizon.
struct AssumptionReport {
    double a_bar = 0.0;        // sup ||A_k||
    double b_bar = 0.0;        // sup ||B_k u_k||
    double h_bar = 0.0;        // sup ||H_k||
    double a_delta = 0.0;      // sup ||A_{k+1} - A_k||
    double h_delta = 0.0;      // sup ||H_{k+1} - H_k||
    double a_inv_bar = 0.0;    // sup ||A_k^{-1}||
    double alpha1 = 0.0;       // min window Gramian eigenvalue
    double alpha2 = 0.0;       // max window Gramian eigenvalue
    long worst_window_k = -1;  // window end index attaining alpha1
    long K = 0;
    bool observable = false;   // alpha1 > tolerance
    bool ok() const { return observable; }
};

inline AssumptionReport verify_assumptions(const NetworkModel& model, long horizon, long K,
                                           double alpha1_tol = 1e-8) {
    if (horizon < K) throw InvalidWindow("horizon shorter than Gramian window");
    AssumptionReport rep;
    rep.K = K;
    Eigen::MatrixXd prevA, prevH;
    for (long k = 0; k <= horizon; ++k) {
        const Eigen::MatrixXd A = model.dense_dynamics(k);
        const Eigen::MatrixXd H = model.dense_measurement_matrix(k);
        Eigen::VectorXd Bu = Eigen::VectorXd::Zero(model.nd());
        for (int i = 0; i < model.n(); ++i) {
            const auto& agent = model.agents[static_cast<std::size_t>(i)];
            Bu.segment(i * model.d(), model.d()) = agent.input_map(k) * agent.input(k);
        }
        rep.a_bar = std::max(rep.a_bar, A.operatorNorm());
        rep.b_bar = std::max(rep.b_bar, Bu.norm());
        rep.h_bar = std::max(rep.h_bar, H.operatorNorm());
        for (int i = 0; i < model.n(); ++i) {
            const Eigen::MatrixXd Ai = model.dynamics_block(i, k);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(Ai);
            if (!lu.isInvertible()) throw SingularDynamics(i, k);
            rep.a_inv_bar = std::max(rep.a_inv_bar, Eigen::MatrixXd(lu.inverse()).operatorNorm());
        }
        if (k > 0) {
            rep.a_delta = std::max(rep.a_delta, (A - prevA).operatorNorm());
            rep.h_delta = std::max(rep.h_delta, (H - prevH).operatorNorm());
        }
        prevA = A;
        prevH = H;
    }
    rep.alpha1 = std::numeric_limits<double>::infinity();
    rep.alpha2 = 0.0;
    for (long k = K; k <= horizon; ++k) {
        const GramianResult g = observability_gramian(model, k, K);
        if (g.lambda_min < rep.alpha1) {
            rep.alpha1 = g.lambda_min;
            rep.worst_window_k = k;
        }
        rep.alpha2 = std::max(rep.alpha2, g.lambda_max);
    }
    rep.observable = rep.alpha1 > alpha1_tol;
    return rep;
}

// Smallest K in [1, K_max] whose windows all satisfy alpha1 > tol, or -1.
inline long smallest_observable_window(const NetworkModel& model, long horizon, long K_max,
                                       double alpha1_tol = 1e-8) {
    for (long K = 1; K <= K_max; ++K) {
        double alpha1 = std::numeric_limits<double>::infinity();
        for (long k = K; k <= horizon; ++k)
            alpha1 = std::min(alpha1, observability_gramian(model, k, K).lambda_min);
        if (alpha1 > alpha1_tol) return K;
    }
    return -1;
}

}  // namespace dko

#endif  // DKO_MODEL_HPP
