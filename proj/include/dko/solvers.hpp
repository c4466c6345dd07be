#ifndef DKO_SOLVERS_HPP
#define DKO_SOLVERS_HPP

#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "dko/errors.hpp"
#include "dko/observer.hpp"
#include "dko/topology.hpp"

namespace dko {

struct CorrectionResult {
    Eigen::VectorXd xi;                     // stacked correction (Nd)
    std::vector<Eigen::VectorXd> extended;  // per-agent extended copies
    int iterations = 0;
    double residual = 0.0;                  // ||S xi - b||
};

// Exact dense solve of S xi = b. SPD is asserted through the factorization;
// one refinement pass keeps the residual near machine level. This is the
// oracle every distributed solver is measured against.
inline Eigen::VectorXd solve_centralized(const Eigen::MatrixXd& S, const Eigen::VectorXd& b) {
    if (S.rows() != S.cols() || S.rows() != b.size())
        throw DimensionError("solve_centralized: shape mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
        throw NotSPD("information matrix is not positive definite");
    Eigen::VectorXd x = llt.solve(b);
    x += llt.solve(b - S * x);
    return x;
}

// Block-sparse product of the assembled information matrix with a vector,
// straight from the contributions; agent i's block touches one-hop data only.
inline Eigen::VectorXd info_multiply(const InfoContributions& contrib, const Eigen::VectorXd& x) {
    const SensingTopology& topo = *contrib.topo;
    const int d = topo.state_dim;
    if (x.size() != contrib.nd())
        throw DimensionError("info_multiply: vector length mismatch");
    Eigen::VectorXd y(contrib.nd());
    for (int i = 0; i < topo.n_agents; ++i) {
        Eigen::VectorXd yi = contrib.local_info[static_cast<std::size_t>(i)] * x.segment(i * d, d);
        for (int j : topo.neighbors[static_cast<std::size_t>(i)]) {
            const int e = topo.comm_edge_index(i, j);
            yi.noalias() += contrib.edge_block(e, i, i) * x.segment(i * d, d);
            yi.noalias() += contrib.edge_block(e, i, j) * x.segment(j * d, d);
        }
        y.segment(i * d, d) = yi;
    }
    return y;
}

// One Richardson sweep xi' = xi - alpha_R (S xi - b). Caller owns the step
// size; convergence needs 0 < alpha_R < 2/lambda_max(S).
inline Eigen::VectorXd richardson_step(const InfoContributions& contrib,
                                       const Eigen::VectorXd& xi, const Eigen::VectorXd& b,
                                       double alpha_R) {
    if (alpha_R <= 0.0) throw InvalidParameter("Richardson step size must be positive");
    return xi - alpha_R * (info_multiply(contrib, xi) - b);
}

// Richardson correction state carried across observer steps.
struct RichardsonState {
    Eigen::VectorXd xi;
    double alpha_R = 0.05;
};

inline CorrectionResult richardson_run(const InfoContributions& contrib, RichardsonState& state,
                                       int iters) {
    const Eigen::VectorXd b = contrib.assemble_innovation();
    CorrectionResult res;
    if (state.xi.size() == 0) state.xi = Eigen::VectorXd::Zero(contrib.nd());
    if (b.isZero(0.0)) {
        res.xi = Eigen::VectorXd::Zero(contrib.nd());
        state.xi = res.xi;
        return res;
    }
    for (int h = 0; h < iters; ++h) state.xi = richardson_step(contrib, state.xi, b, state.alpha_R);
    res.xi = state.xi;
    res.iterations = iters;
    res.residual = (info_multiply(contrib, res.xi) - b).norm();
    return res;
}

// Hessian of agent i's augmented local subproblem, over the extended vector
// [xi_i ; col(xi_j)]: rho * blkdiag(|N_i| I, I) plus the half-split
// information blocks of the incident edges on top of the local contribution.
inline Eigen::MatrixXd admm_local_hessian(const InfoContributions& contrib, int i, double rho) {
    const SensingTopology& topo = *contrib.topo;
    const int d = topo.state_dim;
    const int deg = topo.degree(i);
    const int n = (1 + deg) * d;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    H.topLeftCorner(d, d) = contrib.local_info[static_cast<std::size_t>(i)];
    H.topLeftCorner(d, d) += rho * deg * Eigen::MatrixXd::Identity(d, d);
    for (int pos = 0; pos < deg; ++pos) {
        const int j = topo.neighbors[static_cast<std::size_t>(i)][static_cast<std::size_t>(pos)];
        const int e = topo.comm_edge_index(i, j);
        H.topLeftCorner(d, d) += 0.5 * contrib.edge_block(e, i, i);
        H.block(0, (1 + pos) * d, d, d) = 0.5 * contrib.edge_block(e, i, j);
        H.block((1 + pos) * d, 0, d, d) = 0.5 * contrib.edge_block(e, j, i);
        H.block((1 + pos) * d, (1 + pos) * d, d, d) =
            0.5 * contrib.edge_block(e, j, j) + rho * Eigen::MatrixXd::Identity(d, d);
    }
    return H;
}

// Linear term of agent i's subproblem: own innovations at half weight for the
// edge parts, matching the half-split of the edge costs.
inline Eigen::VectorXd admm_local_rhs(const InfoContributions& contrib, int i,
                                      const std::vector<Eigen::VectorXd>* edge_innov_override =
                                          nullptr) {
    const SensingTopology& topo = *contrib.topo;
    const int d = topo.state_dim;
    const int deg = topo.degree(i);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero((1 + deg) * d);
    if (edge_innov_override == nullptr)
        rhs.head(d) = contrib.local_innov[static_cast<std::size_t>(i)];
    for (int pos = 0; pos < deg; ++pos) {
        const int j = topo.neighbors[static_cast<std::size_t>(i)][static_cast<std::size_t>(pos)];
        const int e = topo.comm_edge_index(i, j);
        const auto [a, b] = topo.comm_edges[static_cast<std::size_t>(e)];
        const auto& be = edge_innov_override ? (*edge_innov_override)[static_cast<std::size_t>(e)]
                                             : contrib.edge_innov[static_cast<std::size_t>(e)];
        rhs.head(d) += 0.5 * be.segment(i == a ? 0 : d, d);
        rhs.segment((1 + pos) * d, d) = 0.5 * be.segment(j == a ? 0 : d, d);
    }
    return rhs;
}

// Closed-form primal update for agent i. The augmented Hessian is positive
// definite whenever rho > 0 and the contributions are PSD; a factorization
// failure therefore indicates a broken internal invariant, not bad input.
inline Eigen::VectorXd admm_primal(const InfoContributions& contrib,
                                   const SelectionStructure& sel, int i,
                                   const Eigen::VectorXd& rhs, const Eigen::VectorXd& q,
                                   double rho) {
    Eigen::LLT<Eigen::MatrixXd> llt(admm_local_hessian(contrib, i, rho));
    if (llt.info() != Eigen::Success)
        throw InternalInvariantViolation("ADMM local Hessian not SPD for agent " +
                                         std::to_string(i));
    return llt.solve(rhs + sel.collapse_dual_slice(q, i));
}

// Dual exchange payload for one directed transmission i -> j at inner
// iteration h. `eta_sender` refers to the sender's own variable, `eta_receiver`
// to the receiver's variable; both are needed by the receiver's dual update.
struct EtaMessage {
    int from = -1;
    int to = -1;
    int iter = 0;
    Eigen::VectorXd eta_sender;
    Eigen::VectorXd eta_receiver;
};

inline std::vector<EtaMessage> make_eta_messages(const SensingTopology& topo,
                                                 const DualLayout& layout,
                                                 const Eigen::VectorXd& q,
                                                 const std::vector<Eigen::VectorXd>& extended,
                                                 double rho, int h) {
    const int d = topo.state_dim;
    std::vector<EtaMessage> out;
    out.reserve(2 * topo.comm_edges.size());
    for (int i = 0; i < topo.n_agents; ++i) {
        if (extended[static_cast<std::size_t>(i)].size() != (1 + topo.degree(i)) * d)
            throw ProtocolError("missing primal copy from agent " + std::to_string(i));
        for (int pos = 0; pos < topo.degree(i); ++pos) {
            const int j = topo.neighbors[static_cast<std::size_t>(i)][static_cast<std::size_t>(pos)];
            EtaMessage m;
            m.from = i;
            m.to = j;
            m.iter = h;
            m.eta_sender = -q.segment(layout.own_offset(topo, i, pos), d) +
                           2.0 * rho * extended[static_cast<std::size_t>(i)].head(d);
            m.eta_receiver = -q.segment(layout.copy_offset(topo, i, pos), d) +
                             2.0 * rho *
                                 extended[static_cast<std::size_t>(i)].segment((1 + pos) * d, d);
            out.push_back(std::move(m));
        }
    }
    return out;
}

// Relaxed dual update. Each dual block of agent i mixes its previous value
// with the matching eta received from the opposite endpoint.
inline Eigen::VectorXd admm_dual(const SensingTopology& topo, const DualLayout& layout,
                                 const Eigen::VectorXd& q,
                                 const std::vector<Eigen::VectorXd>& extended, double rho,
                                 double alpha) {
    if (q.size() != layout.total) throw DimensionError("dual vector length mismatch");
    const int d = topo.state_dim;
    const auto messages = make_eta_messages(topo, layout, q, extended, rho, 0);
    Eigen::VectorXd next = (1.0 - alpha) * q;
    for (const auto& m : messages) {
        const int pos = topo.neighbor_position(m.to, m.from);
        // Receiver m.to updates q_{(to,from),from} from eta_sender and
        // q_{(to,from),to} from eta_receiver.
        next.segment(layout.copy_offset(topo, m.to, pos), d) += alpha * m.eta_sender;
        next.segment(layout.own_offset(topo, m.to, pos), d) += alpha * m.eta_receiver;
    }
    return next;
}

// Dual variables and tuning carried across observer steps (warm start).
struct AdmmState {
    Eigen::VectorXd q;
    double rho = 1.0;
    double alpha = 0.95;
    int h_iters = 1;

    void validate() const {
        if (!(rho > 0.0)) throw InvalidParameter("rho must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must be in (0,1)");
        if (h_iters < 1) throw InvalidParameter("need at least one ADMM iteration");
    }
};

namespace detail {

struct AdmmWorkspace {
    std::vector<Eigen::LLT<Eigen::MatrixXd>> factor;
    std::vector<Eigen::VectorXd> rhs;
};

inline AdmmWorkspace build_admm_workspace(const InfoContributions& contrib, double rho,
                                          const std::vector<Eigen::VectorXd>* edge_innov_override =
                                              nullptr) {
    const SensingTopology& topo = *contrib.topo;
    AdmmWorkspace ws;
    ws.factor.reserve(static_cast<std::size_t>(topo.n_agents));
    ws.rhs.reserve(static_cast<std::size_t>(topo.n_agents));
    for (int i = 0; i < topo.n_agents; ++i) {
        ws.factor.emplace_back(admm_local_hessian(contrib, i, rho));
        if (ws.factor.back().info() != Eigen::Success)
            throw InternalInvariantViolation("ADMM local Hessian not SPD for agent " +
                                             std::to_string(i));
        ws.rhs.push_back(admm_local_rhs(contrib, i, edge_innov_override));
    }
    return ws;
}

// One full synchronous ADMM solve on a frozen problem given per-agent right
// hand sides; used by both the plain and the residual-split corrections.
inline CorrectionResult admm_iterate(const InfoContributions& contrib,
                                     const SelectionStructure& sel, const AdmmWorkspace& ws,
                                     AdmmState& state, int h_iters) {
    const SensingTopology& topo = *contrib.topo;
    const DualLayout& layout = *sel.layout;
    const int d = topo.state_dim;
    if (state.q.size() == 0) state.q = Eigen::VectorXd::Zero(layout.total);
    if (state.q.size() != layout.total) throw DimensionError("warm-start dual length mismatch");

    std::vector<Eigen::VectorXd> extended(static_cast<std::size_t>(topo.n_agents));
    auto primal_round = [&]() {
        for (int i = 0; i < topo.n_agents; ++i)
            extended[static_cast<std::size_t>(i)] =
                ws.factor[static_cast<std::size_t>(i)].solve(
                    ws.rhs[static_cast<std::size_t>(i)] + sel.collapse_dual_slice(state.q, i));
    };
    for (int h = 0; h < h_iters; ++h) {
        primal_round();
        state.q = admm_dual(topo, layout, state.q, extended, state.rho, state.alpha);
    }
    primal_round();  // read-out at q_{k,H}

    CorrectionResult res;
    res.xi.resize(contrib.nd());
    for (int i = 0; i < topo.n_agents; ++i)
        res.xi.segment(i * d, d) = sel.own_copy(extended[static_cast<std::size_t>(i)], i);
    res.extended = std::move(extended);
    res.iterations = h_iters;
    return res;
}

}  // namespace detail

// Distributed correction by partition-based ADMM: h_iters synchronous
// (primal, eta exchange, dual) rounds plus a final primal read-out, with the
// dual vector warm-started from the previous observer step.
inline CorrectionResult admm_run(const InfoContributions& contrib, const SelectionStructure& sel,
                                 AdmmState& state, int h_iters) {
    state.validate();
    if (h_iters < 1) throw InvalidParameter("need at least one ADMM iteration");
    const Eigen::VectorXd b = contrib.assemble_innovation();
    if (b.isZero(0.0)) {
        CorrectionResult res;
        res.xi = Eigen::VectorXd::Zero(contrib.nd());
        for (int i = 0; i < contrib.topo->n_agents; ++i)
            res.extended.push_back(Eigen::VectorXd::Zero(sel.extended_size(i)));
        return res;
    }
    const auto ws = detail::build_admm_workspace(contrib, state.rho);
    CorrectionResult res = detail::admm_iterate(contrib, sel, ws, state, h_iters);
    res.residual = (info_multiply(contrib, res.xi) - b).norm();
    return res;
}

// Per-agent closed-form correction from local information only,
// xi_i^l = (S_i^l)^{-1} b_i^l; no communication. An agent whose local
// information is singular must carry no local innovation, in which case its
// block is zero.
inline Eigen::VectorXd local_closed_form_correction(const InfoContributions& contrib) {
    const SensingTopology& topo = *contrib.topo;
    const int d = topo.state_dim;
    Eigen::VectorXd xi_local = Eigen::VectorXd::Zero(contrib.nd());
    for (int i = 0; i < topo.n_agents; ++i) {
        const auto& Sl = contrib.local_info[static_cast<std::size_t>(i)];
        const auto& bl = contrib.local_innov[static_cast<std::size_t>(i)];
        Eigen::LLT<Eigen::MatrixXd> llt(Sl);
        if (llt.info() != Eigen::Success) {
            if (!bl.isZero(0.0))
                throw InconsistentLocalInfo("agent " + std::to_string(i) +
                                            " has local innovation but singular local information");
            continue;  // block stays zero
        }
        xi_local.segment(i * d, d) = llt.solve(bl);
    }
    return xi_local;
}

// Edge innovations of the residual problem: b_e - S_e [xi_l_a ; xi_l_b].
// The local parts of the residual right hand side are identically zero.
inline std::vector<Eigen::VectorXd> residual_edge_innovations(const InfoContributions& contrib,
                                                              const Eigen::VectorXd& xi_local) {
    const SensingTopology& topo = *contrib.topo;
    const int d = topo.state_dim;
    std::vector<Eigen::VectorXd> residual(contrib.edge_innov);
    for (std::size_t e = 0; e < topo.comm_edges.size(); ++e) {
        const auto [a, b] = topo.comm_edges[e];
        Eigen::VectorXd pairvec(2 * d);
        pairvec.head(d) = xi_local.segment(a * d, d);
        pairvec.tail(d) = xi_local.segment(b * d, d);
        residual[e] -= contrib.edge_info[e] * pairvec;
    }
    return residual;
}

// Direct integration of local measurements: each agent folds its own local
// innovation in closed form, and the ADMM layer only solves the residual
// problem driven by the relative measurements.
inline CorrectionResult residual_split_solve(const InfoContributions& contrib,
                                             const SelectionStructure& sel, AdmmState& state,
                                             int h_iters) {
    state.validate();
    const SensingTopology& topo = *contrib.topo;
    const int d = topo.state_dim;
    const Eigen::VectorXd b = contrib.assemble_innovation();
    if (b.isZero(0.0)) {
        CorrectionResult res;
        res.xi = Eigen::VectorXd::Zero(contrib.nd());
        for (int i = 0; i < topo.n_agents; ++i)
            res.extended.push_back(Eigen::VectorXd::Zero(sel.extended_size(i)));
        return res;
    }

    const Eigen::VectorXd xi_local = local_closed_form_correction(contrib);
    const auto residual_edge = residual_edge_innovations(contrib, xi_local);

    const auto ws = detail::build_admm_workspace(contrib, state.rho, &residual_edge);
    CorrectionResult res = detail::admm_iterate(contrib, sel, ws, state, h_iters);
    res.xi += xi_local;
    for (int i = 0; i < topo.n_agents; ++i) {
        auto& ext = res.extended[static_cast<std::size_t>(i)];
        ext.head(d) += xi_local.segment(i * d, d);
        for (int pos = 0; pos < topo.degree(i); ++pos) {
            const int j = topo.neighbors[static_cast<std::size_t>(i)][static_cast<std::size_t>(pos)];
            ext.segment((1 + pos) * d, d) += xi_local.segment(j * d, d);
        }
    }
    res.residual = (info_multiply(contrib, res.xi) - b).norm();
    return res;
}

}  // namespace dko

#endif  // DKO_SOLVERS_HPP
