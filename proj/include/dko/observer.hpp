#ifndef DKO_OBSERVER_HPP
#define DKO_OBSERVER_HPP

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dko/errors.hpp"
#include "dko/model.hpp"
#include "dko/topology.hpp"

namespace dko {

// Symmetric block matrix with the communication graph's sparsity pattern.
// Diagonal blocks are stored per agent; each undirected edge {a,b} (a<b)
// stores its (a,b) block once, the (b,a) block being its transpose. Storage
// for off-pattern blocks does not exist, so fill-in is unrepresentable.
struct BlockSparseInfoMatrix {
    const SensingTopology* topo = nullptr;
    std::vector<Eigen::MatrixXd> diag;  // per agent, d x d
    std::vector<Eigen::MatrixXd> off;   // per comm edge, d x d, (min,max) orientation

    BlockSparseInfoMatrix() = default;
    explicit BlockSparseInfoMatrix(const SensingTopology& t) : topo(&t) {
        const int d = t.state_dim;
        diag.assign(static_cast<std::size_t>(t.n_agents), Eigen::MatrixXd::Zero(d, d));
        off.assign(t.comm_edges.size(), Eigen::MatrixXd::Zero(d, d));
    }

    int d() const { return topo->state_dim; }
    int nd() const { return topo->n_agents * topo->state_dim; }

    // (i,j) block respecting the transpose convention; {i,j} must be on-pattern.
    Eigen::MatrixXd block(int i, int j) const {
        if (i == j) return diag[static_cast<std::size_t>(i)];
        const int e = topo->comm_edge_index(i, j);
        if (e < 0) throw TopologyMismatch("no stored block for agents " + std::to_string(i) +
                                          "," + std::to_string(j));
        if (i < j) return off[static_cast<std::size_t>(e)];
        return off[static_cast<std::size_t>(e)].transpose();
    }

    Eigen::MatrixXd assemble_dense() const {
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nd(), nd());
        for (int i = 0; i < topo->n_agents; ++i)
            S.block(i * d(), i * d(), d(), d()) = diag[static_cast<std::size_t>(i)];
        for (std::size_t e = 0; e < topo->comm_edges.size(); ++e) {
            const auto [a, b] = topo->comm_edges[e];
            S.block(a * d(), b * d(), d(), d()) = off[e];
            S.block(b * d(), a * d(), d(), d()) = off[e].transpose();
        }
        return S;
    }

    // Block-sparse product S*x; agent i's output block reads only one-hop data.
    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
        if (x.size() != nd())
            throw DimensionError("vector length " + std::to_string(x.size()) +
                                 " != " + std::to_string(nd()));
        Eigen::VectorXd y(nd());
        for (int i = 0; i < topo->n_agents; ++i) {
            Eigen::VectorXd yi = diag[static_cast<std::size_t>(i)] * x.segment(i * d(), d());
            for (int j : topo->neighbors[static_cast<std::size_t>(i)]) {
                const int e = topo->comm_edge_index(i, j);
                const auto& Sab = off[static_cast<std::size_t>(e)];
                if (i < j)
                    yi.noalias() += Sab * x.segment(j * d(), d());
                else
                    yi.noalias() += Sab.transpose() * x.segment(j * d(), d());
            }
            y.segment(i * d(), d()) = yi;
        }
        return y;
    }
};

// Additive information state kept split by source: one local contribution per
// agent (prior share folded in at initialization) and one pairwise
// contribution per undirected edge collecting both oriented relative
// measurements. Innovations are per-step quantities refreshed by each
// measurement update.
struct InfoContributions {
    const SensingTopology* topo = nullptr;
    std::vector<Eigen::MatrixXd> local_info;   // S_i^l, d x d, PSD
    std::vector<Eigen::VectorXd> local_innov;  // b_i^l, d
    std::vector<Eigen::MatrixXd> edge_info;    // S_e, 2d x 2d, PSD, (min,max) order
    std::vector<Eigen::VectorXd> edge_innov;   // b_e, 2d

    InfoContributions() = default;
    explicit InfoContributions(const SensingTopology& t) : topo(&t) {
        const int d = t.state_dim;
        local_info.assign(static_cast<std::size_t>(t.n_agents), Eigen::MatrixXd::Zero(d, d));
        local_innov.assign(static_cast<std::size_t>(t.n_agents), Eigen::VectorXd::Zero(d));
        edge_info.assign(t.comm_edges.size(), Eigen::MatrixXd::Zero(2 * d, 2 * d));
        edge_innov.assign(t.comm_edges.size(), Eigen::VectorXd::Zero(2 * d));
    }

    int d() const { return topo->state_dim; }
    int nd() const { return topo->n_agents * topo->state_dim; }

    void clear_innovations() {
        for (auto& b : local_innov) b.setZero();
        for (auto& b : edge_innov) b.setZero();
    }

    // Edge block of edge e as seen from agent i: (own, other) sub-blocks.
    // For the canonical edge (a,b), row/col 0 belongs to a.
    Eigen::MatrixXd edge_block(int e, int row_agent, int col_agent) const {
        const auto [a, b] = topo->comm_edges[static_cast<std::size_t>(e)];
        const int dd = d();
        const int r = (row_agent == a) ? 0 : dd;
        const int c = (col_agent == a) ? 0 : dd;
        return edge_info[static_cast<std::size_t>(e)].block(r, c, dd, dd);
    }

    Eigen::VectorXd edge_innov_block(int e, int agent) const {
        const auto [a, b] = topo->comm_edges[static_cast<std::size_t>(e)];
        const int dd = d();
        return edge_innov[static_cast<std::size_t>(e)].segment(agent == a ? 0 : dd, dd);
    }

    BlockSparseInfoMatrix assemble_matrix() const {
        BlockSparseInfoMatrix S(*topo);
        const int dd = d();
        for (int i = 0; i < topo->n_agents; ++i)
            S.diag[static_cast<std::size_t>(i)] = local_info[static_cast<std::size_t>(i)];
        for (std::size_t e = 0; e < topo->comm_edges.size(); ++e) {
            const auto [a, b] = topo->comm_edges[e];
            S.diag[static_cast<std::size_t>(a)] += edge_info[e].topLeftCorner(dd, dd);
            S.diag[static_cast<std::size_t>(b)] += edge_info[e].bottomRightCorner(dd, dd);
            S.off[e] += edge_info[e].topRightCorner(dd, dd);
        }
        return S;
    }

    // Global innovation vector b; block i sums the local term and the i-sides
    // of incident edge innovations.
    Eigen::VectorXd assemble_innovation() const {
        const int dd = d();
        Eigen::VectorXd b = Eigen::VectorXd::Zero(nd());
        for (int i = 0; i < topo->n_agents; ++i)
            b.segment(i * dd, dd) = local_innov[static_cast<std::size_t>(i)];
        for (std::size_t e = 0; e < topo->comm_edges.size(); ++e) {
            const auto [a, bb] = topo->comm_edges[e];
            b.segment(a * dd, dd) += edge_innov[e].head(dd);
            b.segment(bb * dd, dd) += edge_innov[e].tail(dd);
        }
        return b;
    }
};

// Exact sum prior + local + edge contributions, densely. Oracle/analysis
// bridge only; the distributed pipeline never forms this.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> assemble_dense(
    const InfoContributions& contrib, const Eigen::MatrixXd& prior) {
    Eigen::MatrixXd S = prior.size() == 0
                            ? Eigen::MatrixXd::Zero(contrib.nd(), contrib.nd())
                            : prior;
    if (S.rows() != contrib.nd() || S.cols() != contrib.nd())
        throw DimensionError("prior size mismatch");
    S += contrib.assemble_matrix().assemble_dense();
    return {S, contrib.assemble_innovation()};
}

// Forgetting gain: scalar gamma or a per-state-component diagonal (the same
// diagonal for every agent).
using Forgetting = std::variant<double, Eigen::VectorXd>;

inline void validate_forgetting(const Forgetting& f, int d) {
    if (std::holds_alternative<double>(f)) {
        const double g = std::get<double>(f);
        if (!(g > 0.0 && g < 1.0)) throw InvalidParameter("scalar forgetting must be in (0,1)");
    } else {
        const auto& v = std::get<Eigen::VectorXd>(f);
        if (v.size() != d) throw DimensionError("diagonal forgetting must have one entry per state component");
        for (int n = 0; n < v.size(); ++n)
            if (!(v[n] > 0.0 && v[n] < 1.0))
                throw InvalidParameter("diagonal forgetting entries must be in (0,1)");
    }
}

struct ObserverState {
    const SensingTopology* topo = nullptr;
    Eigen::VectorXd xhat;         // prior estimate x_{k|k-1}
    InfoContributions contrib;    // cumulative information, prior folded in
    double eps = 1.0;             // correction gain in (0,1]
    Forgetting forgetting = 1.0;  // gamma or diagonal Gamma
    long k = 0;
};

// Initializes with a block-diagonal prior: S_{0|0} = eps * blkdiag(P0_i^{-1}).
// Scaling the initialization by eps keeps the whole information trajectory an
// exact eps-multiple of the unit-gain one.
inline ObserverState make_observer(const SensingTopology& topo, const Eigen::VectorXd& xhat0,
                                   const Eigen::MatrixXd& p0_diag_block, double eps,
                                   Forgetting forgetting) {
    if (!(eps > 0.0 && eps <= 1.0)) throw InvalidParameter("eps must be in (0,1]");
    validate_forgetting(forgetting, topo.state_dim);
    if (xhat0.size() != topo.n_agents * topo.state_dim)
        throw DimensionError("initial estimate length mismatch");
    ObserverState st;
    st.topo = &topo;
    st.xhat = xhat0;
    st.contrib = InfoContributions(topo);
    st.eps = eps;
    st.forgetting = forgetting;
    const Eigen::MatrixXd P0inv = p0_diag_block.inverse();
    for (auto& Sl : st.contrib.local_info) Sl = eps * P0inv;
    return st;
}

// Additive measurement update. Adds eps-scaled information increments to the
// per-agent and per-edge contributions and refreshes the innovations against
// the prior estimate. No off-pattern storage exists, so the graph pattern is
// preserved by construction.
inline void measurement_update(ObserverState& state, const NetworkModel& model,
                               const MeasurementSet& meas, long k) {
    (void)k;
    const SensingTopology& topo = *state.topo;
    const int d = topo.state_dim;
    if (meas.local.size() != static_cast<std::size_t>(topo.n_agents) ||
        meas.relative.size() != topo.sensing_edges.size())
        throw TopologyMismatch("measurement set shape does not match topology");

    state.contrib.clear_innovations();

    for (int i = 0; i < topo.n_agents; ++i) {
        if (!meas.local[static_cast<std::size_t>(i)].has_value()) continue;
        if (!topo.is_anchor(i))
            throw TopologyMismatch("local measurement for non-anchor agent " + std::to_string(i));
        const auto& agent = model.agents[static_cast<std::size_t>(i)];
        const Eigen::MatrixXd& H = agent.local_map;
        const Eigen::MatrixXd& R = agent.local_weight;
        const Eigen::VectorXd& y = *meas.local[static_cast<std::size_t>(i)];
        const Eigen::VectorXd innov = y - H * state.xhat.segment(i * d, d);
        state.contrib.local_info[static_cast<std::size_t>(i)].noalias() +=
            state.eps * H.transpose() * R * H;
        state.contrib.local_innov[static_cast<std::size_t>(i)].noalias() +=
            H.transpose() * R * innov;
    }

    for (std::size_t e = 0; e < topo.sensing_edges.size(); ++e) {
        if (meas.relative[e].size() == 0) continue;  // absent this step
        const auto [i, j] = topo.sensing_edges[e];
        const int ce = topo.comm_edge_index(i, j);
        const auto [a, b] = topo.comm_edges[static_cast<std::size_t>(ce)];
        // H blocks ordered to match the canonical edge orientation (a,b).
        const Eigen::MatrixXd& Hi = model.relative.map_from[e];
        const Eigen::MatrixXd& Hj = model.relative.map_to[e];
        const Eigen::MatrixXd& Ha = (i == a) ? Hi : Hj;
        const Eigen::MatrixXd& Hb = (i == a) ? Hj : Hi;
        const Eigen::MatrixXd& R = model.relative.weight[e];
        const Eigen::VectorXd innov = meas.relative[e] -
                                      Hi * state.xhat.segment(i * d, d) -
                                      Hj * state.xhat.segment(j * d, d);
        auto& Se = state.contrib.edge_info[static_cast<std::size_t>(ce)];
        Se.topLeftCorner(d, d).noalias() += state.eps * Ha.transpose() * R * Ha;
        Se.topRightCorner(d, d).noalias() += state.eps * Ha.transpose() * R * Hb;
        Se.bottomLeftCorner(d, d).noalias() += state.eps * Hb.transpose() * R * Ha;
        Se.bottomRightCorner(d, d).noalias() += state.eps * Hb.transpose() * R * Hb;
        auto& be = state.contrib.edge_innov[static_cast<std::size_t>(ce)];
        be.head(d).noalias() += Ha.transpose() * R * innov;
        be.tail(d).noalias() += Hb.transpose() * R * innov;
    }
    state.k = k;
}

// Global innovation vector for the current step (after measurement_update).
inline Eigen::VectorXd innovation_vector(const ObserverState& state) {
    return state.contrib.assemble_innovation();
}

// Sparsity-preserving prediction: every stored d x d information block (i,j)
// maps through gamma * A_i^{-T} (.) A_j^{-1}, or A_i^{-T} G_i (.) G_j A_j^{-1}
// with a diagonal gain. The same recursion is applied to the local and the
// pairwise contributions, so their sum tracks the predicted global matrix.
inline void forgetting_prediction(InfoContributions& contrib, const NetworkModel& model,
                                  const Forgetting& forgetting, long k) {
    const SensingTopology& topo = *contrib.topo;
    const int d = topo.state_dim;
    validate_forgetting(forgetting, d);
    const bool scalar = std::holds_alternative<double>(forgetting);
    const double gamma = scalar ? std::get<double>(forgetting) : 0.0;
    const Eigen::VectorXd gdiag = scalar ? Eigen::VectorXd() : std::get<Eigen::VectorXd>(forgetting);

    std::vector<Eigen::MatrixXd> Ainv(static_cast<std::size_t>(topo.n_agents));
    for (int i = 0; i < topo.n_agents; ++i) {
        const Eigen::MatrixXd Ai = model.dynamics_block(i, k);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Ai);
        if (!lu.isInvertible()) throw SingularDynamics(i, k);
        Ainv[static_cast<std::size_t>(i)] = lu.inverse();
        if (!scalar) Ainv[static_cast<std::size_t>(i)] = gdiag.asDiagonal() * Ainv[static_cast<std::size_t>(i)];
    }
    // With M_i := Gamma_i A_i^{-1} (or A_i^{-1} in the scalar case), every
    // block maps as S_ij <- M_i^T S_ij M_j, times gamma when scalar.
    for (int i = 0; i < topo.n_agents; ++i) {
        auto& Sl = contrib.local_info[static_cast<std::size_t>(i)];
        Sl = Ainv[static_cast<std::size_t>(i)].transpose() * Sl * Ainv[static_cast<std::size_t>(i)];
        if (scalar) Sl *= gamma;
    }
    for (std::size_t e = 0; e < topo.comm_edges.size(); ++e) {
        const auto [a, b] = topo.comm_edges[e];
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * d, 2 * d);
        M.topLeftCorner(d, d) = Ainv[static_cast<std::size_t>(a)];
        M.bottomRightCorner(d, d) = Ainv[static_cast<std::size_t>(b)];
        contrib.edge_info[e] = M.transpose() * contrib.edge_info[e] * M;
        if (scalar) contrib.edge_info[e] *= gamma;
    }
}

// x_{k|k} = x_{k|k-1} + eps * correction.
inline void apply_correction(ObserverState& state, const Eigen::VectorXd& correction) {
    if (correction.size() != state.xhat.size())
        throw DimensionError("correction length " + std::to_string(correction.size()) +
                             " != " + std::to_string(state.xhat.size()));
    state.xhat += state.eps * correction;
}

// x_{k+1|k} = A_k x_{k|k} + B_k u_k, blockwise.
inline void predict_state(ObserverState& state, const NetworkModel& model, long k) {
    const int d = state.topo->state_dim;
    for (int i = 0; i < state.topo->n_agents; ++i) {
        const auto& agent = model.agents[static_cast<std::size_t>(i)];
        state.xhat.segment(i * d, d) = agent.dynamics(k) * state.xhat.segment(i * d, d) +
                                       agent.input_map(k) * agent.input(k);
    }
    state.k = k + 1;
}

}  // namespace dko

#endif  // DKO_OBSERVER_HPP
