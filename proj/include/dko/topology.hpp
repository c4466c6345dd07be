#ifndef DKO_TOPOLOGY_HPP
#define DKO_TOPOLOGY_HPP

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dko/errors.hpp"

namespace dko {

// Directed sensing graph plus the induced undirected communication graph.
// Agents are 0-based. Edge orderings are canonical (lexicographic) so every
// stacked vector and matrix in the toolkit has one reproducible layout.
// Immutable after construction.
struct SensingTopology {
    int n_agents = 0;
    int state_dim = 0;

    // Directed sensing edges, sorted lexicographically, duplicates removed.
    std::vector<std::pair<int, int>> sensing_edges;
    // Undirected symmetrization, stored as (min,max), sorted lexicographically.
    std::vector<std::pair<int, int>> comm_edges;
    // Sorted neighbor list per agent, derived from comm_edges.
    std::vector<std::vector<int>> neighbors;
    // Agents with a local (absolute) measurement, sorted.
    std::vector<int> anchors;

    bool is_anchor(int i) const {
        return std::binary_search(anchors.begin(), anchors.end(), i);
    }

    bool has_sensing_edge(int i, int j) const {
        return std::binary_search(sensing_edges.begin(), sensing_edges.end(),
                                  std::make_pair(i, j));
    }

    // Index of the undirected edge {i,j} in comm_edges, or -1.
    int comm_edge_index(int i, int j) const {
        const auto e = std::minmax(i, j);
        const auto it = std::lower_bound(comm_edges.begin(), comm_edges.end(),
                                         std::make_pair(e.first, e.second));
        if (it == comm_edges.end() || *it != std::make_pair(e.first, e.second)) return -1;
        return static_cast<int>(it - comm_edges.begin());
    }

    int degree(int i) const { return static_cast<int>(neighbors[i].size()); }

    // Position of j in agent i's sorted neighbor list, or -1.
    int neighbor_position(int i, int j) const {
        const auto& nb = neighbors[i];
        const auto it = std::lower_bound(nb.begin(), nb.end(), j);
        if (it == nb.end() || *it != j) return -1;
        return static_cast<int>(it - nb.begin());
    }
};

inline SensingTopology build_topology(int n_agents,
                                      std::vector<std::pair<int, int>> sensing_edges,
                                      std::vector<int> anchor_set,
                                      int state_dim) {
    if (n_agents <= 0) throw InvalidParameter("n_agents must be positive");
    if (state_dim <= 0) throw InvalidParameter("state_dim must be positive");

    for (const auto& [i, j] : sensing_edges) {
        if (i < 0 || i >= n_agents || j < 0 || j >= n_agents)
            throw InvalidAgentIndex("sensing edge (" + std::to_string(i) + "," +
                                    std::to_string(j) + ") out of range 0.." +
                                    std::to_string(n_agents - 1));
        if (i == j) throw InvalidEdge("self-loop (" + std::to_string(i) + "," +
                                      std::to_string(j) + ") not allowed");
    }
    for (int a : anchor_set) {
        if (a < 0 || a >= n_agents)
            throw InvalidAgentIndex("anchor " + std::to_string(a) + " out of range");
    }

    SensingTopology topo;
    topo.n_agents = n_agents;
    topo.state_dim = state_dim;

    std::sort(sensing_edges.begin(), sensing_edges.end());
    sensing_edges.erase(std::unique(sensing_edges.begin(), sensing_edges.end()),
                        sensing_edges.end());
    topo.sensing_edges = std::move(sensing_edges);

    for (const auto& [i, j] : topo.sensing_edges) {
        topo.comm_edges.emplace_back(std::min(i, j), std::max(i, j));
    }
    std::sort(topo.comm_edges.begin(), topo.comm_edges.end());
    topo.comm_edges.erase(std::unique(topo.comm_edges.begin(), topo.comm_edges.end()),
                          topo.comm_edges.end());

    topo.neighbors.assign(static_cast<std::size_t>(n_agents), {});
    for (const auto& [i, j] : topo.comm_edges) {
        topo.neighbors[static_cast<std::size_t>(i)].push_back(j);
        topo.neighbors[static_cast<std::size_t>(j)].push_back(i);
    }
    for (auto& nb : topo.neighbors) std::sort(nb.begin(), nb.end());

    std::sort(anchor_set.begin(), anchor_set.end());
    anchor_set.erase(std::unique(anchor_set.begin(), anchor_set.end()), anchor_set.end());
    topo.anchors = std::move(anchor_set);
    return topo;
}

// Layout of the stacked dual vector q. Agent i owns one slice, ordered as
// [ col(q_{ij,i})_{j in N_i} ; col(q_{ij,j})_{j in N_i} ]: first the duals
// attached to i's own variable (one d-block per neighbor), then the duals
// attached to i's copies of each neighbor's variable. Slices are concatenated
// in agent order. Total length 4|E_c|d.
//
// The pairing permutation exchanges q_{ij,m} with q_{ji,m} for both endpoints
// m of every edge; it is an involution with no fixed points.
struct DualLayout {
    int d = 0;
    int total = 0;
    std::vector<int> agent_offset;   // entry offset of each agent's slice
    std::vector<int> pair_entry;     // entry-level pairing permutation

    // Offset of q_{ij,i} (own-variable dual) where j = neighbors[i][pos].
    int own_offset(const SensingTopology& topo, int i, int pos) const {
        return agent_offset[static_cast<std::size_t>(i)] + pos * d;
    }
    // Offset of q_{ij,j} (copy-variable dual) where j = neighbors[i][pos].
    int copy_offset(const SensingTopology& topo, int i, int pos) const {
        return agent_offset[static_cast<std::size_t>(i)] + (topo.degree(i) + pos) * d;
    }
    // Length of agent i's slice.
    int slice_size(const SensingTopology& topo, int i) const { return 2 * topo.degree(i) * d; }
};

inline DualLayout build_dual_layout(const SensingTopology& topo) {
    DualLayout layout;
    layout.d = topo.state_dim;
    layout.agent_offset.resize(static_cast<std::size_t>(topo.n_agents));
    int off = 0;
    for (int i = 0; i < topo.n_agents; ++i) {
        layout.agent_offset[static_cast<std::size_t>(i)] = off;
        off += 2 * topo.degree(i) * layout.d;
    }
    layout.total = off;

    layout.pair_entry.assign(static_cast<std::size_t>(layout.total), -1);
    for (int i = 0; i < topo.n_agents; ++i) {
        for (int pos = 0; pos < topo.degree(i); ++pos) {
            const int j = topo.neighbors[static_cast<std::size_t>(i)][static_cast<std::size_t>(pos)];
            const int pos_ji = topo.neighbor_position(j, i);
            // q_{ij,i} <-> q_{ji,i}: i's own block pairs with j's copy block of i.
            const int a = layout.own_offset(topo, i, pos);
            const int b = layout.copy_offset(topo, j, pos_ji);
            for (int n = 0; n < layout.d; ++n) {
                layout.pair_entry[static_cast<std::size_t>(a + n)] = b + n;
                layout.pair_entry[static_cast<std::size_t>(b + n)] = a + n;
            }
        }
    }
    for (int s = 0; s < layout.total; ++s) {
        if (layout.pair_entry[static_cast<std::size_t>(s)] < 0)
            throw InternalInvariantViolation("dual layout pairing is not total");
    }
    return layout;
}

// Returns Pq, the dual vector with both endpoints of every edge exchanged.
inline Eigen::VectorXd apply_pairing(const DualLayout& layout, const Eigen::VectorXd& q) {
    if (q.size() != layout.total)
        throw DimensionError("dual vector length " + std::to_string(q.size()) +
                             " does not match layout length " + std::to_string(layout.total));
    Eigen::VectorXd out(layout.total);
    for (int s = 0; s < layout.total; ++s)
        out[s] = q[layout.pair_entry[static_cast<std::size_t>(s)]];
    return out;
}

// Index-map realizations of the selection matrices. Selection is always
// applied through these helpers; dense forms exist only for the analysis
// layer (see dense_* below).
struct SelectionStructure {
    const SensingTopology* topo = nullptr;
    const DualLayout* layout = nullptr;

    SelectionStructure() = default;
    SelectionStructure(const SensingTopology& t, const DualLayout& l) : topo(&t), layout(&l) {}

    int d() const { return topo->state_dim; }
    // Extended local vector of agent i is [xi_i ; col(xi_j)_{j in N_i}].
    int extended_size(int i) const { return (1 + topo->degree(i)) * d(); }

    // Agent block of a global state vector (E_i^T x).
    Eigen::VectorXd agent_block(const Eigen::VectorXd& x, int i) const {
        return x.segment(i * d(), d());
    }

    // [x_i ; x_j] for an edge (E_ij^T x).
    Eigen::VectorXd edge_block(const Eigen::VectorXd& x, int i, int j) const {
        Eigen::VectorXd v(2 * d());
        v.head(d()) = x.segment(i * d(), d());
        v.tail(d()) = x.segment(j * d(), d());
        return v;
    }

    // A_qi^T applied to agent i's dual slice:
    // [ sum_j q_{ij,i} ; col(q_{ij,j})_{j in N_i} ].
    Eigen::VectorXd collapse_dual_slice(const Eigen::VectorXd& q, int i) const {
        const int deg = topo->degree(i);
        Eigen::VectorXd out = Eigen::VectorXd::Zero(extended_size(i));
        for (int pos = 0; pos < deg; ++pos) {
            out.head(d()) += q.segment(layout->own_offset(*topo, i, pos), d());
            out.segment((1 + pos) * d(), d()) = q.segment(layout->copy_offset(*topo, i, pos), d());
        }
        return out;
    }

    // A_qi applied to agent i's extended vector: replicates the own block into
    // every own-dual slot and copies the neighbor blocks into the copy slots.
    // Writes into the agent's slice of `out`.
    void expand_extended(const Eigen::VectorXd& v, int i, Eigen::VectorXd& out) const {
        const int deg = topo->degree(i);
        for (int pos = 0; pos < deg; ++pos) {
            out.segment(layout->own_offset(*topo, i, pos), d()) = v.head(d());
            out.segment(layout->copy_offset(*topo, i, pos), d()) = v.segment((1 + pos) * d(), d());
        }
    }

    // Sigma_i: agent i's own copy from its extended local vector.
    Eigen::VectorXd own_copy(const Eigen::VectorXd& extended, int i) const {
        (void)i;
        return extended.head(d());
    }
};

// Dense realizations, used only by the analysis layer and oracles.

inline Eigen::MatrixXd dense_pairing_matrix(const DualLayout& layout) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(layout.total, layout.total);
    for (int s = 0; s < layout.total; ++s)
        P(s, layout.pair_entry[static_cast<std::size_t>(s)]) = 1.0;
    return P;
}

// blkdiag(A_qi): maps stacked extended vectors to the dual layout.
inline Eigen::MatrixXd dense_dual_selector(const SensingTopology& topo, const DualLayout& layout) {
    const int d = topo.state_dim;
    int ext_total = 0;
    for (int i = 0; i < topo.n_agents; ++i) ext_total += (1 + topo.degree(i)) * d;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(layout.total, ext_total);
    int ext_off = 0;
    for (int i = 0; i < topo.n_agents; ++i) {
        const int deg = topo.degree(i);
        for (int pos = 0; pos < deg; ++pos) {
            A.block(layout.own_offset(topo, i, pos), ext_off, d, d).setIdentity();
            A.block(layout.copy_offset(topo, i, pos), ext_off + (1 + pos) * d, d, d).setIdentity();
        }
        ext_off += (1 + deg) * d;
    }
    return A;
}

// blkdiag(Sigma_i): extracts the stacked own copies from stacked extended vectors.
inline Eigen::MatrixXd dense_own_selector(const SensingTopology& topo) {
    const int d = topo.state_dim;
    int ext_total = 0;
    for (int i = 0; i < topo.n_agents; ++i) ext_total += (1 + topo.degree(i)) * d;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(topo.n_agents * d, ext_total);
    int ext_off = 0;
    for (int i = 0; i < topo.n_agents; ++i) {
        S.block(i * d, ext_off, d, d).setIdentity();
        ext_off += (1 + topo.degree(i)) * d;
    }
    return S;
}

}  // namespace dko

#endif  // DKO_TOPOLOGY_HPP
