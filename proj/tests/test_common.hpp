#ifndef DKO_TEST_COMMON_HPP
#define DKO_TEST_COMMON_HPP

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dko/model.hpp"
#include "dko/observer.hpp"
#include "dko/rng.hpp"
#include "dko/topology.hpp"

namespace dko::test {

// Two agents on a line, d=1: agent 0 anchored with H=1, one sensing edge
// (0,1) measuring x_0 - x_1, all weights 1. The running toy instance.
struct T2 {
    SensingTopology topo;
    DualLayout layout;
    SelectionStructure sel;
    NetworkModel model;

    explicit T2(double a0 = 1.0, double a1 = 1.0) {
        topo = build_topology(2, {{0, 1}}, {0}, 1);
        layout = build_dual_layout(topo);
        sel = SelectionStructure(topo, layout);
        model.topology = topo;
        model.agents.resize(2);
        const double avals[2] = {a0, a1};
        for (int i = 0; i < 2; ++i) {
            const double a = avals[i];
            model.agents[i].dynamics = [a](long) { return a * Eigen::MatrixXd::Identity(1, 1); };
            model.agents[i].input_map = [](long) { return Eigen::MatrixXd::Zero(1, 1); };
            model.agents[i].input = [](long) { return Eigen::VectorXd::Zero(1); };
        }
        model.agents[0].local_map = Eigen::MatrixXd::Identity(1, 1);
        model.agents[0].local_weight = Eigen::MatrixXd::Identity(1, 1);
        model.relative.map_from.push_back(Eigen::MatrixXd::Identity(1, 1));
        model.relative.map_to.push_back(-Eigen::MatrixXd::Identity(1, 1));
        model.relative.weight.push_back(Eigen::MatrixXd::Identity(1, 1));
    }

    MeasurementSet measure_at(const Eigen::VectorXd& x) const { return measure(model, x, 0); }
};

inline Eigen::MatrixXd random_spd(CounterRng& rng, int n, double shift = 0.5) {
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = rng.gaussian();
    return A * A.transpose() / n + shift * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::VectorXd random_vector(CounterRng& rng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.gaussian();
    return v;
}

// Random graph-structured frozen correction problem: SPD local blocks (prior
// share included) plus PSD edge contributions built from random relative
// measurement maps, and random innovations. Moderately conditioned by
// construction so iterative solvers converge at the default tuning.
struct FrozenInstance {
    SensingTopology topo;
    DualLayout layout;
    SelectionStructure sel;
    InfoContributions contrib;
};

inline FrozenInstance make_random_instance(CounterRng& rng, int n_agents, int d) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n_agents; ++i)
        for (int j = 0; j < n_agents; ++j) {
            if (i == j) continue;
            if (rng.uniform() < 0.45) edges.emplace_back(i, j);
        }
    if (edges.empty() && n_agents > 1) edges.emplace_back(0, 1);
    std::vector<int> anchors;
    for (int i = 0; i < n_agents; ++i)
        if (rng.uniform() < 0.6) anchors.push_back(i);

    FrozenInstance inst;
    inst.topo = build_topology(n_agents, edges, anchors, d);
    inst.layout = build_dual_layout(inst.topo);
    inst.sel = SelectionStructure(inst.topo, inst.layout);
    inst.contrib = InfoContributions(inst.topo);

    for (int i = 0; i < n_agents; ++i) {
        inst.contrib.local_info[static_cast<std::size_t>(i)] = random_spd(rng, d);
        inst.contrib.local_innov[static_cast<std::size_t>(i)] = random_vector(rng, d);
    }
    for (std::size_t e = 0; e < inst.topo.comm_edges.size(); ++e) {
        // PSD pairwise block from a random 2-row measurement map.
        Eigen::MatrixXd H(2, 2 * d);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2 * d; ++c) H(r, c) = rng.gaussian();
        inst.contrib.edge_info[e] = H.transpose() * H;
        inst.contrib.edge_innov[e] = random_vector(rng, 2 * d);
    }
    return inst;
}

}  // namespace dko::test

#endif  // DKO_TEST_COMMON_HPP
