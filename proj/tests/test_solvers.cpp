#include <limits>

#include <catch2/catch_amalgamated.hpp>

#include "dko/analysis.hpp"
#include "dko/observer.hpp"
#include "dko/solvers.hpp"
#include "test_common.hpp"

using namespace dko;
using Catch::Approx;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// T2 contributions with the worked example numbers: S = [[3,-1],[-1,2]],
// b = [2,-1].
InfoContributions t2_contrib(const test::T2& t2) {
    auto obs = make_observer(t2.topo, VectorXd::Zero(2), MatrixXd::Identity(1, 1), 1.0, 0.5);
    MeasurementSet meas;
    meas.local.assign(2, std::nullopt);
    meas.local[0] = VectorXd::Ones(1);
    meas.relative.push_back(VectorXd::Ones(1));
    measurement_update(obs, t2.model, meas, 0);
    return obs.contrib;
}

}  // namespace

TEST_CASE("solve_centralized basics") {
    REQUIRE((solve_centralized(MatrixXd::Identity(3, 3), Eigen::Vector3d(1, -2, 3)) -
             Eigen::Vector3d(1, -2, 3))
                .norm() < 1e-15);
    MatrixXd S(2, 2);
    S << 3, -1, -1, 2;
    VectorXd b(2);
    b << 2, -1;
    const VectorXd xi = solve_centralized(S, b);
    REQUIRE(xi[0] == Approx(0.6).epsilon(1e-12));
    REQUIRE(xi[1] == Approx(-0.2).epsilon(1e-12));
    REQUIRE((S * xi - b).norm() <= 1e-12 * b.norm());
    REQUIRE(solve_centralized(S, VectorXd::Zero(2)).isZero(0.0));

    MatrixXd notspd(2, 2);
    notspd << 1, 2, 2, 1;
    REQUIRE_THROWS_AS(solve_centralized(notspd, b), NotSPD);
    REQUIRE_THROWS_AS(solve_centralized(S, VectorXd::Zero(3)), DimensionError);
}

TEST_CASE("richardson_step") {
    test::T2 t2;
    auto contrib = t2_contrib(t2);
    const VectorXd b = contrib.assemble_innovation();

    // from zero: xi' = alpha_R * b
    REQUIRE((richardson_step(contrib, VectorXd::Zero(2), b, 0.1) -
             Eigen::Vector2d(0.2, -0.1))
                .norm() < 1e-15);

    // exact solution is a fixed point
    auto [S, bd] = assemble_dense(contrib, MatrixXd());
    const VectorXd xi = solve_centralized(S, bd);
    REQUIRE((richardson_step(contrib, xi, b, 0.3) - xi).norm() < 1e-13);

    REQUIRE_THROWS_AS(richardson_step(contrib, VectorXd::Zero(2), b, 0.0), InvalidParameter);
}

TEST_CASE("richardson converges monotonically in the S-weighted norm") {
    CounterRng rng(5, 31);
    auto inst = test::make_random_instance(rng, 4, 2);
    auto [S, b] = assemble_dense(inst.contrib, MatrixXd());
    const VectorXd xi = solve_centralized(S, b);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S, Eigen::EigenvaluesOnly);
    const double alpha_R = 1.0 / eig.eigenvalues().maxCoeff();
    VectorXd x = VectorXd::Zero(S.rows());
    double prev = std::numeric_limits<double>::infinity();
    for (int h = 0; h < 200; ++h) {
        x = richardson_step(inst.contrib, x, b, alpha_R);
        const VectorXd e = x - xi;
        const double weighted = std::sqrt(e.dot(S * e));
        REQUIRE(weighted <= prev * (1.0 + 1e-12));
        prev = weighted;
    }
    REQUIRE((x - xi).norm() < 1e-2 * (1.0 + xi.norm()));
}

TEST_CASE("richardson block products are one-hop local") {
    // Poison agent 2's data; agent 0's block of S*x (0-1-2 path) is unchanged.
    auto topo = build_topology(3, {{0, 1}, {1, 2}}, {}, 1);
    InfoContributions contrib(topo);
    for (int i = 0; i < 3; ++i) contrib.local_info[i] = MatrixXd::Identity(1, 1);
    contrib.edge_info[0] << 1, -1, -1, 1;
    contrib.edge_info[1] << 2, -2, -2, 2;
    VectorXd x(3);
    x << 1, 2, 3;
    const VectorXd y = info_multiply(contrib, x);

    auto poisoned = contrib;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    poisoned.local_info[2].setConstant(nan);
    poisoned.edge_info[1].setConstant(nan);
    VectorXd xp = x;
    xp[2] = nan;
    // agent 0 only reads its own block, edge {0,1}, and x_1
    const double y0 = (poisoned.local_info[0] * x.segment(0, 1) +
                       poisoned.edge_block(0, 0, 0) * x.segment(0, 1) +
                       poisoned.edge_block(0, 0, 1) * xp.segment(1, 1))[0];
    REQUIRE(std::isfinite(y0));
    REQUIRE(y0 == Approx(y[0]));
}

TEST_CASE("admm_primal closed form") {
    test::T2 t2;

    // zero information, zero dual, zero rhs -> zero
    InfoContributions zero(t2.topo);
    const VectorXd q0 = VectorXd::Zero(t2.layout.total);
    REQUIRE(admm_primal(zero, t2.sel, 0, VectorXd::Zero(2), q0, 1.0).isZero(0.0));

    // zero information, |N_i|=1, d=1, rho=1: H = I_2, xi = rhs
    VectorXd rhs(2);
    rhs << 2, 3;
    REQUIRE((admm_primal(zero, t2.sel, 0, rhs, q0, 1.0) - rhs).norm() < 1e-15);

    // full contributions vs a dense quadratic oracle: extract the local
    // subproblem's Hessian and gradient by evaluating its cost (quadratic, so
    // the finite differences are exact) and solve the stationarity system.
    auto contrib = t2_contrib(t2);
    CounterRng rng(9, 1);
    VectorXd q = test::random_vector(rng, t2.layout.total);
    const int i = 0;
    const double rho = 1.3;

    auto cost = [&](const VectorXd& v) {
        // phi_i + 1/2 phi_edge - dual terms + rho/2 (|N_i| ||v_0||^2 + sum ||v_j||^2),
        // written straight from the cost definitions.
        const double xi_i = v[0], xi_j = v[1];
        const auto& Sl = contrib.local_info[0];
        const auto& bl = contrib.local_innov[0];
        const auto& Se = contrib.edge_info[0];
        const auto& be = contrib.edge_innov[0];
        double J = 0.5 * Sl(0, 0) * xi_i * xi_i - bl[0] * xi_i;
        Eigen::Vector2d pair(xi_i, xi_j);
        J += 0.5 * (0.5 * pair.dot(Se * pair) - pair.dot(be));
        const double dual = q[t2.layout.own_offset(t2.topo, i, 0)] * xi_i +
                            q[t2.layout.copy_offset(t2.topo, i, 0)] * xi_j;
        const double penalty = 0.5 * rho * (1 * xi_i * xi_i + xi_j * xi_j);
        return J - dual + penalty;
    };
    // quadratic: Hessian and gradient via exact finite differences at h=1
    MatrixXd Hh(2, 2);
    VectorXd g(2);
    const double c0 = cost(VectorXd::Zero(2));
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            VectorXd ea = VectorXd::Zero(2), eb = VectorXd::Zero(2), eab = VectorXd::Zero(2);
            ea[a] = 1;
            eb[b] = 1;
            eab[a] += 1;
            eab[b] += 1;
            Hh(a, b) = cost(eab) - cost(ea) - cost(eb) + c0;
        }
    }
    for (int a = 0; a < 2; ++a) {
        VectorXd ea = VectorXd::Zero(2);
        ea[a] = 1;
        g[a] = cost(ea) - c0 - 0.5 * Hh(a, a);
    }
    const VectorXd oracle = -Hh.ldlt().solve(g);
    const VectorXd direct = admm_primal(contrib, t2.sel, i, admm_local_rhs(contrib, i), q, rho);
    REQUIRE((direct - oracle).norm() < 1e-10 * (1.0 + oracle.norm()));
}

TEST_CASE("admm_dual formula") {
    test::T2 t2;
    const double rho = 1.0;

    // cancellation: q_{01,0}=1 paired with q_{10,0}=1, zero primals
    VectorXd q = VectorXd::Zero(4);
    q[0] = 1.0;  // q_{01,0}
    q[3] = 1.0;  // q_{10,0}
    std::vector<VectorXd> ext(2, VectorXd::Zero(2));
    const VectorXd next = admm_dual(t2.topo, t2.layout, q, ext, rho, 0.5);
    REQUIRE(next[0] == Approx(0.0).margin(1e-15));

    // alpha=0 boundary: formula degenerates to the identity
    const VectorXd same = admm_dual(t2.topo, t2.layout, q, ext, rho, 0.0);
    REQUIRE((same - q).norm() == 0.0);

    // missing primal copy violates the synchronous contract
    std::vector<VectorXd> missing(2);
    missing[0] = VectorXd::Zero(2);
    REQUIRE_THROWS_AS(admm_dual(t2.topo, t2.layout, q, missing, rho, 0.5), ProtocolError);
}

TEST_CASE("stacked dual update equals the elementwise one") {
    CounterRng rng(17, 3);
    for (int trial = 0; trial < 5; ++trial) {
        auto inst = test::make_random_instance(rng, 4, 2);
        if (inst.layout.total == 0) continue;
        const double rho = 0.7, alpha = 0.6;
        auto op = build_frozen_operator(inst.contrib, inst.sel, rho, alpha, false);
        const VectorXd q = test::random_vector(rng, inst.layout.total);
        auto ws = detail::build_admm_workspace(inst.contrib, rho);
        std::vector<VectorXd> ext(inst.topo.n_agents);
        for (int i = 0; i < inst.topo.n_agents; ++i)
            ext[i] = ws.factor[i].solve(ws.rhs[i] + inst.sel.collapse_dual_slice(q, i));
        const VectorXd elementwise = admm_dual(inst.topo, inst.layout, q, ext, rho, alpha);
        const VectorXd stacked = op.T * q + alpha * op.c;
        REQUIRE((elementwise - stacked).cwiseAbs().maxCoeff() <
                1e-12 * (1.0 + stacked.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("admm_run reaches the centralized solution") {
    test::T2 t2;
    auto contrib = t2_contrib(t2);
    auto [S, b] = assemble_dense(contrib, MatrixXd());
    const VectorXd xi = solve_centralized(S, b);

    AdmmState st;
    auto res = admm_run(contrib, t2.sel, st, 500);
    REQUIRE((res.xi - xi).norm() < 1e-8);
    REQUIRE(res.residual < 1e-8);

    // consensus at the optimum: copies agree across edges
    for (int i = 0; i < 2; ++i)
        for (int pos = 0; pos < t2.topo.degree(i); ++pos) {
            const int j = t2.topo.neighbors[i][pos];
            REQUIRE((res.extended[i].segment(1, 1) - res.extended[j].head(1)).norm() < 1e-8);
        }

    // Sigma-extraction consistency
    for (int i = 0; i < 2; ++i)
        REQUIRE(res.xi.segment(i, 1) == t2.sel.own_copy(res.extended[i], i));
}

TEST_CASE("admm fixed point: equilibrium dual gives the exact correction in one round") {
    test::T2 t2;
    auto contrib = t2_contrib(t2);
    auto [S, b] = assemble_dense(contrib, MatrixXd());
    const VectorXd xi = solve_centralized(S, b);

    auto op = build_frozen_operator(contrib, t2.sel, 1.0, 0.95);
    const VectorXd q_eq = op.dense_pinv(t2.layout) * op.c;
    AdmmState st;
    st.q = q_eq;
    auto res = admm_run(contrib, t2.sel, st, 1);
    REQUIRE((res.xi - xi).norm() < 1e-10);
    REQUIRE((st.q - q_eq).norm() < 1e-10);  // dual untouched by the update
}

TEST_CASE("admm_run zero innovation short-circuits") {
    test::T2 t2;
    InfoContributions contrib(t2.topo);
    contrib.local_info[0] = MatrixXd::Identity(1, 1);
    contrib.local_info[1] = MatrixXd::Identity(1, 1);
    AdmmState st;
    st.q = VectorXd::Constant(4, 0.7);
    const VectorXd q_before = st.q;
    auto res = admm_run(contrib, t2.sel, st, 7);
    REQUIRE(res.xi.isZero(0.0));
    REQUIRE((st.q - q_before).norm() == 0.0);
}

TEST_CASE("admm locality: poisoned far data never reaches an agent's round") {
    // Path 0-1-2: agent 0's primal and its incident dual updates must not
    // read agent 2's blocks.
    auto topo = build_topology(3, {{0, 1}, {1, 2}}, {0, 2}, 1);
    auto layout = build_dual_layout(topo);
    SelectionStructure sel(topo, layout);
    InfoContributions contrib(topo);
    for (int i = 0; i < 3; ++i) {
        contrib.local_info[i] = 2.0 * MatrixXd::Identity(1, 1);
        contrib.local_innov[i] = VectorXd::Constant(1, 0.5 * (i + 1));
    }
    for (int e = 0; e < 2; ++e) {
        contrib.edge_info[e] << 1, -1, -1, 1;
        contrib.edge_innov[e] << 0.3, -0.3;
    }
    CounterRng rng(23, 29);
    const VectorXd q = test::random_vector(rng, layout.total);

    const VectorXd ref_primal = admm_primal(contrib, sel, 0, admm_local_rhs(contrib, 0), q, 1.0);

    auto poisoned = contrib;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    poisoned.local_info[2].setConstant(nan);
    poisoned.local_innov[2].setConstant(nan);
    poisoned.edge_info[1].setConstant(nan);
    poisoned.edge_innov[1].setConstant(nan);
    const VectorXd poisoned_primal =
        admm_primal(poisoned, sel, 0, admm_local_rhs(poisoned, 0), q, 1.0);
    REQUIRE(poisoned_primal.allFinite());
    REQUIRE((poisoned_primal - ref_primal).norm() == 0.0);

    // Dual slots of the edge {0,1} depend only on messages across that edge.
    std::vector<VectorXd> ext(3);
    ext[0] = ref_primal;
    ext[1] = test::random_vector(rng, 3);
    ext[2] = VectorXd::Constant(2, nan);
    const VectorXd qn = admm_dual(topo, layout, q, ext, 1.0, 0.5);
    REQUIRE(std::isfinite(qn[layout.own_offset(topo, 0, 0)]));
    REQUIRE(std::isfinite(qn[layout.copy_offset(topo, 0, 0)]));
}

TEST_CASE("eta message schema carries the dual exchange") {
    test::T2 t2;
    auto contrib = t2_contrib(t2);
    AdmmState st;
    auto res = admm_run(contrib, t2.sel, st, 3);
    const auto messages =
        make_eta_messages(t2.topo, t2.layout, st.q, res.extended, st.rho, 3);
    REQUIRE(messages.size() == 2);  // one per direction of the single edge
    for (const auto& m : messages) {
        REQUIRE(m.from != m.to);
        REQUIRE(m.eta_sender.size() == 1);
        REQUIRE(m.eta_receiver.size() == 1);
        REQUIRE(m.iter == 3);
    }
}

TEST_CASE("residual split equals the centralized solution") {
    test::T2 t2;
    auto contrib = t2_contrib(t2);
    auto [S, b] = assemble_dense(contrib, MatrixXd());
    const VectorXd xi = solve_centralized(S, b);
    AdmmState st;
    auto res = residual_split_solve(contrib, t2.sel, st, 500);
    REQUIRE((res.xi - xi).norm() < 1e-8);
    // exactness of the reconstruction: S(xi_l + eta) = b
    REQUIRE((S * res.xi - b).norm() < 1e-10 * (1.0 + b.norm()));
}

TEST_CASE("residual split: anchored agents with no relative measurements") {
    auto topo = build_topology(2, {}, {0, 1}, 1);
    auto layout = build_dual_layout(topo);
    SelectionStructure sel(topo, layout);
    InfoContributions contrib(topo);
    contrib.local_info[0] = 2.0 * MatrixXd::Identity(1, 1);
    contrib.local_info[1] = 4.0 * MatrixXd::Identity(1, 1);
    contrib.local_innov[0] = VectorXd::Constant(1, 1.0);
    contrib.local_innov[1] = VectorXd::Constant(1, 2.0);
    AdmmState st;
    auto res = residual_split_solve(contrib, sel, st, 5);
    REQUIRE(res.xi[0] == Approx(0.5));
    REQUIRE(res.xi[1] == Approx(0.5));
}

TEST_CASE("residual split reduces to admm_run when local innovations vanish") {
    test::T2 t2;
    auto contrib = t2_contrib(t2);
    contrib.local_innov[0].setZero();
    contrib.local_innov[1].setZero();
    AdmmState st1, st2;
    auto split = residual_split_solve(contrib, t2.sel, st1, 40);
    auto plain = admm_run(contrib, t2.sel, st2, 40);
    REQUIRE((split.xi - plain.xi).norm() < 1e-12);
}

TEST_CASE("residual split flags inconsistent local information") {
    auto topo = build_topology(2, {{0, 1}}, {0}, 1);
    auto layout = build_dual_layout(topo);
    SelectionStructure sel(topo, layout);
    InfoContributions contrib(topo);
    contrib.local_info[0] = MatrixXd::Identity(1, 1);
    contrib.local_innov[1] = VectorXd::Constant(1, 1.0);  // innovation, no information
    contrib.edge_info[0] << 1, -1, -1, 1;
    AdmmState st;
    REQUIRE_THROWS_AS(residual_split_solve(contrib, sel, st, 3), InconsistentLocalInfo);

    // with a void local innovation the agent simply contributes zero
    contrib.local_innov[1].setZero();
    contrib.local_innov[0] = VectorXd::Constant(1, 0.5);
    REQUIRE_NOTHROW(residual_split_solve(contrib, sel, st, 3));
}

TEST_CASE("applied correction is eps-invariant at convergence") {
    test::T2 t2;
    VectorXd x(2);
    x << 1.5, -0.7;
    auto applied = [&](double eps) {
        auto obs = make_observer(t2.topo, VectorXd::Zero(2), MatrixXd::Identity(1, 1), eps, 0.5);
        measurement_update(obs, t2.model, t2.measure_at(x), 0);
        AdmmState st;
        auto res = admm_run(obs.contrib, t2.sel, st, 600);
        return (eps * res.xi).eval();
    };
    REQUIRE((applied(1.0) - applied(0.3)).norm() < 1e-8);
}

TEST_CASE("admm state validation") {
    AdmmState st;
    st.rho = 0.0;
    REQUIRE_THROWS_AS(st.validate(), InvalidParameter);
    st.rho = 1.0;
    st.alpha = 1.0;
    REQUIRE_THROWS_AS(st.validate(), InvalidParameter);
    st.alpha = 0.5;
    st.h_iters = 0;
    REQUIRE_THROWS_AS(st.validate(), InvalidParameter);
}
