#ifndef DKO_ANALYSIS_HPP
#define DKO_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "dko/errors.hpp"
#include "dko/observer.hpp"
#include "dko/solvers.hpp"
#include "dko/topology.hpp"

namespace dko {

// Everything in this header is dense and diagnostic. It runs at desk scale on
// recorded or frozen data; the distributed pipeline never calls into it.

// Orthonormal basis of ker(I+P) \cap ker(A_q^T), the structural kernel shared
// by every frozen ADMM operator on this topology.
inline Eigen::MatrixXd structural_dual_kernel(const SensingTopology& topo,
                                              const DualLayout& layout) {
    const Eigen::MatrixXd P = dense_pairing_matrix(layout);
    const Eigen::MatrixXd Aq = dense_dual_selector(topo, layout);
    const Eigen::MatrixXd IP = Eigen::MatrixXd::Identity(layout.total, layout.total) + P;
    // ker(Q) with Q = (I+P)^T (I+P) + A_q A_q^T equals the intersection.
    const Eigen::MatrixXd Q = IP.transpose() * IP + Aq * Aq.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q);
    const double tol = 1e-10 * std::max(1.0, eig.eigenvalues().maxCoeff());
    int dim = 0;
    while (dim < layout.total && eig.eigenvalues()[dim] <= tol) ++dim;
    return eig.eigenvectors().leftCols(dim);
}

// Frozen ADMM iteration q <- T q + alpha c written out densely, together with
// the pieces needed for equilibrium-set geometry. The iteration matrix is
// F = I + P - 2 rho P A_q H^{-1} A_q^T; pulling the leading permutation out,
// F = P G with G symmetric, which is what the decomposition works on.
struct FrozenAdmmOperator {
    int n_q = 0;
    double rho = 0.0;
    double alpha = 0.0;
    Eigen::MatrixXd F;
    Eigen::MatrixXd T;      // I - alpha F
    Eigen::VectorXd c;
    Eigen::MatrixXd G;      // P F, symmetric
    Eigen::VectorXd Pc;     // pairing applied to c

    // Filled by decompose():
    bool decomposed = false;
    Eigen::MatrixXd Gdag;          // pseudoinverse of G; F^dag = Gdag P
    Eigen::MatrixXd kernel_basis;  // orthonormal basis of ker(F) = ker(G)
    double sigma_min_plus = 0.0;   // smallest nonzero singular value of F
    double rank_tol = 0.0;

    void decompose() {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
        const Eigen::VectorXd lam = eig.eigenvalues();
        const Eigen::MatrixXd U = eig.eigenvectors();
        const double sigma_max = lam.cwiseAbs().maxCoeff();
        rank_tol = 1e-10 * sigma_max;
        Eigen::VectorXd inv = Eigen::VectorXd::Zero(n_q);
        sigma_min_plus = std::numeric_limits<double>::infinity();
        std::vector<int> kernel_cols;
        for (int i = 0; i < n_q; ++i) {
            if (std::abs(lam[i]) <= rank_tol) {
                kernel_cols.push_back(i);
            } else {
                inv[i] = 1.0 / lam[i];
                sigma_min_plus = std::min(sigma_min_plus, std::abs(lam[i]));
            }
        }
        if (!std::isfinite(sigma_min_plus)) sigma_min_plus = 0.0;
        kernel_basis.resize(n_q, static_cast<int>(kernel_cols.size()));
        for (std::size_t j = 0; j < kernel_cols.size(); ++j)
            kernel_basis.col(static_cast<int>(j)) = U.col(kernel_cols[j]);
        // F = P U diag(lam) U^T, so F^dag = U diag(lam)^dag U^T P = Gdag P.
        Gdag = U * inv.asDiagonal() * U.transpose();
        decomposed = true;
    }

    Eigen::VectorXd apply_once(const Eigen::VectorXd& q) const { return T * q + alpha * c; }

    // F^dag v without materializing P.
    Eigen::VectorXd pinv_apply(const DualLayout& layout, const Eigen::VectorXd& v) const {
        return Gdag * apply_pairing(layout, v);
    }

    Eigen::MatrixXd dense_pinv(const DualLayout& layout) const {
        return Gdag * dense_pairing_matrix(layout);
    }
};

// Assembles the frozen operator from the step's contributions; the right hand
// side (and hence c) comes from the same per-agent quantities the solver uses.
// Passing residual edge innovations freezes the residual-split ADMM instead.
inline FrozenAdmmOperator build_frozen_operator(
    const InfoContributions& contrib, const SelectionStructure& sel, double rho, double alpha,
    bool decompose = true, const std::vector<Eigen::VectorXd>* edge_innov_override = nullptr) {
    const SensingTopology& topo = *contrib.topo;
    const DualLayout& layout = *sel.layout;
    FrozenAdmmOperator op;
    op.n_q = layout.total;
    op.rho = rho;
    op.alpha = alpha;

    const auto ws = detail::build_admm_workspace(contrib, rho, edge_innov_override);

    // B = A_q H^{-1} A_q^T is block diagonal over agent dual slices.
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(op.n_q, op.n_q);
    Eigen::VectorXd Aq_Hinv_bbar = Eigen::VectorXd::Zero(op.n_q);
    for (int i = 0; i < topo.n_agents; ++i) {
        const int deg = topo.degree(i);
        if (deg == 0) continue;
        const int ext = sel.extended_size(i);
        // Dense A_qi by columns.
        Eigen::MatrixXd Aqi = Eigen::MatrixXd::Zero(2 * deg * layout.d, ext);
        const int base = layout.agent_offset[static_cast<std::size_t>(i)];
        for (int pos = 0; pos < deg; ++pos) {
            Aqi.block(layout.own_offset(topo, i, pos) - base, 0, layout.d, layout.d)
                .setIdentity();
            Aqi.block(layout.copy_offset(topo, i, pos) - base, (1 + pos) * layout.d, layout.d,
                      layout.d)
                .setIdentity();
        }
        const Eigen::MatrixXd HinvAqT = ws.factor[static_cast<std::size_t>(i)].solve(
            Eigen::MatrixXd(Aqi.transpose()));
        B.block(base, base, 2 * deg * layout.d, 2 * deg * layout.d) = Aqi * HinvAqT;
        Aq_Hinv_bbar.segment(base, 2 * deg * layout.d) =
            Aqi * ws.factor[static_cast<std::size_t>(i)].solve(ws.rhs[static_cast<std::size_t>(i)]);
    }

    const Eigen::MatrixXd P = dense_pairing_matrix(layout);
    op.G = Eigen::MatrixXd::Identity(op.n_q, op.n_q) + P - 2.0 * rho * B;
    op.G = 0.5 * (op.G + op.G.transpose());
    op.F = P * op.G;
    op.T = Eigen::MatrixXd::Identity(op.n_q, op.n_q) - alpha * op.F;
    op.c = 2.0 * rho * apply_pairing(layout, Aq_Hinv_bbar);
    op.Pc = apply_pairing(layout, op.c);
    if (decompose) op.decompose();
    return op;
}

struct EquilibriumProjection {
    Eigen::VectorXd q_eq;
    double dist = 0.0;
};

// Orthogonal projection onto the equilibrium set {q : F q = c} and the
// distance to it. The system is consistent by construction; a residual above
// tolerance therefore flags a broken invariant.
inline EquilibriumProjection equilibrium_projection(const FrozenAdmmOperator& op,
                                                    const DualLayout& layout,
                                                    const Eigen::VectorXd& q) {
    if (q.size() != op.n_q) throw DimensionError("dual vector length mismatch");
    EquilibriumProjection out;
    const Eigen::VectorXd r = op.F * q - op.c;
    const Eigen::VectorXd step = op.pinv_apply(layout, r);
    out.q_eq = q - step;
    out.dist = step.norm();
    const double check = (op.F * out.q_eq - op.c).norm();
    if (check > 1e-9 * std::max(1.0, op.c.norm()))
        throw InternalInvariantViolation("projected dual point does not satisfy F q = c");
    return out;
}

// Distance to the equilibrium set without an eigendecomposition: solves the
// bordered system with the structural kernel basis Z,
//   [G Z; Z^T 0][x; m] = [G q - P c; 0]  =>  x = G^dag (G q - P c),
// valid because ker(G_k) = span(Z) for every k.
inline double fast_equilibrium_distance(const FrozenAdmmOperator& op, const Eigen::MatrixXd& Z,
                                        const Eigen::VectorXd& q) {
    const int m = static_cast<int>(Z.cols());
    const Eigen::VectorXd r = op.G * q - op.Pc;
    if (m == 0) return op.G.lu().solve(r).norm();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(op.n_q + m, op.n_q + m);
    K.topLeftCorner(op.n_q, op.n_q) = op.G;
    K.topRightCorner(op.n_q, m) = Z;
    K.bottomLeftCorner(m, op.n_q) = Z.transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(op.n_q + m);
    rhs.head(op.n_q) = r;
    return Eigen::PartialPivLU<Eigen::MatrixXd>(K).solve(rhs).head(op.n_q).norm();
}

struct KernelInvarianceReport {
    int structural_dim = 0;
    bool rank_stable = true;
    double max_principal_angle = 0.0;   // radians, vs the structural kernel
    double min_sigma_min_plus = std::numeric_limits<double>::infinity();
    long n_operators = 0;
};

// Largest principal angle between equal-dimension subspaces spanned by the
// orthonormal columns of U and V, computed through the projector residual so
// tiny angles stay resolvable.
inline double max_principal_angle(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V) {
    if (U.cols() == 0 && V.cols() == 0) return 0.0;
    const Eigen::MatrixXd R = U - V * (V.transpose() * U);
    const double s = R.jacobiSvd().singularValues().maxCoeff();
    return std::asin(std::min(1.0, s));
}

// Streaming checker for the structural-kernel property across time steps.
class KernelInvarianceChecker {
public:
    KernelInvarianceChecker(const SensingTopology& topo, const DualLayout& layout)
        : structural_(structural_dual_kernel(topo, layout)) {
        report_.structural_dim = static_cast<int>(structural_.cols());
    }

    void absorb(const FrozenAdmmOperator& op) {
        if (!op.decomposed) throw InternalInvariantViolation("operator not decomposed");
        ++report_.n_operators;
        if (op.kernel_basis.cols() != structural_.cols()) {
            report_.rank_stable = false;
            return;
        }
        report_.max_principal_angle = std::max(
            report_.max_principal_angle, max_principal_angle(op.kernel_basis, structural_));
        report_.min_sigma_min_plus = std::min(report_.min_sigma_min_plus, op.sigma_min_plus);
    }

    const Eigen::MatrixXd& structural_basis() const { return structural_; }
    KernelInvarianceReport report() const {
        if (report_.n_operators < 2)
            throw InsufficientData("kernel invariance needs at least two time steps");
        return report_;
    }

private:
    Eigen::MatrixXd structural_;
    KernelInvarianceReport report_;
};

struct ContractionReport {
    double mu_hat = 0.0;            // max per-iteration distance ratio
    std::vector<double> distances;  // dist at every iteration, including start
    bool monotone = true;
};

// Iterates the frozen operator and measures the per-iteration contraction of
// the distance to the equilibrium set. Ratios where the distance has hit the
// numerical floor are ignored.
inline ContractionReport measure_contraction(const FrozenAdmmOperator& op,
                                             const DualLayout& layout, const Eigen::VectorXd& q0,
                                             int n_iters, double floor = 1e-12) {
    ContractionReport rep;
    Eigen::VectorXd q = q0;
    rep.distances.push_back(equilibrium_projection(op, layout, q).dist);
    for (int h = 0; h < n_iters; ++h) {
        q = op.apply_once(q);
        rep.distances.push_back(equilibrium_projection(op, layout, q).dist);
        const double prev = rep.distances[rep.distances.size() - 2];
        const double cur = rep.distances.back();
        if (prev >= floor) {
            rep.mu_hat = std::max(rep.mu_hat, cur / prev);
            if (cur > prev * (1.0 + 1e-10)) rep.monotone = false;
        }
    }
    return rep;
}

struct LyapunovReport {
    double worst_ratio = 0.0;       // max V_{k+1} / V_k over informative steps
    double worst_excess = 0.0;      // max V_{k+1} - gamma V_k
    long worst_k = -1;
    bool decays = true;             // worst_excess <= tolerance
};

// Ratio test V_{k+1} <= gamma V_k on a recorded Lyapunov sequence. Meaningful
// for exact-correction runs with a scalar forgetting factor.
inline LyapunovReport lyapunov_decay_check(const std::vector<double>& V, double gamma,
                                           double tol = 1e-12) {
    LyapunovReport rep;
    for (std::size_t k = 0; k + 1 < V.size(); ++k) {
        const double excess = V[k + 1] - gamma * V[k];
        if (excess > rep.worst_excess) {
            rep.worst_excess = excess;
            rep.worst_k = static_cast<long>(k);
        }
        if (V[k] > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, V[k + 1] / V[k]);
    }
    rep.decays = rep.worst_excess <= tol;
    return rep;
}

struct StabilityCertificate {
    double gamma = 0.0;       // scalar forgetting (or bound for diagonal)
    double mu = 0.0;          // measured frozen-ADMM contraction factor
    int h_iters = 1;
    double eps = 1.0;
    double c12 = 0.0;
    double c21 = 0.0;
    double c22 = 0.0;
    Eigen::Matrix2d comparison;     // [[sqrt(g), e c12],[c21, mu^H + e c22]]
    double spectral_radius = 0.0;
    bool schur = false;
    double eps_bound = 0.0;         // small-gain admissible eps (informational)
    double envelope_slope = 0.0;    // LS fit of log(w_k + d_k)
    double envelope_intercept = 0.0;
    double envelope_rms = 0.0;
    long fit_begin = 0;
    long fit_end = 0;
};

namespace detail {

inline double spectral_radius_2x2(const Eigen::Matrix2d& A) {
    const double tr = A(0, 0) + A(1, 1);
    const double disc = (A(0, 0) - A(1, 1)) * (A(0, 0) - A(1, 1)) + 4.0 * A(0, 1) * A(1, 0);
    return 0.5 * (tr + std::sqrt(std::max(0.0, disc)));
}

}  // namespace detail

// Fits the tightest gain constants making the two comparison inequalities
//   w_{k+1} <= sqrt(g) w_k + e c12 d_k
//   d_{k+1} <= (mu^H + e c22) d_k + c21 w_k
// hold over the recorded trace, then evaluates the small-gain matrix. The
// (c21, c22) pair is chosen on the constraint frontier to minimize the
// spectral radius. Proof constants are not desk-computable; the certificate
// is a trace-fitted report, with the eps bound echoed for reference.
inline StabilityCertificate small_gain_certificate(const std::vector<double>& w,
                                                   const std::vector<double>& dist,
                                                   double eps, double gamma, double mu,
                                                   int h_iters, long fit_begin = -1,
                                                   long fit_end = -1) {
    if (w.size() != dist.size() || w.size() < 10)
        throw InsufficientData("need at least 10 recorded steps");
    StabilityCertificate cert;
    cert.gamma = gamma;
    cert.mu = mu;
    cert.h_iters = h_iters;
    cert.eps = eps;

    const double sqrt_g = std::sqrt(gamma);
    const double muH = std::pow(mu, h_iters);
    const std::size_t n = w.size();
    double wmax = 0.0, dmax = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        wmax = std::max(wmax, w[k]);
        dmax = std::max(dmax, dist[k]);
    }
    const double wtol = 1e-12 * std::max(1.0, wmax);
    const double dtol = 1e-12 * std::max(1.0, dmax);

    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (dist[k] > dtol)
            cert.c12 = std::max(cert.c12, (w[k + 1] - sqrt_g * w[k]) / (eps * dist[k]));
    }
    cert.c12 = std::max(0.0, cert.c12);

    // Residuals the (c21, c22) pair must cover.
    std::vector<double> need(n - 1);
    bool any = false;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        need[k] = std::max(0.0, dist[k + 1] - muH * dist[k]);
        any = any || need[k] > dtol;
    }
    if (any) {
        std::vector<double> candidates{0.0};
        for (std::size_t k = 0; k + 1 < n; ++k)
            if (dist[k] > dtol && need[k] > 0.0) candidates.push_back(need[k] / (eps * dist[k]));
        std::sort(candidates.begin(), candidates.end());
        if (candidates.size() > 512) {
            std::vector<double> thin;
            const double stride = static_cast<double>(candidates.size()) / 512.0;
            for (int s = 0; s < 512; ++s)
                thin.push_back(candidates[static_cast<std::size_t>(s * stride)]);
            thin.push_back(candidates.back());
            candidates = std::move(thin);
        }
        double best_radius = std::numeric_limits<double>::infinity();
        for (double c22 : candidates) {
            double c21 = 0.0;
            bool feasible = true;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                const double rem = need[k] - eps * c22 * dist[k];
                if (rem <= 0.0) continue;
                if (w[k] > wtol)
                    c21 = std::max(c21, rem / w[k]);
                else
                    feasible = false;
            }
            if (!feasible) continue;
            Eigen::Matrix2d A;
            A << sqrt_g, eps * cert.c12, c21, muH + eps * c22;
            const double radius = detail::spectral_radius_2x2(A);
            if (radius < best_radius) {
                best_radius = radius;
                cert.c21 = c21;
                cert.c22 = c22;
            }
        }
    }

    cert.comparison << sqrt_g, eps * cert.c12, cert.c21, muH + eps * cert.c22;
    cert.spectral_radius = detail::spectral_radius_2x2(cert.comparison);
    cert.schur = cert.spectral_radius < 1.0;
    const double denom = cert.c12 * cert.c21 + (1.0 - sqrt_g) * cert.c22;
    cert.eps_bound = denom > 0.0 ? (1.0 - sqrt_g) * (1.0 - muH) / denom
                                 : std::numeric_limits<double>::infinity();

    // Exponential envelope fit of log(w_k + d_k).
    if (fit_begin < 0) fit_begin = 0;
    if (fit_end < 0 || fit_end > static_cast<long>(n)) fit_end = static_cast<long>(n);
    cert.fit_begin = fit_begin;
    cert.fit_end = fit_end;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long m = 0;
    for (long k = fit_begin; k < fit_end; ++k) {
        const double v = w[static_cast<std::size_t>(k)] + dist[static_cast<std::size_t>(k)];
        if (v <= 0.0) continue;
        const double y = std::log(v);
        sx += static_cast<double>(k);
        sy += y;
        sxx += static_cast<double>(k) * static_cast<double>(k);
        sxy += static_cast<double>(k) * y;
        ++m;
    }
    if (m >= 2) {
        const double det = static_cast<double>(m) * sxx - sx * sx;
        cert.envelope_slope = (static_cast<double>(m) * sxy - sx * sy) / det;
        cert.envelope_intercept = (sy * sxx - sx * sxy) / det;
        double ss = 0.0;
        for (long k = fit_begin; k < fit_end; ++k) {
            const double v = w[static_cast<std::size_t>(k)] + dist[static_cast<std::size_t>(k)];
            if (v <= 0.0) continue;
            const double r = std::log(v) - (cert.envelope_intercept +
                                            cert.envelope_slope * static_cast<double>(k));
            ss += r * r;
        }
        cert.envelope_rms = std::sqrt(ss / static_cast<double>(m));
    }
    return cert;
}

struct MatrixForgettingReport {
    // Tightest admissible bound per condition, maximized over the trace.
    double exact_bound = 0.0;        // (i)  ||S^1/2 G S^-1/2||^2
    double conditioned_bound = 0.0;  // (ii) ||G||^2 k(S_k)
    double uniform_bound = 0.0;      // (iii) ||G||^2 smax/smin over the trace
    std::vector<double> exact_per_k;
    std::vector<double> conditioned_per_k;
    bool all_finite = true;
    bool ordered = true;             // (i) <= (ii) <= (iii) per step
    double s_min = std::numeric_limits<double>::infinity();
    double s_max = 0.0;
};

// Evaluates the three matrix-forgetting stability conditions on a trace of
// assembled posterior information matrices, in decreasing tightness.
inline MatrixForgettingReport matrix_ff_conditions(const std::vector<Eigen::MatrixXd>& S_trace,
                                                   const Eigen::VectorXd& gamma_global_diag) {
    MatrixForgettingReport rep;
    const double g_norm2 = gamma_global_diag.cwiseAbs().maxCoeff() *
                           gamma_global_diag.cwiseAbs().maxCoeff();
    for (std::size_t k = 0; k < S_trace.size(); ++k) {
        const Eigen::MatrixXd& S = S_trace[k];
        if (gamma_global_diag.size() != S.rows())
            throw DimensionError("forgetting diagonal length does not match S");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
        const double lmin = eig.eigenvalues().minCoeff();
        const double lmax = eig.eigenvalues().maxCoeff();
        if (lmin <= 0.0) throw NotSPD("non-SPD information matrix at trace index " +
                                      std::to_string(k));
        rep.s_min = std::min(rep.s_min, lmin);
        rep.s_max = std::max(rep.s_max, lmax);
        const Eigen::VectorXd sqrt_l = eig.eigenvalues().cwiseSqrt();
        const Eigen::MatrixXd Shalf =
            eig.eigenvectors() * sqrt_l.asDiagonal() * eig.eigenvectors().transpose();
        const Eigen::MatrixXd Shalf_inv =
            eig.eigenvectors() * sqrt_l.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
        const Eigen::MatrixXd M = Shalf * gamma_global_diag.asDiagonal() * Shalf_inv;
        const double s = M.jacobiSvd().singularValues().maxCoeff();
        rep.exact_per_k.push_back(s * s);
        rep.conditioned_per_k.push_back(g_norm2 * lmax / lmin);
        rep.all_finite = rep.all_finite && std::isfinite(rep.exact_per_k.back()) &&
                         std::isfinite(rep.conditioned_per_k.back());
    }
    for (std::size_t k = 0; k < rep.exact_per_k.size(); ++k) {
        rep.exact_bound = std::max(rep.exact_bound, rep.exact_per_k[k]);
        rep.conditioned_bound = std::max(rep.conditioned_bound, rep.conditioned_per_k[k]);
        if (rep.exact_per_k[k] > rep.conditioned_per_k[k] * (1.0 + 1e-9)) rep.ordered = false;
    }
    rep.uniform_bound = g_norm2 * rep.s_max / rep.s_min;
    if (rep.conditioned_bound > rep.uniform_bound * (1.0 + 1e-9)) rep.ordered = false;
    return rep;
}

struct ErrorDynamicsReport {
    double max_relative_residual = 0.0;
    long worst_k = -1;
    long n_steps = 0;
};

// Verifies x~_{k+1} = A_k S_kk^{-1} S_prior x~_k + eps A_k xi~_k step by step,
// tying simulator, observer, and solver records together.
class ErrorDynamicsChecker {
public:
    explicit ErrorDynamicsChecker(double eps) : eps_(eps) {}

    void absorb(const Eigen::VectorXd& xtilde, const Eigen::VectorXd& xi_tilde,
                const Eigen::MatrixXd& S_prior, const Eigen::MatrixXd& S_post,
                const Eigen::MatrixXd& A) {
        if (have_prev_) {
            const Eigen::VectorXd predicted = prev_A_ * prev_Spost_llt_.solve(prev_Sprior_ * prev_x_) +
                                              eps_ * prev_A_ * prev_xi_;
            const double rel = (xtilde - predicted).norm() / std::max(1.0, xtilde.norm());
            if (rel > rep_.max_relative_residual) {
                rep_.max_relative_residual = rel;
                rep_.worst_k = rep_.n_steps;
            }
            ++rep_.n_steps;
        }
        prev_x_ = xtilde;
        prev_xi_ = xi_tilde;
        prev_Sprior_ = S_prior;
        prev_Spost_llt_.compute(S_post);
        prev_A_ = A;
        have_prev_ = true;
    }

    const ErrorDynamicsReport& report() const { return rep_; }

private:
    double eps_;
    bool have_prev_ = false;
    Eigen::VectorXd prev_x_, prev_xi_;
    Eigen::MatrixXd prev_Sprior_, prev_A_;
    Eigen::LLT<Eigen::MatrixXd> prev_Spost_llt_;
    ErrorDynamicsReport rep_;
};

}  // namespace dko

#endif  // DKO_ANALYSIS_HPP
