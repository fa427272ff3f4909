#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "geonav/errors.hpp"

namespace geonav {

/// Stacked receding-horizon prediction matrices: state block M (2N x 2) and
/// lower-block-triangular input map C (2N x 2N).
struct PredictionMatrices {
    Eigen::MatrixXd m_mat;
    Eigen::MatrixXd c_mat;
    int horizon = 0;
};

/// M = stack(A, A^2, ..., A^N); C block (i, j) = A^(i-j) B for i >= j.
inline PredictionMatrices build_prediction(const Eigen::Matrix2d& a_mat,
                                           const Eigen::Matrix2d& b_mat, int n) {
    if (n < 1) throw domain_error("prediction horizon must be >= 1");
    PredictionMatrices p;
    p.horizon = n;
    p.m_mat.setZero(2 * n, 2);
    p.c_mat.setZero(2 * n, 2 * n);
    Eigen::Matrix2d a_pow = Eigen::Matrix2d::Identity();
    std::vector<Eigen::Matrix2d> powers(n + 1);
    powers[0] = a_pow;
    for (int i = 1; i <= n; ++i) {
        a_pow = a_mat * a_pow;
        powers[i] = a_pow;
        p.m_mat.block<2, 2>(2 * (i - 1), 0) = a_pow;
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j)
            p.c_mat.block<2, 2>(2 * i, 2 * j) = powers[i - j] * b_mat;
    return p;
}

/// Standard-form convex QP: min 1/2 u'Hu + h'u s.t. Wu <= w.
struct QpProblem {
    Eigen::MatrixXd h_mat;
    Eigen::VectorXd h_vec;
    Eigen::MatrixXd w_mat;
    Eigen::VectorXd w_vec;
};

struct QpSolution {
    Eigen::VectorXd u_opt;
    Eigen::VectorXd lambda; ///< multipliers, one per constraint row
    double objective = 0.0;
    std::vector<int> active_set;
    double kkt_residual = 0.0;
};

/// Max of stationarity, primal violation, dual violation, and
/// complementarity magnitudes.
inline double kkt_residual(const QpProblem& p, const QpSolution& s) {
    if (s.u_opt.size() != p.h_mat.rows() || s.lambda.size() != p.w_mat.rows())
        throw domain_error("kkt_residual: dimension mismatch");
    const Eigen::VectorXd stat =
        p.h_mat * s.u_opt + p.h_vec + p.w_mat.transpose() * s.lambda;
    double r = stat.lpNorm<Eigen::Infinity>();
    if (p.w_mat.rows() > 0) {
        const Eigen::VectorXd slack = p.w_mat * s.u_opt - p.w_vec;
        r = std::max(r, slack.maxCoeff());           // primal violation
        r = std::max(r, -s.lambda.minCoeff());        // dual violation
        r = std::max(r, (s.lambda.array() * slack.array()).abs().maxCoeff());
    }
    return std::max(r, 0.0);
}

namespace detail {

// Equality-constrained subproblem on the active set, solved through the
// KKT system with a rank-revealing factorization.
inline bool solve_eqp(const QpProblem& p, const std::vector<int>& active,
                      Eigen::VectorXd& u, Eigen::VectorXd& lam_active) {
    const int n = static_cast<int>(p.h_mat.rows());
    const int na = static_cast<int>(active.size());
    Eigen::MatrixXd kkt(n + na, n + na);
    kkt.setZero();
    kkt.topLeftCorner(n, n) = p.h_mat;
    for (int i = 0; i < na; ++i) {
        kkt.block(n + i, 0, 1, n) = p.w_mat.row(active[i]);
        kkt.block(0, n + i, n, 1) = p.w_mat.row(active[i]).transpose();
    }
    Eigen::VectorXd rhs(n + na);
    rhs.head(n) = -p.h_vec;
    for (int i = 0; i < na; ++i) rhs(n + i) = p.w_vec(active[i]);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (lu.rank() < n + na) return false;
    const Eigen::VectorXd sol = lu.solve(rhs);
    u = sol.head(n);
    lam_active = sol.tail(na);
    return true;
}

// Cyclic projection onto the constraint half-spaces; yields a feasible
// point when the polyhedron is nonempty.
inline bool project_feasible(const QpProblem& p, Eigen::VectorXd& u, double tol,
                             int max_sweeps = 20000) {
    const int m = static_cast<int>(p.w_mat.rows());
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double worst = 0.0;
        for (int i = 0; i < m; ++i) {
            const double nrm2 = p.w_mat.row(i).squaredNorm();
            if (nrm2 == 0.0) continue;
            const double v = p.w_mat.row(i).dot(u) - p.w_vec(i);
            if (v > 0.0) u -= (v / nrm2) * p.w_mat.row(i).transpose();
            worst = std::max(worst, v);
        }
        if (worst <= tol) return true;
    }
    return false;
}

} // namespace detail

/// Primal active-set solve of a strictly convex QP. Ties in constraint
/// selection break toward the lowest index, so results are deterministic
/// across platforms. `warm_active` optionally seeds the working set.
inline QpSolution solve_qp(const QpProblem& p,
                           const std::vector<int>& warm_active = {},
                           int max_iterations = 500) {
    const int n = static_cast<int>(p.h_mat.rows());
    const int m = static_cast<int>(p.w_mat.rows());
    if (p.h_vec.size() != n || p.w_mat.cols() != n || p.w_vec.size() != m)
        throw domain_error("solve_qp: inconsistent problem dimensions");
    if ((p.h_mat - p.h_mat.transpose()).lpNorm<Eigen::Infinity>() > 1e-8)
        throw domain_error("solve_qp: Hessian not symmetric");

    const double tol = 1e-10;
    const double feas_tol = 1e-11;

    // Feasible start: unconstrained minimizer, projected into the
    // polyhedron when it violates constraints.
    Eigen::LLT<Eigen::MatrixXd> llt(p.h_mat);
    if (llt.info() != Eigen::Success)
        throw domain_error("solve_qp: Hessian not positive definite");
    Eigen::VectorXd u = llt.solve(-p.h_vec);
    if (m > 0 && (p.w_mat * u - p.w_vec).maxCoeff() > tol) {
        if (!detail::project_feasible(p, u, feas_tol))
            throw solver_error("solve_qp: problem appears infeasible "
                               "(feasibility projection did not converge)");
    }

    std::vector<int> active;
    for (int i : warm_active)
        if (i >= 0 && i < m) active.push_back(i);
    // keep only constraints tight at the start point
    std::erase_if(active, [&](int i) {
        return std::abs(p.w_mat.row(i).dot(u) - p.w_vec(i)) > 1e-7;
    });

    Eigen::VectorXd lam_active;
    Eigen::VectorXd u_eq;
    for (int iter = 0; iter < max_iterations; ++iter) {
        if (!detail::solve_eqp(p, active, u_eq, lam_active)) {
            // rank-deficient working set: drop the most recent addition
            active.pop_back();
            continue;
        }
        const Eigen::VectorXd dir = u_eq - u;
        if (dir.lpNorm<Eigen::Infinity>() <= tol) {
            // subspace optimum: check multiplier signs
            int drop = -1;
            double most_neg = -tol;
            for (int i = 0; i < static_cast<int>(active.size()); ++i) {
                if (lam_active(i) < most_neg) {
                    most_neg = lam_active(i);
                    drop = i;
                }
            }
            if (drop < 0) {
                QpSolution s;
                s.u_opt = u_eq;
                s.lambda.setZero(m);
                for (int i = 0; i < static_cast<int>(active.size()); ++i)
                    s.lambda(active[i]) = std::max(0.0, lam_active(i));
                s.active_set = active;
                std::sort(s.active_set.begin(), s.active_set.end());
                s.objective = 0.5 * s.u_opt.dot(p.h_mat * s.u_opt) + p.h_vec.dot(s.u_opt);
                s.kkt_residual = kkt_residual(p, s);
                return s;
            }
            active.erase(active.begin() + drop);
            u = u_eq;
            continue;
        }
        // step toward the subspace optimum, stopping at the first
        // blocking constraint
        double alpha = 1.0;
        int blocking = -1;
        for (int i = 0; i < m; ++i) {
            if (std::find(active.begin(), active.end(), i) != active.end()) continue;
            const double denom = p.w_mat.row(i).dot(dir);
            if (denom <= tol) continue;
            const double slack = p.w_vec(i) - p.w_mat.row(i).dot(u);
            const double a = slack / denom;
            if (a < alpha - 1e-14) {
                alpha = std::max(0.0, a);
                blocking = i;
            }
        }
        u += alpha * dir;
        if (blocking >= 0)
            active.push_back(blocking);
        // alpha == 1 with no blocking constraint: loop re-solves and the
        // zero-direction branch finishes or drops a constraint
    }
    QpSolution best;
    best.u_opt = u;
    best.lambda.setZero(m);
    best.objective = 0.5 * u.dot(p.h_mat * u) + p.h_vec.dot(u);
    best.kkt_residual = kkt_residual(p, best);
    throw solver_error("solve_qp: iteration cap exceeded, best KKT residual " +
                       std::to_string(best.kkt_residual));
}

/// Assemble the per-step MPC QP from prediction matrices, current state,
/// stacked reference, weights, and box bounds.
///   H = 2 (C' Qbar C + Rbar),  h = 2 C' Qbar (M s - s_ref)
/// The factor 2 on h keeps the standard-form problem exactly equivalent to
/// the weighted-norm cost; `literal_gradient` drops it for comparison runs.
struct QpWeights {
    Eigen::Matrix2d q = Eigen::Matrix2d::Identity(); ///< stage state weight
    Eigen::Matrix2d f = Eigen::Matrix2d::Identity(); ///< terminal state weight
    Eigen::Matrix2d r = Eigen::Matrix2d::Identity(); ///< input weight, PD
};

struct QpBounds {
    Eigen::Vector2d u_min, u_max;
    Eigen::Vector2d s_min, s_max;
};

inline QpProblem build_qp(const PredictionMatrices& pred, const Eigen::Vector2d& s,
                          const Eigen::Vector2d& s_ref, const QpWeights& wts,
                          const QpBounds& bounds, bool literal_gradient = false) {
    const int n = pred.horizon;
    if ((bounds.u_min.array() > bounds.u_max.array()).any() ||
        (bounds.s_min.array() > bounds.s_max.array()).any())
        throw domain_error("build_qp: infeasible box bounds (min > max)");

    Eigen::MatrixXd q_bar = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    Eigen::MatrixXd r_bar = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        q_bar.block<2, 2>(2 * i, 2 * i) = (i == n - 1) ? wts.f : wts.q;
        r_bar.block<2, 2>(2 * i, 2 * i) = wts.r;
    }
    Eigen::VectorXd s_ref_bar(2 * n);
    for (int i = 0; i < n; ++i) s_ref_bar.segment<2>(2 * i) = s_ref;

    const Eigen::MatrixXd& c = pred.c_mat;
    const Eigen::VectorXd ms = pred.m_mat * s;

    QpProblem p;
    p.h_mat = 2.0 * (c.transpose() * q_bar * c + r_bar);
    p.h_mat = 0.5 * (p.h_mat + p.h_mat.transpose());
    p.h_vec = (literal_gradient ? 1.0 : 2.0) * c.transpose() * q_bar * (ms - s_ref_bar);

    p.w_mat.setZero(8 * n, 2 * n);
    p.w_vec.setZero(8 * n);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    p.w_mat.block(0, 0, 2 * n, 2 * n) = eye;
    p.w_mat.block(2 * n, 0, 2 * n, 2 * n) = -eye;
    p.w_mat.block(4 * n, 0, 2 * n, 2 * n) = c;
    p.w_mat.block(6 * n, 0, 2 * n, 2 * n) = -c;
    for (int i = 0; i < n; ++i) {
        p.w_vec.segment<2>(2 * i) = bounds.u_max;
        p.w_vec.segment<2>(2 * n + 2 * i) = -bounds.u_min;
        p.w_vec.segment<2>(4 * n + 2 * i) = bounds.s_max - ms.segment<2>(2 * i);
        p.w_vec.segment<2>(6 * n + 2 * i) = bounds.s_min * -1.0 + ms.segment<2>(2 * i);
    }
    return p;
}

} // namespace geonav
