#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>

#include "geonav/errors.hpp"
#include "geonav/geo.hpp"
#include "geonav/gradient.hpp"
#include "geonav/qp.hpp"

namespace geonav {

/// Declination/inclination state pair, degrees.
struct DiState {
    double d = 0.0;
    double i = 0.0;
    Eigen::Vector2d vec() const { return {d, i}; }
};

/// Velocity command in local axes, km/h.
struct VelocityCommand {
    double vx = 0.0;
    double vy = 0.0;
    Eigen::Vector2d vec() const { return {vx, vy}; }
};

enum class ControllerVariant { lti, ltv, fc };

struct ControllerConfig {
    int horizon = 2;
    double period_h = 0.1; ///< sampling period T, hours
    QpWeights weights;
    Eigen::Vector2d u_min{-40.0, -40.0}, u_max{40.0, 40.0};
    Eigen::Vector2d s_min{-10.0, 10.0}, s_max{100.0, 100.0};
    ControllerVariant variant = ControllerVariant::fc;
    bool literal_qp_gradient = false; ///< drop the factor 2 on h for comparison
    /// slack doubling cap when state constraints make the QP infeasible
    int relax_attempts = 24;
    /// Position unit of the QP model, km per unit. The plant model works in
    /// arc degrees, so one unit is one degree of arc; with the gradient in
    /// deg-per-km this makes B^T B commensurate with R and the first input
    /// close to a Newton direction instead of steepest descent.
    double qp_position_unit_km = kKmPerDegree;
    /// model period used in B = G * unit * T_qp
    double qp_period = 10.0;
    /// Compensation is skipped when |u_a| <= tol * max(|u_qp|, 1): with a
    /// noisy recursive gradient the interference estimate carries a noise
    /// floor, and correcting below it just injects that noise back into the
    /// command.
    double comp_tolerance = 0.05;

    /// effective B scale: position unit times model period
    double qp_scale() const { return qp_position_unit_km * qp_period; }
};

/// Per-step D/I disturbance estimate, degrees.
struct Interference {
    Eigen::Vector2d xi{0.0, 0.0};
};

/// speed = |v|, theta = atan2(vy, vx) in degrees.
inline std::pair<double, double> heading_from_velocity(double vx, double vy) {
    if (vx == 0.0 && vy == 0.0)
        throw domain_error("heading undefined for zero velocity");
    return {std::hypot(vx, vy), std::atan2(vy, vx) * kRadToDeg};
}

inline Eigen::Matrix2d input_matrix(const GradientMatrix& g, double period_h) {
    Eigen::Matrix2d b;
    b << g.g_dx, g.g_dy, g.g_ix, g.g_iy;
    return b * period_h;
}

/// xi(k) = [B(k) - B(k-1)] U(k).
inline Interference estimate_interference(const Eigen::Matrix2d& b_now,
                                          const Eigen::Matrix2d& b_prev,
                                          const VelocityCommand& u) {
    return Interference{(b_now - b_prev) * u.vec()};
}

/// Uniform-compensation input: solves B(k-1) u_a = -xi. Near-singular
/// B(k-1) falls back to the Tikhonov-regularized normal equations with
/// mu = 1e-8 * |B|^2, so the operation is total.
inline VelocityCommand compensation_input(const Eigen::Matrix2d& b_prev,
                                          const Interference& xi) {
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(b_prev);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(1);
    Eigen::Vector2d ua;
    if (smin > 0.0 && smax / smin < 1e8) {
        ua = b_prev.partialPivLu().solve(-xi.xi);
    } else {
        const double mu = 1e-8 * b_prev.squaredNorm();
        const Eigen::Matrix2d reg =
            b_prev.transpose() * b_prev + mu * Eigen::Matrix2d::Identity();
        ua = reg.ldlt().solve(-b_prev.transpose() * xi.xi);
    }
    return VelocityCommand{ua(0), ua(1)};
}

/// One nominal prediction step: s' = A s + B(k-1) u_h with A = I.
inline DiState compensated_step(const DiState& s, const Eigen::Matrix2d& b_prev,
                                const VelocityCommand& u_h) {
    const Eigen::Vector2d next = s.vec() + b_prev * u_h.vec();
    return DiState{next(0), next(1)};
}

/// Per-step velocity command for one of the three MPC variants.
///
/// Gradient policy: LTI freezes B at the mission-start gradient; LTV
/// rebuilds B from g_now each step; FC also rebuilds B and additionally
/// applies the uniform-compensation input for the step-to-step B change,
/// skipped below the numerical floor. With a constant gradient FC reduces
/// exactly to LTV.
class MpcController {
public:
    explicit MpcController(const ControllerConfig& cfg) : cfg_(cfg) {}

    const ControllerConfig& config() const { return cfg_; }

    VelocityCommand command(const DiState& s, const DiState& s_ref,
                            const GradientMatrix& g_now, const GradientMatrix& g_prev) {
        const double scale = cfg_.qp_scale();
        Eigen::Matrix2d b_now = input_matrix(g_now, scale);
        Eigen::Matrix2d b_qp = b_now;
        Eigen::Vector2d u_comp = Eigen::Vector2d::Zero();
        if (cfg_.variant == ControllerVariant::lti) {
            if (!b_frozen_) b_frozen_ = b_now;
            b_qp = *b_frozen_;
        } else if (cfg_.variant == ControllerVariant::fc) {
            const Eigen::Matrix2d b_prev = input_matrix(g_prev, scale);
            const Interference xi =
                estimate_interference(b_now, b_prev, u_cmd_prev_);
            u_comp = compensation_input(b_prev, xi).vec();
        }

        const Eigen::VectorXd u_bar = solve_horizon(b_qp, s.vec(), s_ref.vec());
        Eigen::Vector2d u = u_bar.head<2>();
        if (u_comp.norm() > cfg_.comp_tolerance * std::max(1.0, u.norm()))
            u += u_comp;
        u_cmd_prev_ = VelocityCommand{u(0), u(1)};
        // final guard: commands stay inside the configured box
        u = u.cwiseMax(cfg_.u_min).cwiseMin(cfg_.u_max);
        return VelocityCommand{u(0), u(1)};
    }

private:
    Eigen::VectorXd solve_horizon(const Eigen::Matrix2d& b, const Eigen::Vector2d& s,
                                  const Eigen::Vector2d& s_ref) {
        const PredictionMatrices pred =
            build_prediction(Eigen::Matrix2d::Identity(), b, cfg_.horizon);
        QpBounds bounds{cfg_.u_min, cfg_.u_max, cfg_.s_min, cfg_.s_max};
        // state constraints are soft: widen them by a doubling slack when
        // they make the step infeasible
        double slack = 0.0;
        for (int attempt = 0;; ++attempt) {
            QpBounds eff = bounds;
            eff.s_min.array() -= slack;
            eff.s_max.array() += slack;
            const QpProblem p =
                build_qp(pred, s, s_ref, cfg_.weights, eff, cfg_.literal_qp_gradient);
            try {
                QpSolution sol = solve_qp(p, warm_active_);
                warm_active_ = sol.active_set;
                return sol.u_opt;
            } catch (const solver_error&) {
                if (attempt >= cfg_.relax_attempts) throw;
                slack = (slack == 0.0) ? 1.0 : slack * 2.0;
            }
        }
    }

    ControllerConfig cfg_;
    std::optional<Eigen::Matrix2d> b_frozen_;
    VelocityCommand u_cmd_prev_{};
    std::vector<int> warm_active_;
};

} // namespace geonav
