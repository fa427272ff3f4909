#pragma once

#include <Eigen/Dense>

#include "geonav/errors.hpp"
#include "geonav/geo.hpp"

namespace geonav {

inline constexpr int kFusionDim = 15;
inline constexpr int kLonSlot = 3;
inline constexpr int kLatSlot = 4;

using FusionVector = Eigen::Matrix<double, kFusionDim, 1>;
using FusionMatrix = Eigen::Matrix<double, kFusionDim, kFusionDim>;
using ObservationMatrix = Eigen::Matrix<double, 2, kFusionDim>;

struct FusionConfig {
    FusionMatrix f_mat = FusionMatrix::Identity();
    FusionMatrix q_c = FusionMatrix::Zero();
    Eigen::Matrix2d r_c = 2.0 * Eigen::Matrix2d::Identity();
    FusionMatrix p0 = FusionMatrix::Zero();
    ObservationMatrix h_b = position_selector();

    /// Default parameter set: F = I, Q_c position slots 0.05, R_c diag(2,2),
    /// P0 position slots 1.
    static FusionConfig defaults() {
        FusionConfig c;
        c.q_c(kLonSlot, kLonSlot) = 0.05;
        c.q_c(kLatSlot, kLatSlot) = 0.05;
        c.p0(kLonSlot, kLonSlot) = 1.0;
        c.p0(kLatSlot, kLatSlot) = 1.0;
        return c;
    }

    /// H_B = (0_2x3 | I_2 | 0_2x10): selects longitude and latitude errors.
    static ObservationMatrix position_selector() {
        ObservationMatrix h = ObservationMatrix::Zero();
        h(0, kLonSlot) = 1.0;
        h(1, kLatSlot) = 1.0;
        return h;
    }
};

struct FusionState {
    FusionVector x_hat = FusionVector::Zero();
    FusionMatrix p = FusionMatrix::Zero();

    static FusionState initial(const FusionConfig& cfg) {
        FusionState s;
        s.p = cfg.p0;
        return s;
    }
};

/// Time update: x- = F x, P- = F P F' + Q_c (re-symmetrized).
inline FusionState predict(const FusionState& fs, const FusionConfig& cfg) {
    FusionState out;
    out.x_hat = cfg.f_mat * fs.x_hat;
    out.p = cfg.f_mat * fs.p * cfg.f_mat.transpose() + cfg.q_c;
    out.p = 0.5 * (out.p + out.p.transpose());
    return out;
}

/// Position innovation in degrees, longitude difference wrapped to
/// (-180, 180].
inline Eigen::Vector2d innovation(const GeoPosition& z_m, const GeoPosition& z_c) {
    return {wrap_degrees(z_m.lon - z_c.lon), z_m.lat - z_c.lat};
}

struct FusionUpdateResult {
    FusionState state;
    Eigen::Vector2d correction; ///< (d_lon, d_lat) degrees, the position slots
};

/// Measurement update with Joseph-form covariance for numerical symmetry;
/// algebraically equal to P = (I - K H) P- for the exact gain.
inline FusionUpdateResult update(const FusionState& prior, const FusionConfig& cfg,
                                 const Eigen::Vector2d& dz) {
    const Eigen::Matrix2d s_mat =
        cfg.h_b * prior.p * cfg.h_b.transpose() + cfg.r_c;
    const Eigen::Matrix2d s_inv = s_mat.inverse();
    if (!s_inv.allFinite())
        throw domain_error("fusion update: singular innovation covariance");
    const Eigen::Matrix<double, kFusionDim, 2> k =
        prior.p * cfg.h_b.transpose() * s_inv;

    FusionUpdateResult out;
    out.state.x_hat = prior.x_hat + k * (dz - cfg.h_b * prior.x_hat);
    const FusionMatrix ikh = FusionMatrix::Identity() - k * cfg.h_b;
    out.state.p =
        ikh * prior.p * ikh.transpose() + k * cfg.r_c * k.transpose();
    out.state.p = 0.5 * (out.state.p + out.state.p.transpose());
    out.correction = {out.state.x_hat(kLonSlot), out.state.x_hat(kLatSlot)};
    return out;
}

/// Apply a (d_lon, d_lat) correction to a position, with normalization.
inline GeoPosition apply_correction(const GeoPosition& pos,
                                    const Eigen::Vector2d& correction) {
    GeoPosition out = pos;
    out.lon = wrap_degrees(pos.lon + correction(0));
    out.lat = std::clamp(pos.lat + correction(1), -90.0, 90.0);
    return out;
}

} // namespace geonav
