#pragma once

#include <array>
#include <cmath>
#include <random>

#include "geonav/geo.hpp"

namespace geonav {

/// 15-component error state of the inertial system. Ordering is fixed: the
/// observation matrix selects slots 3-4 (longitude/latitude errors).
struct InsErrorState {
    double alpha = 0.0, beta = 0.0, gamma = 0.0; ///< attitude error angles, rad
    double d_lon = 0.0, d_lat = 0.0;             ///< position errors, degrees
    double d_h = 0.0;                            ///< height error, m
    double d_vx = 0.0, d_vy = 0.0, d_vz = 0.0;   ///< velocity errors, m/s
    std::array<double, 3> eps_c{0.0, 0.0, 0.0};  ///< constant gyro drifts, deg/h
    std::array<double, 3> eps_r{0.0, 0.0, 0.0};  ///< random gyro drifts, deg/h
};

struct InsConfig {
    double init_east_error_m = 5000.0;
    double init_north_error_m = 5000.0;
    double speed_error_ms = 10.0;
    std::array<double, 3> misalignment_arcmin{50.0, 50.0, 500.0};
    /// random-walk intensity of the position error, meters per sqrt(hour)
    double rw_intensity_m = 50.0;
    std::uint64_t seed = 0;
};

/// Position-error INS stand-in: bias + velocity-error drift + random walk.
/// Only the position slots feed the fusion filter; attitude and velocity
/// components are carried for structural fidelity.
class InsSimulator {
public:
    explicit InsSimulator(const InsConfig& cfg)
        : cfg_(cfg), rng_(cfg.seed), east_m_(cfg.init_east_error_m),
          north_m_(cfg.init_north_error_m) {
        state_.alpha = cfg.misalignment_arcmin[0] / 60.0 * kDegToRad;
        state_.beta = cfg.misalignment_arcmin[1] / 60.0 * kDegToRad;
        state_.gamma = cfg.misalignment_arcmin[2] / 60.0 * kDegToRad;
        state_.d_vx = cfg.speed_error_ms;
    }

    const InsErrorState& state() const { return state_; }

    /// Measured position for the current error state, without advancing it.
    GeoPosition measure(const GeoPosition& true_pos) const {
        return offset_km(true_pos, east_m_ / 1000.0, north_m_ / 1000.0);
    }

    /// Advance the error model by dt hours and return the measured position.
    /// The drift acts cross-track: perpendicular to the current true
    /// velocity direction (vx, vy), the dominant heading-error mode.
    GeoPosition step(const GeoPosition& true_pos, double dt_h, double vx, double vy) {
        double dir_e = 0.0, dir_n = 1.0;
        const double speed = std::hypot(vx, vy);
        if (speed > 1e-9) {
            dir_e = -vy / speed;
            dir_n = vx / speed;
        }
        const double drift = cfg_.speed_error_ms * 3.6 * dt_h * 1000.0; // m
        std::normal_distribution<double> rw(0.0, cfg_.rw_intensity_m * std::sqrt(dt_h));
        east_m_ += drift * dir_e + (cfg_.rw_intensity_m > 0.0 ? rw(rng_) : 0.0);
        north_m_ += drift * dir_n + (cfg_.rw_intensity_m > 0.0 ? rw(rng_) : 0.0);

        const double km_e = east_m_ / 1000.0;
        const double km_n = north_m_ / 1000.0;
        state_.d_lat = km_n / kKmPerDegree;
        const double c = std::cos(true_pos.lat * kDegToRad);
        state_.d_lon = km_e / (kKmPerDegree * (c > 1e-12 ? c : 1e-12));
        // refresh random gyro drifts; constant drifts stay put
        std::normal_distribution<double> gyro(0.0, 0.01);
        for (double& e : state_.eps_r) e = gyro(rng_);
        return offset_km(true_pos, km_e, km_n);
    }

    /// Loosely coupled by default; when the navigator is configured to
    /// reset the INS on fusion, the position-slot correction is removed
    /// from the accumulated error here.
    void absorb_correction(double d_lon_deg, double d_lat_deg, double lat_deg) {
        north_m_ -= d_lat_deg * kKmPerDegree * 1000.0;
        east_m_ -= d_lon_deg * kKmPerDegree * std::cos(lat_deg * kDegToRad) * 1000.0;
    }

private:
    InsConfig cfg_;
    InsErrorState state_;
    std::mt19937_64 rng_;
    double east_m_, north_m_;
};

} // namespace geonav
