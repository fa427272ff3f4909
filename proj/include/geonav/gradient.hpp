#pragma once

#include <cmath>

#include "geonav/errors.hpp"
#include "geonav/geo.hpp"

namespace geonav {

/// 2x2 spatial gradient of declination and inclination, degrees per km.
/// Row 1: D along x, y; row 2: I along x, y.
struct GradientMatrix {
    double g_dx = 0.0, g_dy = 0.0;
    double g_ix = 0.0, g_iy = 0.0;

    double min_abs_entry() const {
        return std::min(std::min(std::abs(g_dx), std::abs(g_dy)),
                        std::min(std::abs(g_ix), std::abs(g_iy)));
    }
};

/// One D/I sample with its local-plane coordinates (km).
struct DiSample {
    double d = 0.0; ///< declination, degrees
    double i = 0.0; ///< inclination, degrees
    double x = 0.0; ///< km east
    double y = 0.0; ///< km north
};

/// Three-point stencil gradient at the start: s0 -> s1 steps along x,
/// s1 -> s2 steps along y. Exact on affine D/I fields.
inline GradientMatrix init_gradient(const DiSample& s0, const DiSample& s1,
                                    const DiSample& s2) {
    const double dx = s1.x - s0.x;
    const double dy = s2.y - s1.y;
    if (dx == 0.0 || dy == 0.0)
        throw domain_error("degenerate gradient stencil: coincident coordinates");
    GradientMatrix g;
    g.g_dx = (s1.d - s0.d) / dx;
    g.g_dy = (s2.d - s1.d) / dy;
    g.g_ix = (s1.i - s0.i) / dx;
    g.g_iy = (s2.i - s1.i) / dy;
    return g;
}

/// Result of the recursive gradient update; `frozen` is set when the motion
/// was too close to axis-aligned for the update to be well posed.
struct GradientUpdate {
    GradientMatrix g;
    bool frozen = false;
};

/// Recursive outer-product update of the gradient from the measured D/I
/// increments over one step:
///   g' = g + (dD, dI)^T (cos(theta)/(vx t), sin(theta)/(vy t)).
/// Velocities in km/h, t in hours, theta in degrees. When |vx t| or |vy t|
/// falls below eps_km, the update divides by ~0 and the gradient is frozen
/// for the step instead.
inline GradientUpdate update_gradient(const GradientMatrix& g, double dD, double dI,
                                      double theta_deg, double vx, double vy,
                                      double t, double eps_km = 1e-6) {
    if (std::abs(vx * t) <= eps_km || std::abs(vy * t) <= eps_km)
        return GradientUpdate{g, true};
    const double th = theta_deg * kDegToRad;
    const double rx = std::cos(th) / (vx * t);
    const double ry = std::sin(th) / (vy * t);
    GradientUpdate out;
    out.g.g_dx = g.g_dx + dD * rx;
    out.g.g_dy = g.g_dy + dD * ry;
    out.g.g_ix = g.g_ix + dI * rx;
    out.g.g_iy = g.g_iy + dI * ry;
    return out;
}

} // namespace geonav
