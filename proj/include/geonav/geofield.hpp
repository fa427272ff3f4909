#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "geonav/anomaly.hpp"
#include "geonav/errors.hpp"
#include "geonav/geo.hpp"

namespace geonav {

/// Magnetic field vector in local geodetic axes, nT.
struct FieldVector {
    double bx = 0.0; ///< geographic north
    double by = 0.0; ///< east
    double bz = 0.0; ///< radially inward (down)
};

/// The seven geomagnetic elements derived from a field vector.
struct GeoElements {
    double bx = 0.0, by = 0.0, bz = 0.0;
    double bh = 0.0; ///< horizontal intensity, nT
    double bf = 0.0; ///< total intensity, nT
    double d = 0.0;  ///< declination, degrees in (-180, 180]
    double i = 0.0;  ///< inclination, degrees in [-90, 90]
};

/// d = atan2(by, bx), i = atan(bz / bh). Throws when the horizontal
/// component vanishes and declination is undefined.
inline GeoElements elements_from_field(const FieldVector& f) {
    GeoElements e;
    e.bx = f.bx;
    e.by = f.by;
    e.bz = f.bz;
    e.bh = std::hypot(f.bx, f.by);
    e.bf = std::hypot(e.bh, f.bz);
    if (e.bh == 0.0)
        throw domain_error("declination undefined: zero horizontal field");
    e.d = std::atan2(f.by, f.bx) * kRadToDeg;
    if (e.d <= -180.0) e.d = 180.0;
    e.i = std::atan2(f.bz, e.bh) * kRadToDeg;
    return e;
}

/// Additive anomaly; dbz defaults to 0 when the source is horizontal-only.
inline FieldVector apply_anomaly(const FieldVector& f, const AnomalySample& a) {
    return FieldVector{f.bx + a.dbx, f.by + a.dby, f.bz + a.dbz};
}

/// Schmidt semi-normalized Gauss coefficients of a main-field model plus
/// linear secular variation. Immutable after parse.
class CoefficientSet {
public:
    CoefficientSet(double epoch, int max_degree)
        : epoch_(epoch), max_degree_(max_degree) {
        if (max_degree < 1) throw domain_error("max_degree must be >= 1");
        const std::size_t n = flat_size(max_degree);
        g_.assign(n, 0.0);
        h_.assign(n, 0.0);
        g_dot_.assign(n, 0.0);
        h_dot_.assign(n, 0.0);
    }

    /// Single-coefficient dipole model (g10 only), useful for analytic checks.
    static CoefficientSet dipole(double g10, double epoch = 2020.0) {
        CoefficientSet c(epoch, 1);
        c.set(1, 0, g10, 0.0, 0.0, 0.0);
        return c;
    }

    double epoch() const { return epoch_; }
    int max_degree() const { return max_degree_; }
    double reference_radius_km() const { return kEarthRadiusKm; }

    void set(int n, int m, double g, double h, double g_dot, double h_dot) {
        check_index(n, m);
        if (m == 0) h = h_dot = 0.0; // h[n][0] == 0 by convention
        const std::size_t i = idx(n, m);
        g_[i] = g;
        h_[i] = h;
        g_dot_[i] = g_dot;
        h_dot_[i] = h_dot;
    }

    double g(int n, int m, double date) const {
        check_index(n, m);
        return g_[idx(n, m)] + (date - epoch_) * g_dot_[idx(n, m)];
    }
    double h(int n, int m, double date) const {
        check_index(n, m);
        return h_[idx(n, m)] + (date - epoch_) * h_dot_[idx(n, m)];
    }

private:
    static std::size_t flat_size(int nmax) {
        return static_cast<std::size_t>(nmax) * (nmax + 3) / 2 + 1;
    }
    static std::size_t idx(int n, int m) {
        return static_cast<std::size_t>(n) * (n + 1) / 2 + m;
    }
    void check_index(int n, int m) const {
        if (n < 1 || n > max_degree_ || m < 0 || m > n)
            throw domain_error("coefficient index out of range: n=" +
                               std::to_string(n) + " m=" + std::to_string(m));
    }

    double epoch_;
    int max_degree_;
    std::vector<double> g_, h_, g_dot_, h_dot_;
};

/// Parse the standard coefficient-file format: header `EPOCH NAME DATE`,
/// body rows `n m g h gdot hdot`, terminator line starting with 9999.
inline CoefficientSet parse_cof(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    long lineno = 0;

    // header
    double epoch = 0.0;
    std::string model_name, release_date;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(line);
        if (!(ls >> epoch >> model_name >> release_date))
            throw parse_error("malformed coefficient-file header", lineno);
        break;
    }
    if (lineno == 0) throw parse_error("empty coefficient file");

    struct Row {
        int n, m;
        double g, h, gd, hd;
    };
    std::vector<Row> rows;
    int max_degree = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        if (line.compare(0, 4, "9999") == 0) break;
        std::istringstream ls(line);
        Row r{};
        if (!(ls >> r.n >> r.m >> r.g >> r.h >> r.gd >> r.hd))
            throw parse_error("non-numeric or missing field in coefficient row", lineno);
        if (r.n < 1 || r.m < 0 || r.m > r.n)
            throw parse_error("invalid (n, m) in coefficient row", lineno);
        if (!std::isfinite(r.g) || !std::isfinite(r.h) ||
            !std::isfinite(r.gd) || !std::isfinite(r.hd))
            throw parse_error("non-finite coefficient", lineno);
        rows.push_back(r);
        if (r.n > max_degree) max_degree = r.n;
    }
    if (rows.empty()) throw parse_error("coefficient file has no data rows");

    CoefficientSet set(epoch, max_degree);
    std::vector<char> seen(static_cast<std::size_t>(max_degree) * (max_degree + 3) / 2 + 1, 0);
    for (const Row& r : rows) {
        const std::size_t i = static_cast<std::size_t>(r.n) * (r.n + 1) / 2 + r.m;
        if (seen[i])
            throw parse_error("duplicate coefficient row n=" + std::to_string(r.n) +
                              " m=" + std::to_string(r.m));
        seen[i] = 1;
        set.set(r.n, r.m, r.g, r.h, r.gd, r.hd);
    }
    for (int n = 1; n <= max_degree; ++n)
        for (int m = 0; m <= n; ++m)
            if (!seen[static_cast<std::size_t>(n) * (n + 1) / 2 + m])
                throw parse_error("missing coefficient row n=" + std::to_string(n) +
                                  " m=" + std::to_string(m));
    return set;
}

namespace detail {

// WGS84 constants for the geodetic -> geocentric conversion used by the
// main-field synthesis. Positions elsewhere in the library live on the
// reference sphere; the conversion matters only for matching published
// field values at sea level.
inline constexpr double kWgs84A = 6378.137;
inline constexpr double kWgs84F = 1.0 / 298.257223563;
inline constexpr double kWgs84E2 = kWgs84F * (2.0 - kWgs84F);

struct SphericalPoint {
    double r;        // geocentric radius, km
    double lat_c;    // geocentric latitude, rad
};

inline SphericalPoint geodetic_to_geocentric(double lat_deg, double alt_km) {
    const double phi = lat_deg * kDegToRad;
    const double s = std::sin(phi), c = std::cos(phi);
    const double rc = kWgs84A / std::sqrt(1.0 - kWgs84E2 * s * s);
    const double p = (rc + alt_km) * c;
    const double z = (rc * (1.0 - kWgs84E2) + alt_km) * s;
    const double r = std::hypot(p, z);
    return SphericalPoint{r, std::asin(z / r)};
}

} // namespace detail

/// Interpretation of GeoPosition::lat when synthesizing the field.
/// `spherical` treats it as geocentric on a sphere of radius a + alt (the
/// library-wide position convention); `geodetic` applies the WGS84
/// geodetic -> geocentric conversion and back-rotation, which is required
/// to match published model test values at sea level.
enum class LatitudeConvention { spherical, geodetic };

/// Spherical-harmonic synthesis of the main field in local north/east/down
/// axes, with coefficients advanced linearly by secular variation.
inline FieldVector evaluate_field(const CoefficientSet& model, const GeoPosition& pos,
                                  double date,
                                  LatitudeConvention conv = LatitudeConvention::spherical) {
    if (std::abs(pos.lat) >= 90.0 - 1e-6)
        throw domain_error("field evaluation at a geographic pole");
    if (date < model.epoch() || date > model.epoch() + 5.0)
        throw domain_error("date outside model validity window [" +
                           std::to_string(model.epoch()) + ", " +
                           std::to_string(model.epoch() + 5.0) + "]");

    const int nmax = model.max_degree();
    const detail::SphericalPoint sp =
        conv == LatitudeConvention::geodetic
            ? detail::geodetic_to_geocentric(pos.lat, pos.alt)
            : detail::SphericalPoint{model.reference_radius_km() + pos.alt,
                                     pos.lat * kDegToRad};
    const double lam = pos.lon * kDegToRad;
    const double mu = std::sin(sp.lat_c), c = std::cos(sp.lat_c);

    // Schmidt semi-normalized associated Legendre P(n,m)(mu) and the
    // derivative with respect to geocentric latitude, by stable recursion.
    std::vector<std::vector<double>> P(nmax + 1, std::vector<double>(nmax + 1, 0.0));
    std::vector<std::vector<double>> dP(nmax + 1, std::vector<double>(nmax + 1, 0.0));
    P[0][0] = 1.0;
    for (int n = 1; n <= nmax; ++n) {
        for (int m = 0; m <= n; ++m) {
            if (n == m) {
                if (n == 1) {
                    P[1][1] = c;
                    dP[1][1] = -mu;
                } else {
                    const double k = std::sqrt((2.0 * n - 1.0) / (2.0 * n));
                    P[n][n] = k * c * P[n - 1][n - 1];
                    dP[n][n] = k * (c * dP[n - 1][n - 1] - mu * P[n - 1][n - 1]);
                }
            } else {
                const double k1 = 2.0 * n - 1.0;
                const double k2 = std::sqrt(double((n - 1 + m)) * double((n - 1 - m)));
                const double k3 = std::sqrt(double((n + m)) * double((n - m)));
                const double pm2 = (n >= 2) ? P[n - 2][m] : 0.0;
                const double dpm2 = (n >= 2) ? dP[n - 2][m] : 0.0;
                P[n][m] = (k1 * mu * P[n - 1][m] - k2 * pm2) / k3;
                dP[n][m] = (k1 * (c * P[n - 1][m] + mu * dP[n - 1][m]) - k2 * dpm2) / k3;
            }
        }
    }

    std::vector<double> cm(nmax + 1), sm(nmax + 1);
    for (int m = 0; m <= nmax; ++m) {
        cm[m] = std::cos(m * lam);
        sm[m] = std::sin(m * lam);
    }

    const double ar = model.reference_radius_km() / sp.r;
    double xp = 0.0, yp = 0.0, zp = 0.0; // geocentric north/east/down
    double f = ar * ar;
    for (int n = 1; n <= nmax; ++n) {
        f *= ar; // (a/r)^(n+2)
        for (int m = 0; m <= n; ++m) {
            const double gc = model.g(n, m, date);
            const double hc = model.h(n, m, date);
            const double a = gc * cm[m] + hc * sm[m];
            xp -= f * a * dP[n][m]; // X' = -(1/r) dV/dphi
            yp += f * m * (gc * sm[m] - hc * cm[m]) * P[n][m] / c;
            zp -= (n + 1.0) * f * a * P[n][m];
        }
    }

    // rotate geocentric (north, down) into geodetic axes; psi = 0 for the
    // spherical convention
    const double psi = pos.lat * kDegToRad - sp.lat_c;
    FieldVector out;
    out.bx = xp * std::cos(psi) + zp * std::sin(psi);
    out.by = yp;
    out.bz = -xp * std::sin(psi) + zp * std::cos(psi);
    return out;
}

/// Closed-form axial dipole field (g10 term only) in local axes, treating
/// latitude as geocentric on the reference sphere.
inline FieldVector dipole_field(const GeoPosition& pos, double g10) {
    const double phi = pos.lat * kDegToRad;
    const double r = kEarthRadiusKm + pos.alt;
    const double ar3 = std::pow(kEarthRadiusKm / r, 3);
    FieldVector f;
    f.bx = -g10 * ar3 * std::cos(phi);
    f.by = 0.0;
    f.bz = -2.0 * g10 * ar3 * std::sin(phi);
    return f;
}

} // namespace geonav
