#pragma once

#include <cmath>

#include "geonav/errors.hpp"

namespace geonav {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

/// Spherical reference radius, km. Also the WMM reference radius.
inline constexpr double kEarthRadiusKm = 6371.2;

/// Kilometers spanned by one degree of latitude on the reference sphere.
inline constexpr double kKmPerDegree = kEarthRadiusKm * kDegToRad;

/// Wrap an angle in degrees to (-180, 180].
inline double wrap_degrees(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w <= -180.0) w += 360.0;
    if (w > 180.0) w -= 360.0;
    return w;
}

/// Geographic position: longitude/latitude in degrees, altitude in km
/// above the reference radius.
struct GeoPosition {
    double lon = 0.0; ///< degrees east, normalized to (-180, 180]
    double lat = 0.0; ///< degrees north, in [-90, 90]
    double alt = 0.0; ///< kilometers

    static GeoPosition make(double lon_deg, double lat_deg, double alt_km = 0.0) {
        if (!(lat_deg >= -90.0 && lat_deg <= 90.0))
            throw domain_error("latitude out of [-90, 90]: " + std::to_string(lat_deg));
        return GeoPosition{wrap_degrees(lon_deg), lat_deg, alt_km};
    }
};

/// Great-circle distance on the reference sphere, km (haversine).
inline double great_circle_km(const GeoPosition& a, const GeoPosition& b) {
    const double la1 = a.lat * kDegToRad, la2 = b.lat * kDegToRad;
    const double dla = la2 - la1;
    const double dlo = (b.lon - a.lon) * kDegToRad;
    const double s1 = std::sin(dla / 2.0), s2 = std::sin(dlo / 2.0);
    const double h = s1 * s1 + std::cos(la1) * std::cos(la2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

/// Shift a position by a local-tangent-plane displacement (east, north) in km.
inline GeoPosition offset_km(const GeoPosition& p, double east_km, double north_km) {
    GeoPosition out = p;
    out.lat = p.lat + north_km / kKmPerDegree;
    const double c = std::cos(p.lat * kDegToRad);
    out.lon = wrap_degrees(p.lon + east_km / (kKmPerDegree * (c > 1e-12 ? c : 1e-12)));
    if (out.lat > 90.0) out.lat = 90.0;
    if (out.lat < -90.0) out.lat = -90.0;
    return out;
}

/// Local-tangent-plane displacement (east, north) km from `from` to `to`.
inline void local_delta_km(const GeoPosition& from, const GeoPosition& to,
                           double& east_km, double& north_km) {
    north_km = (to.lat - from.lat) * kKmPerDegree;
    east_km = wrap_degrees(to.lon - from.lon) * kKmPerDegree *
              std::cos(from.lat * kDegToRad);
}

} // namespace geonav
