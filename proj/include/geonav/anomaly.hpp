#pragma once

namespace geonav {

/// Local field disturbance, nT. dbh carries the signed horizontal intensity.
struct AnomalySample {
    double dbx = 0.0;
    double dby = 0.0;
    double dbz = 0.0;
    double dbh = 0.0;
};

} // namespace geonav
