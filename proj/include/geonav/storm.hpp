#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "geonav/anomaly.hpp"
#include "geonav/errors.hpp"
#include "geonav/geo.hpp"

namespace geonav {

/// One observatory disturbance record.
struct StationRecord {
    double time_s = 0.0;
    double lon = 0.0, lat = 0.0; ///< degrees
    double dbx = 0.0, dby = 0.0; ///< nT, north/east disturbance
    std::optional<double> dbz;   ///< nT, often absent in observatory tables
};

/// Signed horizontal disturbance intensity: |dBH| = sqrt(dbx^2 + dby^2),
/// sign carried from dbx. The dbx = 0 case takes the positive sign.
inline double horizontal_intensity(double dbx, double dby) {
    const double mag = std::hypot(dbx, dby);
    return dbx < 0.0 ? -mag : mag;
}

/// Parse the storm CSV schema:
/// `time_s,lon_deg,lat_deg,dbx_nt,dby_nt,dbz_nt` (dbz may be empty).
inline std::vector<StationRecord> parse_storm_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    std::vector<StationRecord> out;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            if (line.rfind("time_s,", 0) != 0)
                throw parse_error("storm CSV missing expected header", lineno);
            header_seen = true;
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        if (cells.size() != 6)
            throw parse_error("storm CSV row needs 6 columns, got " +
                              std::to_string(cells.size()), lineno);
        StationRecord r;
        try {
            r.time_s = std::stod(cells[0]);
            r.lon = std::stod(cells[1]);
            r.lat = std::stod(cells[2]);
            r.dbx = std::stod(cells[3]);
            r.dby = std::stod(cells[4]);
            if (cells[5].find_first_not_of(" \t") != std::string::npos)
                r.dbz = std::stod(cells[5]);
        } catch (const std::exception&) {
            throw parse_error("unparseable number in storm CSV", lineno);
        }
        if (r.time_s < 0.0)
            throw parse_error("negative time in storm CSV", lineno);
        if (r.lat < -90.0 || r.lat > 90.0 || r.lon < -360.0 || r.lon > 360.0)
            throw parse_error("station coordinates out of range", lineno);
        r.lon = wrap_degrees(r.lon);
        out.push_back(r);
    }
    if (!header_seen) throw parse_error("empty storm CSV");
    return out;
}

/// Inverse-distance-weighted (power 2, great-circle metric) combination of
/// the records' disturbance components; exact at station locations.
inline AnomalySample interpolate_anomaly(const std::vector<StationRecord>& records,
                                         const GeoPosition& at) {
    if (records.empty()) throw domain_error("no station records in time bin");
    double wsum = 0.0, x = 0.0, y = 0.0, z = 0.0;
    for (const StationRecord& r : records) {
        const double d = great_circle_km(GeoPosition{r.lon, r.lat, 0.0}, at);
        if (d < 1e-9) { // on a station: reproduce it exactly
            AnomalySample s{r.dbx, r.dby, r.dbz.value_or(0.0), 0.0};
            s.dbh = horizontal_intensity(s.dbx, s.dby);
            return s;
        }
        const double w = 1.0 / (d * d);
        wsum += w;
        x += w * r.dbx;
        y += w * r.dby;
        z += w * r.dbz.value_or(0.0);
    }
    AnomalySample s{x / wsum, y / wsum, z / wsum, 0.0};
    s.dbh = horizontal_intensity(s.dbx, s.dby);
    return s;
}

/// Mapping from mission time to dataset time. The default is a linear
/// stretch of the dataset duration onto the mission duration.
using TimeMapping = std::function<double(double mission_time_s)>;

inline TimeMapping linear_time_mapping(double dataset_duration_s,
                                       double mission_duration_s) {
    if (mission_duration_s <= 0.0)
        throw domain_error("mission duration must be positive");
    const double scale = dataset_duration_s / mission_duration_s;
    return [scale](double t) { return t * scale; };
}

/// Time-binned gridded anomaly table. Immutable after build; queries are
/// pure and concurrent-safe.
class AnomalyTable {
public:
    struct GridSpec {
        double lon_min = 0.0, lon_max = 0.0;
        double lat_min = 0.0, lat_max = 0.0;
        double cell_deg = 1.0;
    };

    static AnomalyTable build(const std::vector<StationRecord>& records,
                              const GridSpec& grid, double time_bin_s) {
        if (records.empty()) throw domain_error("cannot build anomaly table: no records");
        if (grid.cell_deg <= 0.0 || time_bin_s <= 0.0)
            throw domain_error("grid cell size and time bin must be positive");
        if (grid.lon_max <= grid.lon_min || grid.lat_max <= grid.lat_min)
            throw domain_error("anomaly grid region is empty");

        AnomalyTable t;
        t.grid_ = grid;
        t.time_bin_s_ = time_bin_s;
        t.n_lon_ = static_cast<int>(std::ceil((grid.lon_max - grid.lon_min) / grid.cell_deg));
        t.n_lat_ = static_cast<int>(std::ceil((grid.lat_max - grid.lat_min) / grid.cell_deg));

        double t_max = 0.0;
        for (const StationRecord& r : records) t_max = std::max(t_max, r.time_s);
        t.n_time_ = static_cast<int>(std::floor(t_max / time_bin_s)) + 1;
        t.duration_s_ = t.n_time_ * time_bin_s;

        std::vector<std::vector<StationRecord>> bins(t.n_time_);
        for (const StationRecord& r : records)
            bins[static_cast<std::size_t>(std::min<double>(
                    t.n_time_ - 1, std::floor(r.time_s / time_bin_s)))].push_back(r);

        t.cells_.resize(static_cast<std::size_t>(t.n_time_) * t.n_lat_ * t.n_lon_);
        for (int bi = 0; bi < t.n_time_; ++bi) {
            if (bins[bi].empty())
                throw domain_error("anomaly time bin " + std::to_string(bi) +
                                   " has no records");
            for (int la = 0; la < t.n_lat_; ++la) {
                for (int lo = 0; lo < t.n_lon_; ++lo) {
                    GeoPosition center{
                        grid.lon_min + (lo + 0.5) * grid.cell_deg,
                        grid.lat_min + (la + 0.5) * grid.cell_deg, 0.0};
                    t.cells_[t.index(bi, la, lo)] = interpolate_anomaly(bins[bi], center);
                }
            }
        }
        return t;
    }

    int time_slices() const { return n_time_; }
    double dataset_duration_s() const { return duration_s_; }

    /// Cell lookup at dataset time = mapping(mission_time).
    AnomalySample at(const GeoPosition& pos, double mission_time_s,
                     const TimeMapping& mapping) const {
        const double ts = mapping(mission_time_s);
        const int bi = std::clamp(static_cast<int>(std::floor(ts / time_bin_s_)),
                                  0, n_time_ - 1);
        const int lo = static_cast<int>(std::floor((pos.lon - grid_.lon_min) / grid_.cell_deg));
        const int la = static_cast<int>(std::floor((pos.lat - grid_.lat_min) / grid_.cell_deg));
        if (lo < 0 || lo >= n_lon_ || la < 0 || la >= n_lat_)
            throw domain_error("position outside anomaly grid");
        return cells_[index(bi, la, lo)];
    }

private:
    std::size_t index(int bi, int la, int lo) const {
        return (static_cast<std::size_t>(bi) * n_lat_ + la) * n_lon_ + lo;
    }

    GridSpec grid_;
    double time_bin_s_ = 3600.0;
    double duration_s_ = 0.0;
    int n_time_ = 0, n_lat_ = 0, n_lon_ = 0;
    std::vector<AnomalySample> cells_;
};

} // namespace geonav
