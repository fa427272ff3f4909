#pragma once

#include <array>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "geonav/errors.hpp"
#include "geonav/navigator.hpp"

namespace geonav {

inline constexpr const char* kTrajectorySchema = "geonav-trajectory-1";
inline constexpr const char* kTrajectoryHeader =
    "k,time_h,lon_deg,lat_deg,d_deg,i_deg,vx_kmh,vy_kmh,fused,"
    "corr_lon_deg,corr_lat_deg";

/// A parsed trajectory/track file: samples plus the replay metadata the
/// writer embeds in header comments.
struct TrackFile {
    Trajectory samples;
    std::optional<std::array<DiState, 3>> probes;
    std::optional<GeoPosition> start;
    std::optional<GeoPosition> destination;
};

namespace detail {

/// Full-precision number formatting: values survive a write/parse round
/// trip bit-exactly, which the replay self-consistency contract needs.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/// Serialize a run as the trajectory CSV. Header comments carry the schema
/// version and the stencil measurements so the file doubles as a replay
/// track.
inline std::string write_trajectory_csv(const NavigationResult& res, const Scenario& sc) {
    std::ostringstream out;
    out << "# " << kTrajectorySchema << "\n";
    out << "# start " << detail::fmt_g17(sc.start.lon) << " "
        << detail::fmt_g17(sc.start.lat) << "\n";
    out << "# destination " << detail::fmt_g17(sc.destination.lon) << " "
        << detail::fmt_g17(sc.destination.lat) << "\n";
    if (res.probe_measurements.size() == 3) {
        out << "# probes";
        for (const DiState& p : res.probe_measurements)
            out << " " << detail::fmt_g17(p.d) << " " << detail::fmt_g17(p.i);
        out << "\n";
    }
    out << kTrajectoryHeader << "\n";
    for (const TrajectorySample& s : res.trajectory) {
        out << s.k << "," << detail::fmt_g17(s.time_h) << ","
            << detail::fmt_g17(s.position.lon) << "," << detail::fmt_g17(s.position.lat)
            << "," << detail::fmt_g17(s.d_deg) << "," << detail::fmt_g17(s.i_deg) << ","
            << detail::fmt_g17(s.vx_kmh) << "," << detail::fmt_g17(s.vy_kmh) << ","
            << (s.fused ? 1 : 0) << "," << detail::fmt_g17(s.corr_lon_deg) << ","
            << detail::fmt_g17(s.corr_lat_deg) << "\n";
    }
    return out.str();
}

/// Parse a trajectory/track CSV, accepting both files written by
/// write_trajectory_csv and bare recorded tracks without metadata.
inline TrackFile parse_track(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    TrackFile track;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string tag;
            ls >> tag;
            if (tag == "start" || tag == "destination") {
                double lon, lat;
                if (!(ls >> lon >> lat))
                    throw parse_error("track metadata needs lon lat", lineno);
                (tag == "start" ? track.start : track.destination) =
                    GeoPosition::make(lon, lat);
            } else if (tag == "probes") {
                std::array<DiState, 3> p;
                for (DiState& s : p)
                    if (!(ls >> s.d >> s.i))
                        throw parse_error("track probes metadata needs 6 numbers", lineno);
                track.probes = p;
            }
            continue;
        }
        if (!header_seen) {
            if (line.rfind("k,time_h,", 0) != 0)
                throw parse_error("track CSV missing expected header", lineno);
            header_seen = true;
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 11)
            throw parse_error("track row needs 11 columns, got " +
                              std::to_string(cells.size()), lineno);
        TrajectorySample s;
        try {
            s.k = std::stoi(cells[0]);
            s.time_h = std::stod(cells[1]);
            s.position = GeoPosition::make(std::stod(cells[2]), std::stod(cells[3]));
            s.d_deg = std::stod(cells[4]);
            s.i_deg = std::stod(cells[5]);
            s.vx_kmh = std::stod(cells[6]);
            s.vy_kmh = std::stod(cells[7]);
            s.fused = std::stoi(cells[8]) != 0;
            s.corr_lon_deg = std::stod(cells[9]);
            s.corr_lat_deg = std::stod(cells[10]);
        } catch (const error&) {
            throw;
        } catch (const std::exception&) {
            throw parse_error("unparseable number in track CSV", lineno);
        }
        if (!track.samples.empty() && s.k <= track.samples.back().k)
            throw parse_error("track iterations must be strictly increasing", lineno);
        track.samples.push_back(s);
    }
    if (!header_seen) throw parse_error("empty track CSV");
    return track;
}

/// Re-run the navigation loop against a recorded track: measured D/I (and
/// INS position fixes) come from the recording instead of the synthetic
/// field. Files written by this simulator carry the stencil measurements in
/// metadata; bare tracks spend their first three rows on the stencil.
inline NavigationResult run_replay(const Scenario& sc, ControllerVariant variant,
                                   const TrackFile& track) {
    Scenario rsc = sc;
    if (track.start) rsc.start = *track.start;
    if (track.destination) rsc.destination = *track.destination;
    rsc.validate();

    const Trajectory& rows = track.samples;
    detail::LoopSources src;
    src.s_ref = detail::clean_elements(rsc.field, rsc.destination);
    std::size_t offset = 0;
    if (track.probes) {
        if (rows.empty())
            throw domain_error("replay track: no samples");
        const std::array<DiState, 3>& p = *track.probes;
        src.probe = [p](int idx, const GeoPosition&) { return p[idx]; };
    } else {
        if (rows.size() < 3)
            throw domain_error("replay track: insufficient samples for stencil");
        double e01, n01, e12, n12;
        local_delta_km(rows[0].position, rows[1].position, e01, n01);
        local_delta_km(rows[1].position, rows[2].position, e12, n12);
        detail::LoopSources::Stencil st;
        st.s0 = DiSample{rows[0].d_deg, rows[0].i_deg, 0.0, 0.0};
        st.s1 = DiSample{rows[1].d_deg, rows[1].i_deg, e01, n01};
        st.s2 = DiSample{rows[2].d_deg, rows[2].i_deg, e01 + e12, n01 + n12};
        st.resume = rows[2].position;
        src.stencil = st;
        offset = 2;
    }
    src.measure = [&rows, offset](int k, const GeoPosition&, double) {
        const TrajectorySample& r = rows[offset + static_cast<std::size_t>(k)];
        return DiState{r.d_deg, r.i_deg};
    };
    src.ins_fix = [&rows, offset](int k, const GeoPosition&, double, double, double) {
        const std::size_t i =
            std::min(offset + static_cast<std::size_t>(k) + 1, rows.size() - 1);
        return rows[i].position;
    };
    const int budget = std::min<int>(rsc.max_iterations,
                                     static_cast<int>(rows.size() - offset));
    return detail::run_loop(rsc, variant, src, budget);
}

} // namespace geonav
