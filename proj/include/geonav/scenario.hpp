#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "geonav/errors.hpp"
#include "geonav/navigator.hpp"

namespace geonav {

inline constexpr const char* kScenarioSchema = "geonav-scenario-1";

/// Command-line overrides that take precedence over the scenario file.
struct ScenarioOverrides {
    std::optional<std::string> coefficients_path;
    std::optional<std::string> storm_path;
};

namespace detail {

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline double json_num(const nlohmann::json& j, const std::string& key,
                       const std::string& where, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number())
        throw parse_error("scenario: " + where + key + " must be a number");
    return j[key].get<double>();
}

inline bool json_bool(const nlohmann::json& j, const std::string& key,
                      const std::string& where, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean())
        throw parse_error("scenario: " + where + key + " must be a boolean");
    return j[key].get<bool>();
}

inline Eigen::Vector2d json_vec2(const nlohmann::json& j, const std::string& key,
                                 const std::string& where, const Eigen::Vector2d& fb) {
    if (!j.contains(key)) return fb;
    const nlohmann::json& v = j[key];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw parse_error("scenario: " + where + key +
                          " must be an array of two numbers");
    return {v[0].get<double>(), v[1].get<double>()};
}

inline GeoPosition json_position(const nlohmann::json& j, const std::string& key,
                                 const GeoPosition& fallback) {
    if (!j.contains(key)) return fallback;
    const nlohmann::json& p = j[key];
    if (!p.is_object())
        throw parse_error("scenario: " + key + " must be an object");
    const double lon = json_num(p, "lon_deg", key + ".", fallback.lon);
    const double lat = json_num(p, "lat_deg", key + ".", fallback.lat);
    if (lat < -90.0 || lat > 90.0)
        throw parse_error("scenario: " + key + ".lat_deg out of range [-90, 90]");
    if (lon < -360.0 || lon > 360.0)
        throw parse_error("scenario: " + key + ".lon_deg out of range [-360, 360]");
    return GeoPosition::make(lon, lat);
}

/// Default anomaly grid: bounding box of the mission endpoints and the
/// storm stations, padded so the corridor cannot leave the grid.
inline AnomalyTable::GridSpec default_grid(const Scenario& sc,
                                           const std::vector<StationRecord>& recs,
                                           double pad_deg = 8.0) {
    AnomalyTable::GridSpec g;
    g.lon_min = std::min(sc.start.lon, sc.destination.lon);
    g.lon_max = std::max(sc.start.lon, sc.destination.lon);
    g.lat_min = std::min(sc.start.lat, sc.destination.lat);
    g.lat_max = std::max(sc.start.lat, sc.destination.lat);
    for (const StationRecord& r : recs) {
        g.lon_min = std::min(g.lon_min, r.lon);
        g.lon_max = std::max(g.lon_max, r.lon);
        g.lat_min = std::min(g.lat_min, r.lat);
        g.lat_max = std::max(g.lat_max, r.lat);
    }
    g.lon_min -= pad_deg;
    g.lon_max += pad_deg;
    g.lat_min = std::max(-90.0, g.lat_min - pad_deg);
    g.lat_max = std::min(90.0, g.lat_max + pad_deg);
    g.cell_deg = 1.0;
    return g;
}

inline std::string resolve_path(const std::string& raw, const std::string& base_dir) {
    std::filesystem::path p(raw);
    if (p.is_absolute() || base_dir.empty()) return raw;
    return (std::filesystem::path(base_dir) / p).string();
}

} // namespace detail

/// Build a Scenario from a parsed JSON document. Absent keys fall back to
/// the built-in defaults; violations raise parse_error naming the key.
/// `base_dir` anchors relative coefficient/storm paths.
inline Scenario load_scenario_json(const nlohmann::json& j, const std::string& base_dir,
                                   const ScenarioOverrides& ov = {}) {
    using detail::json_bool;
    using detail::json_num;
    using detail::json_vec2;
    if (!j.is_object()) throw parse_error("scenario: root must be a JSON object");
    if (j.contains("schema") && j["schema"] != kScenarioSchema)
        throw parse_error("scenario: schema must be \"" +
                          std::string(kScenarioSchema) + "\"");

    Scenario sc;
    sc.start = detail::json_position(j, "start", sc.start);
    sc.destination = detail::json_position(j, "destination", sc.destination);
    sc.epsilon_km = json_num(j, "epsilon_km", "", sc.epsilon_km);
    if (sc.epsilon_km <= 0.0) throw parse_error("scenario: epsilon_km must be > 0");
    sc.sigma_deg_per_km = json_num(j, "sigma_deg_per_km", "", sc.sigma_deg_per_km);
    sc.sigma_on_singular_value =
        json_bool(j, "sigma_on_singular_value", "", sc.sigma_on_singular_value);
    sc.max_iterations =
        static_cast<int>(json_num(j, "max_iterations", "", sc.max_iterations));
    if (sc.max_iterations < 1)
        throw parse_error("scenario: max_iterations must be >= 1");
    sc.noise_di_deg = json_num(j, "noise_di_deg", "", sc.noise_di_deg);
    if (sc.noise_di_deg < 0.0)
        throw parse_error("scenario: noise_di_deg must be >= 0");
    sc.cruise_speed_kmh = json_num(j, "cruise_speed_kmh", "", sc.cruise_speed_kmh);
    sc.probe_leg_km = json_num(j, "probe_leg_km", "", sc.probe_leg_km);
    if (sc.probe_leg_km <= 0.0) throw parse_error("scenario: probe_leg_km must be > 0");
    sc.probe_heading1_deg = json_num(j, "probe_heading1_deg", "", sc.probe_heading1_deg);
    sc.probe_heading2_deg = json_num(j, "probe_heading2_deg", "", sc.probe_heading2_deg);
    sc.fusion_resets_ins = json_bool(j, "fusion_resets_ins", "", sc.fusion_resets_ins);
    sc.seed = static_cast<std::uint64_t>(json_num(j, "seed", "", 0.0));

    if (j.contains("controller")) {
        const nlohmann::json& c = j["controller"];
        if (!c.is_object()) throw parse_error("scenario: controller must be an object");
        ControllerConfig& cc = sc.controller;
        cc.horizon = static_cast<int>(json_num(c, "horizon", "controller.", cc.horizon));
        if (cc.horizon < 1) throw parse_error("scenario: controller.horizon must be >= 1");
        cc.period_h = json_num(c, "period_h", "controller.", cc.period_h);
        if (cc.period_h <= 0.0)
            throw parse_error("scenario: controller.period_h must be > 0");
        cc.weights.q = json_num(c, "q", "controller.", 1.0) * Eigen::Matrix2d::Identity();
        cc.weights.f = json_num(c, "f", "controller.", 1.0) * Eigen::Matrix2d::Identity();
        const double r = json_num(c, "r", "controller.", 10.0);
        if (r <= 0.0) throw parse_error("scenario: controller.r must be > 0");
        cc.weights.r = r * Eigen::Matrix2d::Identity();
        cc.u_min = json_vec2(c, "u_min", "controller.", cc.u_min);
        cc.u_max = json_vec2(c, "u_max", "controller.", cc.u_max);
        cc.s_min = json_vec2(c, "s_min", "controller.", cc.s_min);
        cc.s_max = json_vec2(c, "s_max", "controller.", cc.s_max);
        if ((cc.u_min.array() > cc.u_max.array()).any())
            throw parse_error("scenario: controller.u_min exceeds u_max");
        if ((cc.s_min.array() > cc.s_max.array()).any())
            throw parse_error("scenario: controller.s_min exceeds s_max");
        cc.literal_qp_gradient =
            json_bool(c, "literal_qp_gradient", "controller.", cc.literal_qp_gradient);
        cc.relax_attempts = static_cast<int>(
            json_num(c, "relax_attempts", "controller.", cc.relax_attempts));
        cc.qp_position_unit_km =
            json_num(c, "qp_position_unit_km", "controller.", cc.qp_position_unit_km);
        if (cc.qp_position_unit_km <= 0.0)
            throw parse_error("scenario: controller.qp_position_unit_km must be > 0");
        cc.qp_period = json_num(c, "qp_period", "controller.", cc.qp_period);
        if (cc.qp_period <= 0.0)
            throw parse_error("scenario: controller.qp_period must be > 0");
        cc.comp_tolerance =
            json_num(c, "comp_tolerance", "controller.", cc.comp_tolerance);
        if (cc.comp_tolerance < 0.0)
            throw parse_error("scenario: controller.comp_tolerance must be >= 0");
    }

    if (j.contains("ins")) {
        const nlohmann::json& n = j["ins"];
        if (!n.is_object()) throw parse_error("scenario: ins must be an object");
        InsConfig& ic = sc.ins;
        ic.init_east_error_m =
            json_num(n, "init_east_error_m", "ins.", ic.init_east_error_m);
        ic.init_north_error_m =
            json_num(n, "init_north_error_m", "ins.", ic.init_north_error_m);
        ic.speed_error_ms = json_num(n, "speed_error_ms", "ins.", ic.speed_error_ms);
        ic.rw_intensity_m = json_num(n, "rw_intensity_m", "ins.", ic.rw_intensity_m);
        if (n.contains("misalignment_arcmin")) {
            const nlohmann::json& m = n["misalignment_arcmin"];
            if (!m.is_array() || m.size() != 3)
                throw parse_error(
                    "scenario: ins.misalignment_arcmin must be an array of 3 numbers");
            for (int i = 0; i < 3; ++i) ic.misalignment_arcmin[i] = m[i].get<double>();
        }
    }

    if (j.contains("fusion")) {
        const nlohmann::json& f = j["fusion"];
        if (!f.is_object()) throw parse_error("scenario: fusion must be an object");
        const double q = json_num(f, "q_position", "fusion.", 0.05);
        const double r = json_num(f, "r", "fusion.", 2.0);
        const double p0 = json_num(f, "p0_position", "fusion.", 1.0);
        if (r <= 0.0) throw parse_error("scenario: fusion.r must be > 0");
        sc.fusion.q_c(kLonSlot, kLonSlot) = q;
        sc.fusion.q_c(kLatSlot, kLatSlot) = q;
        sc.fusion.r_c = r * Eigen::Matrix2d::Identity();
        sc.fusion.p0(kLonSlot, kLonSlot) = p0;
        sc.fusion.p0(kLatSlot, kLatSlot) = p0;
    }

    std::string coef_path, storm_path;
    nlohmann::json field = j.contains("field") ? j["field"] : nlohmann::json::object();
    if (!field.is_object()) throw parse_error("scenario: field must be an object");
    std::string model = field.value("model", std::string("dipole"));
    sc.field.date = detail::json_num(field, "date", "field.", sc.field.date);
    sc.field.dipole_g10 = detail::json_num(field, "dipole_g10", "field.", sc.field.dipole_g10);
    if (field.contains("coefficients")) {
        if (!field["coefficients"].is_string())
            throw parse_error("scenario: field.coefficients must be a path string");
        coef_path = detail::resolve_path(field["coefficients"].get<std::string>(), base_dir);
    }
    if (ov.coefficients_path) {
        coef_path = *ov.coefficients_path;
        model = "wmm";
    }
    if (model == "wmm") {
        if (coef_path.empty())
            throw parse_error("scenario: field.coefficients required for model \"wmm\"");
        sc.field.coefficients = parse_cof(detail::slurp(coef_path));
    } else if (model != "dipole") {
        throw parse_error("scenario: field.model must be \"wmm\" or \"dipole\"");
    }

    nlohmann::json storm =
        field.contains("storm") ? field["storm"] : nlohmann::json::object();
    if (!storm.is_object()) throw parse_error("scenario: field.storm must be an object");
    if (storm.contains("csv")) {
        if (!storm["csv"].is_string())
            throw parse_error("scenario: field.storm.csv must be a path string");
        storm_path = detail::resolve_path(storm["csv"].get<std::string>(), base_dir);
    }
    if (ov.storm_path) storm_path = *ov.storm_path;
    if (!storm_path.empty()) {
        const std::vector<StationRecord> recs = parse_storm_csv(detail::slurp(storm_path));
        AnomalyTable::GridSpec grid = detail::default_grid(sc, recs);
        if (storm.contains("grid")) {
            const nlohmann::json& g = storm["grid"];
            if (!g.is_object())
                throw parse_error("scenario: field.storm.grid must be an object");
            grid.lon_min = json_num(g, "lon_min", "field.storm.grid.", grid.lon_min);
            grid.lon_max = json_num(g, "lon_max", "field.storm.grid.", grid.lon_max);
            grid.lat_min = json_num(g, "lat_min", "field.storm.grid.", grid.lat_min);
            grid.lat_max = json_num(g, "lat_max", "field.storm.grid.", grid.lat_max);
            grid.cell_deg = json_num(g, "cell_deg", "field.storm.grid.", grid.cell_deg);
        }
        const double bin = json_num(storm, "time_bin_s", "field.storm.", 3600.0);
        sc.field.anomaly = AnomalyTable::build(recs, grid, bin);
        sc.field.anomaly_mission_duration_h =
            json_num(storm, "mission_duration_h", "field.storm.", 0.0);
    }

    sc.validate();
    return sc;
}

/// Load and validate a scenario file (JSON). Relative coefficient/storm
/// paths inside the file resolve against the file's directory.
inline Scenario load_scenario(const std::string& path, const ScenarioOverrides& ov = {}) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::slurp(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error("scenario: invalid JSON in " + path + ": " + e.what());
    }
    const std::string base = std::filesystem::path(path).parent_path().string();
    return load_scenario_json(j, base, ov);
}

} // namespace geonav
