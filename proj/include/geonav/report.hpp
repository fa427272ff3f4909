#pragma once

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "geonav/metrics.hpp"

namespace geonav {

inline constexpr const char* kReportSchema = "geonav-report-1";
inline constexpr const char* kComparisonSchema = "geonav-comparison-1";
inline constexpr const char* kComparisonHeader =
    "variant,runs,cep_km,iter_med,len_med_km,var_med_km2,dev_mean_km,"
    "dev_max_km,pmr_pct";

namespace detail {

inline nlohmann::json summary_json(const DistributionSummary& s) {
    return {{"min", s.min}, {"q1", s.q1}, {"median", s.median},
            {"q3", s.q3},   {"max", s.max}};
}

/// Median of one RunMetrics field across the ensemble.
template <typename F>
inline double run_median(const EnsembleReport& rep, F field) {
    std::vector<double> v;
    v.reserve(rep.runs.size());
    for (const RunMetrics& m : rep.runs) v.push_back(field(m));
    return summarize(std::move(v)).median;
}

inline std::string fmt_fixed(double v, int decimals = 4) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

} // namespace detail

/// Report JSON: per-run metric array plus the aggregate block.
inline nlohmann::json report_json(const EnsembleReport& rep, const std::string& variant) {
    nlohmann::json per_run = nlohmann::json::array();
    for (const RunMetrics& m : rep.runs)
        per_run.push_back({{"iterations", m.iterations},
                           {"length_km", m.trajectory_length_km},
                           {"variability_km2", m.step_variability_km2},
                           {"mean_deviation_km", m.mean_deviation_km},
                           {"max_deviation_km", m.max_deviation_km},
                           {"pmr_pct", m.pmr_pct},
                           {"terminal_km", m.terminal_distance_km},
                           {"reached", m.reached}});
    return {{"schema", kReportSchema},
            {"variant", variant},
            {"runs", rep.runs.size()},
            {"aborted_runs", rep.aborted_runs},
            {"aggregate",
             {{"cep_km", rep.cep_km},
              {"mean_terminal_lon_deg", rep.mean_terminal_lon},
              {"mean_terminal_lat_deg", rep.mean_terminal_lat},
              {"iterations", detail::summary_json(rep.iterations)},
              {"length_km", detail::summary_json(rep.length_km)},
              {"variability_km2", detail::summary_json(rep.variability_km2)},
              {"terminal_km", detail::summary_json(rep.terminal_km)}}},
            {"per_run", per_run}};
}

/// One comparison CSV row for a variant's ensemble.
inline std::string comparison_row(const EnsembleReport& rep, const std::string& variant) {
    using detail::fmt_fixed;
    std::ostringstream out;
    out << variant << "," << rep.runs.size() << "," << fmt_fixed(rep.cep_km) << ","
        << fmt_fixed(rep.iterations.median) << "," << fmt_fixed(rep.length_km.median)
        << ","
        << fmt_fixed(detail::run_median(
               rep, [](const RunMetrics& m) { return m.step_variability_km2; }))
        << ","
        << fmt_fixed(detail::run_median(
               rep, [](const RunMetrics& m) { return m.mean_deviation_km; }))
        << ","
        << fmt_fixed(detail::run_median(
               rep, [](const RunMetrics& m) { return m.max_deviation_km; }))
        << ","
        << fmt_fixed(
               detail::run_median(rep, [](const RunMetrics& m) { return m.pmr_pct; }))
        << "\n";
    return out.str();
}

inline std::string comparison_csv(const std::vector<std::pair<std::string, EnsembleReport>>& reports) {
    std::ostringstream out;
    out << "# " << kComparisonSchema << "\n" << kComparisonHeader << "\n";
    for (const auto& [variant, rep] : reports) out << comparison_row(rep, variant);
    return out.str();
}

} // namespace geonav
