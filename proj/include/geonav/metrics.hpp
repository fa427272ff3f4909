#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "geonav/errors.hpp"
#include "geonav/geo.hpp"
#include "geonav/navigator.hpp"

namespace geonav {

struct RunMetrics {
    int iterations = 0;
    double trajectory_length_km = 0.0;
    double step_variability_km2 = 0.0;
    double mean_deviation_km = 0.0;
    double max_deviation_km = 0.0;
    double pmr_pct = 0.0;
    double terminal_distance_km = 0.0;
    bool reached = false;
};

struct DistributionSummary {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct EnsembleReport {
    std::vector<RunMetrics> runs;
    double cep_km = 0.0;
    double mean_terminal_lon = 0.0, mean_terminal_lat = 0.0;
    DistributionSummary iterations, length_km, variability_km2, terminal_km;
    int aborted_runs = 0;
};

/// CEP as the RMS over the endpoints inside the median distance:
/// sqrt( (1/N) sum d_i^2 * 1[d_i <= d50] ), d50 = lower median of {d_i}.
inline double cep(const std::vector<GeoPosition>& endpoints, const GeoPosition& dest) {
    if (endpoints.empty()) throw domain_error("cep: empty endpoint list");
    std::vector<double> d;
    d.reserve(endpoints.size());
    for (const GeoPosition& p : endpoints) d.push_back(great_circle_km(p, dest));
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const double d50 = sorted[(sorted.size() - 1) / 2]; // lower median
    double acc = 0.0;
    for (double di : d)
        if (di <= d50) acc += di * di;
    return std::sqrt(acc / d.size());
}

/// Conventional alternative: the median miss distance itself.
inline double cep_median_radius(const std::vector<GeoPosition>& endpoints,
                                const GeoPosition& dest) {
    if (endpoints.empty()) throw domain_error("cep: empty endpoint list");
    std::vector<double> d;
    for (const GeoPosition& p : endpoints) d.push_back(great_circle_km(p, dest));
    std::sort(d.begin(), d.end());
    return d[(d.size() - 1) / 2];
}

namespace detail {

/// Arc-length resample of a path to exactly n points, index-aligned.
inline std::vector<GeoPosition> resample(const Trajectory& path, std::size_t n) {
    std::vector<GeoPosition> pts;
    pts.reserve(path.size());
    for (const TrajectorySample& s : path) pts.push_back(s.position);
    if (pts.size() == 1) return std::vector<GeoPosition>(n, pts[0]);
    std::vector<double> arc(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i)
        arc[i] = arc[i - 1] + great_circle_km(pts[i - 1], pts[i]);
    const double total = arc.back();
    std::vector<GeoPosition> out;
    out.reserve(n);
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double target = total * (n == 1 ? 0.0 : double(i) / (n - 1));
        while (j + 1 < arc.size() && arc[j + 1] < target) ++j;
        if (j + 1 >= pts.size()) {
            out.push_back(pts.back());
            continue;
        }
        const double seg = arc[j + 1] - arc[j];
        const double t = seg > 0.0 ? (target - arc[j]) / seg : 0.0;
        GeoPosition p;
        p.lat = pts[j].lat + t * (pts[j + 1].lat - pts[j].lat);
        p.lon = pts[j].lon + t * wrap_degrees(pts[j + 1].lon - pts[j].lon);
        out.push_back(p);
    }
    return out;
}

} // namespace detail

/// Mean and max of the per-index great-circle distances between the
/// trajectory and the reference resampled to its point count.
inline std::pair<double, double> path_deviations(const Trajectory& traj,
                                                 const Trajectory& ref) {
    if (traj.empty() || ref.empty())
        throw domain_error("path_deviations: empty trajectory");
    const std::vector<GeoPosition> r = detail::resample(ref, traj.size());
    double sum = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double d = great_circle_km(traj[i].position, r[i]);
        sum += d;
        mx = std::max(mx, d);
    }
    return {sum / traj.size(), mx};
}

/// Percentage of trajectory points within match_tol of their index-aligned
/// reference point.
inline double pmr(const Trajectory& traj, const Trajectory& ref, double match_tol_km) {
    if (match_tol_km <= 0.0) throw domain_error("pmr: match tolerance must be > 0");
    if (traj.empty() || ref.empty()) throw domain_error("pmr: empty trajectory");
    const std::vector<GeoPosition> r = detail::resample(ref, traj.size());
    std::size_t matched = 0;
    for (std::size_t i = 0; i < traj.size(); ++i)
        if (great_circle_km(traj[i].position, r[i]) <= match_tol_km) ++matched;
    return 100.0 * static_cast<double>(matched) / traj.size();
}

/// Sample variance of step lengths, 1/(n-1) normalization.
inline double variability(const Trajectory& traj) {
    if (traj.size() < 2) throw domain_error("variability: need at least 2 points");
    std::vector<double> steps;
    steps.reserve(traj.size() - 1);
    for (std::size_t i = 1; i < traj.size(); ++i)
        steps.push_back(great_circle_km(traj[i - 1].position, traj[i].position));
    double mean = 0.0;
    for (double s : steps) mean += s;
    mean /= steps.size();
    double acc = 0.0;
    for (double s : steps) acc += (s - mean) * (s - mean);
    return steps.size() > 1 ? acc / (steps.size() - 1) : 0.0;
}

/// Sum of great-circle segment lengths.
inline double trajectory_length(const Trajectory& traj) {
    if (traj.size() < 2) throw domain_error("trajectory_length: need at least 2 points");
    double acc = 0.0;
    for (std::size_t i = 1; i < traj.size(); ++i)
        acc += great_circle_km(traj[i - 1].position, traj[i].position);
    return acc;
}

/// Seed for run `i` of an ensemble under a master seed; exposed so a
/// single exported trajectory can reproduce ensemble run 0 exactly.
inline std::uint64_t ensemble_run_seed(std::uint64_t master_seed, int i) {
    return master_seed * 0x100000001b3ull + static_cast<std::uint64_t>(i);
}

inline RunMetrics run_metrics(const NavigationResult& res, const Scenario& sc,
                              double match_tol_km = 0.3) {
    RunMetrics m;
    m.iterations = res.iterations;
    m.terminal_distance_km = great_circle_km(res.terminal, sc.destination);
    m.reached = res.terminated == Termination::reached;
    if (res.trajectory.size() >= 2) {
        const Trajectory ref = reference_path(sc, static_cast<int>(res.trajectory.size()));
        m.trajectory_length_km = res.length_km;
        m.step_variability_km2 = variability(res.trajectory);
        const auto [mean_dev, max_dev] = path_deviations(res.trajectory, ref);
        m.mean_deviation_km = mean_dev;
        m.max_deviation_km = max_dev;
        m.pmr_pct = pmr(res.trajectory, ref, match_tol_km);
    }
    return m;
}

namespace detail {

inline DistributionSummary summarize(std::vector<double> v) {
    DistributionSummary s;
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    auto q = [&](double p) {
        const double idx = p * (v.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (idx - lo) * (v[hi] - v[lo]);
    };
    s.min = v.front();
    s.q1 = q(0.25);
    s.median = q(0.5);
    s.q3 = q(0.75);
    s.max = v.back();
    return s;
}

inline int worker_count() {
    if (const char* env = std::getenv("GEONAV_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

} // namespace detail

/// Wrap a single completed run as a one-entry ensemble report, so single
/// runs and Monte Carlo ensembles share the same export path.
inline EnsembleReport single_run_report(const NavigationResult& res, const Scenario& sc,
                                        double match_tol_km = 0.3) {
    EnsembleReport rep;
    const RunMetrics m = run_metrics(res, sc, match_tol_km);
    rep.runs.push_back(m);
    rep.cep_km = cep({res.terminal}, sc.destination);
    rep.mean_terminal_lon = res.terminal.lon;
    rep.mean_terminal_lat = res.terminal.lat;
    rep.iterations = detail::summarize({static_cast<double>(m.iterations)});
    rep.length_km = detail::summarize({m.trajectory_length_km});
    rep.variability_km2 = detail::summarize({m.step_variability_km2});
    rep.terminal_km = detail::summarize({m.terminal_distance_km});
    return rep;
}

/// Monte Carlo ensemble: n_runs independent navigations with per-run seeds
/// derived from (master_seed, run index). Aggregation order is by run
/// index, so the report is deterministic regardless of thread count.
inline EnsembleReport monte_carlo(const Scenario& sc, ControllerVariant variant,
                                  int n_runs, std::uint64_t master_seed,
                                  double match_tol_km = 0.3) {
    if (n_runs < 1) throw domain_error("monte_carlo: n_runs must be >= 1");
    std::vector<RunMetrics> metrics(n_runs);
    std::vector<GeoPosition> endpoints(n_runs);
    std::vector<char> ok(n_runs, 0);

    const int workers = std::min(detail::worker_count(), n_runs);
    std::atomic<int> next{0};
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_runs) return;
            Scenario run_sc = sc;
            run_sc.seed = ensemble_run_seed(master_seed, i);
            try {
                const NavigationResult res = run_navigation(run_sc, variant);
                metrics[i] = run_metrics(res, run_sc, match_tol_km);
                endpoints[i] = res.terminal;
                ok[i] = 1;
            } catch (const error&) {
                ok[i] = 0; // aborted run: excluded from aggregates
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    EnsembleReport rep;
    std::vector<GeoPosition> ends;
    std::vector<double> iters, lens, vars, terms;
    for (int i = 0; i < n_runs; ++i) {
        if (!ok[i]) {
            ++rep.aborted_runs;
            continue;
        }
        rep.runs.push_back(metrics[i]);
        ends.push_back(endpoints[i]);
        iters.push_back(metrics[i].iterations);
        lens.push_back(metrics[i].trajectory_length_km);
        vars.push_back(metrics[i].step_variability_km2);
        terms.push_back(metrics[i].terminal_distance_km);
    }
    if (rep.runs.empty()) throw error("monte_carlo: every run aborted");
    rep.cep_km = cep(ends, sc.destination);
    for (const GeoPosition& p : ends) {
        rep.mean_terminal_lon += p.lon;
        rep.mean_terminal_lat += p.lat;
    }
    rep.mean_terminal_lon /= ends.size();
    rep.mean_terminal_lat /= ends.size();
    rep.iterations = detail::summarize(iters);
    rep.length_km = detail::summarize(lens);
    rep.variability_km2 = detail::summarize(vars);
    rep.terminal_km = detail::summarize(terms);
    return rep;
}

} // namespace geonav
