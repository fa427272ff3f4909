#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "geonav/controller.hpp"
#include "geonav/errors.hpp"
#include "geonav/fusion.hpp"
#include "geonav/geo.hpp"
#include "geonav/geofield.hpp"
#include "geonav/gradient.hpp"
#include "geonav/ins.hpp"
#include "geonav/storm.hpp"

namespace geonav {

/// Field source for a mission: analytic dipole or a coefficient model,
/// optionally perturbed by a time-varying anomaly table.
struct FieldSource {
    std::optional<CoefficientSet> coefficients;
    double dipole_g10 = -29404.5; ///< used when no coefficient set is given
    double date = 2022.5;
    std::optional<AnomalyTable> anomaly;
    /// mission duration the anomaly dataset is stretched onto, hours;
    /// <= 0 derives it from the great-circle distance and cruise speed
    double anomaly_mission_duration_h = 0.0;
};

struct Scenario {
    GeoPosition start{152.0, 33.0, 0.0};
    GeoPosition destination{158.0, 28.0, 0.0};
    FieldSource field;
    ControllerConfig controller;
    InsConfig ins;
    FusionConfig fusion = FusionConfig::defaults();
    double epsilon_km = 2.5;        ///< termination radius
    double sigma_deg_per_km = 1e-3; ///< fusion trigger on min |G| entry
    bool sigma_on_singular_value = false; ///< alternative trigger metric
    int max_iterations = 2000;
    double noise_di_deg = 0.01; ///< measurement noise std-dev on D and I
    /// cruise speed: commands set the heading, the vehicle advances at this
    /// speed; <= 0 executes the raw QP velocity instead
    double cruise_speed_kmh = 50.0;
    double probe_leg_km = 1.0;
    double probe_heading1_deg = 0.0;
    double probe_heading2_deg = 270.0;
    bool fusion_resets_ins = false;
    std::uint64_t seed = 0;

    void validate() const {
        if (great_circle_km(start, destination) < 1e-9)
            throw domain_error("scenario: start equals destination");
        if (epsilon_km <= 0.0) throw domain_error("scenario: epsilon must be > 0");
        if (max_iterations < 1) throw domain_error("scenario: max_iterations must be >= 1");
    }
};

struct TrajectorySample {
    int k = 0;
    double time_h = 0.0;
    GeoPosition position;
    double d_deg = 0.0, i_deg = 0.0;
    double vx_kmh = 0.0, vy_kmh = 0.0;
    bool fused = false;
    double corr_lon_deg = 0.0, corr_lat_deg = 0.0;
};

using Trajectory = std::vector<TrajectorySample>;

enum class Termination { reached, max_iterations };

struct NavigationResult {
    Trajectory trajectory;
    Termination terminated = Termination::max_iterations;
    GeoPosition terminal;
    int iterations = 0;
    double length_km = 0.0;
    /// the three stencil D/I measurements, recorded so a run is replayable
    std::vector<DiState> probe_measurements;
};

namespace detail {

inline DiState clean_elements(const FieldSource& src, const GeoPosition& pos) {
    const FieldVector f = src.coefficients
                              ? evaluate_field(*src.coefficients, pos, src.date)
                              : dipole_field(pos, src.dipole_g10);
    const GeoElements e = elements_from_field(f);
    return DiState{e.d, e.i};
}

inline double anomaly_duration_h(const Scenario& sc) {
    if (sc.field.anomaly_mission_duration_h > 0.0)
        return sc.field.anomaly_mission_duration_h;
    const double speed = sc.cruise_speed_kmh > 0.0 ? sc.cruise_speed_kmh : 50.0;
    return great_circle_km(sc.start, sc.destination) / speed;
}

} // namespace detail

/// Noiseless D/I at a position and mission time, anomaly included.
inline DiState sample_field(const Scenario& sc, const GeoPosition& pos,
                            double time_h) {
    FieldVector f = sc.field.coefficients
                        ? evaluate_field(*sc.field.coefficients, pos, sc.field.date)
                        : dipole_field(pos, sc.field.dipole_g10);
    if (sc.field.anomaly) {
        const TimeMapping map = linear_time_mapping(
            sc.field.anomaly->dataset_duration_s(),
            detail::anomaly_duration_h(sc) * 3600.0);
        f = apply_anomaly(f, sc.field.anomaly->at(pos, time_h * 3600.0, map));
    }
    const GeoElements e = elements_from_field(f);
    return DiState{e.d, e.i};
}

/// Great-circle reference path from start to destination, n_points samples
/// at equal arc steps.
inline Trajectory reference_path(const Scenario& sc, int n_points) {
    if (n_points < 2) throw domain_error("reference_path: need at least 2 points");
    const double la1 = sc.start.lat * kDegToRad, lo1 = sc.start.lon * kDegToRad;
    const double la2 = sc.destination.lat * kDegToRad, lo2 = sc.destination.lon * kDegToRad;
    const Eigen::Vector3d a{std::cos(la1) * std::cos(lo1), std::cos(la1) * std::sin(lo1),
                            std::sin(la1)};
    const Eigen::Vector3d b{std::cos(la2) * std::cos(lo2), std::cos(la2) * std::sin(lo2),
                            std::sin(la2)};
    const double omega = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
    Trajectory out;
    out.reserve(n_points);
    for (int i = 0; i < n_points; ++i) {
        const double t = static_cast<double>(i) / (n_points - 1);
        Eigen::Vector3d v;
        if (omega < 1e-12) {
            v = a;
        } else {
            v = (std::sin((1.0 - t) * omega) * a + std::sin(t * omega) * b) /
                std::sin(omega);
        }
        TrajectorySample s;
        s.k = i;
        s.position.lat = std::asin(std::clamp(v(2), -1.0, 1.0)) * kRadToDeg;
        s.position.lon = std::atan2(v(1), v(0)) * kRadToDeg;
        out.push_back(s);
    }
    return out;
}

namespace detail {

struct LoopSources {
    /// Precomputed stencil for replay: gradient samples with their local
    /// coordinates and the position the main loop resumes from.
    struct Stencil {
        DiSample s0, s1, s2;
        GeoPosition resume;
    };

    /// measured (noisy) D/I for step index k at a position
    std::function<DiState(int k, const GeoPosition& pos, double time_h)> measure;
    /// inertial position fix after a step
    std::function<GeoPosition(int k, const GeoPosition& truth, double dt_h,
                              double vx, double vy)> ins_fix;
    DiState s_ref;
    /// probe measurements at the three stencil points
    std::function<DiState(int probe_idx, const GeoPosition& pos)> probe;
    /// invoked with each applied fusion correction (INS reset hook)
    std::function<void(const Eigen::Vector2d& correction, double lat_deg)> on_correction;
    /// when set, replaces the probe legs entirely
    std::optional<Stencil> stencil;
};

inline bool fusion_triggered(const Scenario& sc, const GradientMatrix& g) {
    if (!sc.sigma_on_singular_value) return g.min_abs_entry() < sc.sigma_deg_per_km;
    Eigen::Matrix2d m;
    m << g.g_dx, g.g_dy, g.g_ix, g.g_iy;
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(m);
    return svd.singularValues()(1) < sc.sigma_deg_per_km;
}

/// Algorithm core shared by the simulated run and track replay. Positions
/// are propagated purely from the executed commands; fusion corrections
/// refine the navigation estimate without touching the propagated path, so
/// a replay against a recorded track reproduces the original run exactly.
inline NavigationResult run_loop(const Scenario& sc, ControllerVariant variant,
                                 const LoopSources& src, int step_budget) {
    sc.validate();
    ControllerConfig ccfg = sc.controller;
    ccfg.variant = variant;
    MpcController controller(ccfg);
    const double T = ccfg.period_h;

    // stencil probe legs executed before the main loop (or injected
    // pre-measured samples when replaying a recorded track)
    NavigationResult res;
    GradientMatrix g;
    GeoPosition resume;
    if (src.stencil) {
        g = init_gradient(src.stencil->s0, src.stencil->s1, src.stencil->s2);
        resume = src.stencil->resume;
        res.probe_measurements = {DiState{src.stencil->s0.d, src.stencil->s0.i},
                                  DiState{src.stencil->s1.d, src.stencil->s1.i},
                                  DiState{src.stencil->s2.d, src.stencil->s2.i}};
    } else {
        const double th1 = sc.probe_heading1_deg * kDegToRad;
        const double th2 = sc.probe_heading2_deg * kDegToRad;
        GeoPosition p0 = sc.start;
        GeoPosition p1 = offset_km(p0, sc.probe_leg_km * std::cos(th1),
                                   sc.probe_leg_km * std::sin(th1));
        GeoPosition p2 = offset_km(p1, sc.probe_leg_km * std::cos(th2),
                                   sc.probe_leg_km * std::sin(th2));
        const DiState m0 = src.probe(0, p0);
        const DiState m1 = src.probe(1, p1);
        const DiState m2 = src.probe(2, p2);
        double e01, n01, e12, n12;
        local_delta_km(p0, p1, e01, n01);
        local_delta_km(p1, p2, e12, n12);
        g = init_gradient(DiSample{m0.d, m0.i, 0.0, 0.0},
                          DiSample{m1.d, m1.i, e01, n01},
                          DiSample{m2.d, m2.i, e01 + e12, n01 + n12});
        resume = p2;
        res.probe_measurements = {m0, m1, m2};
    }
    GradientMatrix g_prev = g;

    GeoPosition truth = resume;
    GeoPosition dead_reckoned = resume;
    FusionState fusion_state = FusionState::initial(sc.fusion);

    res.terminated = Termination::max_iterations;
    DiState s_prev{};
    VelocityCommand u_exec_prev{};
    double theta_prev = 0.0;
    bool have_prev = false;
    double time_h = 0.0;

    for (int k = 0; k < step_budget; ++k) {
        if (great_circle_km(truth, sc.destination) <= sc.epsilon_km) {
            res.terminated = Termination::reached;
            break;
        }
        const DiState s = src.measure(k, truth, time_h);
        if (have_prev) {
            // the recursion runs on the same model period as B = G * scale,
            // keeping the update and the prediction model unit-consistent
            const GradientUpdate gu =
                update_gradient(g, s.d - s_prev.d, s.i - s_prev.i, theta_prev,
                                u_exec_prev.vx, u_exec_prev.vy, ccfg.qp_scale());
            g_prev = g;
            g = gu.g;
        }
        const VelocityCommand u = controller.command(s, src.s_ref, g, g_prev);

        // heading control: the command fixes the heading, the vehicle
        // advances at cruise speed; raw velocities when cruise speed <= 0
        VelocityCommand u_exec = u;
        double theta = theta_prev;
        if (std::abs(u.vx) > 1e-12 || std::abs(u.vy) > 1e-12)
            theta = heading_from_velocity(u.vx, u.vy).second;
        if (sc.cruise_speed_kmh > 0.0) {
            u_exec.vx = sc.cruise_speed_kmh * std::cos(theta * kDegToRad);
            u_exec.vy = sc.cruise_speed_kmh * std::sin(theta * kDegToRad);
        }

        TrajectorySample sample;
        sample.k = k;
        sample.time_h = time_h;
        sample.position = truth;
        sample.d_deg = s.d;
        sample.i_deg = s.i;
        sample.vx_kmh = u_exec.vx;
        sample.vy_kmh = u_exec.vy;

        truth = offset_km(truth, u_exec.vx * T, u_exec.vy * T);
        dead_reckoned = offset_km(dead_reckoned, u_exec.vx * T, u_exec.vy * T);
        time_h += T;

        const GeoPosition ins_pos =
            src.ins_fix(k, truth, T, u_exec.vx, u_exec.vy);
        if (fusion_triggered(sc, g)) {
            fusion_state = predict(fusion_state, sc.fusion);
            const Eigen::Vector2d dz = innovation(ins_pos, dead_reckoned);
            const FusionUpdateResult fu = update(fusion_state, sc.fusion, dz);
            fusion_state = fu.state;
            dead_reckoned = apply_correction(dead_reckoned, fu.correction);
            if (src.on_correction) src.on_correction(fu.correction, dead_reckoned.lat);
            sample.fused = true;
            sample.corr_lon_deg = fu.correction(0);
            sample.corr_lat_deg = fu.correction(1);
        }
        s_prev = s;
        u_exec_prev = u_exec;
        theta_prev = theta;
        have_prev = true;

        res.trajectory.push_back(sample);
        ++res.iterations;
    }
    if (res.terminated != Termination::reached &&
        great_circle_km(truth, sc.destination) <= sc.epsilon_km)
        res.terminated = Termination::reached;
    res.terminal = truth;
    res.length_km = 0.0;
    for (std::size_t i = 1; i < res.trajectory.size(); ++i)
        res.length_km += great_circle_km(res.trajectory[i - 1].position,
                                         res.trajectory[i].position);
    if (!res.trajectory.empty())
        res.length_km += great_circle_km(res.trajectory.back().position, truth);
    return res;
}

} // namespace detail

/// Execute the full combined-navigation loop for one scenario and variant.
/// All randomness derives from the scenario seed; identical scenarios give
/// identical results.
inline NavigationResult run_navigation(const Scenario& sc, ControllerVariant variant) {
    sc.validate();
    auto rng = std::make_shared<std::mt19937_64>(sc.seed);
    auto ins_cfg = sc.ins;
    ins_cfg.seed = sc.seed ^ 0x9e3779b97f4a7c15ull; // independent INS stream
    auto ins = std::make_shared<InsSimulator>(ins_cfg);

    detail::LoopSources src;
    src.s_ref = detail::clean_elements(sc.field, sc.destination);
    auto noisy = [&sc, rng](const GeoPosition& pos, double time_h) {
        DiState s = sample_field(sc, pos, time_h);
        if (sc.noise_di_deg > 0.0) {
            std::normal_distribution<double> n(0.0, sc.noise_di_deg);
            s.d += n(*rng);
            s.i += n(*rng);
        }
        return s;
    };
    src.probe = [noisy](int, const GeoPosition& pos) { return noisy(pos, 0.0); };
    src.measure = [noisy](int, const GeoPosition& pos, double time_h) {
        return noisy(pos, time_h);
    };
    src.ins_fix = [ins, &sc](int, const GeoPosition& truth, double dt_h, double vx,
                             double vy) {
        GeoPosition fix = ins->step(truth, dt_h, vx, vy);
        return fix;
    };
    if (sc.fusion_resets_ins)
        src.on_correction = [ins](const Eigen::Vector2d& corr, double lat) {
            ins->absorb_correction(corr(0), corr(1), lat);
        };
    return detail::run_loop(sc, variant, src, sc.max_iterations);
}

} // namespace geonav
