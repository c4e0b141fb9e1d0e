#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcflab/forcing.hpp"
#include "mcflab/gaussian.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/graphs.hpp"
#include "mcflab/table.hpp"

namespace mcflab {

enum class Picture { Unrescaled, Rescaled };

/// How the rescaled-side field G relates to the ambient field F.  The
/// chain rule for Sigma_t = e^{t/2} M_s gives G(X) = F(e^{-t/2} X)
/// (Derived); the alternative exponent is kept behind this switch and
/// distinguished by the integrate-then-rescale cross-oracle.
enum class RescaleConvention { Derived, PaperExponent };

inline const char* convention_name(RescaleConvention c) {
    return c == RescaleConvention::Derived ? "derived" : "paper";
}

/// Signal that a flow reached a singularity proxy (profile pinch or
/// curve spacing collapse); run_trajectory converts it into a clean
/// truncation record.
class flow_singularity : public std::runtime_error {
public:
    explicit flow_singularity(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kProfileRMin = 1e-3;          // pinch threshold
inline constexpr double kSpacingCollapseRatio = 10.0; // curve collapse proxy
inline constexpr double kCurveStabilityC = 0.3;       // explicit step: ds <= c h^2
inline constexpr double kProfileStabilityDt = 0.1;    // semi-implicit cap

namespace detail {

inline Vec3 curve_point3(const Vec2& p) { return {p.x, p.y, 0.0}; }

inline double forcing_normal_component(const ForcingSpec& f, const Vec3& x, const Vec3& nu) {
    return f.value(x).dot(nu);
}

// Thomas solve of a tridiagonal system (in-place on copies).
inline std::vector<double> solve_tridiag(std::vector<double> lower, std::vector<double> diag,
                                         std::vector<double> upper, std::vector<double> rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
    return x;
}

// Catmull-Rom interpolation of samples[] at (segment j, fraction w),
// periodic indexing.
inline double catmull_periodic(const std::vector<double>& v, std::size_t j, double w) {
    const std::size_t n = v.size();
    const double p0 = v[(j + n - 1) % n], p1 = v[j], p2 = v[(j + 1) % n],
                 p3 = v[(j + 2) % n];
    const double w2 = w * w, w3 = w2 * w;
    return p0 * (-0.5 * w3 + w2 - 0.5 * w) + p1 * (1.5 * w3 - 2.5 * w2 + 1.0) +
           p2 * (-1.5 * w3 + 2.0 * w2 + 0.5 * w) + p3 * (0.5 * w3 - 0.5 * w2);
}

// Catmull-Rom on a uniform grid with Neumann reflection, value at
// arbitrary zeta.
inline double catmull_grid(const std::vector<double>& v, double z0, double dz, double zeta) {
    const std::size_t n = v.size();
    double u = (zeta - z0) / dz;
    std::ptrdiff_t j = static_cast<std::ptrdiff_t>(std::floor(u));
    double w = u - static_cast<double>(j);
    if (j < 0) {
        j = 0;
        w = 0.0;
    }
    if (j >= static_cast<std::ptrdiff_t>(n) - 1) {
        j = static_cast<std::ptrdiff_t>(n) - 2;
        w = 1.0;
    }
    const double p0 = v[reflect(j - 1, n)], p1 = v[static_cast<std::size_t>(j)],
                 p2 = v[reflect(j + 1, n)], p3 = v[reflect(j + 2, n)];
    const double w2 = w * w, w3 = w2 * w;
    return p0 * (-0.5 * w3 + w2 - 0.5 * w) + p1 * (1.5 * w3 - 2.5 * w2 + 1.0) +
           p2 * (-1.5 * w3 + 2.0 * w2 + 0.5 * w) + p3 * (0.5 * w3 - 0.5 * w2);
}

} // namespace detail

/// Argument scaling for the rescaled-side forcing field.
inline double rescale_argument_factor(RescaleConvention conv, double t) {
    return conv == RescaleConvention::Derived ? std::exp(-0.5 * t) : std::exp(0.5 * t);
}

/// One explicit step of unrescaled forced mean curvature flow
/// dx/ds = H + F^perp.  Curves move by the full normal velocity;
/// profiles advance the graph PDE
///   dr/ds = r_zz/(1+r_z^2) - 1/r + sqrt(1+r_z^2) (F . nu)
/// semi-implicitly (second-derivative term implicit).
inline SurfaceState step_mcff(const SurfaceState& s, const ForcingSpec& forcing, double ds) {
    SurfaceState out = s;
    if (s.family == Family::Curve) {
        const CurvatureData cd = curvature_data(s);
        for (std::size_t i = 0; i < s.pts.size(); ++i) {
            const Vec3 nu3{cd.nu[i].x, cd.nu[i].y, 0.0};
            const double fperp =
                detail::forcing_normal_component(forcing, detail::curve_point3(s.pts[i]), nu3);
            const double v = cd.h[i] + fperp;
            out.pts[i] = s.pts[i] + cd.nu[i] * (ds * v);
        }
        if (spacing_ratio(out) > kSpacingCollapseRatio)
            throw flow_singularity("curve spacing collapse");
    } else {
        if (forcing.kind != ForcingKind::Zero && forcing.magnitude != 0.0 &&
            !forcing.axisymmetric())
            throw std::invalid_argument("step_mcff: profile needs axisymmetric forcing");
        const std::size_t n = s.r.size();
        const double dz2 = s.dz * s.dz;
        std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ip = detail::reflect(static_cast<std::ptrdiff_t>(i) + 1, n);
            const auto im = detail::reflect(static_cast<std::ptrdiff_t>(i) - 1, n);
            const double rz = (s.r[ip] - s.r[im]) / (2.0 * s.dz);
            const double q2 = 1.0 + rz * rz;
            const double alpha = ds / (q2 * dz2);
            diag[i] = 1.0 + 2.0 * alpha;
            if (i == 0)
                upper[i] = -2.0 * alpha;
            else if (i + 1 == n)
                lower[i] = -2.0 * alpha;
            else {
                upper[i] = -alpha;
                lower[i] = -alpha;
            }
            const Vec3 x{s.r[i], 0.0, s.z_at(i)};
            const double q = std::sqrt(q2);
            const Vec3 nu3{1.0 / q, 0.0, -rz / q};
            const double fperp = detail::forcing_normal_component(forcing, x, nu3);
            rhs[i] = s.r[i] + ds * (-1.0 / s.r[i] + q * fperp);
        }
        out.r = detail::solve_tridiag(lower, diag, upper, rhs);
        for (double ri : out.r)
            if (ri < kProfileRMin) throw flow_singularity("profile pinch: r below r_min");
    }
    out.time_stamp = s.time_stamp + ds;
    out.update_weights();
    return out;
}

/// One step of the rescaled flow dx/dt = phi + e^{-t/2} G^perp, with
/// G(X) = F(c X) per the convention.  Curves are explicit; profiles
/// advance
///   dr/dt = r_zz/(1+r_z^2) - 1/r + r/2 - (z/2) r_z
///           + e^{-t/2} sqrt(1+r_z^2) (G . nu)
/// with diffusion and axial drift implicit.  Asserts the per-step
/// forcing contribution is bounded by K e^{-t/2} (C0).
inline SurfaceState step_rmcff(const SurfaceState& s, const ForcingSpec& forcing, double t,
                               double dt, RescaleConvention conv = RescaleConvention::Derived) {
    SurfaceState out = s;
    const double arg_factor = rescale_argument_factor(conv, t);
    const double pre = std::exp(-0.5 * t);
    double g_sup = 0.0;
    if (s.family == Family::Curve) {
        const CurvatureData cd = curvature_data(s);
        for (std::size_t i = 0; i < s.pts.size(); ++i) {
            const Vec3 nu3{cd.nu[i].x, cd.nu[i].y, 0.0};
            const Vec3 xarg = detail::curve_point3(s.pts[i]) * arg_factor;
            const double gperp = detail::forcing_normal_component(forcing, xarg, nu3);
            g_sup = std::max(g_sup, std::abs(gperp));
            const double v = cd.phi[i] + pre * gperp;
            out.pts[i] = s.pts[i] + cd.nu[i] * (dt * v);
        }
        if (spacing_ratio(out) > kSpacingCollapseRatio)
            throw flow_singularity("curve spacing collapse");
    } else {
        if (forcing.kind != ForcingKind::Zero && forcing.magnitude != 0.0 &&
            !forcing.axisymmetric())
            throw std::invalid_argument("step_rmcff: profile needs axisymmetric forcing");
        const std::size_t n = s.r.size();
        const double dz2 = s.dz * s.dz;
        std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ip = detail::reflect(static_cast<std::ptrdiff_t>(i) + 1, n);
            const auto im = detail::reflect(static_cast<std::ptrdiff_t>(i) - 1, n);
            const double rz = (s.r[ip] - s.r[im]) / (2.0 * s.dz);
            const double q2 = 1.0 + rz * rz;
            const double alpha = dt / (q2 * dz2);
            const double adv = dt * s.z_at(i) / (4.0 * s.dz);   // -(z/2) r_z, implicit
            diag[i] = 1.0 + 2.0 * alpha;
            if (i == 0)
                upper[i] = -2.0 * alpha;
            else if (i + 1 == n)
                lower[i] = -2.0 * alpha;
            else {
                upper[i] = -alpha + adv;
                lower[i] = -alpha - adv;
            }
            const double q = std::sqrt(q2);
            const Vec3 xarg = Vec3{s.r[i], 0.0, s.z_at(i)} * arg_factor;
            const Vec3 nu3{1.0 / q, 0.0, -rz / q};
            const double gperp = detail::forcing_normal_component(forcing, xarg, nu3);
            g_sup = std::max(g_sup, std::abs(gperp));
            rhs[i] = s.r[i] + dt * (-1.0 / s.r[i] + 0.5 * s.r[i] + pre * q * gperp);
        }
        out.r = detail::solve_tridiag(lower, diag, upper, rhs);
        for (double ri : out.r)
            if (ri < kProfileRMin) throw flow_singularity("profile pinch: r below r_min");
    }
    if (g_sup > forcing.k_bound * (1.0 + 1e-6) + 1e-300)
        throw std::logic_error("step_rmcff: forcing exceeds its declared bound");
    out.time_stamp = s.time_stamp + dt;
    out.update_weights();
    return out;
}

enum class MapDirection { UnrescaledToRescaled, RescaledToUnrescaled };

/// Map a state between the two pictures: Sigma_t = e^{t/2} M_s,
/// t = -ln(-s).  Requires s < 0 in the s -> t direction.
inline SurfaceState rescale_map(const SurfaceState& s, MapDirection dir) {
    SurfaceState out = s;
    double factor;
    if (dir == MapDirection::UnrescaledToRescaled) {
        if (s.time_stamp >= 0.0)
            throw std::invalid_argument("rescale_map: needs s < 0");
        out.time_stamp = -std::log(-s.time_stamp);
        factor = std::exp(0.5 * out.time_stamp);
    } else {
        out.time_stamp = -std::exp(-s.time_stamp);
        factor = std::exp(-0.5 * s.time_stamp);
    }
    if (s.family == Family::Curve) {
        for (Vec2& p : out.pts) p = p * factor;
    } else {
        for (double& ri : out.r) ri *= factor;
        out.z0 *= factor;
        out.dz *= factor;
    }
    out.update_weights();
    return out;
}

/// Time-indexed flow record: thinned states, per-step scalar series and
/// (optionally) graph samples over the model on a fixed parameter grid.
struct FlowTrajectory {
    Picture picture = Picture::Rescaled;
    double dt = 0.0;
    ForcingSpec forcing;
    RescaleConvention convention = RescaleConvention::Derived;
    std::vector<SurfaceState> states;       // every state_stride-th state (+ last)
    std::vector<double> state_times;
    TimeSeriesTable series;                 // one row per step
    std::vector<double> graph_param;
    TimeSeriesTable graph_samples;          // t + one column per graph node
    bool truncated = false;
    std::string truncation_reason;

    const SurfaceState& final_state() const { return states.back(); }
};

struct TrajectoryOptions {
    Picture picture = Picture::Rescaled;
    double t0 = 0.0, t1 = 1.0, dt = 1e-3;
    RescaleConvention convention = RescaleConvention::Derived;
    bool redistribute = true;
    double redistribute_threshold = 1.3;
    int state_stride = 10;
    int graph_stride = 0;    // 0: auto (~240 rows); negative: off
    bool record_localized = true;
    bool record_graphs = true;
    FunctionalConfig cfg = FunctionalConfig::make(1.0, 0.0, 2.0);
    ShrinkerModel model = ShrinkerModel::circle();
};

/// Validate the time step against the scheme's stability bound.
inline void check_stability_bound(const SurfaceState& initial, Picture picture, double dt) {
    (void)picture;
    if (initial.family == Family::Curve) {
        double hmin = 1e300;
        const std::size_t n = initial.pts.size();
        for (std::size_t i = 0; i < n; ++i)
            hmin = std::min(hmin, (initial.pts[(i + 1) % n] - initial.pts[i]).norm());
        if (dt > kCurveStabilityC * hmin * hmin)
            throw std::invalid_argument("time step above explicit stability bound c*h^2");
    } else {
        if (dt > kProfileStabilityDt)
            throw std::invalid_argument("time step above semi-implicit bound");
    }
}

/// Deterministic trajectory with recorded series.  Stepper errors
/// become a truncation record, never a crash.  Recorded columns:
///   step, t, area, f, mu_compact, f_tilde_compact, f_hat, mu_loc,
///   f_tilde_loc, phi2_full, phi2_ball, phi_max, graph_ok, graph_c0,
///   graph_c1, graph_c2, graph_holder, graph_c2alpha
/// phi2_ball is restricted to B_{3 r0 e^{t/2}} (rescaled picture) or
/// B_{3 r0} (unrescaled).
inline FlowTrajectory run_trajectory(const SurfaceState& initial, const ForcingSpec& forcing,
                                     const TrajectoryOptions& opt) {
    check_stability_bound(initial, opt.picture, opt.dt);
    FlowTrajectory traj;
    traj.picture = opt.picture;
    traj.dt = opt.dt;
    traj.forcing = forcing;
    traj.convention = opt.convention;
    traj.series.columns = {"step", "t", "area", "f", "mu_compact", "f_tilde_compact",
                           "f_hat", "mu_loc", "f_tilde_loc", "phi2_full", "phi2_ball",
                           "phi_max", "graph_ok", "graph_c0", "graph_c1", "graph_c2",
                           "graph_holder", "graph_c2alpha"};
    const long nsteps = std::lround((opt.t1 - opt.t0) / opt.dt);
    if (nsteps < 1) throw std::invalid_argument("run_trajectory: empty time span");
    int graph_stride = opt.graph_stride;
    if (graph_stride == 0)
        graph_stride = std::max(1L, nsteps / 240);

    SurfaceState s = initial;
    s.time_stamp = opt.t0;
    const double graph_ball =
        opt.model.kind == ModelKind::Circle
            ? 1e18
            : std::hypot(opt.model.radius + 1.0,
                         s.family == Family::Profile ? s.z_max() : 0.0);

    bool graph_cols_ready = false;
    auto record = [&](long step) {
        const double t = s.time_stamp;
        const double f = f_functional(s, GaussCenter::origin(), 1.0);
        const CompactModified cm = modified_functional_compact(t, s, opt.cfg);
        double f_hat = f, mu_loc = 1.0, f_tilde_loc = cm.f_tilde;
        if (opt.record_localized) {
            const double scale = opt.picture == Picture::Rescaled ? std::exp(0.5 * t) : 1.0;
            const LocalizedModified lm = [&] {
                LocalizedModified out;
                out.f_hat = cutoff_functional(s, opt.cfg, GaussCenter::origin(), 1.0, 2, scale);
                out.k1 = opt.cfg.k1();
                out.k3 = opt.cfg.k3(s.dim());
                out.mu = std::exp(out.k1 * std::exp(-t));
                out.f_tilde = out.mu * out.f_hat + out.k3 * std::exp(-0.5 * s.dim() * t);
                return out;
            }();
            f_hat = lm.f_hat;
            mu_loc = lm.mu;
            f_tilde_loc = lm.f_tilde;
        }
        const ShrinkerQuantity sq = shrinker_quantity(s);
        const double ball = 3.0 * opt.cfg.r0 *
                            (opt.picture == Picture::Rescaled ? std::exp(0.5 * t) : 1.0);
        const double phi2_full = weighted_l2_sq(s, sq.phi);
        const double phi2_ball = weighted_l2_sq(s, sq.phi, ball);
        double phi_max = 0.0;
        for (double p : sq.abs_phi) phi_max = std::max(phi_max, p);
        double gok = 0.0, gc0 = 0.0, gc1 = 0.0, gc2 = 0.0, gh = 0.0, gca = 0.0;
        if (opt.record_graphs) {
            GraphResult gr = graph_over_model(s, opt.model, graph_ball);
            if (gr.ok) {
                gok = 1.0;
                gc0 = gr.graph.c0;
                gc1 = gr.graph.c1;
                gc2 = gr.graph.c2;
                gh = gr.graph.holder;
                gca = gr.graph.c2alpha();
                if (graph_stride > 0 && step % graph_stride == 0) {
                    if (!graph_cols_ready) {
                        traj.graph_param = gr.graph.param;
                        traj.graph_samples.columns = {"t"};
                        for (std::size_t k = 0; k < gr.graph.samples.size(); ++k)
                            traj.graph_samples.columns.push_back("u" + std::to_string(k));
                        graph_cols_ready = true;
                    }
                    if (gr.graph.samples.size() + 1 == traj.graph_samples.columns.size()) {
                        std::vector<double> row;
                        row.reserve(gr.graph.samples.size() + 1);
                        row.push_back(t);
                        row.insert(row.end(), gr.graph.samples.begin(),
                                   gr.graph.samples.end());
                        traj.graph_samples.rows.push_back(std::move(row));
                    }
                }
            }
        }
        traj.series.rows.push_back({static_cast<double>(step), t, surface_measure(s), f,
                                    cm.mu, cm.f_tilde, f_hat, mu_loc, f_tilde_loc, phi2_full,
                                    phi2_ball, phi_max, gok, gc0, gc1, gc2, gh, gca});
        if (step % opt.state_stride == 0) {
            traj.states.push_back(s);
            traj.state_times.push_back(t);
        }
    };

    long step = 0;
    record(step);
    for (step = 1; step <= nsteps; ++step) {
        try {
            const double t = s.time_stamp;
            s = opt.picture == Picture::Rescaled
                    ? step_rmcff(s, forcing, t, opt.dt, opt.convention)
                    : step_mcff(s, forcing, opt.dt);
            if (opt.redistribute && s.family == Family::Curve &&
                spacing_ratio(s) > opt.redistribute_threshold)
                redistribute_uniform(s);
        } catch (const flow_singularity& sig) {
            traj.truncated = true;
            traj.truncation_reason = sig.what();
            break;
        }
        record(step);
    }
    if (traj.states.empty() || traj.state_times.back() != s.time_stamp) {
        traj.states.push_back(s);
        traj.state_times.push_back(s.time_stamp);
    }
    return traj;
}

/// Map a whole trajectory between pictures: states are mapped, time
/// stamps re-indexed.  Recorded functional series are dropped (they
/// were sampled in the other picture); only states are carried over.
inline FlowTrajectory rescale_map(const FlowTrajectory& traj, MapDirection dir) {
    FlowTrajectory out;
    out.picture = dir == MapDirection::UnrescaledToRescaled ? Picture::Rescaled
                                                            : Picture::Unrescaled;
    out.forcing = traj.forcing;
    out.convention = traj.convention;
    out.truncated = traj.truncated;
    out.truncation_reason = traj.truncation_reason;
    for (const SurfaceState& s : traj.states) {
        out.states.push_back(rescale_map(s, dir));
        out.state_times.push_back(out.states.back().time_stamp);
    }
    return out;
}

/// Residual of the evolution identity for phi along the rescaled flow,
///   (d_t - L) phi = e^{-t/2} L (G . nu),
/// evaluated on three consecutive slices with normal-graph node
/// correspondence over the middle slice.  The time derivative uses the
/// centered difference of phi transported along middle-state normals;
/// the right side is assembled from curvature data and the forcing's
/// analytic derivatives (curves) or from sampled normal components
/// (profiles).
struct EvolutionResidual {
    std::vector<double> residual;
    double l2_rho = 0.0;     // Gaussian-weighted L2 norm
    double max_abs = 0.0;
};

inline EvolutionResidual evolution_residual_phi(const SurfaceState& prev,
                                                const SurfaceState& mid,
                                                const SurfaceState& next,
                                                const ForcingSpec& forcing,
                                                RescaleConvention conv =
                                                    RescaleConvention::Derived) {
    const double dt1 = mid.time_stamp - prev.time_stamp;
    const double dt2 = next.time_stamp - mid.time_stamp;
    if (std::abs(dt1 - dt2) > 1e-12 * std::max(std::abs(dt1), 1.0) || dt1 <= 0.0)
        throw std::invalid_argument("evolution_residual_phi: needs a uniform 3-state window");
    const double dt = dt1;
    const double t = mid.time_stamp;
    const CurvatureData cd = curvature_data(mid);
    const std::size_t n = mid.size();
    const ShrinkerQuantity phi_mid = shrinker_quantity(mid);
    const DriftLaplacian l_phi = apply_drift_laplacian(mid, phi_mid.phi);

    const CurvatureData cd_prev = curvature_data(prev);
    const CurvatureData cd_next = curvature_data(next);

    const double arg_factor = rescale_argument_factor(conv, t);
    const double pre = std::exp(-0.5 * t);

    EvolutionResidual out;
    out.residual.resize(n);

    // phi of a neighbor state evaluated where the middle node's normal
    // line meets it
    auto project_phi_curve = [&](const SurfaceState& nb, const CurvatureData& cdn,
                                 std::size_t i) -> double {
        const Vec2 p = mid.pts[i];
        const Vec2 nu = cd.nu[i];
        const std::size_t m = nb.pts.size();
        double best_u = 1e300;
        std::size_t best_j = 0;
        double best_w = 0.0;
        bool found = false;
        for (std::ptrdiff_t off = -4; off <= 4; ++off) {
            const std::size_t j =
                static_cast<std::size_t>((static_cast<std::ptrdiff_t>(i) + off +
                                          static_cast<std::ptrdiff_t>(m)) %
                                         static_cast<std::ptrdiff_t>(m));
            const Vec2 a = nb.pts[j];
            const Vec2 b = nb.pts[(j + 1) % m];
            const Vec2 e = b - a;
            const double det = -nu.x * e.y + nu.y * e.x;   // solve u*nu - w*e = a - p
            if (std::abs(det) < 1e-300) continue;
            const Vec2 rhsv = a - p;
            const double u = (-rhsv.x * e.y + rhsv.y * e.x) / det;
            const double w = (nu.x * rhsv.y - nu.y * rhsv.x) / det;
            if (w < -1e-9 || w > 1.0 + 1e-9) continue;
            if (std::abs(u) < std::abs(best_u)) {
                best_u = u;
                best_j = j;
                best_w = std::clamp(w, 0.0, 1.0);
                found = true;
            }
        }
        if (!found)
            throw std::invalid_argument(
                "evolution_residual_phi: node correspondence failure");
        return detail::catmull_periodic(cdn.phi, best_j, best_w);
    };
    auto project_phi_profile = [&](const SurfaceState& nb, const CurvatureData& cdn,
                                   std::size_t i) -> double {
        const double z = mid.z_at(i);
        const double r0v = mid.r[i];
        const double nr = cd.nu[i].x, nz = cd.nu[i].y;
        double u = 0.0;
        for (int it = 0; it < 8; ++it) {
            const double zeta = z + u * nz;
            const double rv = detail::catmull_grid(nb.r, nb.z0, nb.dz, zeta);
            const double drv =
                (detail::catmull_grid(nb.r, nb.z0, nb.dz, zeta + 1e-6) -
                 detail::catmull_grid(nb.r, nb.z0, nb.dz, zeta - 1e-6)) / 2e-6;
            const double g = rv - r0v - u * nr;
            const double gp = drv * nz - nr;
            if (std::abs(gp) < 1e-30) break;
            const double du = -g / gp;
            u += du;
            if (std::abs(du) < 1e-14) break;
        }
        return detail::catmull_grid(cdn.phi, nb.z0, nb.dz, z + u * nz);
    };

    // sampled normal component of G on the middle slice
    std::vector<double> g(n, 0.0);
    std::vector<Vec3> gvec(n);
    const bool forced = forcing.kind != ForcingKind::Zero && forcing.magnitude != 0.0;
    for (std::size_t i = 0; i < n && forced; ++i) {
        Vec3 x3, nu3;
        if (mid.family == Family::Curve) {
            x3 = detail::curve_point3(mid.pts[i]);
            nu3 = Vec3{cd.nu[i].x, cd.nu[i].y, 0.0};
        } else {
            x3 = Vec3{mid.r[i], 0.0, mid.z_at(i)};
            const double q = 1.0;
            (void)q;
            nu3 = Vec3{cd.nu[i].x, 0.0, cd.nu[i].y};
        }
        gvec[i] = forcing.value(x3 * arg_factor);
        g[i] = gvec[i].dot(nu3);
    }

    std::vector<double> rhs(n, 0.0);
    if (forced) {
        const DriftLaplacian dlg = apply_drift_laplacian(mid, g);
        if (mid.family == Family::Curve) {
            for (std::size_t i = 0; i < n; ++i) {
                const Vec3 x3 = detail::curve_point3(mid.pts[i]);
                const Vec3 t3{cd.tangent[i].x, cd.tangent[i].y, 0.0};
                const Vec3 nu3{cd.nu[i].x, cd.nu[i].y, 0.0};
                const Mat3 J = forcing.jacobian(x3 * arg_factor);
                // ambient directional derivative of G along the tangent
                Vec3 jt{J[0][0] * t3.x + J[0][1] * t3.y + J[0][2] * t3.z,
                        J[1][0] * t3.x + J[1][1] * t3.y + J[1][2] * t3.z,
                        J[2][0] * t3.x + J[2][1] * t3.y + J[2][2] * t3.z};
                jt = jt * arg_factor;   // chain rule of the argument scaling
                const double dg_nu = jt.dot(nu3);
                const double g_tan = gvec[i].dot(t3);
                rhs[i] = pre * (dlg.lap[i] + cd.abs_a2[i] * g[i] + 0.5 * g[i] -
                                0.5 * cd.x_dot_t[i] * (dg_nu + cd.kappa[i] * g_tan));
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) rhs[i] = pre * dlg.big_l[i];
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const double phi_p = mid.family == Family::Curve
                                 ? project_phi_curve(prev, cd_prev, i)
                                 : project_phi_profile(prev, cd_prev, i);
        const double phi_n = mid.family == Family::Curve
                                 ? project_phi_curve(next, cd_next, i)
                                 : project_phi_profile(next, cd_next, i);
        const double lhs = (phi_n - phi_p) / (2.0 * dt) - l_phi.big_l[i];
        out.residual[i] = lhs - rhs[i];
        out.max_abs = std::max(out.max_abs, std::abs(out.residual[i]));
    }
    out.l2_rho = std::sqrt(weighted_l2_sq(mid, out.residual));
    return out;
}

} // namespace mcflab
