#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcflab/flow.hpp"
#include "mcflab/gaussian.hpp"
#include "mcflab/graphs.hpp"
#include "mcflab/report.hpp"

namespace mcflab {

/// Differential checks tolerate tol = a dt^2 + b dt h^2 (+ floor);
/// (a, b) were calibrated once on the exact round-shrinker suite and
/// frozen here.
inline constexpr double kTolA = 8.0;
inline constexpr double kTolB = 40.0;

inline double scheme_tolerance(double dt, double h) {
    return kTolA * dt * dt + kTolB * dt * h * h + 1e-12;
}

/// Mean node spacing of a state (the h that enters tolerances).
inline double mean_spacing(const SurfaceState& s) {
    if (s.family == Family::Profile) return s.dz;
    double total = 0.0;
    const std::size_t n = s.pts.size();
    for (std::size_t i = 0; i < n; ++i) total += (s.pts[(i + 1) % n] - s.pts[i]).norm();
    return total / static_cast<double>(n);
}

namespace detail {

inline double interp_series(const std::vector<double>& t, const std::vector<double>& v,
                            double at) {
    if (t.empty() || t.size() != v.size())
        throw std::invalid_argument("interp_series: bad series");
    if (at <= t.front()) return v.front();
    if (at >= t.back()) return v.back();
    const auto it = std::upper_bound(t.begin(), t.end(), at);
    const std::size_t j = static_cast<std::size_t>(it - t.begin());
    const double w = (at - t[j - 1]) / (t[j] - t[j - 1]);
    return v[j - 1] + w * (v[j] - v[j - 1]);
}

inline double trapezoid(const std::vector<double>& t, const std::vector<double>& v,
                        double lo, double hi) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        const double a = std::max(t[i], lo), b = std::min(t[i + 1], hi);
        if (b <= a) continue;
        const double h = t[i + 1] - t[i];
        const double fa = v[i] + (v[i + 1] - v[i]) * (a - t[i]) / h;
        const double fb = v[i] + (v[i + 1] - v[i]) * (b - t[i]) / h;
        sum += 0.5 * (fa + fb) * (b - a);
    }
    return sum;
}

/// Minimize K + C over {K, C >= 0 : K a_i + C b_i >= c_i for all i}
/// (two-variable LP by vertex enumeration; a_i, b_i >= 0).
struct TwoConstantFit {
    double k = 0.0, c = 0.0;
};

inline TwoConstantFit fit_two_constants(const std::vector<double>& a,
                                        const std::vector<double>& b,
                                        const std::vector<double>& c) {
    const std::size_t m = a.size();
    auto feasible = [&](double kk, double cc) {
        for (std::size_t i = 0; i < m; ++i)
            if (kk * a[i] + cc * b[i] < c[i] - 1e-13 * std::max(1.0, std::abs(c[i])))
                return false;
        return true;
    };
    TwoConstantFit best;
    double best_obj = std::numeric_limits<double>::infinity();
    auto consider = [&](double kk, double cc) {
        if (kk < 0.0 || cc < 0.0) return;
        if (!feasible(kk, cc)) return;
        if (kk + cc < best_obj) {
            best_obj = kk + cc;
            best = {kk, cc};
        }
    };
    // axis vertices
    double k_only = 0.0, c_only = 0.0;
    bool k_ok = true, c_ok = true;
    for (std::size_t i = 0; i < m; ++i) {
        if (a[i] > 0.0)
            k_only = std::max(k_only, c[i] / a[i]);
        else if (c[i] > 0.0)
            k_ok = false;
        if (b[i] > 0.0)
            c_only = std::max(c_only, c[i] / b[i]);
        else if (c[i] > 0.0)
            c_ok = false;
    }
    if (k_ok) consider(k_only, 0.0);
    if (c_ok) consider(0.0, c_only);
    // pairwise intersections
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const double det = a[i] * b[j] - a[j] * b[i];
            if (std::abs(det) < 1e-300) continue;
            const double kk = (c[i] * b[j] - c[j] * b[i]) / det;
            const double cc = (a[i] * c[j] - a[j] * c[i]) / det;
            consider(kk, cc);
        }
    if (!std::isfinite(best_obj)) best = {k_only, c_only};   // degenerate fallback
    return best;
}

} // namespace detail

/// Almost-monotonicity certificate for the unrescaled flow: with
///   J(s) = e^{(K^2/2)(sigma_bar - s)} F^psi_{y, sigma_bar - s}(M_s)
///          + (2 gamma / K^2) (e^{(K^2/2)(sigma_bar - s)} - 1)
/// (limit F^psi + gamma (sigma_bar - s) when K = 0), J is
/// non-increasing in forward time s; slacks are J(s_k) - J(s_{k+1}).
/// gamma = mu_area r0^{-n-2} c(K_psi, n) with mu_area the measured
/// area bound of the trajectory.
inline CheckReport almost_monotone_J(const FlowTrajectory& traj, const GaussCenter& y,
                                     double sigma_bar, const FunctionalConfig& cfg) {
    if (traj.picture != Picture::Unrescaled)
        throw std::invalid_argument("almost_monotone_J: needs the unrescaled picture");
    if (traj.states.size() < 2)
        throw std::invalid_argument("almost_monotone_J: series shorter than 2 samples");
    if (std::hypot(y.a, y.b) > cfg.r0)
        throw std::invalid_argument("almost_monotone_J: center outside B_{r0}");
    CheckReport rep;
    rep.name = "almost-monotone-J";
    rep.reference = "almost monotonicity of the localized Gaussian density "
                    "under forced flow";
    const int n = traj.states.front().dim();
    double mu_area = 0.0;
    for (const SurfaceState& s : traj.states) mu_area = std::max(mu_area, surface_measure(s));
    const double k = cfg.forcing_k;
    const double gamma = cfg.gamma(mu_area, n);
    rep.add_constant("K", k, "configured");
    rep.add_constant("r0", cfg.r0, "configured");
    rep.add_constant("K_psi", cfg.k_psi, "measured");
    rep.add_constant("mu_area", mu_area, "measured");
    rep.add_constant("c_annulus", cfg.annulus_constant(n), "formula");
    rep.add_constant("gamma", gamma, "formula");

    std::vector<double> js, ts;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const double s = traj.state_times[i];
        if (s >= sigma_bar)
            throw std::invalid_argument("almost_monotone_J: sigma_bar must exceed sample times");
        const double tau = sigma_bar - s;
        const double fpsi = cutoff_functional(traj.states[i], cfg, y, tau, 1);
        double j;
        if (k > 0.0) {
            const double e = std::exp(0.5 * k * k * tau);
            j = e * fpsi + (2.0 * gamma / (k * k)) * (e - 1.0);
        } else {
            j = fpsi + gamma * tau;
        }
        js.push_back(j);
        ts.push_back(s);
    }
    const double h = mean_spacing(traj.states.front());
    const double ds = ts[1] - ts[0];
    rep.tolerance = scheme_tolerance(ds, h);
    for (std::size_t i = 0; i + 1 < js.size(); ++i) {
        rep.slack_times.push_back(ts[i]);
        rep.slacks.push_back(js[i] - js[i + 1]);
    }
    rep.decide();
    return rep;
}

/// d/dt F_tilde <= -(3/4) mu(t) int rho |phi|^2 along the rescaled
/// flow, from the recorded series (centered differences in t).
inline CheckReport check_monotonicity_compact(const FlowTrajectory& traj,
                                              const FunctionalConfig& cfg) {
    CheckReport rep;
    rep.name = "monotonicity-compact";
    rep.reference = "monotonicity of the modified Gaussian area under forced "
                    "rescaled flow";
    if (traj.picture != Picture::Rescaled)
        throw std::invalid_argument("check_monotonicity_compact: needs rescaled picture");
    const auto t = traj.series.column("t");
    const auto ft = traj.series.column("f_tilde_compact");
    const auto mu = traj.series.column("mu_compact");
    const auto p2 = traj.series.column("phi2_full");
    if (t.size() < 3) throw std::invalid_argument("check: series too short");
    const double h = mean_spacing(traj.states.front());
    rep.tolerance = scheme_tolerance(traj.dt, h);
    rep.add_constant("K", cfg.forcing_k, "configured");
    rep.add_constant("mu_rule", cfg.forcing_k * cfg.forcing_k, "formula");
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        const double dft = (ft[i + 1] - ft[i - 1]) / (t[i + 1] - t[i - 1]);
        const double rhs = -0.75 * mu[i] * p2[i];
        rep.slack_times.push_back(t[i]);
        rep.slacks.push_back(rhs - dft);
    }
    rep.decide();
    return rep;
}

/// int_{t1}^{t2} int |phi|^2 rho <= 2 (F_tilde(t1) - F_tilde(t2)),
/// compact (full Gaussian norm, compact modification) or localized
/// (ball-restricted norm, localized modification).
inline CheckReport check_l2_control(const FlowTrajectory& traj, const FunctionalConfig& cfg,
                                    double t1, double t2, bool localized) {
    CheckReport rep;
    rep.name = localized ? "l2-control-localized" : "l2-control-compact";
    rep.reference = "time-integrated squared shrinker quantity controlled by the "
                    "modified-functional drop";
    const auto t = traj.series.column("t");
    if (localized) {
        // the localized modification is meaningful past its onset time
        const double onset = cfg.localized_onset();
        if (onset > t1) {
            t1 = onset;
            rep.notes.push_back("window start clipped to the localized onset t0 = " +
                                format_double(onset));
        }
    }
    if (t1 < t.front() - 1e-9 || t2 > t.back() + 1e-9 || t2 <= t1)
        throw std::invalid_argument("check_l2_control: window not covered");
    const auto p2 = traj.series.column(localized ? "phi2_ball" : "phi2_full");
    const auto ft = traj.series.column(localized ? "f_tilde_loc" : "f_tilde_compact");
    const double lhs = detail::trapezoid(t, p2, t1, t2);
    const double rhs =
        2.0 * (detail::interp_series(t, ft, t1) - detail::interp_series(t, ft, t2));
    const double h = mean_spacing(traj.states.front());
    rep.tolerance = scheme_tolerance(traj.dt, h) * (t2 - t1) / traj.dt;
    rep.add_constant("K", cfg.forcing_k, "configured");
    if (localized) {
        rep.add_constant("K1", cfg.k1(), "formula");
        rep.add_constant("K2", cfg.k2(traj.states.front().dim()), "formula");
        rep.add_constant("K3", cfg.k3(traj.states.front().dim()), "formula");
        rep.add_constant("lambda0", cfg.lambda0, "configured");
        rep.notes.push_back(std::string("K1 exponent variant: ") +
                            (cfg.k1_variant == K1Variant::Derivation ? "derivation"
                                                                     : "paper"));
    }
    rep.slack_times.push_back(t1);
    rep.slacks.push_back(rhs - lhs);
    rep.decide();
    return rep;
}

/// Mean value inequality: fits the smallest C with
///   max_{[t1+beta,t2]} |phi|^2_{L2(B_R)} <=
///     (C + 1/beta) int int_{B_{R+1}} |phi|^2 rho + C e^{-t1} max F.
inline CheckReport check_mean_value(const FlowTrajectory& traj, double t1, double t2,
                                    double beta, double radius) {
    CheckReport rep;
    rep.name = "mean-value";
    rep.reference = "mean value inequality: slice norms controlled by the time "
                    "average plus an exponential area term";
    if (!(beta > 0.0) || t2 - t1 <= beta)
        throw std::invalid_argument("check_mean_value: window shorter than beta");
    const auto ts = traj.series.column("t");
    const auto fs = traj.series.column("f");
    double lhs = 0.0, a_bound = 0.0;
    std::vector<double> win_t, win_v;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const double t = traj.state_times[i];
        if (t < t1 - 1e-12 || t > t2 + 1e-12) continue;
        const SurfaceState& s = traj.states[i];
        const ShrinkerQuantity sq = shrinker_quantity(s);
        const CurvatureData cd = curvature_data(s);
        for (std::size_t j = 0; j < s.size(); ++j)
            a_bound = std::max(a_bound, std::sqrt(cd.abs_a2[j]));
        win_t.push_back(t);
        win_v.push_back(weighted_l2_sq(s, sq.phi, radius + 1.0));
        if (t >= t1 + beta) lhs = std::max(lhs, weighted_l2_sq(s, sq.phi, radius));
    }
    if (win_t.size() < 3) throw std::invalid_argument("check_mean_value: too few states");
    const double integral = detail::trapezoid(win_t, win_v, t1, t2);
    double f_max = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (ts[i] >= t1 && ts[i] <= t2) f_max = std::max(f_max, fs[i]);
    const double denom = integral + std::exp(-t1) * f_max;
    const double c_fit = std::max(0.0, (lhs - integral / beta) / std::max(denom, 1e-300));
    rep.add_constant("M_curvature_bound", a_bound, "measured");
    rep.add_constant("beta", beta, "configured");
    rep.add_constant("R", radius, "configured");
    rep.add_constant("C", c_fit, "fitted");
    rep.tolerance = 0.0;
    rep.slack_times.push_back(t1);
    rep.slacks.push_back((c_fit + 1.0 / beta) * integral + c_fit * std::exp(-t1) * f_max -
                         lhs);
    rep.decide();
    return rep;
}

/// Gaussian-weighted L2 norm of U-samples over the model.
inline double graph_l2_norm(const ShrinkerModel& model, const std::vector<double>& param,
                            const std::vector<double>& u,
                            double ball_radius = std::numeric_limits<double>::infinity()) {
    double sum = 0.0;
    if (model.kind == ModelKind::Circle) {
        const double w = 2.0 * std::numbers::pi * model.radius / static_cast<double>(u.size());
        const double rho = std::pow(4.0 * std::numbers::pi, -0.5) *
                           std::exp(-model.radius * model.radius / 4.0);
        for (std::size_t i = 0; i < u.size(); ++i)
            if (model.radius <= ball_radius) sum += u[i] * u[i] * rho * w;
    } else {
        const double pref = std::pow(4.0 * std::numbers::pi, -1.0);
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double z = param[i];
            const double x2 = model.radius * model.radius + z * z;
            if (x2 > ball_radius * ball_radius) continue;
            const double dzi = i + 1 < param.size() ? param[i + 1] - param[i]
                                                    : param[i] - param[i - 1];
            sum += u[i] * u[i] * pref * std::exp(-x2 / 4.0) * 2.0 * std::numbers::pi *
                   model.radius * dzi;
        }
    }
    return std::sqrt(sum);
}

/// Discrete decay-recurrence monitor near a model shrinker:
///   |F_tilde(T) - F(Gamma)| <= K (F_tilde(T-1) - F_tilde(T+1))^{(1+mu)/2}
///                              + C e^{-(1+mu) T / 4}.
/// For each mu on a grid, fits per-sample tight constants and the
/// smallest (K, C); reports the largest mu whose per-sample constants
/// are stable (spread <= 20%) over the final half, plus a fitted
/// constant for the quadratic closeness bound
///   |F(Sigma) - F(Gamma)| <= C (|phi| |U| + |U|^3).
inline CheckReport check_discrete_loja(const FlowTrajectory& traj, const ShrinkerModel& model,
                                       const FunctionalConfig& cfg,
                                       const std::vector<double>& t_samples,
                                       double graph_eps = 0.5) {
    CheckReport rep;
    rep.name = "discrete-lojasiewicz";
    rep.reference = "discrete decay recurrence for the localized modified functional "
                    "near the model";
    const auto t = traj.series.column("t");
    const auto ft = traj.series.column("f_tilde_loc");
    const auto p2b = traj.series.column("phi2_ball");
    const double f_gamma = model.f_value;
    rep.add_constant("F_Gamma", f_gamma, "formula");
    rep.add_constant("K1", cfg.k1(), "formula");
    rep.add_constant("lambda0", cfg.lambda0, "configured");

    // graphical-scale precondition at each sample: scale >= R_*
    std::vector<double> lhs, drop, expo;
    for (std::size_t si = 0; si < t_samples.size(); ++si) {
        const double tc = t_samples[si];
        if (tc - 1.0 < t.front() - 1e-9 || tc + 1.0 > t.back() + 1e-9)
            throw std::invalid_argument("check_discrete_loja: window [T-1,T+1] not covered");
        const ScaleReadout sc = shrinker_scale_from_series(t, p2b, tc);
        // nearest stored state
        std::size_t best = 0;
        for (std::size_t i = 0; i < traj.state_times.size(); ++i)
            if (std::abs(traj.state_times[i] - tc) <
                std::abs(traj.state_times[best] - tc))
                best = i;
        const GraphicalScale gs = graphical_scale(traj.states[best], model, graph_eps);
        if (!gs.ok || gs.radius < sc.r_star) {
            rep.mark_vacuous(si, "graphical scale below R_* at T=" + format_double(tc));
            return rep;
        }
        lhs.push_back(std::abs(detail::interp_series(t, ft, tc) - f_gamma));
        drop.push_back(std::max(0.0, detail::interp_series(t, ft, tc - 1.0) -
                                         detail::interp_series(t, ft, tc + 1.0)));
        expo.push_back(tc);
    }

    // Stability of the fitted constants: refit on every prefix window
    // ending in the final half of the samples; the fits must agree
    // within 20% (a structurally wrong envelope keeps binding at late T
    // and drifts).
    const std::vector<double> mu_grid = {0.05, 0.10, 0.15, 0.20, 0.25,
                                         0.30, 0.35, 0.40, 0.45};
    double best_mu = -1.0, best_k = 0.0, best_c = 0.0, best_spread = 0.0;
    for (double mu : mu_grid) {
        std::vector<double> a(lhs.size()), b(lhs.size());
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            a[i] = std::pow(drop[i], 0.5 * (1.0 + mu));
            b[i] = std::exp(-0.25 * (1.0 + mu) * expo[i]);
        }
        double fit_min = 1e300, fit_max = 0.0;
        detail::TwoConstantFit full{};
        for (std::size_t end = lhs.size() / 2; end <= lhs.size(); ++end) {
            if (end < 2) continue;
            std::vector<double> ap(a.begin(), a.begin() + end);
            std::vector<double> bp(b.begin(), b.begin() + end);
            std::vector<double> cp(lhs.begin(), lhs.begin() + end);
            const detail::TwoConstantFit fit = detail::fit_two_constants(ap, bp, cp);
            const double obj = fit.k + fit.c;
            fit_min = std::min(fit_min, obj);
            fit_max = std::max(fit_max, obj);
            if (end == lhs.size()) full = fit;
        }
        const double spread = (fit_max - fit_min) / std::max(fit_max, 1e-300);
        if (spread <= 0.20 && mu > best_mu) {
            best_mu = mu;
            best_k = full.k;
            best_c = full.c;
            best_spread = spread;
        }
    }
    if (best_mu < 0.0) {
        rep.tolerance = 0.0;
        rep.slacks.push_back(-1.0);
        rep.slack_times.push_back(t_samples.front());
        rep.notes.push_back("no mu in (0, 1/2) gave fitted constants stable within 20%");
        rep.decide();
        return rep;
    }
    rep.add_constant("mu", best_mu, "fitted");
    rep.add_constant("K", best_k, "fitted");
    rep.add_constant("C", best_c, "fitted");
    rep.add_constant("tail_spread", best_spread, "measured");
    rep.tolerance = 1e-13;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        rep.slack_times.push_back(expo[i]);
        rep.slacks.push_back(best_k * std::pow(drop[i], 0.5 * (1.0 + best_mu)) +
                             best_c * std::exp(-0.25 * (1.0 + best_mu) * expo[i]) - lhs[i]);
    }

    // quadratic closeness bound over graph-sample rows
    if (!traj.graph_samples.rows.empty()) {
        const auto gtimes = traj.graph_samples.column("t");
        const auto fser = traj.series.column("f");
        const auto p2f = traj.series.column("phi2_full");
        double c_quad = 0.0;
        for (std::size_t i = 0; i < gtimes.size(); ++i) {
            std::vector<double> u(traj.graph_samples.columns.size() - 1);
            for (std::size_t k = 0; k + 1 < traj.graph_samples.columns.size(); ++k)
                u[k] = traj.graph_samples.rows[i][k + 1];
            const double un = graph_l2_norm(model, traj.graph_param, u);
            const double phin = std::sqrt(detail::interp_series(t, p2f, gtimes[i]));
            const double df = std::abs(detail::interp_series(t, fser, gtimes[i]) - f_gamma);
            const double denom = phin * un + un * un * un;
            if (denom > 1e-14) c_quad = std::max(c_quad, df / denom);
        }
        rep.add_constant("C_quadratic_bound", c_quad, "fitted");
    }
    rep.decide();
    return rep;
}

/// Decay of graph distances: S(t1) = sup_{t2 >= t1} |U(t2) - U(t1)|_{L2}
/// fitted as C0 t1^{-rho} by log-log regression on the tail; reports
/// rho with a 2-sigma confidence band.
inline CheckReport check_distance_decay(const FlowTrajectory& traj,
                                        const ShrinkerModel& model) {
    CheckReport rep;
    rep.name = "distance-decay";
    rep.reference = "graph distances between time slices decay polynomially";
    if (traj.graph_samples.rows.empty())
        throw std::invalid_argument("check_distance_decay: no graph samples recorded");
    const auto gtimes = traj.graph_samples.column("t");
    const std::size_t m = gtimes.size();
    const std::size_t cols = traj.graph_samples.columns.size() - 1;
    // vacuous beyond mid-trajectory graph loss: detect via series graph_ok
    const auto ok = traj.series.column("graph_ok");
    const auto ts = traj.series.column("t");
    double loss_time = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ok.size(); ++i)
        if (ok[i] == 0.0) {
            loss_time = ts[i];
            break;
        }
    if (loss_time < ts.front() + 1e-12) {
        rep.mark_vacuous(0, "not graphical over the model at the start");
        return rep;
    }

    auto row_u = [&](std::size_t i, std::size_t k) {
        return traj.graph_samples.rows[i][k + 1];
    };
    std::vector<double> s_of_t1;
    std::vector<double> valid_t1;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        if (gtimes[i] >= loss_time) break;
        double sup = 0.0;
        for (std::size_t j = i + 1; j < m && gtimes[j] < loss_time; ++j) {
            std::vector<double> du(cols);
            for (std::size_t k = 0; k < cols; ++k) du[k] = row_u(j, k) - row_u(i, k);
            sup = std::max(sup, graph_l2_norm(model, traj.graph_param, du));
        }
        s_of_t1.push_back(sup);
        valid_t1.push_back(gtimes[i]);
    }
    // tail regression over t1 in the second half, positive times only
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < valid_t1.size(); ++i) {
        if (valid_t1[i] <= 0.5 * valid_t1.back() || valid_t1[i] <= 0.0) continue;
        if (s_of_t1[i] <= 1e-300) continue;
        lx.push_back(std::log(valid_t1[i]));
        ly.push_back(std::log(s_of_t1[i]));
    }
    if (lx.size() < 4) {
        rep.mark_vacuous(0, "too few usable distance samples for the tail fit");
        return rep;
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double nn = static_cast<double>(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / nn;
    double rss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double e = ly[i] - slope * lx[i] - intercept;
        rss += e * e;
    }
    const double var_slope =
        rss / (nn - 2.0) / (sxx - sx * sx / nn + 1e-300);
    const double se = std::sqrt(std::max(var_slope, 0.0));
    const double rho = -slope;
    rep.add_constant("rho", rho, "fitted");
    rep.add_constant("rho_stderr", se, "fitted");
    rep.add_constant("rho_lower_2sigma", rho - 2.0 * se, "fitted");
    rep.add_constant("C0", std::exp(intercept), "fitted");
    rep.tolerance = 0.0;
    rep.slack_times.push_back(valid_t1.front());
    rep.slacks.push_back(rho - 2.0 * se);   // pass iff lower band positive
    rep.decide();
    return rep;
}

/// Extension-step conclusion as an empirical monitor:
///   |phi|^2_{L2(B_{(1+mu) R} cap Sigma_T)} <= C e^{-R_T^2/2}
///                                            + C_g lambda0 e^{-T/2};
/// fits the smallest (C, C_g) across the sampled T.
inline CheckReport check_extension_phi_bound(const FlowTrajectory& traj,
                                             const ShrinkerModel& model,
                                             const FunctionalConfig& cfg,
                                             const std::vector<double>& t_samples,
                                             double radius, double mu = 0.25,
                                             double graph_eps = 0.5) {
    CheckReport rep;
    rep.name = "extension-phi-bound";
    rep.reference = "slice norms of the shrinker quantity on the extended ball "
                    "bounded by shrinker-scale and decay terms";
    const auto t = traj.series.column("t");
    const auto p2b = traj.series.column("phi2_ball");
    std::vector<double> a, b, c;
    for (double tc : t_samples) {
        const ScaleReadout sc = shrinker_scale_from_series(t, p2b, tc);
        std::size_t best = 0;
        for (std::size_t i = 0; i < traj.state_times.size(); ++i)
            if (std::abs(traj.state_times[i] - tc) < std::abs(traj.state_times[best] - tc))
                best = i;
        const GraphicalScale gs = graphical_scale(traj.states[best], model, graph_eps);
        if (!gs.ok || gs.radius < (1.0 + mu) * radius) {
            rep.mark_vacuous(a.size(), "graphical scale below (1+mu) R at T=" +
                                           format_double(tc));
            return rep;
        }
        const ShrinkerQuantity sq = shrinker_quantity(traj.states[best]);
        c.push_back(weighted_l2_sq(traj.states[best], sq.phi, (1.0 + mu) * radius));
        a.push_back(sc.phi_window_integral);   // = e^{-R_T^2/2}
        b.push_back(cfg.lambda0 * std::exp(-0.5 * tc));
    }
    const detail::TwoConstantFit fit = detail::fit_two_constants(a, b, c);
    rep.add_constant("mu", mu, "configured");
    rep.add_constant("R", radius, "configured");
    rep.add_constant("lambda0", cfg.lambda0, "configured");
    rep.add_constant("C", fit.k, "fitted");
    rep.add_constant("C_g", fit.c, "fitted");
    rep.tolerance = 1e-13;
    for (std::size_t i = 0; i < a.size(); ++i) {
        rep.slack_times.push_back(t_samples[i]);
        rep.slacks.push_back(fit.k * a[i] + fit.c * b[i] - c[i]);
    }
    rep.decide();
    return rep;
}

/// Short-time graph persistence, observed: if the graph norm is delta
/// at time t and curvature/forcing data are bounded by C0, the norm at
/// t + 1/C0 stays below 2 delta + c/C0; fits the smallest such c over
/// the trajectory.
inline CheckReport check_graph_persistence(const FlowTrajectory& traj,
                                           const ForcingSpec& forcing) {
    CheckReport rep;
    rep.name = "graph-persistence";
    rep.reference = "short-time persistence of small graph norms under bounded data";
    const auto t = traj.series.column("t");
    const auto norm = traj.series.column("graph_c2alpha");
    const auto ok = traj.series.column("graph_ok");
    double c0 = std::max(forcing.k_bound, 1e-6);
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const CurvatureData cd = curvature_data(traj.states[i]);
        for (std::size_t j = 0; j < cd.abs_a2.size(); ++j)
            c0 = std::max(c0, std::sqrt(cd.abs_a2[j]));
        // |grad A| proxy: first differences of curvature over spacing
        const double h = mean_spacing(traj.states[i]);
        for (std::size_t j = 0; j + 1 < cd.h.size(); ++j)
            c0 = std::max(c0, std::abs(cd.h[j + 1] - cd.h[j]) / h);
    }
    const double horizon = 1.0 / c0;
    double c_fit = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (ok[i] == 0.0) continue;
        const double target = t[i] + horizon;
        if (target > t.back()) break;
        const double later = detail::interp_series(t, norm, target);
        c_fit = std::max(c_fit, (later - 2.0 * norm[i]) * c0);
        ++used;
    }
    if (used == 0) {
        rep.mark_vacuous(0, "horizon 1/C0 exceeds the trajectory span");
        return rep;
    }
    rep.add_constant("C0", c0, "measured");
    rep.add_constant("c", std::max(c_fit, 0.0), "fitted");
    rep.tolerance = 0.0;
    rep.slack_times.push_back(t.front());
    rep.slacks.push_back(1.0);   // observational check: fitted constant always exists
    rep.notes.push_back("samples used: " + std::to_string(used));
    rep.decide();
    return rep;
}

} // namespace mcflab
