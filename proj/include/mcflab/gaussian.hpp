#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mcflab/geometry.hpp"

namespace mcflab {

namespace detail {

/// e^{-xi} I_0(xi), stable for all xi >= 0.
inline double scaled_bessel_i0(double xi) {
    if (xi < 40.0) return std::exp(-xi) * std::cyl_bessel_i(0.0, xi);
    const double ix = 1.0 / (8.0 * xi);
    const double series = 1.0 + ix * (1.0 + ix * (4.5 + ix * 37.5));
    return series / std::sqrt(2.0 * std::numbers::pi * xi);
}

} // namespace detail

/// Gaussian center for the F-functionals.  Curves use (a, b) as a point
/// of the plane; profiles use a = distance from the axis, b = height
/// (any off-axis center can be rotated into the meridian half-plane).
struct GaussCenter {
    double a = 0.0, b = 0.0;
    static GaussCenter origin() { return {}; }
};

/// F_{y,sigma}(s) = integral over s of (4 pi sigma)^{-n/2}
/// exp(-|x-y|^2 / (4 sigma)), restricted to the centered ball B_R when
/// ball_radius is finite.  The angular integral for profiles is exact
/// (modified Bessel I_0).
inline double f_functional(const SurfaceState& s, const GaussCenter& y, double sigma,
                           double ball_radius = std::numeric_limits<double>::infinity()) {
    if (!(sigma > 0.0)) throw std::invalid_argument("f_functional: sigma <= 0");
    double sum = 0.0;
    if (s.family == Family::Curve) {
        const double pref = 1.0 / std::sqrt(4.0 * std::numbers::pi * sigma);
        for (std::size_t i = 0; i < s.pts.size(); ++i) {
            const Vec2& p = s.pts[i];
            if (p.norm2() > ball_radius * ball_radius) continue;
            const double d2 = (p - Vec2{y.a, y.b}).norm2();
            sum += pref * std::exp(-d2 / (4.0 * sigma)) * s.weights[i];
        }
    } else {
        const double pref = 1.0 / (4.0 * std::numbers::pi * sigma);
        for (std::size_t i = 0; i < s.r.size(); ++i) {
            const double r = s.r[i];
            const double z = s.z_at(i);
            if (r * r + z * z > ball_radius * ball_radius) continue;
            const double dr = r - y.a;
            const double dzc = z - y.b;
            const double xi = r * y.a / (2.0 * sigma);
            sum += pref * std::exp(-(dr * dr + dzc * dzc) / (4.0 * sigma)) *
                   detail::scaled_bessel_i0(xi) * s.weights[i];
        }
    }
    return sum;
}

/// Gaussian-weighted squared L2 norm of per-node samples:
/// sum of v^2 rho_{0,1} over the state, optionally restricted to B_R.
inline double weighted_l2_sq(const SurfaceState& s, const std::vector<double>& v,
                             double ball_radius = std::numeric_limits<double>::infinity()) {
    if (v.size() != s.size()) throw std::invalid_argument("weighted_l2_sq: size mismatch");
    const int n = s.dim();
    const double pref = std::pow(4.0 * std::numbers::pi, -0.5 * n);
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double x2 = s.family == Family::Curve
                              ? s.pts[i].norm2()
                              : s.r[i] * s.r[i] + s.z_at(i) * s.z_at(i);
        if (x2 > ball_radius * ball_radius) continue;
        sum += v[i] * v[i] * pref * std::exp(-x2 / 4.0) * s.weights[i];
    }
    return sum;
}

enum class CutoffKind { Bump, None };
enum class K1Variant { Derivation, Paper };   // r0 exponent -2 vs +2 in K1

namespace detail {

// smooth step on [0,1]: 0 -> 0, 1 -> 1, all derivatives vanish at ends
inline double smooth_step(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double fa = std::exp(-1.0 / u);
    const double fb = std::exp(-1.0 / (1.0 - u));
    return fa / (fa + fb);
}

inline double bump_kpsi_bound() {
    // max over the transition of |S'| + |S''|; r0-independent by scaling
    static const double value = [] {
        const int m = 4000;
        const double h = 1.0 / m;
        double best = 0.0;
        for (int i = 2; i < m - 1; ++i) {
            const double u = i * h;
            const double d1 = (smooth_step(u + h) - smooth_step(u - h)) / (2.0 * h);
            const double d2 =
                (smooth_step(u + h) - 2.0 * smooth_step(u) + smooth_step(u - h)) / (h * h);
            best = std::max(best, std::abs(d1) + std::abs(d2));
        }
        return best * 1.02;
    }();
    return value;
}

} // namespace detail

/// Localisation data: radius r0, forcing bound K, cutoff derivative
/// bound K_psi, area-ratio bound lambda0, and the fixed cutoff profile
/// psi (= 1 on B_{3 r0}, = 0 outside B_{4 r0}).  The annulus constant
/// c(K_psi, n) is the startup maximum of
///   (4 pi)^{-n/2} (1/16 + K_psi / z) z^{-n/2} e^{-1/z}  over z > 0,
/// and doubles as C_n in K2.
struct FunctionalConfig {
    double r0 = 1.0;
    double forcing_k = 0.0;        // K
    double k_psi = 0.0;            // filled at construction for Bump
    double lambda0 = 2.0;
    CutoffKind cutoff = CutoffKind::Bump;
    K1Variant k1_variant = K1Variant::Derivation;
    double c_n_override = 0.0;     // > 0 replaces the startup maximization

    static FunctionalConfig make(double r0, double forcing_k, double lambda0,
                                 CutoffKind cutoff = CutoffKind::Bump,
                                 K1Variant variant = K1Variant::Derivation) {
        if (!(r0 > 0.0) || !(lambda0 > 0.0) || forcing_k < 0.0)
            throw std::invalid_argument("FunctionalConfig: non-positive parameter");
        FunctionalConfig c;
        c.r0 = r0;
        c.forcing_k = forcing_k;
        c.lambda0 = lambda0;
        c.cutoff = cutoff;
        c.k1_variant = variant;
        c.k_psi = cutoff == CutoffKind::Bump ? detail::bump_kpsi_bound() : 0.0;
        return c;
    }

    double psi(double dist) const {
        if (cutoff == CutoffKind::None) return 1.0;
        return detail::smooth_step((4.0 * r0 - dist) / r0);
    }

    /// Annulus constant c(K_psi, n) by grid + ternary maximisation.
    double annulus_constant(int n) const {
        if (c_n_override > 0.0) return c_n_override;
        auto g = [&](double z) {
            return std::pow(4.0 * std::numbers::pi, -0.5 * n) *
                   (1.0 / 16.0 + k_psi / z) * std::pow(z, -0.5 * n) * std::exp(-1.0 / z);
        };
        double best_z = 1.0, best = 0.0;
        for (int i = 0; i <= 800; ++i) {
            const double z = std::pow(10.0, -4.0 + 8.0 * i / 800.0);
            const double v = g(z);
            if (v > best) {
                best = v;
                best_z = z;
            }
        }
        double lo = best_z / 1.3, hi = best_z * 1.3;
        for (int it = 0; it < 200; ++it) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (g(m1) < g(m2))
                lo = m1;
            else
                hi = m2;
        }
        return std::max(best, g(0.5 * (lo + hi)));
    }

    /// gamma = mu_area * r0^{-n-2} * c(K_psi, n)  (annulus error rate).
    double gamma(double mu_area, int n) const {
        return mu_area * std::pow(r0, -n - 2) * annulus_constant(n);
    }

    double k1() const {
        const double rp = k1_variant == K1Variant::Derivation ? std::pow(r0, -2.0)
                                                              : std::pow(r0, 2.0);
        return forcing_k * forcing_k + 2.0 * k_psi * k_psi * rp +
               forcing_k * k_psi / r0;
    }
    double k2(int n) const {
        return 4.0 * k_psi * annulus_constant(n) * lambda0 *
               std::pow(12.0 * std::numbers::pi * r0, 0.5 * n);
    }
    double k3(int n) const { return 4.0 * k2(n) / n; }

    /// First time with mu(t) = exp(K1 e^{-t}) <= 2; the localized
    /// machinery operates past this onset.
    double localized_onset() const {
        const double k1v = k1();
        const double ln2 = std::log(2.0);
        return k1v > ln2 ? std::log(k1v / ln2) : 0.0;
    }
};

/// F^psi_{y,sigma}(s) with weight psi(|x| / cutoff_scale)^power; the
/// rescaled-slice cutoff psi_t(x) = psi(e^{-t/2} x) corresponds to
/// cutoff_scale = e^{t/2}.  Asserts the sandwich
///   F(s cap B_{3 r0 c}) <= F^psi <= F(s cap B_{4 r0 c})
/// on every call (exact node-wise for the quadrature).
inline double cutoff_functional(const SurfaceState& s, const FunctionalConfig& cfg,
                                const GaussCenter& y, double sigma, int power,
                                double cutoff_scale = 1.0) {
    if (power != 1 && power != 2)
        throw std::invalid_argument("cutoff_functional: power must be 1 or 2");
    if (!(sigma > 0.0)) throw std::invalid_argument("cutoff_functional: sigma <= 0");
    double sum = 0.0;
    if (s.family == Family::Curve) {
        const double pref = 1.0 / std::sqrt(4.0 * std::numbers::pi * sigma);
        for (std::size_t i = 0; i < s.pts.size(); ++i) {
            const Vec2& p = s.pts[i];
            double w = cfg.psi(p.norm() / cutoff_scale);
            if (power == 2) w *= w;
            if (w == 0.0) continue;
            const double d2 = (p - Vec2{y.a, y.b}).norm2();
            sum += w * pref * std::exp(-d2 / (4.0 * sigma)) * s.weights[i];
        }
    } else {
        const double pref = 1.0 / (4.0 * std::numbers::pi * sigma);
        for (std::size_t i = 0; i < s.r.size(); ++i) {
            const double r = s.r[i];
            const double z = s.z_at(i);
            double w = cfg.psi(std::sqrt(r * r + z * z) / cutoff_scale);
            if (power == 2) w *= w;
            if (w == 0.0) continue;
            const double dr = r - y.a;
            const double dzc = z - y.b;
            const double xi = r * y.a / (2.0 * sigma);
            sum += w * pref * std::exp(-(dr * dr + dzc * dzc) / (4.0 * sigma)) *
                   detail::scaled_bessel_i0(xi) * s.weights[i];
        }
    }
    if (cfg.cutoff == CutoffKind::Bump) {
        const double inner = f_functional(s, y, sigma, 3.0 * cfg.r0 * cutoff_scale);
        const double outer = f_functional(s, y, sigma, 4.0 * cfg.r0 * cutoff_scale);
        const double slack = 1e-12 * (1.0 + outer);
        if (sum < inner - slack || sum > outer + slack)
            throw std::logic_error("cutoff_functional: sandwich property violated");
    }
    return sum;
}

/// mu(t) F(Sigma_t) with mu(t) = exp(K^2 e^{-t}).
struct CompactModified {
    double f = 0.0;
    double mu = 1.0;
    double f_tilde = 0.0;
};

inline CompactModified modified_functional_compact(double t, const SurfaceState& s,
                                                   const FunctionalConfig& cfg) {
    CompactModified out;
    out.f = f_functional(s, GaussCenter::origin(), 1.0);
    out.mu = std::exp(cfg.forcing_k * cfg.forcing_k * std::exp(-t));
    out.f_tilde = out.mu * out.f;
    return out;
}

/// Localized modified functional
///   F_tilde(t) = mu(t) F_hat(t) + K3 e^{-n t / 2},
/// F_hat(t) = int psi_t^2 rho, mu(t) = exp(K1 e^{-t}).  All constants
/// are reported so downstream checks can log their provenance.
struct LocalizedModified {
    double f_hat = 0.0;
    double mu = 1.0;
    double f_tilde = 0.0;
    double k1 = 0.0, k2 = 0.0, k3 = 0.0;
    double c_n = 0.0;
    K1Variant k1_variant = K1Variant::Derivation;
};

inline LocalizedModified modified_functional_localized(double t, const SurfaceState& s,
                                                       const FunctionalConfig& cfg) {
    LocalizedModified out;
    const int n = s.dim();
    out.f_hat = cutoff_functional(s, cfg, GaussCenter::origin(), 1.0, 2, std::exp(0.5 * t));
    out.k1 = cfg.k1();
    out.k2 = cfg.k2(n);
    out.k3 = cfg.k3(n);
    out.c_n = cfg.annulus_constant(n);
    out.k1_variant = cfg.k1_variant;
    out.mu = std::exp(out.k1 * std::exp(-t));
    out.f_tilde = out.mu * out.f_hat + out.k3 * std::exp(-0.5 * n * t);
    return out;
}

/// Entropy lower bound: lambda(s) = sup_{y,sigma} F_{y,sigma}(s),
/// estimated by a coarse grid (centers in the inflated bounding box,
/// sigma log-spaced in [1e-2, 1e2]) followed by derivative-free compass
/// refinement.  Any sampled value is a valid lower bound.
struct EntropyEstimate {
    double lambda = 0.0;
    GaussCenter y;
    double sigma = 1.0;
    bool refined = false;
    long evaluations = 0;
};

inline EntropyEstimate entropy_estimate(const SurfaceState& s, int grid_points = 7,
                                        int refine_iters = 80) {
    EntropyEstimate best;
    long evals = 0;
    auto consider = [&](double a, double b, double sig) {
        if (s.family == Family::Profile && a < 0.0) a = -a;
        const double v = f_functional(s, GaussCenter{a, b}, sig);
        ++evals;
        if (v > best.lambda) {
            best.lambda = v;
            best.y = GaussCenter{a, b};
            best.sigma = sig;
        }
    };
    double amin, amax, bmin, bmax;
    if (s.family == Family::Curve) {
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (const Vec2& p : s.pts) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        const double diam = std::hypot(xmax - xmin, ymax - ymin);
        amin = xmin - diam;
        amax = xmax + diam;
        bmin = ymin - diam;
        bmax = ymax + diam;
    } else {
        double rmax = 0.0;
        for (double ri : s.r) rmax = std::max(rmax, ri);
        const double diam = std::hypot(2.0 * rmax, s.z_max() - s.z0);
        amin = 0.0;
        amax = rmax + 0.5 * diam;
        bmin = s.z0 - 0.25 * diam;
        bmax = s.z_max() + 0.25 * diam;
    }
    const int nsig = 25;
    for (int ia = 0; ia < grid_points; ++ia)
        for (int ib = 0; ib < grid_points; ++ib)
            for (int is = 0; is < nsig; ++is) {
                const double a = amin + (amax - amin) * ia / (grid_points - 1.0);
                const double b = bmin + (bmax - bmin) * ib / (grid_points - 1.0);
                const double sig = std::pow(10.0, -2.0 + 4.0 * is / (nsig - 1.0));
                consider(a, b, sig);
            }
    // compass refinement in (y, log sigma)
    double step_y = (amax - amin) / (2.0 * (grid_points - 1.0));
    double step_l = 4.0 / (nsig - 1.0);
    for (int it = 0; it < refine_iters; ++it) {
        const EntropyEstimate cur = best;
        const double l0 = std::log10(cur.sigma);
        consider(cur.y.a + step_y, cur.y.b, cur.sigma);
        consider(cur.y.a - step_y, cur.y.b, cur.sigma);
        consider(cur.y.a, cur.y.b + step_y, cur.sigma);
        consider(cur.y.a, cur.y.b - step_y, cur.sigma);
        consider(cur.y.a, cur.y.b, std::pow(10.0, l0 + step_l));
        consider(cur.y.a, cur.y.b, std::pow(10.0, l0 - step_l));
        if (best.lambda <= cur.lambda * (1.0 + 1e-14)) {
            step_y *= 0.5;
            step_l *= 0.5;
        }
        if (step_y < 1e-7 && step_l < 1e-7) {
            best.refined = true;
            break;
        }
    }
    best.evaluations = evals;
    return best;
}

/// Shrinker, localisation and combined scales near rescaled time T:
///   e^{-R_T^2/2}    = int_{T-1}^{T+1} |phi|^2 rho over Sigma_t cap B_{3 e^{t/2} r0}
///   e^{-R_*^2/2}    = e^{-R_T^2/2} + e^{-T/2}
///   R^loc_T         = 2 sqrt(T+1)
/// R_T is reported as undefined (flag) when the window integral >= 1.
struct ScaleReadout {
    double t = 0.0;
    double phi_window_integral = 0.0;
    bool r_t_defined = false;
    double r_t = std::numeric_limits<double>::infinity();
    double r_star = 0.0;
    double r_loc = 0.0;
};

/// Low-level scale computation from a sampled series of
/// int |phi|^2 rho over the localized ball, on the uniform time grid
/// `times` covering [T-1, T+1].  Trapezoid rule in t.
inline ScaleReadout shrinker_scale_from_series(const std::vector<double>& times,
                                               const std::vector<double>& phi2_ball,
                                               double t_cap) {
    if (times.size() != phi2_ball.size() || times.size() < 2)
        throw std::invalid_argument("shrinker_scale: bad series");
    const double lo = t_cap - 1.0, hi = t_cap + 1.0;
    if (times.front() > lo + 1e-9 || times.back() < hi - 1e-9)
        throw std::invalid_argument("shrinker_scale: insufficient time coverage");
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double a = std::max(times[i], lo);
        const double b = std::min(times[i + 1], hi);
        if (b <= a) continue;
        // linear interpolation of the integrand onto the clipped window
        const double h = times[i + 1] - times[i];
        const double fa =
            phi2_ball[i] + (phi2_ball[i + 1] - phi2_ball[i]) * (a - times[i]) / h;
        const double fb =
            phi2_ball[i] + (phi2_ball[i + 1] - phi2_ball[i]) * (b - times[i]) / h;
        integral += 0.5 * (fa + fb) * (b - a);
    }
    ScaleReadout out;
    out.t = t_cap;
    out.phi_window_integral = integral;
    if (integral > 0.0 && integral < 1.0) {
        out.r_t_defined = true;
        out.r_t = std::sqrt(-2.0 * std::log(integral));
    } else if (integral == 0.0) {
        out.r_t_defined = false;   // R_T = +inf flag
        out.r_t = std::numeric_limits<double>::infinity();
    } else {
        out.r_t_defined = false;   // undefined-negative flag
        out.r_t = -1.0;
    }
    const double star_rhs = integral + std::exp(-0.5 * t_cap);
    out.r_star = star_rhs < 1.0 ? std::sqrt(-2.0 * std::log(star_rhs)) : 0.0;
    out.r_loc = 2.0 * std::sqrt(t_cap + 1.0);
    return out;
}

} // namespace mcflab
