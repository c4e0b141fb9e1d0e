#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mcflab/geometry.hpp"

namespace mcflab {

using Mat3 = std::array<std::array<double, 3>, 3>;

enum class ForcingKind { Zero, Constant, Radial, Bump };

namespace detail {

// smooth step and its first two derivatives (f(u) = e^{-1/u} blend)
inline void smooth_step_d2(double u, double& s, double& s1, double& s2) {
    if (u <= 0.0) {
        s = s1 = s2 = 0.0;
        return;
    }
    if (u >= 1.0) {
        s = 1.0;
        s1 = s2 = 0.0;
        return;
    }
    const double v = 1.0 - u;
    const double fa = std::exp(-1.0 / u), fb = std::exp(-1.0 / v);
    const double fa1 = fa / (u * u), fb1 = -fb / (v * v);
    const double fa2 = fa * (1.0 / (u * u * u * u) - 2.0 / (u * u * u));
    const double fb2 = fb * (1.0 / (v * v * v * v) - 2.0 / (v * v * v));
    const double d = fa + fb, d1 = fa1 + fb1, d2 = fa2 + fb2;
    s = fa / d;
    s1 = (fa1 * d - fa * d1) / (d * d);
    s2 = (fa2 * d - fa * d2) / (d * d) - 2.0 * d1 * (fa1 * d - fa * d1) / (d * d * d);
}

} // namespace detail

/// Bounded ambient vector field with analytic derivatives up to second
/// order.  Families:
///   Zero
///   Constant:  F(x) = c * dir
///   Radial:    F(x) = c * x / sqrt(|x|^2 + a^2)   (mollified at 0)
///   Bump:      F(x) = c * dir * S(u),  u = (R_out^2 - |x - x0|^2) /
///              (R_out^2 - R_in^2); compactly supported in B_{R_out}(x0)
/// k_bound is the declared C^3 bound, with the convention
/// ||F||_{C^3} = max_{0<=k<=3} sup |D^k F| (entrywise sup), measured by
/// sampling over the working ball at construction and inflated by 5%.
struct ForcingSpec {
    ForcingKind kind = ForcingKind::Zero;
    double magnitude = 0.0;   // c
    Vec3 dir{1.0, 0.0, 0.0};
    double moll = 1.0;        // a, Radial only
    Vec3 center{0.0, 0.0, 0.0};
    double r_in = 1.0, r_out = 2.0;   // Bump only
    double k_bound = 0.0;
    double working_radius = 8.0;

    static ForcingSpec zero() { return {}; }
    static ForcingSpec constant(Vec3 v, double working_radius = 8.0);
    static ForcingSpec radial(double c, double moll, double working_radius = 8.0);
    static ForcingSpec bump(double c, Vec3 dir, Vec3 center, double r_in, double r_out,
                            double working_radius = 8.0);

    Vec3 value(const Vec3& x) const {
        switch (kind) {
            case ForcingKind::Zero: return {0.0, 0.0, 0.0};
            case ForcingKind::Constant: return dir * magnitude;
            case ForcingKind::Radial: {
                const double l = std::sqrt(x.norm2() + moll * moll);
                return x * (magnitude / l);
            }
            case ForcingKind::Bump: {
                const Vec3 d = x - center;
                const double u = (r_out * r_out - d.norm2()) / (r_out * r_out - r_in * r_in);
                double s, s1, s2;
                detail::smooth_step_d2(u, s, s1, s2);
                return dir * (magnitude * s);
            }
        }
        return {0.0, 0.0, 0.0};
    }

    /// J[i][j] = d F_i / d x_j.
    Mat3 jacobian(const Vec3& x) const {
        Mat3 j{};
        switch (kind) {
            case ForcingKind::Zero:
            case ForcingKind::Constant: break;
            case ForcingKind::Radial: {
                const double l = std::sqrt(x.norm2() + moll * moll);
                const double xs[3] = {x.x, x.y, x.z};
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        j[a][b] = magnitude * ((a == b ? 1.0 / l : 0.0) -
                                               xs[a] * xs[b] / (l * l * l));
                break;
            }
            case ForcingKind::Bump: {
                const Vec3 d = x - center;
                const double den = r_out * r_out - r_in * r_in;
                const double u = (r_out * r_out - d.norm2()) / den;
                double s, s1, s2;
                detail::smooth_step_d2(u, s, s1, s2);
                const double ds[3] = {d.x, d.y, d.z};
                const double dv[3] = {dir.x, dir.y, dir.z};
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        j[a][b] = magnitude * dv[a] * s1 * (-2.0 * ds[b] / den);
                break;
            }
        }
        return j;
    }

    /// H[i][j][k] = d^2 F_i / (d x_j d x_k) for component i.
    std::array<Mat3, 3> hessian(const Vec3& x) const {
        std::array<Mat3, 3> h{};
        switch (kind) {
            case ForcingKind::Zero:
            case ForcingKind::Constant: break;
            case ForcingKind::Radial: {
                const double l = std::sqrt(x.norm2() + moll * moll);
                const double l3 = l * l * l, l5 = l3 * l * l;
                const double xs[3] = {x.x, x.y, x.z};
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        for (int c = 0; c < 3; ++c) {
                            double v = 3.0 * xs[a] * xs[b] * xs[c] / l5;
                            if (a == b) v -= xs[c] / l3;
                            if (a == c) v -= xs[b] / l3;
                            if (b == c) v -= xs[a] / l3;
                            h[a][b][c] = magnitude * v;
                        }
                break;
            }
            case ForcingKind::Bump: {
                const Vec3 d = x - center;
                const double den = r_out * r_out - r_in * r_in;
                const double u = (r_out * r_out - d.norm2()) / den;
                double s, s1, s2;
                detail::smooth_step_d2(u, s, s1, s2);
                const double ds[3] = {d.x, d.y, d.z};
                const double dv[3] = {dir.x, dir.y, dir.z};
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        for (int c = 0; c < 3; ++c) {
                            const double ub = -2.0 * ds[b] / den;
                            const double uc = -2.0 * ds[c] / den;
                            const double ubc = (b == c) ? -2.0 / den : 0.0;
                            h[a][b][c] = magnitude * dv[a] * (s2 * ub * uc + s1 * ubc);
                        }
                break;
            }
        }
        return h;
    }

    /// True when the field commutes with rotations about e_z (safe to
    /// drive an axially symmetric profile).
    bool axisymmetric() const {
        switch (kind) {
            case ForcingKind::Zero: return true;
            case ForcingKind::Radial: return true;
            case ForcingKind::Constant:
                return dir.x == 0.0 && dir.y == 0.0;
            case ForcingKind::Bump:
                return false;
        }
        return false;
    }

    /// Max relative disagreement between the analytic derivatives and
    /// centered finite differences of value() over probe points.
    double derivative_self_test(double fd_h = 1e-5) const;

    /// Sampled sup of |F| over the working ball; must not exceed k_bound.
    double sampled_sup() const;
};

namespace detail {

inline double spec_max_abs(const Vec3& v) {
    return std::max({std::abs(v.x), std::abs(v.y), std::abs(v.z)});
}
inline double spec_max_abs(const Mat3& m) {
    double best = 0.0;
    for (const auto& row : m)
        for (double v : row) best = std::max(best, std::abs(v));
    return best;
}

inline double measure_k_bound(const ForcingSpec& f) {
    // grid over a meridian slice is enough for these families
    double best = 0.0;
    const int m = 24;
    const double fd = 1e-4;
    for (int i = -m; i <= m; ++i)
        for (int j = -m; j <= m; ++j) {
            const Vec3 x{f.working_radius * i / m, 0.31 * f.working_radius * j / m,
                         f.working_radius * j / m};
            if (x.norm() > f.working_radius) continue;
            best = std::max(best, spec_max_abs(f.value(x)));
            best = std::max(best, spec_max_abs(f.jacobian(x)));
            const auto h = f.hessian(x);
            for (const auto& comp : h) best = std::max(best, spec_max_abs(comp));
            // third order by finite differences of the hessian
            for (int axis = 0; axis < 3; ++axis) {
                Vec3 dx{axis == 0 ? fd : 0.0, axis == 1 ? fd : 0.0, axis == 2 ? fd : 0.0};
                const auto hp = f.hessian(x + dx);
                const auto hm = f.hessian(x - dx);
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        for (int c = 0; c < 3; ++c)
                            best = std::max(best,
                                            std::abs(hp[a][b][c] - hm[a][b][c]) / (2.0 * fd));
            }
        }
    return best * 1.05;
}

} // namespace detail

inline ForcingSpec ForcingSpec::constant(Vec3 v, double working_radius) {
    ForcingSpec f;
    f.kind = ForcingKind::Constant;
    f.magnitude = v.norm();
    f.dir = f.magnitude > 0.0 ? v * (1.0 / f.magnitude) : Vec3{1.0, 0.0, 0.0};
    f.working_radius = working_radius;
    f.k_bound = detail::measure_k_bound(f);
    return f;
}

inline ForcingSpec ForcingSpec::radial(double c, double moll, double working_radius) {
    if (!(moll > 0.0)) throw std::invalid_argument("ForcingSpec::radial: moll <= 0");
    ForcingSpec f;
    f.kind = ForcingKind::Radial;
    f.magnitude = c;
    f.moll = moll;
    f.working_radius = working_radius;
    f.k_bound = detail::measure_k_bound(f);
    return f;
}

inline ForcingSpec ForcingSpec::bump(double c, Vec3 dir, Vec3 center, double r_in,
                                     double r_out, double working_radius) {
    if (!(r_out > r_in) || !(r_in > 0.0))
        throw std::invalid_argument("ForcingSpec::bump: need 0 < r_in < r_out");
    ForcingSpec f;
    f.kind = ForcingKind::Bump;
    f.magnitude = c;
    const double n = dir.norm();
    f.dir = n > 0.0 ? dir * (1.0 / n) : Vec3{1.0, 0.0, 0.0};
    f.center = center;
    f.r_in = r_in;
    f.r_out = r_out;
    f.working_radius = working_radius;
    f.k_bound = detail::measure_k_bound(f);
    return f;
}

inline double ForcingSpec::derivative_self_test(double fd_h) const {
    double worst = 0.0;
    const Vec3 probes[] = {{0.3, -0.2, 0.5}, {1.1, 0.4, -0.7}, {-2.0, 1.5, 0.9},
                           {0.05, 0.02, -0.01}, {2.5, -2.5, 1.0}};
    for (const Vec3& x : probes) {
        const Mat3 j = jacobian(x);
        const auto h = hessian(x);
        for (int axis = 0; axis < 3; ++axis) {
            Vec3 dx{axis == 0 ? fd_h : 0.0, axis == 1 ? fd_h : 0.0, axis == 2 ? fd_h : 0.0};
            const Vec3 fp = value(x + dx), fm = value(x - dx);
            const double fdj[3] = {(fp.x - fm.x) / (2.0 * fd_h), (fp.y - fm.y) / (2.0 * fd_h),
                                   (fp.z - fm.z) / (2.0 * fd_h)};
            const Mat3 jp = jacobian(x + dx), jm = jacobian(x - dx);
            for (int a = 0; a < 3; ++a) {
                worst = std::max(worst, std::abs(j[a][axis] - fdj[a]));
                for (int b = 0; b < 3; ++b)
                    worst = std::max(worst, std::abs(h[a][b][axis] -
                                                     (jp[a][b] - jm[a][b]) / (2.0 * fd_h)));
            }
        }
    }
    return worst;
}

inline double ForcingSpec::sampled_sup() const {
    double best = 0.0;
    const int m = 32;
    for (int i = -m; i <= m; ++i)
        for (int j = -m; j <= m; ++j) {
            const Vec3 x{working_radius * i / m, 0.0, working_radius * j / m};
            if (x.norm() > working_radius) continue;
            best = std::max(best, detail::spec_max_abs(value(x)));
        }
    return best;
}

} // namespace mcflab
