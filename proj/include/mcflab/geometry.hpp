#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcflab {

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
};
inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
};
inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Thrown when a state violates a geometric precondition (degenerate
/// spacing, non-positive radius, ...).
class geometry_error : public std::runtime_error {
public:
    explicit geometry_error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kSqrt2 = 1.4142135623730951;   // unique r > 0 with 1/r = r/2

enum class ModelKind { Circle, Cylinder };

/// Reference critical point of the Gaussian area: round circle (n = 1,
/// plane) or round cylinder S^1 x R (n = 2, axis = e_z), both of
/// radius sqrt(2).  f_value is the exact Gaussian area sqrt(2*pi/e).
struct ShrinkerModel {
    ModelKind kind = ModelKind::Circle;
    double radius = kSqrt2;
    Vec3 axis{0.0, 0.0, 1.0};   // cylinder only
    double f_value = 0.0;

    int dim() const { return kind == ModelKind::Circle ? 1 : 2; }

    static double exact_f_value() {
        return std::sqrt(2.0 * std::numbers::pi / std::numbers::e);
    }
    static ShrinkerModel circle() {
        ShrinkerModel m;
        m.kind = ModelKind::Circle;
        m.f_value = exact_f_value();
        return m;
    }
    static ShrinkerModel cylinder() {
        ShrinkerModel m;
        m.kind = ModelKind::Cylinder;
        m.f_value = exact_f_value();
        return m;
    }
};

enum class Family { Curve, Profile };

/// Discrete hypersurface in one of two families:
///  - Curve: closed planar polygon (counterclockwise), nodes pts[i].
///    An open polyline (closed = false) is allowed only as a quadrature
///    domain (e.g. a sampled straight line); curvature ops reject it.
///  - Profile: surface of revolution about e_z given by radii r[i] > 0
///    on the uniform grid z_i = z0 + i*dz, homogeneous Neumann ends.
/// weights[i] is the per-node surface measure (arclength, resp.
/// 2*pi*r*sqrt(1+r_z^2)*dz with trapezoid ends).
struct SurfaceState {
    Family family = Family::Curve;
    double time_stamp = 0.0;
    bool closed = true;

    std::vector<Vec2> pts;       // curve nodes
    double z0 = 0.0, dz = 0.0;   // profile grid
    std::vector<double> r;       // profile radii

    std::vector<double> weights;

    int dim() const { return family == Family::Curve ? 1 : 2; }
    std::size_t size() const {
        return family == Family::Curve ? pts.size() : r.size();
    }
    double z_at(std::size_t i) const { return z0 + static_cast<double>(i) * dz; }
    double z_max() const { return z_at(r.size() - 1); }

    /// Recompute quadrature weights from current node data.
    void update_weights();

    /// Cheap structural validation; throws geometry_error on violation.
    void validate() const;
};

namespace detail {

// Neumann-reflected index for profile stencils (ghost r[-1] = r[1]).
inline std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    if (i < 0) return static_cast<std::size_t>(-i);
    if (i >= static_cast<std::ptrdiff_t>(n)) return 2 * n - 2 - static_cast<std::size_t>(i);
    return static_cast<std::size_t>(i);
}

} // namespace detail

inline void SurfaceState::update_weights() {
    if (family == Family::Curve) {
        const std::size_t n = pts.size();
        weights.assign(n, 0.0);
        if (closed) {
            for (std::size_t i = 0; i < n; ++i) {
                const Vec2& prev = pts[(i + n - 1) % n];
                const Vec2& next = pts[(i + 1) % n];
                weights[i] = 0.5 * ((pts[i] - prev).norm() + (next - pts[i]).norm());
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                double w = 0.0;
                if (i > 0) w += 0.5 * (pts[i] - pts[i - 1]).norm();
                if (i + 1 < n) w += 0.5 * (pts[i + 1] - pts[i]).norm();
                weights[i] = w;
            }
        }
    } else {
        const std::size_t n = r.size();
        weights.assign(n, 0.0);
        const double two_pi = 2.0 * std::numbers::pi;
        for (std::size_t i = 0; i < n; ++i) {
            const double rz = (r[detail::reflect(static_cast<std::ptrdiff_t>(i) + 1, n)] -
                               r[detail::reflect(static_cast<std::ptrdiff_t>(i) - 1, n)]) /
                              (2.0 * dz);
            double w = two_pi * r[i] * std::sqrt(1.0 + rz * rz) * dz;
            if (i == 0 || i + 1 == n) w *= 0.5;
            weights[i] = w;
        }
    }
}

inline void SurfaceState::validate() const {
    if (family == Family::Curve) {
        if (closed && pts.size() < 16) throw geometry_error("curve: node count < 16");
        const std::size_t n = pts.size();
        double smin = 1e300, smax = 0.0;
        const std::size_t last = closed ? n : n - 1;
        for (std::size_t i = 0; i < last; ++i) {
            const double s = (pts[(i + 1) % n] - pts[i]).norm();
            smin = std::min(smin, s);
            smax = std::max(smax, s);
        }
        if (smin <= 0.0) throw geometry_error("curve: coincident consecutive nodes");
        if (closed && smax / smin > 4.0)
            throw geometry_error("curve: spacing non-uniform beyond factor 4");
    } else {
        if (r.size() < 16) throw geometry_error("profile: node count < 16");
        if (dz <= 0.0) throw geometry_error("profile: non-positive grid spacing");
        for (double ri : r)
            if (!(ri > 0.0)) throw geometry_error("profile: non-positive radius");
    }
    if (weights.size() == size())
        for (double w : weights)
            if (!(w > 0.0)) throw geometry_error("non-positive quadrature weight");
}

/// Total surface measure (sum of quadrature weights).
inline double surface_measure(const SurfaceState& s) {
    double a = 0.0;
    for (double w : s.weights) a += w;
    return a;
}

/// Per-node differential-geometric data.  All scalars are signed with
/// respect to the outward unit normal nu:
///   h       = <H, nu>  (mean curvature, = -kappa for curves; round
///             states have h = -1/r, i.e. H points inward),
///   phi     = h + <x, nu>/2  (shrinker mean curvature; equals
///             r/2 - 1/r on round states, outward-positive),
///   abs_a2  = |A|^2 (sum of squared principal curvatures).
struct CurvatureData {
    std::vector<double> kappa;    // curve: signed curvature; profile: k1 (circular)
    std::vector<double> kappa2;   // profile only: k2 (meridian)
    std::vector<double> h;
    std::vector<double> phi;
    std::vector<double> abs_a2;
    std::vector<double> x_dot_nu;
    std::vector<Vec2> nu;         // curve: outward normal in the plane;
                                  // profile: (radial, axial) meridian components
    std::vector<Vec2> tangent;    // curve: unit tangent; profile: meridian tangent
    std::vector<double> x_dot_t;  // <x, tangent>
};

/// Curvature, frame and shrinker quantity for a state.
/// Curve: nonuniform 3-point stencils on the chord parametrization.
/// Profile: exact surface-of-revolution formulas with centered
/// differences for r_z, r_zz.
inline CurvatureData curvature_data(const SurfaceState& s) {
    CurvatureData cd;
    const std::size_t n = s.size();
    cd.h.resize(n);
    cd.phi.resize(n);
    cd.abs_a2.resize(n);
    cd.x_dot_nu.resize(n);
    cd.nu.resize(n);
    cd.tangent.resize(n);
    cd.x_dot_t.resize(n);
    if (s.family == Family::Curve) {
        if (!s.closed) throw geometry_error("curvature_data: open curve");
        cd.kappa.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& pm = s.pts[(i + n - 1) % n];
            const Vec2& p0 = s.pts[i];
            const Vec2& pp = s.pts[(i + 1) % n];
            const double a = (p0 - pm).norm();
            const double b = (pp - p0).norm();
            if (a <= 0.0 || b <= 0.0) throw geometry_error("curvature_data: degenerate spacing");
            // quadratic-fit first/second derivatives in chord arclength
            const Vec2 d1 = (pm * (-b / (a * (a + b)))) + (p0 * ((b - a) / (a * b))) +
                            (pp * (a / (b * (a + b))));
            const Vec2 d2 = (pm * (2.0 / (a * (a + b)))) + (p0 * (-2.0 / (a * b))) +
                            (pp * (2.0 / (b * (a + b))));
            const double sp = d1.norm();
            const double kappa = d1.cross(d2) / (sp * sp * sp);
            cd.kappa[i] = kappa;
            const Vec2 t{d1.x / sp, d1.y / sp};
            const Vec2 nu{t.y, -t.x};   // outward for counterclockwise orientation
            cd.tangent[i] = t;
            cd.nu[i] = nu;
            cd.h[i] = -kappa;
            cd.abs_a2[i] = kappa * kappa;
            cd.x_dot_nu[i] = p0.dot(nu);
            cd.x_dot_t[i] = p0.dot(t);
            cd.phi[i] = cd.h[i] + 0.5 * cd.x_dot_nu[i];
        }
    } else {
        cd.kappa.resize(n);
        cd.kappa2.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ip = detail::reflect(static_cast<std::ptrdiff_t>(i) + 1, n);
            const auto im = detail::reflect(static_cast<std::ptrdiff_t>(i) - 1, n);
            const double rz = (s.r[ip] - s.r[im]) / (2.0 * s.dz);
            const double rzz = (s.r[ip] - 2.0 * s.r[i] + s.r[im]) / (s.dz * s.dz);
            const double q = std::sqrt(1.0 + rz * rz);
            const double k1 = -1.0 / (s.r[i] * q);          // circular direction
            const double k2 = rzz / (q * q * q);            // meridian direction
            cd.kappa[i] = k1;
            cd.kappa2[i] = k2;
            cd.h[i] = k1 + k2;
            cd.abs_a2[i] = k1 * k1 + k2 * k2;
            const double z = s.z_at(i);
            cd.nu[i] = Vec2{1.0 / q, -rz / q};              // (e_r, e_z) components
            cd.tangent[i] = Vec2{rz / q, 1.0 / q};
            cd.x_dot_nu[i] = (s.r[i] - z * rz) / q;
            cd.x_dot_t[i] = (s.r[i] * rz + z) / q;
            cd.phi[i] = cd.h[i] + 0.5 * cd.x_dot_nu[i];
        }
    }
    return cd;
}

/// phi = H + x^perp/2 per node, as (signed scalar, |phi|) pairs.
struct ShrinkerQuantity {
    std::vector<double> phi;       // signed, outward-positive
    std::vector<double> abs_phi;
};

inline ShrinkerQuantity shrinker_quantity(const SurfaceState& s) {
    CurvatureData cd = curvature_data(s);
    ShrinkerQuantity q;
    q.phi = cd.phi;
    q.abs_phi.resize(cd.phi.size());
    for (std::size_t i = 0; i < cd.phi.size(); ++i) q.abs_phi[i] = std::abs(cd.phi[i]);
    return q;
}

/// Intrinsic drift operators applied to per-node scalar samples:
///   cal_l f = Delta f - (1/2) <x^T, grad f>
///   big_l f = cal_l f + (1/2) f + |A|^2 f
/// (the second is the scalarization of the stability operator on
/// normal fields over a hypersurface).
struct DriftLaplacian {
    std::vector<double> lap;     // plain surface Laplacian
    std::vector<double> cal_l;
    std::vector<double> big_l;
};

inline DriftLaplacian apply_drift_laplacian(const SurfaceState& s,
                                            const std::vector<double>& f) {
    if (f.size() != s.size())
        throw std::invalid_argument("apply_drift_laplacian: field size mismatch");
    const CurvatureData cd = curvature_data(s);
    const std::size_t n = s.size();
    DriftLaplacian out;
    out.lap.resize(n);
    out.cal_l.resize(n);
    out.big_l.resize(n);
    if (s.family == Family::Curve) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t im = (i + n - 1) % n, ip = (i + 1) % n;
            const double a = (s.pts[i] - s.pts[im]).norm();
            const double b = (s.pts[ip] - s.pts[i]).norm();
            const double fs = -b / (a * (a + b)) * f[im] + (b - a) / (a * b) * f[i] +
                              a / (b * (a + b)) * f[ip];
            const double fss = 2.0 / (a * (a + b)) * f[im] - 2.0 / (a * b) * f[i] +
                               2.0 / (b * (a + b)) * f[ip];
            out.lap[i] = fss;
            out.cal_l[i] = fss - 0.5 * cd.x_dot_t[i] * fs;
            out.big_l[i] = out.cal_l[i] + (0.5 + cd.abs_a2[i]) * f[i];
        }
    } else {
        // Delta f = (1/(r q)) d/dz( (r/q) f_z ),  q = sqrt(1+r_z^2);
        // <x^T, grad f> = (r r_z + z) f_z / q^2.
        std::vector<double> rq(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ip = detail::reflect(static_cast<std::ptrdiff_t>(i) + 1, n);
            const auto im = detail::reflect(static_cast<std::ptrdiff_t>(i) - 1, n);
            const double rz = (s.r[ip] - s.r[im]) / (2.0 * s.dz);
            rq[i] = s.r[i] / std::sqrt(1.0 + rz * rz);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto ip = detail::reflect(static_cast<std::ptrdiff_t>(i) + 1, n);
            const auto im = detail::reflect(static_cast<std::ptrdiff_t>(i) - 1, n);
            const double rz = (s.r[ip] - s.r[im]) / (2.0 * s.dz);
            const double q2 = 1.0 + rz * rz;
            const double fz = (f[ip] - f[im]) / (2.0 * s.dz);
            const double flux =
                (0.5 * (rq[ip] + rq[i]) * (f[ip] - f[i]) - 0.5 * (rq[i] + rq[im]) * (f[i] - f[im])) /
                (s.dz * s.dz);
            const double lap = flux / (s.r[i] / std::sqrt(q2)) / q2;
            const double drift = (s.r[i] * rz + s.z_at(i)) * fz / q2;
            out.lap[i] = lap;
            out.cal_l[i] = lap - 0.5 * drift;
            out.big_l[i] = out.cal_l[i] + (0.5 + cd.abs_a2[i]) * f[i];
        }
    }
    return out;
}

/// Model surface (or its normal graph) at the given resolution.
/// perturbation is the normal offset as a function of the model
/// parameter (angle theta for the circle, height z for the cylinder);
/// pass nullptr for the unperturbed model.  Profile grids span
/// [-z_extent, z_extent].
inline SurfaceState make_model_surface(const ShrinkerModel& model, std::size_t resolution,
                                       const std::function<double(double)>* perturbation,
                                       double time_stamp = 0.0, double z_extent = 12.0) {
    if (resolution < 16) throw std::invalid_argument("make_model_surface: resolution < 16");
    SurfaceState s;
    s.time_stamp = time_stamp;
    if (model.kind == ModelKind::Circle) {
        s.family = Family::Curve;
        s.pts.resize(resolution);
        for (std::size_t i = 0; i < resolution; ++i) {
            const double th = 2.0 * std::numbers::pi * static_cast<double>(i) /
                              static_cast<double>(resolution);
            double u = perturbation ? (*perturbation)(th) : 0.0;
            if (std::abs(u) >= 0.5 * model.radius)
                throw std::invalid_argument("make_model_surface: perturbation too large");
            const double rad = model.radius + u;
            s.pts[i] = Vec2{rad * std::cos(th), rad * std::sin(th)};
        }
    } else {
        s.family = Family::Profile;
        s.r.resize(resolution);
        s.z0 = -z_extent;
        s.dz = 2.0 * z_extent / static_cast<double>(resolution - 1);
        for (std::size_t i = 0; i < resolution; ++i) {
            const double z = s.z_at(i);
            double u = perturbation ? (*perturbation)(z) : 0.0;
            if (std::abs(u) >= 0.5 * model.radius)
                throw std::invalid_argument("make_model_surface: perturbation too large");
            s.r[i] = model.radius + u;
        }
    }
    s.update_weights();
    return s;
}

/// Straight line through the origin sampled on [-extent, extent]
/// (open polyline; quadrature only).
inline SurfaceState make_line_segment(std::size_t resolution, double extent = 14.0) {
    SurfaceState s;
    s.family = Family::Curve;
    s.closed = false;
    s.pts.resize(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        const double x = -extent + 2.0 * extent * static_cast<double>(i) /
                                       static_cast<double>(resolution - 1);
        s.pts[i] = Vec2{x, 0.0};
    }
    s.update_weights();
    return s;
}

/// Resample a closed curve at near-uniform arclength (periodic
/// Catmull-Rom through the current nodes).  Keeps stencils
/// well-conditioned along a flow.
inline void redistribute_uniform(SurfaceState& s) {
    if (s.family != Family::Curve || !s.closed) return;
    const std::size_t n = s.pts.size();
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        cum[i + 1] = cum[i] + (s.pts[(i + 1) % n] - s.pts[i]).norm();
    const double total = cum[n];
    std::vector<Vec2> out(n);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double target = total * static_cast<double>(k) / static_cast<double>(n);
        while (seg + 1 < n && cum[seg + 1] < target) ++seg;
        const double len = cum[seg + 1] - cum[seg];
        const double u = len > 0.0 ? (target - cum[seg]) / len : 0.0;
        const Vec2& p0 = s.pts[(seg + n - 1) % n];
        const Vec2& p1 = s.pts[seg];
        const Vec2& p2 = s.pts[(seg + 1) % n];
        const Vec2& p3 = s.pts[(seg + 2) % n];
        // Catmull-Rom basis
        const double u2 = u * u, u3 = u2 * u;
        const double c0 = -0.5 * u3 + u2 - 0.5 * u;
        const double c1 = 1.5 * u3 - 2.5 * u2 + 1.0;
        const double c2 = -1.5 * u3 + 2.0 * u2 + 0.5 * u;
        const double c3 = 0.5 * u3 - 0.5 * u2;
        out[k] = p0 * c0 + p1 * c1 + p2 * c2 + p3 * c3;
    }
    s.pts = std::move(out);
    s.update_weights();
}

/// Max/min consecutive spacing ratio of a closed curve.
inline double spacing_ratio(const SurfaceState& s) {
    if (s.family != Family::Curve) return 1.0;
    const std::size_t n = s.pts.size();
    double smin = 1e300, smax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (s.pts[(i + 1) % n] - s.pts[i]).norm();
        smin = std::min(smin, d);
        smax = std::max(smax, d);
    }
    return smax / smin;
}

} // namespace mcflab
