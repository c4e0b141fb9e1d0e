#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mcflab/geometry.hpp"

namespace mcflab {

/// Normal graph of a state over a shrinker model: per-node offsets U on
/// the model parametrization (theta grid for the circle, z grid for the
/// cylinder) restricted to the ball B_R, with cumulative discrete norms
///   c0 = max|U|, c1 = c0 + max|U'|, c2 = c1 + max|U''|
/// (derivatives in the model's intrinsic arclength) and a Hoelder-proxy
/// seminorm: max |U''_{i+1} - U''_i| / spacing^(1/2).
struct GraphFunction {
    ShrinkerModel base;
    std::vector<double> param;    // theta (circle) or z (cylinder) sample points
    std::vector<double> samples;  // normal offset U at each sample
    double domain_radius = 0.0;   // ball radius R
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    double holder = 0.0;          // second-difference Hoelder quotient, alpha = 1/2
    double c2alpha() const { return c2 + holder; }
};

/// Outcome of a graph extraction; failure carries the first offending
/// node instead of throwing (a multivalued state is expected data).
struct GraphResult {
    bool ok = false;
    std::size_t offending_node = 0;
    std::string message;
    GraphFunction graph;
};

namespace detail {

// Discrete norms from pair/triple stencils fully inside the sampled
// window (periodic wraparound for circle graphs).  Restricting the
// window can only remove stencils, so norms are monotone in the domain.
inline void graph_norms(GraphFunction& g, double spacing) {
    const std::size_t m = g.samples.size();
    double c0 = 0.0, d1 = 0.0, d2 = 0.0, hq = 0.0;
    for (std::size_t i = 0; i < m; ++i) c0 = std::max(c0, std::abs(g.samples[i]));
    const bool periodic = g.base.kind == ModelKind::Circle;
    const std::size_t pairs = periodic ? m : m - 1;
    for (std::size_t i = 0; i < pairs; ++i)
        d1 = std::max(d1, std::abs(g.samples[(i + 1) % m] - g.samples[i]) / spacing);
    std::vector<double> second;
    const std::size_t triples = periodic ? m : (m >= 2 ? m - 2 : 0);
    second.reserve(triples);
    for (std::size_t i = 0; i < triples; ++i) {
        const std::size_t c = periodic ? i : i + 1;
        const double v = (g.samples[(c + 1) % m] - 2.0 * g.samples[c] +
                          g.samples[(c + m - 1) % m]) /
                         (spacing * spacing);
        second.push_back(v);
        d2 = std::max(d2, std::abs(v));
    }
    const std::size_t quads = periodic ? second.size() : (second.empty() ? 0 : second.size() - 1);
    for (std::size_t i = 0; i < quads; ++i)
        hq = std::max(hq, std::abs(second[(i + 1) % second.size()] - second[i]) /
                              std::sqrt(spacing));
    g.c0 = c0;
    g.c1 = c0 + d1;
    g.c2 = g.c1 + d2;
    g.holder = hq;
}

// Radius of the segment (a, b) in ray direction (ct, st); the caller
// guarantees the segment crosses the ray.
inline std::optional<double> segment_radius(const Vec2& a, const Vec2& b, double ct,
                                            double st) {
    // solve a + w (b - a) = rho (ct, st)
    const double det = (b.x - a.x) * st - (b.y - a.y) * ct;
    if (std::abs(det) < 1e-300) return std::nullopt;
    const double w = (a.y * ct - a.x * st) / det;
    const double rho = std::abs(ct) >= std::abs(st) ? (a.x + w * (b.x - a.x)) / ct
                                                    : (a.y + w * (b.y - a.y)) / st;
    if (rho <= 0.0) return std::nullopt;
    return rho;
}

} // namespace detail

/// Extract the normal graph of s over the model restricted to B_R.
/// Circle: requires the node angles to wind monotonically (star-shaped
/// about the origin); offsets are resampled on the model's uniform
/// theta grid at the state's resolution.  Cylinder: offsets are
/// r(z) - radius on the native z grid, restricted to r^2 + z^2 <= R^2.
inline GraphResult graph_over_model(const SurfaceState& s, const ShrinkerModel& model,
                                    double ball_radius) {
    GraphResult res;
    res.graph.base = model;
    res.graph.domain_radius = ball_radius;
    if (model.kind == ModelKind::Circle) {
        if (s.family != Family::Curve || !s.closed) {
            res.message = "graph_over_model: circle model needs a closed curve";
            return res;
        }
        const std::size_t n = s.pts.size();
        // unwrapped node angles; graphextraction needs monotone winding
        std::vector<double> ang(n + 1);
        ang[0] = std::atan2(s.pts[0].y, s.pts[0].x);
        for (std::size_t i = 1; i <= n; ++i) {
            const Vec2& p = s.pts[i % n];
            double dtheta = std::atan2(p.y, p.x) -
                            std::atan2(s.pts[i - 1].y, s.pts[i - 1].x);
            while (dtheta <= -std::numbers::pi) dtheta += 2.0 * std::numbers::pi;
            while (dtheta > std::numbers::pi) dtheta -= 2.0 * std::numbers::pi;
            if (dtheta <= 0.0) {
                res.offending_node = i % n;
                res.message = "graph_over_model: multivalued radial offset";
                return res;
            }
            ang[i] = ang[i - 1] + dtheta;
        }
        res.graph.param.resize(n);
        res.graph.samples.resize(n);
        const double two_pi = 2.0 * std::numbers::pi;
        for (std::size_t i = 0; i < n; ++i) {
            const double th = two_pi * static_cast<double>(i) / static_cast<double>(n);
            double target = ang[0] + std::fmod(th - ang[0], two_pi);
            if (target < ang[0]) target += two_pi;
            const auto it = std::upper_bound(ang.begin(), ang.end(), target);
            const std::size_t seg =
                std::min<std::size_t>(static_cast<std::size_t>(it - ang.begin()) - 1, n - 1);
            auto rho = detail::segment_radius(s.pts[seg], s.pts[(seg + 1) % n],
                                              std::cos(th), std::sin(th));
            if (!rho) {
                res.offending_node = i;
                res.message = "graph_over_model: ray misses the curve";
                return res;
            }
            res.graph.param[i] = th;
            res.graph.samples[i] = *rho - model.radius;
        }
        const double spacing =
            2.0 * std::numbers::pi * model.radius / static_cast<double>(n);
        detail::graph_norms(res.graph, spacing);
        res.ok = true;
        return res;
    }
    if (s.family != Family::Profile) {
        res.message = "graph_over_model: cylinder model needs a profile";
        return res;
    }
    const double z_cap2 = ball_radius * ball_radius - model.radius * model.radius;
    if (z_cap2 <= 0.0) {
        res.message = "graph_over_model: ball does not reach the cylinder";
        return res;
    }
    const double z_cap = std::sqrt(z_cap2);
    for (std::size_t i = 0; i < s.r.size(); ++i) {
        const double z = s.z_at(i);
        if (std::abs(z) > z_cap) continue;
        res.graph.param.push_back(z);
        res.graph.samples.push_back(s.r[i] - model.radius);
    }
    if (res.graph.samples.size() < 3) {
        res.message = "graph_over_model: fewer than 3 samples in ball";
        return res;
    }
    detail::graph_norms(res.graph, s.dz);
    res.ok = true;
    return res;
}

/// Largest R (bisection, one-grid-cell resolution) with
/// c2alpha(graph over model on B_R) <= eps.  Returns R = 0 with
/// ok = false when not graphical even at R = 1.
struct GraphicalScale {
    bool ok = false;
    double radius = 0.0;
    double achieved_norm = std::numeric_limits<double>::infinity();
};

inline GraphicalScale graphical_scale(const SurfaceState& s, const ShrinkerModel& model,
                                      double eps) {
    GraphicalScale out;
    double r_max;
    if (model.kind == ModelKind::Circle) {
        r_max = 0.0;
        for (const Vec2& p : s.pts) r_max = std::max(r_max, p.norm());
        r_max *= 1.5;
    } else {
        r_max = std::hypot(model.radius + 1.0, s.z_max());
    }
    auto norm_at = [&](double rad) -> double {
        GraphResult g = graph_over_model(s, model, rad);
        return g.ok ? g.graph.c2alpha() : std::numeric_limits<double>::infinity();
    };
    if (norm_at(1.5) > eps) return out;   // zero-scale flag
    double lo = 1.5, hi = r_max;
    if (norm_at(hi) <= eps) {
        out.ok = true;
        out.radius = hi;
        out.achieved_norm = norm_at(hi);
        return out;
    }
    const double cell = model.kind == ModelKind::Circle
                            ? 2.0 * std::numbers::pi * model.radius /
                                  static_cast<double>(s.pts.size())
                            : s.dz;
    while (hi - lo > cell) {
        const double mid = 0.5 * (lo + hi);
        if (norm_at(mid) <= eps)
            lo = mid;
        else
            hi = mid;
    }
    out.ok = true;
    out.radius = lo;
    out.achieved_norm = norm_at(lo);
    return out;
}

} // namespace mcflab
