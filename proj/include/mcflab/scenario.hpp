#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcflab/checks.hpp"
#include "mcflab/flow.hpp"
#include "mcflab/forcing.hpp"
#include "mcflab/gaussian.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/lemmas.hpp"
#include "mcflab/report.hpp"
#include "mcflab/table.hpp"

namespace mcflab {

/// Line-oriented key = value configuration ('#' starts a comment).
/// Keys keep insertion order so that serialized configs diff cleanly.
struct ScenarioConfig {
    std::vector<std::pair<std::string, std::string>> kv;

    bool has(const std::string& key) const {
        for (const auto& [k, v] : kv)
            if (k == key) return true;
        return false;
    }
    std::string get(const std::string& key, const std::string& fallback = "") const {
        for (const auto& [k, v] : kv)
            if (k == key) return v;
        return fallback;
    }
    double get_num(const std::string& key, double fallback) const {
        const std::string v = get(key);
        return v.empty() ? fallback : std::strtod(v.c_str(), nullptr);
    }
    long get_int(const std::string& key, long fallback) const {
        const std::string v = get(key);
        return v.empty() ? fallback : std::strtol(v.c_str(), nullptr, 10);
    }
    void set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : kv)
            if (k == key) {
                v = value;
                return;
            }
        kv.emplace_back(key, value);
    }
    void set_num(const std::string& key, double value) { set(key, format_double(value)); }

    std::string to_text() const {
        std::ostringstream os;
        for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
        return os.str();
    }

    static ScenarioConfig parse(std::istream& is) {
        ScenarioConfig c;
        std::string line;
        while (std::getline(is, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (!key.empty()) c.set(key, value);
        }
        return c;
    }
    static ScenarioConfig parse_text(const std::string& text) {
        std::istringstream is(text);
        return parse(is);
    }
    static ScenarioConfig parse_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw std::invalid_argument("cannot open config: " + path);
        return parse(is);
    }
};

/// Measured area-ratio bound sup r^{-n} |Sigma cap B_r(x)| over centers
/// on the surface and a log grid of radii.
inline double measure_area_ratio(const SurfaceState& s, double max_center_norm = 6.0) {
    const int n = s.dim();
    double best = 0.0;
    const std::size_t stride = std::max<std::size_t>(1, s.size() / 48);
    for (std::size_t ci = 0; ci < s.size(); ci += stride) {
        double cx, cy, cz;
        if (s.family == Family::Curve) {
            cx = s.pts[ci].x;
            cy = s.pts[ci].y;
            cz = 0.0;
        } else {
            cx = s.r[ci];
            cy = 0.0;
            cz = s.z_at(ci);
        }
        if (cx * cx + cy * cy + cz * cz > max_center_norm * max_center_norm) continue;
        for (int ri = 0; ri <= 12; ++ri) {
            const double rad = std::pow(10.0, -0.8 + 1.6 * ri / 12.0);
            double area = 0.0;
            for (std::size_t j = 0; j < s.size(); ++j) {
                if (s.family == Family::Curve) {
                    const double d2 = (s.pts[j] - Vec2{cx, cy}).norm2();
                    if (d2 <= rad * rad) area += s.weights[j];
                } else {
                    // worst case over the ring: distance from center to the
                    // closest point of the circle at height z_j
                    const double dr = std::hypot(s.r[j] - cx, 0.0);
                    const double dz = s.z_at(j) - cz;
                    if (dr * dr + dz * dz <= rad * rad) area += s.weights[j];
                }
            }
            best = std::max(best, area / std::pow(rad, n));
        }
    }
    return best;
}

namespace detail {

// He2-orthogonal even mode combo for cylinder perturbations:
// w(z) = cos(q1 z) + a cos(q2 z) with <w, z^2-2>_gauss = 0.
inline double cylinder_mode_coefficient(double q1, double q2) {
    return -(q1 * q1 * std::exp(-q1 * q1)) / (q2 * q2 * std::exp(-q2 * q2));
}

} // namespace detail

/// Initial-state recipe resolved from a config (before radius tuning).
struct InitialStateSpec {
    ShrinkerModel model;
    std::size_t resolution = 128;
    double z_extent = 12.0;
    double eps = 0.0;
    int mode = 2;          // circle: cos(mode * theta)
    double q1 = 1.0, q2 = 1.5, a2 = 0.0;   // cylinder combo
    std::string kind;      // circle | cylinder | dumbbell

    SurfaceState build(double delta0) const {
        if (kind == "dumbbell") {
            SurfaceState s;
            s.family = Family::Profile;
            s.r.resize(resolution);
            s.z0 = -z_extent;
            s.dz = 2.0 * z_extent / static_cast<double>(resolution - 1);
            for (std::size_t i = 0; i < resolution; ++i) {
                const double z = s.z_at(i);
                s.r[i] = 0.7 - 0.45 * std::cos(2.0 * std::numbers::pi * z / z_extent);
            }
            s.update_weights();
            return s;
        }
        if (model.kind == ModelKind::Circle) {
            std::function<double(double)> u = [&](double th) {
                return eps * std::cos(mode * th) + delta0;
            };
            return make_model_surface(model, resolution, &u);
        }
        std::function<double(double)> u = [&](double z) {
            return eps * (std::cos(q1 * z) + a2 * std::cos(q2 * z)) + delta0;
        };
        return make_model_surface(model, resolution, &u, 0.0, z_extent);
    }
};

/// Bisect the radius offset delta0 onto the stable manifold of the
/// discrete rescaled flow: the unique offset for which the weighted
/// mean radius neither grows nor collapses over the time span.
inline double tune_radius_offset(const InitialStateSpec& spec, const ForcingSpec& forcing,
                                 double t0, double t1, double dt,
                                 RescaleConvention conv, int iterations = 60) {
    auto mean_radius = [](const SurfaceState& s) {
        if (s.family == Family::Curve) {
            double m = 0.0;
            for (const Vec2& p : s.pts) m += p.norm();
            return m / static_cast<double>(s.pts.size());
        }
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < s.r.size(); ++i) {
            const double z = s.z_at(i);
            const double w = std::exp(-z * z / 4.0);
            num += s.r[i] * w;
            den += w;
        }
        return num / den;
    };
    auto fate = [&](double d0) -> int {
        SurfaceState s = spec.build(d0);
        s.time_stamp = t0;
        const long nsteps = std::lround((t1 - t0) / dt);
        double dev = 0.0;
        for (long k = 0; k < nsteps; ++k) {
            try {
                s = step_rmcff(s, forcing, s.time_stamp, dt, conv);
            } catch (const flow_singularity&) {
                return -1;
            }
            if (s.family == Family::Curve && spacing_ratio(s) > 1.3)
                redistribute_uniform(s);
            dev = mean_radius(s) - kSqrt2;
            if (std::abs(dev) > 0.4) break;
        }
        return dev >= 0.0 ? +1 : -1;
    };
    double lo = -std::max(0.02, 0.5 * spec.eps);
    double hi = std::max(0.02, 0.5 * spec.eps);
    int flo = fate(lo), fhi = fate(hi);
    for (int grow = 0; grow < 6 && flo == fhi; ++grow) {
        lo *= 2.0;
        hi *= 2.0;
        flo = fate(lo);
        fhi = fate(hi);
    }
    if (flo == fhi)
        throw std::runtime_error("tune_radius_offset: could not bracket the stable manifold");
    if (flo > 0) {
        std::swap(lo, hi);
    }
    for (int it = 0; it < iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (fate(mid) >= 0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace mcflab
