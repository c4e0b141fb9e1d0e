#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <numbers>

#include "mcflab/gaussian.hpp"
#include "mcflab/geometry.hpp"

using namespace mcflab;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

SurfaceState scaled_circle(double radius, std::size_t n) {
    auto s = make_model_surface(ShrinkerModel::circle(), n, nullptr);
    for (auto& p : s.pts) p = p * (radius / kSqrt2);
    s.update_weights();
    return s;
}

// closed-form Gaussian area of a round circle of radius r centered at 0
double circle_f_exact(double r, double sigma = 1.0) {
    return r * std::sqrt(kPi / sigma) * std::exp(-r * r / (4.0 * sigma));
}

// brute-force (theta, z) quadrature for a profile state and an
// arbitrary center in the meridian plane; independent of the Bessel
// evaluation path
double profile_f_brute(const SurfaceState& s, double ya, double yb, double sigma) {
    const std::size_t m = 4096;
    double total = 0.0;
    for (std::size_t i = 0; i < s.r.size(); ++i) {
        const double r = s.r[i];
        const double z = s.z_at(i);
        double ring = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double th = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(m);
            const double dx = r * std::cos(th) - ya;
            const double dy = r * std::sin(th);
            const double dz = z - yb;
            ring += std::exp(-(dx * dx + dy * dy + dz * dz) / (4.0 * sigma));
        }
        ring /= static_cast<double>(m);
        total += ring * s.weights[i];
    }
    return total / (4.0 * kPi * sigma);
}

} // namespace

TEST_CASE("F-functional anchors: circle, cylinder, flat line") {
    auto circle = make_model_surface(ShrinkerModel::circle(), 512, nullptr);
    CHECK(f_functional(circle, GaussCenter::origin(), 1.0) ==
          Approx(std::sqrt(2.0 * kPi / std::numbers::e)).margin(1e-4));

    auto cyl = make_model_surface(ShrinkerModel::cylinder(), 512, nullptr);
    CHECK(f_functional(cyl, GaussCenter::origin(), 1.0) ==
          Approx(std::sqrt(2.0 * kPi / std::numbers::e)).margin(1e-6));

    auto line = make_line_segment(512);
    CHECK(f_functional(line, GaussCenter::origin(), 1.0) == Approx(1.0).margin(1e-6));
}

TEST_CASE("F-functional matches the closed form across radii and scales") {
    for (double r : {0.8, 1.4142135623730951, 2.0, 2.7}) {
        auto s = scaled_circle(r, 512);
        for (double sigma : {0.5, 1.0, 2.3})
            CHECK(f_functional(s, GaussCenter::origin(), sigma) ==
                  Approx(circle_f_exact(r, sigma)).epsilon(2e-4));
    }
    CHECK_THROWS_AS(f_functional(scaled_circle(1.0, 64), GaussCenter::origin(), 0.0),
                    std::invalid_argument);
}

TEST_CASE("off-axis profile centers agree with brute-force quadrature") {
    std::function<double(double)> wob = [](double z) { return 0.1 * std::cos(z); };
    auto s = make_model_surface(ShrinkerModel::cylinder(), 192, &wob, 0.0, 8.0);
    for (double sigma : {0.07, 0.6, 3.0}) {
        const double got = f_functional(s, GaussCenter{0.9, -1.7}, sigma);
        const double want = profile_f_brute(s, 0.9, -1.7, sigma);
        CHECK(got == Approx(want).epsilon(1e-7));
    }
    // large Bessel argument branch
    const double got = f_functional(s, GaussCenter{4.0, 0.3}, 0.01);
    const double want = profile_f_brute(s, 4.0, 0.3, 0.01);
    CHECK(got == Approx(want).epsilon(1e-5).margin(1e-12));
}

TEST_CASE("round-circle F is maximized at the shrinker radius") {
    const double f_star = f_functional(make_model_surface(ShrinkerModel::circle(), 256,
                                                          nullptr),
                                       GaussCenter::origin(), 1.0);
    for (double r = 0.5; r <= 3.01; r += 0.1) {
        if (std::abs(r - kSqrt2) < 0.05) continue;
        CHECK(f_functional(scaled_circle(r, 256), GaussCenter::origin(), 1.0) < f_star);
    }
}

TEST_CASE("entropy search recovers the self-similar scale") {
    auto s = scaled_circle(kSqrt2, 256);
    auto e = entropy_estimate(s);
    CHECK(e.lambda == Approx(std::sqrt(2.0 * kPi / std::numbers::e)).margin(2e-4));
    CHECK(e.sigma == Approx(1.0).margin(0.02));
    CHECK(std::hypot(e.y.a, e.y.b) < 0.02);
    // lower-bound property
    CHECK(e.lambda >= f_functional(s, GaussCenter::origin(), 1.0) - 1e-12);

    // dilated circle: same entropy, maximizer at sigma = r^2/2 = 2
    auto s2 = scaled_circle(2.0, 256);
    auto e2 = entropy_estimate(s2);
    CHECK(e2.lambda == Approx(e.lambda).margin(1e-3));
    CHECK(e2.sigma == Approx(2.0).margin(0.05));
}

TEST_CASE("entropy is dilation-consistent on a perturbed state") {
    std::function<double(double)> u = [](double th) { return 0.08 * std::cos(3.0 * th); };
    auto s = make_model_surface(ShrinkerModel::circle(), 256, &u);
    auto e1 = entropy_estimate(s);
    SurfaceState d = s;
    for (auto& p : d.pts) p = p * 1.7;
    d.update_weights();
    auto e2 = entropy_estimate(d);
    CHECK(std::abs(e1.lambda - e2.lambda) < 1e-3);
}

TEST_CASE("cutoff functional: inside, outside, and wide-cutoff limits") {
    auto cfg10 = FunctionalConfig::make(10.0, 0.0, 2.0);
    auto s = make_model_surface(ShrinkerModel::circle(), 256, nullptr);
    const double f = f_functional(s, GaussCenter::origin(), 1.0);
    // circle of radius sqrt(2) lies inside B_30: psi = 1 on it
    CHECK(cutoff_functional(s, cfg10, GaussCenter::origin(), 1.0, 1) == Approx(f));
    CHECK(cutoff_functional(s, cfg10, GaussCenter::origin(), 1.0, 2) == Approx(f));

    // small r0: the same circle lies outside B_{4 r0} when 4 r0 < sqrt(2)
    auto cfg_small = FunctionalConfig::make(0.25, 0.0, 2.0);
    CHECK(cutoff_functional(s, cfg_small, GaussCenter::origin(), 1.0, 1) == 0.0);

    CHECK_THROWS_AS(cutoff_functional(s, cfg10, GaussCenter::origin(), 1.0, 3),
                    std::invalid_argument);
}

TEST_CASE("cutoff profile respects its sampled derivative bound") {
    auto cfg = FunctionalConfig::make(1.0, 0.0, 2.0);
    CHECK(cfg.k_psi > 0.0);
    const int m = 1500;
    double worst = 0.0;
    for (int i = 1; i < m; ++i) {
        const double rho = 4.0 * i / m;
        const double h = 1e-5;
        const double d1 = (cfg.psi(rho + h) - cfg.psi(rho - h)) / (2.0 * h);
        const double d2 = (cfg.psi(rho + h) - 2.0 * cfg.psi(rho) + cfg.psi(rho - h)) / (h * h);
        worst = std::max(worst, cfg.r0 * std::abs(d1) + cfg.r0 * cfg.r0 * std::abs(d2));
    }
    CHECK(worst <= cfg.k_psi * (1.0 + 1e-6));
}

TEST_CASE("compact modified functional") {
    auto s = make_model_surface(ShrinkerModel::circle(), 256, nullptr);
    auto cfg0 = FunctionalConfig::make(1.0, 0.0, 2.0);
    auto m0 = modified_functional_compact(0.0, s, cfg0);
    CHECK(m0.mu == 1.0);
    CHECK(m0.f_tilde == Approx(m0.f));

    auto cfg1 = FunctionalConfig::make(1.0, 1.0, 2.0);
    auto m1 = modified_functional_compact(0.0, s, cfg1);
    CHECK(m1.mu == Approx(std::numbers::e));
    // the arithmetic example: K = 1, t = 0, F = 1.5 -> e * 1.5
    CHECK(1.5 * m1.mu == Approx(1.5 * std::numbers::e).epsilon(1e-14));
    CHECK(1.5 * m1.mu == Approx(4.0774).epsilon(1e-4));
    auto mlate = modified_functional_compact(40.0, s, cfg1);
    CHECK(mlate.mu == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("localized modified functional constants") {
    // quoted arithmetic with unit constants and C_n = 1, n = 1
    FunctionalConfig cfg = FunctionalConfig::make(1.0, 1.0, 1.0);
    cfg.k_psi = 1.0;
    cfg.c_n_override = 1.0;
    CHECK(cfg.k1() == Approx(4.0));   // K^2 + 2 K_psi^2 + K K_psi at r0 = 1
    CHECK(cfg.k2(1) == Approx(4.0 * std::sqrt(12.0 * kPi)).epsilon(1e-12));
    CHECK(cfg.k3(1) == Approx(4.0 * cfg.k2(1)).epsilon(1e-12));
    CHECK(cfg.k2(1) == Approx(24.56).epsilon(1e-3));
    CHECK(cfg.k3(1) == Approx(98.24).epsilon(1e-3));

    // the two K1 exponent variants differ once r0 != 1
    FunctionalConfig ca = FunctionalConfig::make(2.0, 1.0, 1.0, CutoffKind::Bump,
                                                 K1Variant::Derivation);
    FunctionalConfig cb = FunctionalConfig::make(2.0, 1.0, 1.0, CutoffKind::Bump,
                                                 K1Variant::Paper);
    CHECK(ca.k1() < cb.k1());
    CHECK(ca.k1() == Approx(1.0 + 2.0 * ca.k_psi * ca.k_psi / 4.0 + ca.k_psi / 2.0));
    CHECK(cb.k1() == Approx(1.0 + 2.0 * cb.k_psi * cb.k_psi * 4.0 + cb.k_psi / 2.0));
}

TEST_CASE("localized modified functional reduces to F without forcing and cutoff") {
    auto s = make_model_surface(ShrinkerModel::circle(), 256, nullptr);
    FunctionalConfig cfg = FunctionalConfig::make(1.0, 0.0, 2.0, CutoffKind::None);
    CHECK(cfg.k_psi == 0.0);
    auto lm = modified_functional_localized(3.0, s, cfg);
    const double f = f_functional(s, GaussCenter::origin(), 1.0);
    CHECK(lm.k1 == 0.0);
    CHECK(lm.k3 == 0.0);
    CHECK(lm.mu == 1.0);
    CHECK(lm.f_tilde == Approx(f));
    CHECK(lm.f_hat == Approx(f));

    // with a genuine cutoff, F_tilde -> F as t -> infinity
    FunctionalConfig cb = FunctionalConfig::make(1.0, 0.0, 2.0);
    auto late = modified_functional_localized(60.0, s, cb);
    CHECK(late.f_tilde == Approx(f).epsilon(1e-9));
}

TEST_CASE("annulus constant maximization") {
    FunctionalConfig cfg = FunctionalConfig::make(1.0, 0.0, 2.0);
    const double c1 = cfg.annulus_constant(1);
    CHECK(c1 > 0.0);
    // it really is the max of the stated expression over z > 0
    auto g = [&](double z) {
        return std::pow(4.0 * kPi, -0.5) * (1.0 / 16.0 + cfg.k_psi / z) *
               std::pow(z, -0.5) * std::exp(-1.0 / z);
    };
    for (double z = 0.01; z < 50.0; z *= 1.13) CHECK(g(z) <= c1 * (1.0 + 1e-9));
}

TEST_CASE("scale readouts: definitional identities and flags") {
    // static shrinker: zero integrand -> R_T undefined (infinity flag),
    // R_* = sqrt(T)
    std::vector<double> t, zero, constc;
    for (int i = 0; i <= 200; ++i) {
        t.push_back(2.0 + 2.0 * i / 200.0);
        zero.push_back(0.0);
        constc.push_back(0.01);
    }
    auto sc = shrinker_scale_from_series(t, zero, 3.0);
    CHECK_FALSE(sc.r_t_defined);
    CHECK(std::isinf(sc.r_t));
    CHECK(sc.r_star == Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(sc.r_loc == Approx(4.0));   // 2 sqrt(T+1) at T = 3

    // constant series c: integral = 2c, R_T = sqrt(-2 ln 2c)
    auto sc2 = shrinker_scale_from_series(t, constc, 3.0);
    CHECK(sc2.phi_window_integral == Approx(0.02).epsilon(1e-12));
    CHECK(sc2.r_t_defined);
    CHECK(sc2.r_t == Approx(std::sqrt(-2.0 * std::log(0.02))).epsilon(1e-12));
    // definitional identity and orderings
    CHECK(std::exp(-0.5 * sc2.r_t * sc2.r_t) == Approx(sc2.phi_window_integral));
    CHECK(sc2.r_star <= sc2.r_t);
    CHECK(sc2.r_star <= std::sqrt(3.0) + 1e-12);

    CHECK_THROWS_AS(shrinker_scale_from_series(t, constc, 10.0), std::invalid_argument);
}
