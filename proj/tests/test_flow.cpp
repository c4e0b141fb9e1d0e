#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <numbers>

#include "mcflab/checks.hpp"
#include "mcflab/flow.hpp"
#include "mcflab/forcing.hpp"
#include "mcflab/gaussian.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/graphs.hpp"

using namespace mcflab;
using Catch::Approx;

namespace {

SurfaceState scaled_circle(double radius, std::size_t n, double time_stamp = 0.0) {
    auto s = make_model_surface(ShrinkerModel::circle(), n, nullptr);
    for (auto& p : s.pts) p = p * (radius / kSqrt2);
    s.update_weights();
    s.time_stamp = time_stamp;
    return s;
}

double mean_radius(const SurfaceState& s) {
    double m = 0.0;
    for (const auto& p : s.pts) m += p.norm();
    return m / static_cast<double>(s.pts.size());
}

// high-resolution RK4 for the scalar radius law dR/dt = R/2 - 1/R
double rk4_rescaled_radius(double r0, double t_end, int steps = 200000) {
    auto f = [](double r) { return 0.5 * r - 1.0 / r; };
    double r = r0;
    const double h = t_end / steps;
    for (int i = 0; i < steps; ++i) {
        const double k1 = f(r);
        const double k2 = f(r + 0.5 * h * k1);
        const double k3 = f(r + 0.5 * h * k2);
        const double k4 = f(r + h * k3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return r;
}

// C0 distance of two star-shaped curves, compared as radial graphs
double radial_c0_distance(const SurfaceState& a, const SurfaceState& b) {
    auto ga = graph_over_model(a, ShrinkerModel::circle(), 50.0);
    auto gb = graph_over_model(b, ShrinkerModel::circle(), 50.0);
    REQUIRE(ga.ok);
    REQUIRE(gb.ok);
    REQUIRE(ga.graph.samples.size() == gb.graph.samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ga.graph.samples.size(); ++i)
        worst = std::max(worst, std::abs(ga.graph.samples[i] - gb.graph.samples[i]));
    return worst;
}

std::array<SurfaceState, 3> rescaled_window(SurfaceState s, const ForcingSpec& f, double dt,
                                            RescaleConvention conv, int presteps = 1) {
    for (int k = 0; k < presteps; ++k) s = step_rmcff(s, f, s.time_stamp, dt, conv);
    auto s1 = step_rmcff(s, f, s.time_stamp, dt, conv);
    auto s2 = step_rmcff(s1, f, s1.time_stamp, dt, conv);
    return {s, s1, s2};
}

} // namespace

TEST_CASE("forcing families: analytic derivatives match finite differences") {
    const auto fc = ForcingSpec::constant(Vec3{0.3, -0.1, 0.2});
    const auto fr = ForcingSpec::radial(0.5, 1.5);
    const auto fb = ForcingSpec::bump(0.4, Vec3{0.0, 1.0, 0.0}, Vec3{1.0, 0.0, 0.0}, 0.8,
                                      2.5);
    CHECK(fc.derivative_self_test() < 1e-9);
    CHECK(fr.derivative_self_test() < 1e-7);
    CHECK(fb.derivative_self_test() < 1e-6);
    CHECK(fc.sampled_sup() <= fc.k_bound);
    CHECK(fr.sampled_sup() <= fr.k_bound);
    CHECK(fb.sampled_sup() <= fb.k_bound);
    CHECK(fr.axisymmetric());
    CHECK_FALSE(fc.axisymmetric());
    CHECK(ForcingSpec::constant(Vec3{0.0, 0.0, 0.7}).axisymmetric());
    CHECK_FALSE(fb.axisymmetric());
}

TEST_CASE("unrescaled circle obeys R(s)^2 = R0^2 - 2s") {
    auto s = scaled_circle(2.0, 256, -2.0);
    const auto fz = ForcingSpec::zero();
    const double ds = 1e-4;
    for (int k = 0; k < 10000; ++k) s = step_mcff(s, fz, ds);
    CHECK(s.time_stamp == Approx(-1.0).margin(1e-9));
    // R(-1)^2 = 4 - 2*1 = 2
    CHECK(mean_radius(s) == Approx(kSqrt2).epsilon(1e-3));
}

TEST_CASE("unrescaled cylinder obeys the same radial law") {
    std::function<double(double)> two = [](double) { return 2.0 - kSqrt2; };
    auto s = make_model_surface(ShrinkerModel::cylinder(), 256, &two, -2.0, 10.0);
    s.time_stamp = -2.0;
    const auto fz = ForcingSpec::zero();
    for (int k = 0; k < 1000; ++k) s = step_mcff(s, fz, 1e-3);
    for (double r : s.r) CHECK(r == Approx(kSqrt2).epsilon(1e-3));
}

TEST_CASE("constant-magnitude radial forcing balances a unit circle") {
    auto s = scaled_circle(1.0, 256);
    const double moll = 0.05;
    // F . nu = c / sqrt(1 + moll^2) at radius 1; balance against |H| = 1
    const auto f = ForcingSpec::radial(std::sqrt(1.0 + moll * moll), moll);
    for (int k = 0; k < 200; ++k) s = step_mcff(s, f, 1e-4);
    CHECK(mean_radius(s) == Approx(1.0).margin(5e-5));
}

TEST_CASE("rescaled round circles follow the radial ODE dR/dt = R/2 - 1/R") {
    // the shrinker radius is an unstable fixed point of the radial law:
    // R^2(t) = 2 + (R0^2 - 2) e^t, so R0 = 1 collapses at t = ln 2 and
    // R0 = 1.5 grows; both sides are checked against the ODE oracle
    const auto fz = ForcingSpec::zero();

    auto below = scaled_circle(1.0, 256);
    const double dt = 5e-5;
    for (int k = 0; k < 10000; ++k) below = step_rmcff(below, fz, below.time_stamp, dt);
    const double want_below = rk4_rescaled_radius(1.0, 0.5);
    CHECK(want_below == Approx(std::sqrt(2.0 - std::exp(0.5))).epsilon(1e-10));
    CHECK(mean_radius(below) == Approx(want_below).epsilon(2e-3));

    auto above = scaled_circle(1.5, 256);
    for (int k = 0; k < 10000; ++k) above = step_rmcff(above, fz, above.time_stamp, 1e-4);
    const double want_above = rk4_rescaled_radius(1.5, 1.0);
    CHECK(want_above == Approx(std::sqrt(2.0 + 0.25 * std::exp(1.0))).epsilon(1e-10));
    CHECK(mean_radius(above) == Approx(want_above).epsilon(2e-3));
}

TEST_CASE("rescaled step stays within the forcing decay envelope") {
    auto s = scaled_circle(kSqrt2, 128, 4.0);
    const auto f = ForcingSpec::radial(0.1, 2.0);
    CHECK_NOTHROW(step_rmcff(s, f, 4.0, 1e-4));
    // a lying bound is caught
    ForcingSpec bad = f;
    bad.k_bound = 1e-4;
    CHECK_THROWS_AS(step_rmcff(s, bad, 4.0, 1e-4), std::logic_error);
}

TEST_CASE("rescale map: identities, self-similarity, errors") {
    auto m = scaled_circle(1.3, 128, -1.0);
    auto sigma = rescale_map(m, MapDirection::UnrescaledToRescaled);
    CHECK(sigma.time_stamp == Approx(0.0).margin(1e-14));
    for (std::size_t i = 0; i < m.pts.size(); ++i) {
        CHECK(sigma.pts[i].x == Approx(m.pts[i].x));
        CHECK(sigma.pts[i].y == Approx(m.pts[i].y));
    }

    // self-similar circle: R = sqrt(-2 s) maps to sqrt(2) at every s
    for (double s : {-2.0, -1.0, -0.25}) {
        auto c = scaled_circle(std::sqrt(-2.0 * s), 128, s);
        auto r = rescale_map(c, MapDirection::UnrescaledToRescaled);
        CHECK(mean_radius(r) == Approx(kSqrt2).epsilon(1e-12));
    }

    // round trip on a profile state
    std::function<double(double)> wob = [](double z) { return 0.05 * std::cos(z); };
    auto p = make_model_surface(ShrinkerModel::cylinder(), 128, &wob, 0.0, 8.0);
    p.time_stamp = -0.7;
    auto back = rescale_map(rescale_map(p, MapDirection::UnrescaledToRescaled),
                            MapDirection::RescaledToUnrescaled);
    CHECK(back.time_stamp == Approx(-0.7).margin(1e-13));
    CHECK(back.dz == Approx(p.dz).epsilon(1e-13));
    for (std::size_t i = 0; i < p.r.size(); i += 13)
        CHECK(back.r[i] == Approx(p.r[i]).epsilon(1e-13));

    auto late = scaled_circle(1.0, 128, 0.5);
    CHECK_THROWS_AS(rescale_map(late, MapDirection::UnrescaledToRescaled),
                    std::invalid_argument);
}

TEST_CASE("cross-oracle: integrate-then-map equals map-then-integrate") {
    std::function<double(double)> u = [](double th) { return 0.06 * std::cos(3.0 * th); };
    auto m0 = make_model_surface(ShrinkerModel::circle(), 128, &u);
    for (auto& p : m0.pts) p = p * (1.9 / kSqrt2);
    m0.update_weights();
    m0.time_stamp = -1.0;

    const double ds = 2.5e-4;
    const double s_end = -0.5;
    const double t_end = -std::log(-s_end);
    const double h = mean_spacing(m0);
    const double tol = 5.0 * (ds + h * h);

    auto run_both = [&](const ForcingSpec& f, RescaleConvention conv) {
        SurfaceState a = m0;
        while (a.time_stamp < s_end - 1e-12) {
            a = step_mcff(a, f, ds);
            if (spacing_ratio(a) > 1.3) redistribute_uniform(a);
        }
        SurfaceState a_mapped = rescale_map(a, MapDirection::UnrescaledToRescaled);

        SurfaceState b = rescale_map(m0, MapDirection::UnrescaledToRescaled);
        while (b.time_stamp < t_end - 1e-12) {
            b = step_rmcff(b, f, b.time_stamp, ds, conv);
            if (spacing_ratio(b) > 1.3) redistribute_uniform(b);
        }
        return radial_c0_distance(a_mapped, b);
    };

    const double unforced = run_both(ForcingSpec::zero(), RescaleConvention::Derived);
    CHECK(unforced < tol);

    // a localized bump forcing separates the two argument conventions
    const auto fb = ForcingSpec::bump(0.4, Vec3{1.0, 0.0, 0.0}, Vec3{1.5, 0.0, 0.0}, 0.6,
                                      1.6);
    const double derived = run_both(fb, RescaleConvention::Derived);
    const double paper = run_both(fb, RescaleConvention::PaperExponent);
    CHECK(derived < tol);
    CHECK(paper > 5.0 * derived);
}

TEST_CASE("run_trajectory: gradient-flow F decay and recorded series") {
    std::function<double(double)> u = [](double th) { return 0.05 * std::cos(2.0 * th); };
    auto s = make_model_surface(ShrinkerModel::circle(), 128, &u);
    TrajectoryOptions opt;
    opt.t0 = 0.0;
    opt.t1 = 1.0;
    opt.dt = 5e-4;
    opt.cfg = FunctionalConfig::make(1.0, 0.0, 2.0);
    auto traj = run_trajectory(s, ForcingSpec::zero(), opt);
    CHECK_FALSE(traj.truncated);
    const auto f = traj.series.column("f");
    const double h = mean_spacing(s);
    const double per_step = scheme_tolerance(opt.dt, h);
    for (std::size_t i = 0; i + 1 < f.size(); ++i) CHECK(f[i + 1] <= f[i] + per_step);
    CHECK(traj.series.rows.size() == 2001);
    CHECK(traj.states.size() >= 200);
    CHECK_FALSE(traj.graph_samples.rows.empty());
}

TEST_CASE("run_trajectory truncates cleanly on a pinching profile") {
    SurfaceState s;
    s.family = Family::Profile;
    s.r.resize(512);
    s.z0 = -4.0 * std::numbers::pi;
    s.dz = 8.0 * std::numbers::pi / 511.0;
    for (std::size_t i = 0; i < s.r.size(); ++i)
        s.r[i] = 0.7 - 0.45 * std::cos(2.0 * std::numbers::pi * s.z_at(i) /
                                       (4.0 * std::numbers::pi));
    s.update_weights();
    TrajectoryOptions opt;
    opt.picture = Picture::Unrescaled;
    opt.t0 = 0.0;
    opt.t1 = 0.5;
    opt.dt = 1e-3;
    opt.record_graphs = false;
    opt.record_localized = false;
    auto traj = run_trajectory(s, ForcingSpec::zero(), opt);
    CHECK(traj.truncated);
    CHECK(traj.truncation_reason.find("pinch") != std::string::npos);
    CHECK(traj.series.rows.size() > 10);
}

TEST_CASE("run_trajectory rejects a time step above the stability bound") {
    auto s = make_model_surface(ShrinkerModel::circle(), 512, nullptr);
    TrajectoryOptions opt;
    opt.t0 = 0.0;
    opt.t1 = 0.1;
    opt.dt = 1e-3;   // far above 0.3 h^2 at this resolution
    CHECK_THROWS_AS(run_trajectory(s, ForcingSpec::zero(), opt), std::invalid_argument);
}

TEST_CASE("evolution residual: static shrinkers") {
    auto fz = ForcingSpec::zero();
    auto w = rescaled_window(scaled_circle(kSqrt2, 128), fz, 1e-5,
                             RescaleConvention::Derived, 0);
    auto r = evolution_residual_phi(w[0], w[1], w[2], fz);
    CHECK(r.l2_rho < 1e-5);

    auto cyl = make_model_surface(ShrinkerModel::cylinder(), 256, nullptr);
    auto c1 = step_rmcff(cyl, fz, 0.0, 1e-5);
    auto c2 = step_rmcff(c1, fz, 1e-5, 1e-5);
    auto rp = evolution_residual_phi(cyl, c1, c2, fz);
    CHECK(rp.l2_rho < 1e-6);
}

TEST_CASE("evolution residual: second order in h on moving round circles") {
    auto fz = ForcingSpec::zero();
    double errs[3];
    std::size_t ns[3] = {32, 64, 128};
    for (int k = 0; k < 3; ++k) {
        auto w = rescaled_window(scaled_circle(1.2, ns[k]), fz, 1e-6,
                                 RescaleConvention::Derived);
        errs[k] = evolution_residual_phi(w[0], w[1], w[2], fz).l2_rho;
    }
    CHECK(errs[0] / errs[1] > 3.4);
    CHECK(errs[1] / errs[2] > 3.4);
}

TEST_CASE("evolution residual: first order in dt with constant forcing") {
    const auto fc = ForcingSpec::constant(Vec3{0.5, 0.0, 0.0});
    double errs[3];
    const double dts[3] = {1.6e-2, 8e-3, 4e-3};
    for (int k = 0; k < 3; ++k) {
        auto w = rescaled_window(scaled_circle(1.2, 256), fc, dts[k],
                                 RescaleConvention::Derived);
        errs[k] = evolution_residual_phi(w[0], w[1], w[2], fc).l2_rho;
    }
    CHECK(errs[0] / errs[1] > 1.8);
    CHECK(errs[1] / errs[2] > 1.8);
}

TEST_CASE("evolution residual: moving profile and forced profile stay small") {
    auto fz = ForcingSpec::zero();
    std::function<double(double)> off = [](double) { return 1.8 - kSqrt2; };
    auto s0 = make_model_surface(ShrinkerModel::cylinder(), 256, &off, 0.0, 10.0);
    auto s1 = step_rmcff(s0, fz, 0.0, 1e-6);
    auto s2 = step_rmcff(s1, fz, 1e-6, 1e-6);
    CHECK(evolution_residual_phi(s0, s1, s2, fz).l2_rho < 1e-5);

    const auto fr = ForcingSpec::radial(0.1, 2.0, 16.0);
    auto f1 = step_rmcff(s0, fr, 0.0, 1e-4);
    auto f2 = step_rmcff(f1, fr, 1e-4, 1e-4);
    CHECK(evolution_residual_phi(s0, f1, f2, fr).l2_rho < 1e-3);
}

TEST_CASE("evolution residual rejects a broken window") {
    auto fz = ForcingSpec::zero();
    auto a = scaled_circle(1.2, 128, 0.0);
    auto b = scaled_circle(1.2, 128, 0.1);
    auto c = scaled_circle(1.2, 128, 0.15);   // non-uniform spacing in time
    CHECK_THROWS_AS(evolution_residual_phi(a, b, c, fz), std::invalid_argument);
}
