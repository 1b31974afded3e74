#include "catch_amalgamated.hpp"

#include <cmath>

#include "forchlab/diagnostics.hpp"

using namespace forchlab;
using Catch::Approx;

namespace {

MediumSpec unit_two_term_medium(int res = 64) {
    MediumConfig cfg;
    cfg.preset = "homogeneous";
    cfg.dim = 1;
    cfg.resolution = {res, 1};
    cfg.phi_value = 1.0;
    cfg.coeff_values = {1.0, 1.0};
    return build_medium(cfg);
}

}  // namespace

TEST_CASE("boundary_functionals: frozen example G = 2.5 for Psi = x") {
    // a0 ≡ 1, W1 ≡ 1/2, φ ≡ 1, B* = 1, Ψ = x: G = 1 + 1 + 1/2 + 0
    auto medium = unit_two_term_medium();
    auto boundary = BoundaryExtension::from_expressions("x", "0", "0");
    SingleSeries s;
    boundary_functionals(boundary, medium, {0.0, 0.5, 1.0}, s);
    for (double g : s.G) CHECK(g == Approx(2.5).epsilon(1e-10));
    for (double g0 : s.G0) CHECK(g0 == Approx(2.5).epsilon(1e-10));  // B1 = 1 = B*
    for (double g1 : s.G1) CHECK(g1 == Approx(0.0).margin(1e-14));
    for (double g2 : s.G2) CHECK(g2 == Approx(0.0).margin(1e-14));
    for (double m : s.M) CHECK(m == Approx(2.5).epsilon(1e-10));
}

TEST_CASE("boundary_functionals: zero data gives G = B* and vanishing G1, G2") {
    auto medium = unit_two_term_medium();
    SingleSeries s;
    boundary_functionals(BoundaryExtension::zero(), medium, {0.0, 1.0, 2.0}, s);
    for (double g : s.G) CHECK(g == Approx(1.0));  // B* = max(B1, 1) = 1
    for (double g1 : s.G1) CHECK(g1 == 0.0);
    for (double g2 : s.G2) CHECK(g2 == 0.0);
    for (double m : s.M) CHECK(m >= 1.0);
}

TEST_CASE("trajectory_functionals: zero run and heat decay oracle") {
    auto medium = unit_two_term_medium(48);
    SolverConfig cfg;
    cfg.dt = 0.02;
    cfg.t_end = 0.4;
    {
        Field p0(medium.grid, 0.0);
        auto traj = simulate(medium, p0, BoundaryExtension::zero(), cfg);
        auto s = trajectory_functionals(traj);
        for (size_t k = 0; k < s.size(); ++k) {
            CHECK(s.pbar_sq[k] == Approx(0.0).margin(1e-20));
            CHECK(s.H_int[k] == Approx(0.0).margin(1e-20));
            CHECK(s.gradp_w1[k] == Approx(0.0).margin(1e-20));
            CHECK(s.pbart_sq[k] == Approx(0.0).margin(1e-20));
            CHECK(s.G[k] == Approx(1.0));
        }
    }
    {
        // heat mode: ∫p̄²φ = e^{-2π²t}/2
        auto heat = build_medium([] {
            MediumConfig c;
            c.preset = "homogeneous";
            c.dim = 1;
            c.resolution = {128, 1};
            c.phi_value = 1.0;
            c.alphas = {0.0};
            c.coeff_values = {1.0};
            c.linear_test_mode = true;
            return c;
        }());
        const double pi = 3.14159265358979323846;
        Field p0 = sample_field(heat.grid, [&](double x, double) { return std::sin(pi * x); });
        SolverConfig hc;
        hc.dt = 1e-3;
        hc.t_end = 0.1;
        hc.output_stride = 10;
        auto traj = simulate(heat, p0, BoundaryExtension::zero(), hc);
        auto s = trajectory_functionals(traj);
        for (size_t k = 0; k < s.size(); ++k) {
            const double expected = 0.5 * std::exp(-2.0 * pi * pi * s.t[k]);
            CHECK(s.pbar_sq[k] == Approx(expected).epsilon(0.02));
        }
    }
}

TEST_CASE("pair_functionals: identical runs and h1 structure") {
    auto medium = unit_two_term_medium(48);
    const double pi = 3.14159265358979323846;
    Field p0 = sample_field(medium.grid, [&](double x, double) { return std::sin(pi * x); });
    SolverConfig cfg;
    cfg.dt = 0.02;
    cfg.t_end = 0.4;
    auto trajA = simulate(medium, p0, BoundaryExtension::zero(), cfg);
    auto trajB = simulate(medium, p0, BoundaryExtension::zero(), cfg);
    auto sa = trajectory_functionals(trajA);
    auto sb = trajectory_functionals(trajB);
    auto ps = pair_functionals(trajA, trajB, sa, sb);

    for (size_t k = 0; k < ps.size(); ++k) {
        CHECK(ps.Pbar_sq[k] == Approx(0.0).margin(1e-20));
        CHECK(ps.D[k] == Approx(0.0).margin(1e-14));
        // h1 = B1 + 2∫H for coincident trajectories
        CHECK(ps.h1[k] == Approx(1.0 + 2.0 * sa.H_int[k]).epsilon(1e-12));
        CHECK(ps.h2[k] >= 1.0);
    }

    // swap symmetry: ‖P̄‖ series unchanged, D identical
    auto ps_swapped = pair_functionals(trajB, trajA, sb, sa);
    for (size_t k = 0; k < ps.size(); ++k) {
        CHECK(ps_swapped.Pbar_sq[k] == Approx(ps.Pbar_sq[k]).margin(1e-18));
        CHECK(ps_swapped.D[k] == Approx(ps.D[k]).margin(1e-18));
    }
}

TEST_CASE("pair_functionals: swap symmetry with distinct data") {
    auto medium = unit_two_term_medium(32);
    const double pi = 3.14159265358979323846;
    Field p0 = sample_field(medium.grid, [&](double x, double) { return std::sin(pi * x); });
    SolverConfig cfg;
    cfg.dt = 0.05;
    cfg.t_end = 0.5;
    auto bA = BoundaryExtension::from_expressions("exp(-t)*x", "-exp(-t)*x", "exp(-t)*x");
    auto trajA = simulate(medium, p0, bA, cfg);
    auto trajB = simulate(medium, p0, BoundaryExtension::zero(), cfg);
    auto sa = trajectory_functionals(trajA);
    auto sb = trajectory_functionals(trajB);
    auto psAB = pair_functionals(trajA, trajB, sa, sb);
    auto psBA = pair_functionals(trajB, trajA, sb, sa);
    for (size_t k = 0; k < psAB.size(); ++k) {
        CHECK(psBA.Pbar_sq[k] == Approx(psAB.Pbar_sq[k]).margin(1e-15));
        CHECK(psBA.D[k] == Approx(psAB.D[k]).epsilon(1e-12));
        CHECK(psBA.h1[k] == Approx(psAB.h1[k]).epsilon(1e-12));
    }
}

TEST_CASE("tail_limits: analytic tails") {
    SingleSeries s;
    s.t = uniform_times(0.0, 40.0, 2001);
    s.G.resize(s.t.size());
    s.G1.assign(s.t.size(), 0.0);
    s.G2.assign(s.t.size(), 0.0);

    // constant G ≡ 2.5
    for (size_t k = 0; k < s.t.size(); ++k) s.G[k] = 2.5;
    auto tl = tail_limits(s, 0.25);
    CHECK(tl.A_hat == Approx(2.5));
    CHECK(tl.B_hat == Approx(0.0).margin(1e-12));

    // G = 1 + e^{-t}: A → 1, B → 0
    for (size_t k = 0; k < s.t.size(); ++k) s.G[k] = 1.0 + std::exp(-s.t[k]);
    tl = tail_limits(s, 0.25);
    CHECK(tl.A_hat == Approx(1.0).epsilon(1e-4));
    CHECK(tl.B_hat == Approx(0.0).margin(1e-4));

    // G = 2 + sin t: A ≈ 3, B ≈ 1
    for (size_t k = 0; k < s.t.size(); ++k) s.G[k] = 2.0 + std::sin(s.t[k]);
    tl = tail_limits(s, 0.25);
    CHECK(tl.A_hat == Approx(3.0).epsilon(1e-3));
    CHECK(tl.B_hat == Approx(1.0).epsilon(1e-3));

    // series too short
    SingleSeries tiny;
    tiny.t = {0.0, 1.0, 2.0};
    tiny.G = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(tail_limits(tiny, 0.25), std::invalid_argument);
    CHECK_THROWS_AS(tail_limits(s, 0.5), std::invalid_argument);  // < 3 windows
}
