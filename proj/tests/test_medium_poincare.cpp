#include "catch_amalgamated.hpp"

#include <cmath>

#include "forchlab/medium.hpp"
#include "forchlab/poincare.hpp"

using namespace forchlab;
using Catch::Approx;

TEST_CASE("build_medium: homogeneous preset") {
    MediumConfig cfg;
    cfg.preset = "homogeneous";
    cfg.phi_value = 0.5;
    cfg.coeff_values = {1.0, 1.0};
    auto m = build_medium(cfg);
    CHECK(m.porosity.min() == Approx(0.5));
    CHECK(m.porosity.max() == Approx(0.5));
    CHECK(m.weights.W1_field[0] == Approx(0.5));
    CHECK(m.weights.a == Approx(0.5));
}

TEST_CASE("build_medium: layered preset matches per-layer weights") {
    MediumConfig cfg;
    cfg.preset = "layered";
    cfg.layers = 2;
    cfg.phi_regions = {0.4, 0.8};
    cfg.coeff_regions = {{1.0, 1.0}, {1.0, 4.0}};
    auto m = build_medium(cfg);
    // first half of the interval: a1 = 1 -> W1 = 1/2; second half: a1 = 4 -> W1 = 1/4
    CHECK(m.weights.W1_field[0] == Approx(0.5));
    CHECK(m.weights.W1_field[size_t(m.grid.num_cells() - 1)] == Approx(0.25));
    CHECK(m.porosity[0] == Approx(0.4));
    CHECK(m.porosity[size_t(m.grid.num_cells() - 1)] == Approx(0.8));
}

TEST_CASE("build_medium: validation errors") {
    MediumConfig cfg;
    cfg.preset = "raw";
    cfg.resolution = {4, 4};
    cfg.phi_raw.assign(4, 1.5);  // porosity out of range
    cfg.coeff_raw = {std::vector<double>(4, 1.0), std::vector<double>(4, 1.0)};
    CHECK_THROWS_AS(build_medium(cfg), std::invalid_argument);

    cfg.phi_raw.assign(4, 0.5);
    cfg.coeff_raw[1].assign(4, 0.0);  // a_N <= 0
    CHECK_THROWS_AS(build_medium(cfg), std::invalid_argument);

    MediumConfig bad;
    bad.preset = "nonexistent";
    CHECK_THROWS_AS(build_medium(bad), std::invalid_argument);
}

TEST_CASE("build_medium: stress presets") {
    auto nd = build_medium(MediumConfig::near_degenerate());
    CHECK(nd.porosity.min() == Approx(1e-3));

    auto sw = build_medium(MediumConfig::singular_weight());
    const double w1min = sw.weights.W1_field.min();
    const double w1max = sw.weights.W1_field.max();
    CHECK(w1max / w1min >= 1e3);  // W1 spans at least three orders of magnitude
}

TEST_CASE("build_medium: checkerboard and radial sample smoothly") {
    MediumConfig cb;
    cb.preset = "checkerboard";
    cb.dim = 2;
    cb.resolution = {16, 16};
    cb.tiles = 4;
    cb.phi_regions = {0.3, 0.7};
    cb.coeff_regions = {{1.0, 2.0}, {1.0, 1.0}};
    auto mcb = build_medium(cb);
    CHECK(mcb.porosity.min() == Approx(0.3));
    CHECK(mcb.porosity.max() == Approx(0.7));

    MediumConfig rad;
    rad.preset = "radial";
    rad.dim = 2;
    rad.resolution = {16, 16};
    rad.phi_inner = 0.9;
    rad.phi_outer = 0.3;
    auto mr = build_medium(rad);
    CHECK(mr.porosity(8, 8) > 0.8);   // inside the blob
    CHECK(mr.porosity(0, 0) < 0.4);   // outside
}

TEST_CASE("check_sdc: frozen examples and algebraic equivalence") {
    Grid g = Grid::make_1d(4);
    auto two_term = ForchheimerModel::constant(g, {0.0, 1.0}, {1.0, 1.0});
    auto r3 = check_sdc(two_term, 3);
    CHECK(r3.ok);
    CHECK(r3.margin == Approx(3.0));

    auto quad = ForchheimerModel::constant(g, {0.0, 2.0}, {1.0, 1.0});
    CHECK_FALSE(check_sdc(quad, 4).ok);  // 2 < 2 fails

    CHECK(check_sdc(quad, 2).ok);        // vacuous in 2D
    CHECK(std::isinf(check_sdc(quad, 2).margin));

    // SDC <=> 2 < (2-a)* with (2-a)* = n(2-a)/(n-(2-a)), computed independently
    for (int n : {3, 4, 5}) {
        for (double alpha : {0.5, 1.0, 1.9, 2.5, 3.0}) {
            auto m = ForchheimerModel::constant(g, {0.0, alpha}, {1.0, 1.0});
            const double a = alpha / (alpha + 1.0);
            const double qs = n * (2.0 - a) / (n - (2.0 - a));
            CHECK(check_sdc(m, n).ok == (2.0 < qs));
        }
    }
}

TEST_CASE("estimate_cp: heat-mode eigenvalue oracle") {
    // 1D, φ ≡ 1, W1 ≡ 1, a = 0: sup ‖u‖₂/‖u′‖₂ = 1/π over zero-trace u
    MediumConfig cfg;
    cfg.preset = "homogeneous";
    cfg.dim = 1;
    cfg.resolution = {256, 1};
    cfg.phi_value = 1.0;
    cfg.alphas = {0.0};
    cfg.coeff_values = {1.0};
    cfg.linear_test_mode = true;
    auto medium = build_medium(cfg);
    auto est = estimate_cp(medium, 1.5, 7);
    CHECK(est.cp_empirical == Approx(1.0 / 3.14159265358979323846).epsilon(0.02));
    CHECK(est.cp_used() == Approx(1.1 * est.cp_empirical));
}

TEST_CASE("estimate_cp: empirical max stays below the formula bound") {
    MediumConfig cfg;
    cfg.preset = "layered";
    cfg.layers = 3;
    cfg.phi_regions = {0.3, 0.9, 0.6};
    cfg.coeff_regions = {{1.0, 2.0, 0.5}, {2.0, 1.0, 1.5}};
    auto medium = build_medium(cfg);
    auto est = estimate_cp(medium);
    CHECK(est.cp_empirical > 0.0);
    CHECK(est.cp_empirical <= est.cp_formula * (1.0 + 1e-9));
    CHECK(est.r > 2.0);
    CHECK(est.q > 1.0);
    CHECK(est.q < 2.0 - est.a);
    CHECK(est.q_sweep.size() == 3);

    // family growth can only raise the maximum
    auto bigger = estimate_cp(medium, 0.0, 2024, 1.1, 64);
    CHECK(bigger.cp_empirical >= est.cp_empirical - 1e-15);
}

TEST_CASE("estimate_cp: two-weight inequality holds on the family by construction") {
    auto medium = build_medium(MediumConfig::near_degenerate());
    auto est = estimate_cp(medium);
    auto fam = make_test_family(medium.grid, 2024, 16);
    for (const auto& u : fam.members)
        CHECK(two_weight_inequality_holds(medium, u, est.cp_used()));
}

TEST_CASE("estimate_cp: ratio is scale invariant") {
    auto medium = build_medium(MediumConfig{});
    const Grid& g = medium.grid;
    const double pi = 3.14159265358979323846;
    auto u = sample_field(g, [&](double x, double) { return std::sin(pi * x); });
    Field u2 = u;
    for (auto& v : u2.v) v *= 2.0;

    const double a = medium.weights.a;
    auto ratio = [&](const Field& f) {
        const Field mag = gradient_magnitude(f, zero_trace());
        return weighted_norm(f, medium.porosity, 2.0) /
               std::pow(weighted_integral(mag, medium.weights.W1_field, 2.0 - a),
                        1.0 / (2.0 - a));
    };
    CHECK(ratio(u) == Approx(ratio(u2)).epsilon(1e-12));
}
