#include "catch_amalgamated.hpp"

#include <cmath>

#include "forchlab/grid.hpp"
#include "forchlab/norms.hpp"

using namespace forchlab;
using Catch::Approx;

TEST_CASE("grid: construction and invariants") {
    Grid g1 = Grid::make_1d(8);
    CHECK(g1.num_cells() == 8);
    CHECK(g1.spacing(0) == Approx(0.125));
    CHECK(g1.cell_volume() == Approx(0.125));
    CHECK(g1.center(0, 0) == Approx(0.0625));

    Grid g2 = Grid::make_2d(8, 4, 0.0, 2.0, 0.0, 1.0);
    CHECK(g2.num_cells() == 32);
    CHECK(g2.spacing(0) == Approx(0.25));
    CHECK(g2.spacing(1) == Approx(0.25));
    CHECK(g2.face_area(0) == Approx(0.25));

    CHECK_THROWS_AS(Grid::make_1d(3), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make_1d(8, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("gradients: linear field reproduced exactly") {
    Grid g = Grid::make_2d(16, 16);
    auto u = sample_field(g, [](double x, double y) { return 3.0 * x - 2.0 * y + 1.0; });
    auto trace = trace_of([](double x, double y) { return 3.0 * x - 2.0 * y + 1.0; });
    auto grad = cell_gradient(u, trace);
    for (size_t k = 0; k < u.size(); ++k) {
        CHECK(grad[0][k] == Approx(3.0).margin(1e-12));
        CHECK(grad[1][k] == Approx(-2.0).margin(1e-12));
    }
    auto mag = gradient_magnitude(u, trace);
    CHECK(mag[0] == Approx(std::sqrt(13.0)).margin(1e-12));
}

TEST_CASE("gradients: sin(pi x) converges at second order") {
    const double pi = 3.14159265358979323846;
    auto err_at = [&](int n) {
        Grid g = Grid::make_1d(n);
        auto u = sample_field(g, [&](double x, double) { return std::sin(pi * x); });
        auto grad = cell_gradient(u, zero_trace());
        double emax = 0.0;
        for (int i = 0; i < n; ++i)
            emax = std::max(emax, std::fabs(grad[0](i) - pi * std::cos(pi * g.center(0, i))));
        return emax;
    };
    const double e1 = err_at(32), e2 = err_at(64);
    CHECK(e1 / e2 > 3.0);  // ~4 for O(h²)
}

TEST_CASE("weighted_norm: frozen examples") {
    Grid g = Grid::make_1d(64);
    Field one(g, 1.0), two(g, 2.0), half(g, 0.5);
    CHECK(weighted_norm(one, one, 2.0) == Approx(1.0));
    CHECK(weighted_norm(two, half, 2.0) == Approx(std::sqrt(2.0)));

    const double pi = 3.14159265358979323846;
    auto s = sample_field(g, [&](double x, double) { return std::sin(pi * x); });
    CHECK(weighted_norm(s, one, 2.0) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));

    Grid other = Grid::make_1d(32);
    Field mismatched(other, 1.0);
    CHECK_THROWS_AS(weighted_norm(s, mismatched, 2.0), std::invalid_argument);
}

TEST_CASE("weighted integrals") {
    Grid g = Grid::make_1d(128);
    auto x2 = sample_field(g, [](double x, double) { return x * x; });
    Field one(g, 1.0);
    CHECK(integrate(x2) == Approx(1.0 / 3.0).epsilon(1e-4));
    CHECK(weighted_integral(x2, one, 1.0) == Approx(1.0 / 3.0).epsilon(1e-4));
    // ∫ w |u|^p with w = u = x²,{p=2}: ∫ x⁶ = 1/7
    CHECK(weighted_integral(x2, x2, 2.0) == Approx(1.0 / 7.0).epsilon(1e-3));
}
