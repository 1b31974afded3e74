#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "forchlab/constitutive.hpp"

using namespace forchlab;
using Catch::Approx;

namespace {

// Independent root oracle: plain bisection of s·g(s) = ξ on the guaranteed
// bracket [0, (ξ/a_N)^{1/(αN+1)}].
double bisect_s(const LocalLaw& law, double xi) {
    if (xi == 0.0) return 0.0;
    double lo = 0.0;
    double hi = std::pow(xi / law.aN(), 1.0 / (law.degree() + 1.0));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid * law.g(mid) > xi) hi = mid; else lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Independent H oracle: exact antiderivative of the substituted integrand in
// the root variable, H = Σ 2 a_i (α_i+1)/(α_i+2) s^{α_i+2} at s = s(ξ).
double closed_form_H(const LocalLaw& law, double xi) {
    const double s = bisect_s(law, xi);
    double acc = 0.0;
    for (size_t i = 0; i < law.a.size(); ++i) {
        const double al = (*law.alphas)[i];
        acc += 2.0 * law.a[i] * (al + 1.0) / (al + 2.0) * std::pow(s, al + 2.0);
    }
    return acc;
}

Grid tiny_grid() { return Grid::make_1d(4); }

ForchheimerModel two_term(double a0, double a1, double alpha1 = 1.0) {
    return ForchheimerModel::constant(tiny_grid(), {0.0, alpha1}, {a0, a1});
}

}  // namespace

TEST_CASE("eval_g: generalized polynomial") {
    auto m = two_term(2.0, 1.0);
    CHECK(eval_g(m, 0, 1.0) == Approx(3.0));
    CHECK(eval_g(m, 0, 0.0) == Approx(2.0));
    // three-term law α + β s + γ s²
    auto m3 = ForchheimerModel::constant(tiny_grid(), {0.0, 1.0, 2.0}, {1.0, 2.0, 1.0});
    CHECK(eval_g(m3, 0, 2.0) == Approx(9.0));
    CHECK_THROWS_AS(eval_g(m, 0, -1.0), std::domain_error);
}

TEST_CASE("model validation rejects malformed laws") {
    CHECK_THROWS_AS(ForchheimerModel::constant(tiny_grid(), {0.5, 1.0}, {1.0, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ForchheimerModel::constant(tiny_grid(), {0.0, 1.0, 0.5}, {1.0, 1.0, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ForchheimerModel::constant(tiny_grid(), {0.0, 1.0}, {0.0, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ForchheimerModel::constant(tiny_grid(), {0.0, 1.0}, {1.0, 0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ForchheimerModel::constant(tiny_grid(), {0.0, 1.0, 2.0}, {1.0, -0.5, 1.0}),
                    std::invalid_argument);
    // Darcy is allowed only behind the explicit flag
    CHECK_NOTHROW(ForchheimerModel::constant(tiny_grid(), {0.0}, {1.0}, true));
    CHECK_THROWS_AS(ForchheimerModel::constant(tiny_grid(), {0.0}, {1.0}),
                    std::invalid_argument);
}

TEST_CASE("solve_s: frozen examples") {
    CHECK(solve_s(two_term(2.0, 1.0), 0, 0.0) == 0.0);
    CHECK(solve_s(two_term(2.0, 1.0), 0, 3.0) == Approx(1.0).epsilon(1e-12));   // s² + 2s = 3
    CHECK(solve_s(two_term(1.0, 1.0, 1.5), 0, 2.0) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve_s: round-trip property against bisection oracle") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> nterms(1, 4);
    for (int rep = 0; rep < 2000; ++rep) {
        const int N = nterms(rng);
        std::vector<double> alphas{0.0}, coeffs{0.1 + 10.0 * unit(rng)};
        double prev = 0.0;
        for (int i = 1; i <= N; ++i) {
            prev += 0.05 + (3.0 - prev - 0.05) * unit(rng) / (N - i + 1);
            alphas.push_back(std::min(prev, 3.0));
            const bool zero = i < N && unit(rng) < 0.2;
            coeffs.push_back(zero ? 0.0 : 0.1 + 10.0 * unit(rng));
        }
        auto m = ForchheimerModel::constant(tiny_grid(), alphas, coeffs);
        const LocalLaw law = local_law(m, 0);
        const double s = std::exp(std::log(1e-6) + (std::log(1e3) - std::log(1e-6)) * unit(rng));
        const double xi = s * law.g(s);
        const double s_back = solve_s(law, xi);
        REQUIRE(std::fabs(s_back - s) / std::max(s, 1e-12) < 1e-10);
        // spot-check the oracle agrees
        if (rep % 100 == 0)
            CHECK(bisect_s(law, xi) == Approx(s).epsilon(1e-9));
    }
}

TEST_CASE("eval_K: values, derivative, and monotonicity") {
    auto m = two_term(2.0, 1.0);
    const LocalLaw law = local_law(m, 0);

    CHECK(eval_K(law, 0.0).K == Approx(0.5));   // K(x,0) = 1/a_0
    CHECK(eval_K(law, 3.0).K == Approx(1.0 / 3.0).epsilon(1e-12));

    // closed form for a0=a1=1: K(ξ) = 2/(1+√(1+4ξ)), K'(6) = -1/45
    auto m11 = two_term(1.0, 1.0);
    const LocalLaw law11 = local_law(m11, 0);
    const KValue kv = eval_K(law11, 6.0);
    CHECK(kv.K == Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(kv.dK_dxi == Approx(-1.0 / 45.0).margin(1e-10));
    CHECK(kv.xi_dK == Approx(-6.0 / 45.0).margin(1e-9));
    const double a = 0.5;
    CHECK(kv.xi_dK >= -a * kv.K - 1e-12);
    CHECK(kv.xi_dK <= 0.0);

    // K nonincreasing in ξ
    double prev = eval_K(law, 0.0).K;
    for (double xi : {1e-4, 1e-2, 1.0, 10.0, 1e3}) {
        const double k = eval_K(law, xi).K;
        CHECK(k <= prev + 1e-14);
        prev = k;
    }
}

TEST_CASE("eval_K: analytic derivative matches finite differences at O(h^2)") {
    auto m = ForchheimerModel::constant(tiny_grid(), {0.0, 0.8, 2.0}, {1.5, 0.7, 2.0});
    const LocalLaw law = local_law(m, 0);
    for (double xi : {0.3, 2.0, 50.0}) {
        const double exact = eval_K(law, xi).dK_dxi;
        auto fd = [&](double h) {
            return (eval_K(law, xi + h).K - eval_K(law, xi - h).K) / (2 * h);
        };
        const double h = 1e-2 * xi;
        const double e1 = std::fabs(fd(h) - exact);
        const double e2 = std::fabs(fd(h / 2) - exact);
        CHECK(e1 / e2 == Approx(4.0).epsilon(0.25));  // O(h²) ratio test
    }
}

TEST_CASE("eval_H: quadrature against the closed-form antiderivative") {
    auto m = two_term(1.0, 1.0);
    const LocalLaw law = local_law(m, 0);
    CHECK(eval_H(law, 0.0) == 0.0);

    // two-term closed form: H(ξ) = ((1+4ξ)^{3/2} - 1)/6 - ξ
    auto H2 = [](double xi) { return (std::pow(1.0 + 4.0 * xi, 1.5) - 1.0) / 6.0 - xi; };
    for (double xi : {0.1, 1.0, 7.5, 120.0}) {
        const double h = eval_H(law, xi);
        CHECK(h == Approx(H2(xi)).epsilon(1e-9));
        CHECK(h == Approx(closed_form_H(law, xi)).epsilon(1e-9));
    }
    CHECK(eval_H(law, 1.0) == Approx(0.6967233145831581).epsilon(1e-9));

    // comparison K ξ² ≤ H ≤ 2 K ξ²
    const double K1 = eval_K(law, 1.0).K;
    CHECK(K1 == Approx(0.6180339887498949).epsilon(1e-12));
    const double H1 = eval_H(law, 1.0);
    CHECK(H1 >= K1);
    CHECK(H1 <= 2.0 * K1);

    // general law: quadrature vs closed form
    auto mg = ForchheimerModel::constant(tiny_grid(), {0.0, 0.5, 2.5}, {2.0, 1.0, 0.3});
    const LocalLaw lg = local_law(mg, 0);
    for (double xi : {0.05, 1.0, 300.0})
        CHECK(eval_H(lg, xi) == Approx(closed_form_H(lg, xi)).epsilon(1e-8));

    // H nondecreasing
    CHECK(eval_H(law, 2.0) >= eval_H(law, 1.0));
}

TEST_CASE("compute_weights: frozen examples") {
    {
        auto w = compute_weights(two_term(1.0, 1.0));
        CHECK(w.defined);
        CHECK(w.a == Approx(0.5));
        CHECK(w.M_field[0] == Approx(1.0));
        CHECK(w.m_field[0] == Approx(1.0));
        CHECK(w.W1_field[0] == Approx(0.5));
        CHECK(w.W2_field[0] == Approx(1.0));
        CHECK(w.B1 == Approx(1.0));
        CHECK(w.Bstar == Approx(1.0));
    }
    {
        auto w = compute_weights(two_term(2.0, 1.0));
        CHECK(w.M_field[0] == Approx(2.0));
        CHECK(w.m_field[0] == Approx(1.0));
        CHECK(w.W1_field[0] == Approx(0.25));
        CHECK(w.W2_field[0] == Approx(2.0));
    }
    {
        // layered a1 ∈ {1, 4} with a0 ≡ 1: W1 takes values 1/2 and 1/4
        Grid g = Grid::make_1d(4);
        ForchheimerModel m;
        m.alphas = {0.0, 1.0};
        m.coeffs = {Field(g, 1.0), Field(g, 1.0)};
        m.coeffs[1](2) = 4.0;
        m.coeffs[1](3) = 4.0;
        m.validate();
        auto w = compute_weights(m);
        CHECK(w.W1_field[0] == Approx(0.5));
        CHECK(w.W1_field[2] == Approx(0.25));
    }
    {
        // linear test mode yields the refused sentinel
        auto w = compute_weights(ForchheimerModel::constant(tiny_grid(), {0.0}, {1.0}, true));
        CHECK_FALSE(w.defined);
    }
}

TEST_CASE("weights invariant: W1·a_N^{2-a} <= a_N/2 pointwise") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double a0 = 0.1 + 10 * unit(rng), a1 = 0.1 + 10 * unit(rng);
        const double alpha = 0.2 + 2.8 * unit(rng);
        auto m = two_term(a0, a1, alpha);
        auto w = compute_weights(m);
        const double aN = a1;
        CHECK(w.W1_field[0] * std::pow(aN, 2.0 - w.a) <= aN / 2.0 + 1e-12);
        CHECK(w.W1_field[0] > 0.0);
        CHECK(w.W2_field[0] > 0.0);
        CHECK(w.Bstar >= 1.0);
    }
}

TEST_CASE("verify_pointwise_bounds: explicit sample and battery") {
    // frozen example at ξ=6, a0=a1=1: 2·0.5/(√6+1) ≤ K = 1/3 ≤ 1/√6
    auto m = two_term(1.0, 1.0);
    const LocalLaw law = local_law(m, 0);
    const double K6 = eval_K(law, 6.0).K;
    CHECK(2.0 * 0.5 / (std::sqrt(6.0) + 1.0) == Approx(0.2898979).epsilon(1e-6));
    CHECK(K6 == Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(1.0 / std::sqrt(6.0) == Approx(0.4082483).epsilon(1e-6));
    CHECK(2.0 * 0.5 / (std::sqrt(6.0) + 1.0) <= K6);
    CHECK(K6 <= 1.0 / std::sqrt(6.0));

    SamplingPlan plan;
    plan.samples_per_family = 2000;
    plan.seed = 99;
    auto rep = verify_pointwise_bounds(m, plan);
    for (const auto& fam : rep.families) {
        INFO(fam.name << " worst slack " << fam.worst_slack << " at xi=" << fam.worst_xi);
        CHECK(fam.violations == 0);
    }
    CHECK(rep.pass());

    CHECK_THROWS_AS(
        verify_pointwise_bounds(ForchheimerModel::constant(tiny_grid(), {0.0}, {1.0}, true), plan),
        std::invalid_argument);
}

TEST_CASE("verify_pointwise_bounds: property over random models") {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> nterms(1, 4);
    for (int rep = 0; rep < 12; ++rep) {
        const int N = nterms(rng);
        std::vector<double> alphas{0.0}, coeffs{0.2 + 5.0 * unit(rng)};
        double prev = 0.0;
        for (int i = 1; i <= N; ++i) {
            prev += 0.1 + 0.7 * unit(rng);
            alphas.push_back(std::min(prev, 3.0));
            coeffs.push_back(i < N && unit(rng) < 0.25 ? 0.0 : 0.2 + 5.0 * unit(rng));
        }
        auto m = ForchheimerModel::constant(tiny_grid(), alphas, coeffs);
        SamplingPlan plan;
        plan.samples_per_family = 500;
        plan.seed = 1000 + rep;
        auto report = verify_pointwise_bounds(m, plan);
        INFO("model " << rep << " N=" << N << " degree=" << m.degree());
        CHECK(report.pass());
    }
}
