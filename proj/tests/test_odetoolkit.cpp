#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "forchlab/odetoolkit.hpp"

using namespace forchlab;
using Catch::Approx;

TEST_CASE("phi_spec: forms and inverse round trip") {
    auto id = PhiSpec::identity();
    CHECK(id.phi(3.0) == Approx(3.0));
    CHECK(id.phi_inv(3.0) == Approx(3.0));

    auto pw = PhiSpec::power(2.0, 4.0 / 3.0);
    CHECK(pw.phi(8.0) == Approx(2.0 * std::pow(8.0, 4.0 / 3.0)));
    CHECK(pw.phi_inv(pw.phi(8.0)) == Approx(8.0));

    auto mx = PhiSpec::mixed(1.0, 1.5);
    for (double z : {1e-6, 0.37, 1.0, 42.0, 1e6})
        CHECK(mx.phi(mx.phi_inv(z)) == Approx(z).epsilon(1e-12));
    CHECK_THROWS_AS(PhiSpec::mixed(1.0, 2.5), std::invalid_argument);
}

TEST_CASE("gronwall_linear_envelope: closed forms") {
    auto times = uniform_times(0.0, 5.0, 2001);
    const double y0 = 3.0, M = 2.0;
    std::vector<double> h(times.size(), 1.0), f(times.size(), M);
    auto E = gronwall_linear_envelope(y0, h, f, times);
    for (size_t k = 0; k < times.size(); k += 200) {
        const double t = times[k];
        const double exact = y0 * std::exp(-t) + M * (1.0 - std::exp(-t));
        CHECK(E.values[k] == Approx(exact).epsilon(1e-5));
    }

    std::vector<double> zero(times.size(), 0.0);
    auto Ef0 = gronwall_linear_envelope(y0, h, zero, times);
    CHECK(Ef0.values.back() == Approx(y0 * std::exp(-5.0)).epsilon(1e-5));

    auto Eh0 = gronwall_linear_envelope(y0, zero, f, times);
    CHECK(Eh0.values.back() == Approx(y0 + M * 5.0).epsilon(1e-9));
}

TEST_CASE("gronwall_linear_envelope dominates subsolutions (property)") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto times = uniform_times(0.0, 4.0, 1601);
    for (int rep = 0; rep < 20; ++rep) {
        // random piecewise-linear h > 0 and f ≥ 0 over 5 knots
        std::vector<double> hk(5), fk(5);
        for (auto& v : hk) v = 0.1 + 3.0 * unit(rng);
        for (auto& v : fk) v = 2.0 * unit(rng);
        auto interp = [&](const std::vector<double>& knots, double t) {
            const double s = t / 4.0 * (knots.size() - 1);
            const size_t i = std::min(size_t(s), knots.size() - 2);
            const double w = s - double(i);
            return (1 - w) * knots[i] + w * knots[i + 1];
        };
        const double shrink = unit(rng);  // f̃ = shrink · f ≤ f
        const double y0 = 3.0 * unit(rng);
        auto y = integrate_ode(
            y0, [&](double t, double v) { return -interp(hk, t) * v + shrink * interp(fk, t); },
            times, 4);
        std::vector<double> h(times.size()), f(times.size());
        for (size_t k = 0; k < times.size(); ++k) {
            h[k] = interp(hk, times[k]);
            f[k] = interp(fk, times[k]);
        }
        auto E = gronwall_linear_envelope(y0, h, f, times);
        for (size_t k = 0; k < times.size(); k += 37)
            CHECK(y.values[k] <= E.values[k] * (1.0 + 1e-6) + 1e-12);
    }
}

TEST_CASE("lemma A1: closed-form and power-phi trajectories") {
    auto times = uniform_times(0.0, 30.0, 3001);
    const double y0 = 3.0, M = 2.0;

    // identity φ, h ≡ 1, f ≡ M: y = y0 e^{-t} + M(1-e^{-t}) ≤ y0 + M
    ScalarTrajectory y;
    y.times = times;
    y.values.resize(times.size());
    for (size_t k = 0; k < times.size(); ++k)
        y.values[k] = y0 * std::exp(-times[k]) + M * (1.0 - std::exp(-times[k]));
    std::vector<double> h(times.size(), 1.0), f(times.size(), M), Mser(times.size(), M);
    auto out = check_lemma_a1(y, h, f, PhiSpec::identity(), Mser);
    CHECK(out.verdict == Verdict::PASS);

    // y ≡ 0, f ≡ 0 passes trivially
    ScalarTrajectory z;
    z.times = times;
    z.values.assign(times.size(), 0.0);
    std::vector<double> zf(times.size(), 0.0), zM(times.size(), 0.0);
    CHECK(check_lemma_a1(z, h, zf, PhiSpec::identity(), zM).verdict == Verdict::PASS);

    // φ(z) = z², y' = -√y + 1 from y0 = 4: tail ≤ φ(1) = 1
    auto yp = integrate_ode(
        4.0, [](double, double v) { return -std::sqrt(v) + 1.0; }, times, 4);
    std::vector<double> f1(times.size(), 1.0), M1(times.size(), 1.0);
    auto out2 = check_lemma_a1(yp, h, f1, PhiSpec::power(1.0, 2.0), M1);
    CHECK(out2.verdict == Verdict::PASS);
    const double tail = ode_detail::tail_max(times, yp.values, 0.25);
    CHECK(tail <= 1.0 + 1e-3);  // limsup surrogate carries the transient remainder

    // violated hypothesis -> INCONCLUSIVE (y grows against a zero forcing)
    ScalarTrajectory grow;
    grow.times = times;
    grow.values.resize(times.size());
    for (size_t k = 0; k < times.size(); ++k) grow.values[k] = times[k];
    auto bad = check_lemma_a1(grow, h, zf, PhiSpec::identity(), zM);
    CHECK(bad.verdict == Verdict::INCONCLUSIVE);
}

TEST_CASE("lemma A2: literal constant and oscillatory forcing") {
    const double c = 1.0, gamma = 1.5;
    auto phi = PhiSpec::mixed(c, gamma);
    const double C = 3.0 * std::pow(32.0 * (1.0 + c), 2.0 / (2.0 - gamma));
    CHECK(C == Approx(50331648.0));  // 3·64⁴

    auto times = uniform_times(0.0, 40.0, 4001);
    std::vector<double> f(times.size());
    for (size_t k = 0; k < times.size(); ++k) f[k] = 2.0 + std::sin(times[k]);
    auto y = integrate_ode(
        10.0,
        [&](double t, double v) { return -phi.phi_inv(v) + 2.0 + std::sin(t); },
        times, 4);
    auto out = check_lemma_a2(y, f, phi);
    CHECK(out.verdict == Verdict::PASS);
    CHECK(out.beta == Approx(1.0).epsilon(0.05));
    CHECK(std::isfinite(out.discovered_T));

    // f ≡ 0, y0 = 0 -> y ≡ 0 ≤ C
    ScalarTrajectory z;
    z.times = times;
    z.values.assign(times.size(), 0.0);
    std::vector<double> zf(times.size(), 0.0);
    CHECK(check_lemma_a2(z, zf, phi).verdict == Verdict::PASS);
}

TEST_CASE("lemma A3: weighted tail comparison") {
    auto times = uniform_times(0.0, 40.0, 4001);
    std::vector<double> h(times.size(), 1.0), f(times.size(), 1.0), g(times.size());
    for (size_t k = 0; k < times.size(); ++k) g[k] = 1.0 + 1.0 / (1.0 + times[k]);

    auto y = integrate_ode(0.0, [](double, double v) { return -v + 1.0; }, times, 4);
    auto out = check_lemma_a3(y, h, f, g);
    CHECK(out.verdict == Verdict::PASS);

    // g ≡ 1 reduces to A1(ii) with identity φ: limsup y ≤ M
    std::vector<double> gone(times.size(), 1.0);
    auto outg1 = check_lemma_a3(y, h, f, gone);
    auto outa1 = check_lemma_a1(y, h, f, PhiSpec::identity(), f);
    CHECK(outg1.verdict == outa1.verdict);

    // f ≡ 0: tail of g·y decays to zero
    auto y0run = integrate_ode(5.0, [](double, double v) { return -v; }, times, 4);
    std::vector<double> zf(times.size(), 0.0);
    CHECK(check_lemma_a3(y0run, h, zf, g).verdict == Verdict::PASS);

    // short horizon cannot certify ∫h = ∞ -> INCONCLUSIVE
    auto short_times = uniform_times(0.0, 2.0, 201);
    std::vector<double> hs(short_times.size(), 1.0), fs(short_times.size(), 1.0),
        gs(short_times.size(), 1.0);
    auto ys = integrate_ode(0.0, [](double, double v) { return -v + 1.0; }, short_times, 4);
    CHECK(check_lemma_a3(ys, hs, fs, gs).verdict == Verdict::INCONCLUSIVE);
}

TEST_CASE("lemma A4: slope bound beyond a threshold") {
    // f = 1/t on [1, 40]: β ≈ 0, bound with slope 1
    auto times = uniform_times(1.0, 40.0, 2001);
    ScalarTrajectory f;
    f.times = times;
    f.values.resize(times.size());
    for (size_t k = 0; k < times.size(); ++k) f.values[k] = 1.0 / times[k];
    auto out = check_lemma_a4(f);
    CHECK(out.verdict == Verdict::PASS);
    CHECK(out.beta < 0.05);

    // constant f: β = 0, equality-free pass
    ScalarTrajectory c;
    c.times = times;
    c.values.assign(times.size(), 3.3);
    auto outc = check_lemma_a4(c);
    CHECK(outc.verdict == Verdict::PASS);
    CHECK(outc.beta == 0.0);

    // f = 2 + sin t: β ≈ 1, slope β+1 = 2 works on the tail
    auto times2 = uniform_times(0.0, 60.0, 6001);
    ScalarTrajectory s;
    s.times = times2;
    s.values.resize(times2.size());
    for (size_t k = 0; k < times2.size(); ++k) s.values[k] = 2.0 + std::sin(times2[k]);
    auto outs = check_lemma_a4(s);
    CHECK(outs.verdict == Verdict::PASS);
    CHECK(outs.beta == Approx(1.0).epsilon(0.05));
}

TEST_CASE("checkers are monotone in tolerance") {
    auto times = uniform_times(0.0, 30.0, 1501);
    std::vector<double> h(times.size(), 1.0), f(times.size(), 1.0);
    auto y = integrate_ode(2.0, [](double, double v) { return -v + 1.0; }, times, 4);
    for (double tol : {1e-8, 1e-6, 1e-3, 1e-1}) {
        CheckerOptions opt;
        opt.tol = tol;
        auto out = check_lemma_a1(y, h, f, PhiSpec::identity(), f, opt);
        CHECK(out.verdict == Verdict::PASS);
    }
}
