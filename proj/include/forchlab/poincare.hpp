#pragma once

/**
 * @file poincare.hpp
 * @brief Strict Degree Condition and the two-weight Poincaré–Sobolev constant.
 *
 * The estimate machinery rests on ‖u‖_{L²_φ} ≤ c_P ‖∇u‖_{L^{2-a}_{W1}} for
 * zero-trace u. estimate_cp produces two values: cp_formula from the Hölder /
 * Sobolev chain
 *
 *   c_P = c (∫ W1^{-q/(2-a-q)})^{(2-a-q)/((2-a)q)} (∫ φ^{r/(r-2)})^{(r-2)/(2r)}
 *
 * with a measured discrete Sobolev constant c, and cp_empirical, the maximum
 * of the raw ratio over a family of zero-trace test functions (eigenmode
 * seeds plus seeded random bumps). Downstream envelopes use
 * cp_used = safety_factor · cp_empirical.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "forchlab/medium.hpp"
#include "forchlab/norms.hpp"
#include "forchlab/solver.hpp"

namespace forchlab {

struct SdcResult {
    bool ok = false;
    double margin = 0.0;  // 4/(n-2) - deg(g); +inf when n <= 2
};

// Strict Degree Condition deg(g) < 4/(n-2); vacuous for n = 2 (and 1D grids).
inline SdcResult check_sdc(const ForchheimerModel& model, int n) {
    if (n < 1) throw std::invalid_argument("check_sdc: dimension must be >= 1");
    SdcResult r;
    const double deg = model.linear_test_mode ? 0.0 : model.degree();
    if (n <= 2) {
        r.ok = true;
        r.margin = std::numeric_limits<double>::infinity();
        return r;
    }
    r.margin = 4.0 / (n - 2) - deg;
    r.ok = r.margin > 0.0;
    return r;
}

struct EstimateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PoincareEstimate {
    double a = 0.0;
    double q = 0.0;
    double r = 0.0;           // q* = nq/(n-q) for n >= 2, fixed 4 on 1D grids
    double sobolev_c = 0.0;   // measured discrete constant of ‖u‖_r <= c ‖∇u‖_q
    double cp_formula = 0.0;
    double cp_empirical = 0.0;
    double safety_factor = 1.1;
    std::vector<std::pair<double, double>> q_sweep;  // (q, cp_formula at q)

    double cp_used() const { return safety_factor * cp_empirical; }
};

struct TestFunctionFamily {
    std::vector<Field> members;  // zero-trace candidates on the medium grid
};

namespace poincare_detail {

// Stiffness system -∇·(w ∇u) with zero trace (harmonic face means, half-cell
// boundary faces), shared with the solver's stencil.
inline detail::FvSystem weighted_stiffness(const Grid& g, const Field& w) {
    detail::FvSystem A;
    A.grid = &g;
    const int n0 = g.n[0], n1 = g.n[1];
    A.diag.assign(size_t(g.num_cells()), 0.0);
    A.T0.assign(size_t(n0 + 1) * n1, 0.0);
    if (g.dim == 2) A.T1.assign(size_t(n0) * (n1 + 1), 0.0);
    const double h0 = g.spacing(0), a0 = g.face_area(0);
    for (int j = 0; j < n1; ++j)
        for (int f = 0; f <= n0; ++f) {
            double wf, T;
            if (f == 0 || f == n0) {
                wf = w(f == 0 ? 0 : n0 - 1, j);
                T = wf * a0 / (0.5 * h0);
                A.diag[size_t(g.cell_index(f == 0 ? 0 : n0 - 1, j))] += T;
            } else {
                const double wl = w(f - 1, j), wr = w(f, j);
                wf = 2.0 * wl * wr / (wl + wr);
                T = wf * a0 / h0;
                A.T0[size_t(j) * (n0 + 1) + f] = T;
                A.diag[size_t(g.cell_index(f - 1, j))] += T;
                A.diag[size_t(g.cell_index(f, j))] += T;
            }
        }
    if (g.dim == 2) {
        const double h1 = g.spacing(1), a1 = g.face_area(1);
        for (int f = 0; f <= n1; ++f)
            for (int i = 0; i < n0; ++i) {
                if (f == 0 || f == n1) {
                    const double T = w(i, f == 0 ? 0 : n1 - 1) * a1 / (0.5 * h1);
                    A.diag[size_t(g.cell_index(i, f == 0 ? 0 : n1 - 1))] += T;
                } else {
                    const double wl = w(i, f - 1), wr = w(i, f);
                    const double T = (2.0 * wl * wr / (wl + wr)) * a1 / h1;
                    A.T1[size_t(f) * n0 + i] = T;
                    A.diag[size_t(g.cell_index(i, f - 1))] += T;
                    A.diag[size_t(g.cell_index(i, f))] += T;
                }
            }
    }
    return A;
}

/**
 * Seeds aimed at the maximizer of ‖u‖_{L²_φ}/‖∇u‖_{L^{2-a}_{W1}}: inverse
 * power iterations of -∇·(W̃∇u) = λφu, with W̃ refreshed from the previous
 * iterate as W1(|∇u|+ε)^{-a} so the linearization tracks the nonlinear
 * Rayleigh quotient. Concentrates where W1 is small, which sine modes and
 * random bumps miss on strongly heterogeneous media.
 */
inline std::vector<Field> eigen_seeds(const MediumSpec& medium, const Field& W1, double a,
                                      int outer = 3) {
    const Grid& g = medium.grid;
    std::vector<Field> seeds;
    Field Wt = W1;
    Field u(g, 1.0);
    for (int o = 0; o <= outer; ++o) {
        const detail::FvSystem A = weighted_stiffness(g, Wt);
        for (int it = 0; it < 8; ++it) {
            std::vector<double> rhs(u.size());
            const double V = g.cell_volume();
            for (size_t k = 0; k < u.size(); ++k) rhs[k] = medium.porosity[k] * u[k] * V;
            std::vector<double> x = u.v;
            detail::solve_system(A, rhs, x, 1e-10);
            double nrm = 0.0;
            for (double v : x) nrm = std::max(nrm, std::fabs(v));
            if (!(nrm > 0.0)) break;
            for (size_t k = 0; k < u.size(); ++k) u[k] = x[k] / nrm;
        }
        seeds.push_back(u);
        if (o < outer && a > 0.0) {
            const Field mag = gradient_magnitude(u, zero_trace());
            const double floor = 1e-3 * std::max(mag.max(), 1e-12);
            for (size_t k = 0; k < u.size(); ++k)
                Wt[k] = W1[k] * std::pow(mag[k] + floor, -a);
        }
    }
    return seeds;
}

}  // namespace poincare_detail

/**
 * Zero-trace test functions: tensor sine eigenmode seeds, random mode
 * combinations, and randomly placed Gaussian bumps under a sine window.
 */
inline TestFunctionFamily make_test_family(const Grid& g, std::uint64_t seed,
                                           int random_members = 32) {
    TestFunctionFamily fam;
    const double pi = 3.14159265358979323846;
    auto xhat = [&](double x) { return (x - g.lo[0]) / (g.hi[0] - g.lo[0]); };
    auto yhat = [&](double y) {
        return g.dim == 2 ? (y - g.lo[1]) / (g.hi[1] - g.lo[1]) : 0.5;
    };

    const int kmax = 4;
    for (int k = 1; k <= kmax; ++k) {
        if (g.dim == 1) {
            fam.members.push_back(sample_field(
                g, [&](double x, double) { return std::sin(k * pi * xhat(x)); }));
        } else {
            for (int l = 1; l <= kmax; ++l)
                fam.members.push_back(sample_field(g, [&](double x, double y) {
                    return std::sin(k * pi * xhat(x)) * std::sin(l * pi * yhat(y));
                }));
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int m = 0; m < random_members; ++m) {
        if (m % 2 == 0) {
            // Gaussian bump × sine window (zero trace by the window)
            const double cx = 0.2 + 0.6 * unit(rng), cy = 0.2 + 0.6 * unit(rng);
            const double sx = 0.05 + 0.25 * unit(rng), sy = 0.05 + 0.25 * unit(rng);
            fam.members.push_back(sample_field(g, [&](double x, double y) {
                const double gx = std::exp(-0.5 * std::pow((xhat(x) - cx) / sx, 2));
                const double gy = g.dim == 2
                                      ? std::exp(-0.5 * std::pow((yhat(y) - cy) / sy, 2))
                                      : 1.0;
                double v = gx * gy * std::sin(pi * xhat(x));
                if (g.dim == 2) v *= std::sin(pi * yhat(y));
                return v;
            }));
        } else {
            // random combination of low modes
            std::vector<double> c(4);
            for (auto& ci : c) ci = 2.0 * unit(rng) - 1.0;
            fam.members.push_back(sample_field(g, [&](double x, double y) {
                double v = 0.0;
                for (int k = 1; k <= 4; ++k) {
                    double mode = std::sin(k * pi * xhat(x));
                    if (g.dim == 2) mode *= std::sin(((k + m) % 4 + 1) * pi * yhat(y));
                    v += c[size_t(k - 1)] * mode;
                }
                return v;
            }));
        }
    }
    return fam;
}

/**
 * Estimate the two-weight constant. `q` <= 0 picks the default midpoint of
 * (1, 2-a), clipped so q* > 2. In linear test mode the weight W1 degenerates
 * to the unweighted Poincaré setting (a = 0, W1 ≡ 1).
 */
inline PoincareEstimate estimate_cp(const MediumSpec& medium, double q = 0.0,
                                    std::uint64_t seed = 2024, double safety_factor = 1.1,
                                    int random_members = 32) {
    const Grid& g = medium.grid;
    const int n = g.dim;
    const SdcResult sdc = check_sdc(medium.model, std::max(n, 2));
    if (!sdc.ok)
        throw EstimateError("estimate_cp: Strict Degree Condition fails for this model");

    PoincareEstimate est;
    est.safety_factor = safety_factor;
    const bool linear = medium.model.linear_test_mode;
    est.a = linear ? 0.0 : medium.weights.a;
    Field W1 = linear ? Field(g, 1.0) : medium.weights.W1_field;

    const double two_minus_a = 2.0 - est.a;
    if (q <= 0.0) q = 0.5 * (1.0 + two_minus_a);
    if (!(q > 1.0) || !(q < two_minus_a))
        throw EstimateError("estimate_cp: q must lie in (1, 2-a)");
    est.q = q;
    est.r = n >= 2 ? n * q / (n - q) : 4.0;
    if (est.r <= 2.0) throw EstimateError("estimate_cp: q* must exceed 2");

    // Hölder-chain weight integrals; an effectively divergent W1 integral
    // means the chosen preset is outside the usable class.
    auto formula_at = [&](double qq) {
        const double rr = n >= 2 ? n * qq / (n - qq) : 4.0;
        double i1 = 0.0, i2 = 0.0;
        const double e1 = -qq / (two_minus_a - qq);
        const double e2 = rr / (rr - 2.0);
        for (size_t k = 0; k < W1.size(); ++k) {
            i1 += std::pow(W1[k], e1);
            i2 += std::pow(medium.porosity[k], e2);
        }
        i1 *= g.cell_volume();
        i2 *= g.cell_volume();
        if (!std::isfinite(i1) || i1 > 1e100)
            throw EstimateError(
                "estimate_cp: weight integral diverges (W1 too close to zero); "
                "choose a different medium preset");
        return std::pow(i1, (two_minus_a - qq) / (two_minus_a * qq)) *
               std::pow(i2, (rr - 2.0) / (2.0 * rr));
    };

    TestFunctionFamily fam = make_test_family(g, seed, random_members);
    {
        auto seeds = poincare_detail::eigen_seeds(medium, W1, est.a);
        fam.members.insert(fam.members.end(), seeds.begin(), seeds.end());
    }
    double best_ratio = 0.0, best_sobolev = 0.0;
    for (const Field& u : fam.members) {
        const Field mag = gradient_magnitude(u, zero_trace());
        const double den_w = std::pow(weighted_integral(mag, W1, two_minus_a),
                                      1.0 / two_minus_a);
        const double num_w = weighted_norm(u, medium.porosity, 2.0);
        if (den_w > 1e-14 && num_w > 0.0)  // u ≡ 0 guarded out
            best_ratio = std::max(best_ratio, num_w / den_w);
        const double den_s = lp_norm(mag, est.q);
        const double num_s = lp_norm(u, est.r);
        if (den_s > 1e-14 && num_s > 0.0)
            best_sobolev = std::max(best_sobolev, num_s / den_s);
    }
    est.cp_empirical = best_ratio;
    est.sobolev_c = best_sobolev;
    est.cp_formula = best_sobolev * formula_at(q);

    // sensitivity of the formula to the free exponent q
    for (double frac : {0.25, 0.5, 0.75}) {
        const double qq = 1.0 + frac * (two_minus_a - 1.0);
        est.q_sweep.emplace_back(qq, best_sobolev * formula_at(qq));
    }
    return est;
}

// The monitored working form of the two-weight inequality, applied to actual
// solver states downstream: ‖u‖_{L²_φ} ≤ cp · ‖∇u‖_{L^{2-a}_{W1}}.
inline bool two_weight_inequality_holds(const MediumSpec& medium, const Field& u,
                                        double cp, double slack = 1e-9) {
    const bool linear = medium.model.linear_test_mode;
    const double a = linear ? 0.0 : medium.weights.a;
    const Field W1 = linear ? Field(medium.grid, 1.0) : medium.weights.W1_field;
    const Field mag = gradient_magnitude(u, zero_trace());
    const double lhs = weighted_norm(u, medium.porosity, 2.0);
    const double rhs = cp * std::pow(weighted_integral(mag, W1, 2.0 - a), 1.0 / (2.0 - a));
    return lhs <= rhs + slack * std::max(lhs, rhs);
}

}  // namespace forchlab
