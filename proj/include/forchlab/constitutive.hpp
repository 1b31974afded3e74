#pragma once

/**
 * @file constitutive.hpp
 * @brief Forchheimer constitutive law and everything derived from it.
 *
 * The momentum law is g(x,|v|) v = -∇p with
 *
 *   g(x,s) = a_0(x) + a_1(x) s^α1 + ... + a_N(x) s^αN,   0 = α0 < α1 < ... < αN,
 *
 * a_i(x) ≥ 0 and a_0, a_N > 0. Inverting s·g(x,s) = ξ gives the nonlinear
 * conductivity K(x,ξ) = 1/g(x,s(x,ξ)) of the pressure equation, its
 * ξ-derivative, the energy density H(x,ξ) = ∫_0^{ξ²} K(x,√σ) dσ, and the
 * weight functions W1, W2 used by all weighted norms:
 *
 *   W1 = a_N^a / (2 N M),   W2 = N M / (m a_N^{1-a}),   a = αN/(αN+1),
 *   M = max_i a_i,          m = min{a_0, a_N}.
 *
 * verify_pointwise_bounds samples the two-sided K bounds, the derivative
 * bound -aK ≤ ξ K_ξ ≤ 0, the H comparisons and the monotonicity of the flux
 * map y ↦ K(|y|) y, reporting worst-case slack ratios.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "forchlab/grid.hpp"

namespace forchlab {

struct SolveTolerances {
    double rtol = 1e-12;   // root solve: |s g(s) - xi| <= rtol * max(xi, atol)
    double atol = 1e-14;
    double qtol = 1e-10;   // H quadrature, relative
    int max_iter = 128;
};

struct ForchheimerModel {
    std::vector<double> alphas;   // α0 = 0 < α1 < ... < αN
    std::vector<Field> coeffs;    // a_i(x) sampled on the grid, same order
    bool linear_test_mode = false;  // g ≡ a_0 (Darcy); outside the model class
    SolveTolerances tol;

    int num_terms() const { return int(alphas.size()) - 1; }  // N
    double degree() const { return alphas.back(); }           // αN
    const Grid& grid() const { return coeffs.at(0).grid; }

    static ForchheimerModel constant(const Grid& g, const std::vector<double>& alphas,
                                     const std::vector<double>& values,
                                     bool linear = false) {
        if (alphas.size() != values.size())
            throw std::invalid_argument("ForchheimerModel: alphas/coeffs size mismatch");
        ForchheimerModel m;
        m.alphas = alphas;
        m.linear_test_mode = linear;
        for (double c : values) m.coeffs.emplace_back(g, c);
        m.validate();
        return m;
    }

    void validate() const {
        if (alphas.empty() || coeffs.empty() || alphas.size() != coeffs.size())
            throw std::invalid_argument("ForchheimerModel: needs matching alphas and coefficient fields");
        if (alphas.front() != 0.0)
            throw std::invalid_argument("ForchheimerModel: alpha_0 must be 0");
        for (size_t i = 1; i < alphas.size(); ++i)
            if (!(alphas[i] > alphas[i - 1]))
                throw std::invalid_argument("ForchheimerModel: exponents must satisfy alpha_0=0<alpha_1<...<alpha_N");
        if (!linear_test_mode && alphas.size() < 2)
            throw std::invalid_argument("ForchheimerModel: N >= 1 required (use linear_test_mode for Darcy)");
        const Grid& g = coeffs.front().grid;
        for (const Field& f : coeffs)
            if (!f.grid.same_shape(g))
                throw std::invalid_argument("ForchheimerModel: coefficient fields on different grids");
        for (size_t k = 0; k < coeffs.front().size(); ++k) {
            if (!(coeffs.front()[k] > 0.0))
                throw std::invalid_argument("ForchheimerModel: a_0 must be positive everywhere");
            if (!linear_test_mode && !(coeffs.back()[k] > 0.0))
                throw std::invalid_argument("ForchheimerModel: a_N must be positive everywhere");
            for (size_t i = 1; i + 1 < coeffs.size(); ++i)
                if (coeffs[i][k] < 0.0)
                    throw std::invalid_argument("ForchheimerModel: intermediate coefficients must be nonnegative");
        }
    }
};

/**
 * Coefficients of g at one grid cell; all pointwise constitutive evaluations
 * go through this view so the math is independent of field storage.
 */
struct LocalLaw {
    const std::vector<double>* alphas;
    std::vector<double> a;       // coefficient values at the cell
    bool linear = false;
    SolveTolerances tol;

    double g(double s) const {
        if (s < 0.0) throw std::domain_error("eval_g: negative speed");
        double acc = a[0];
        if (linear) return acc;
        for (size_t i = 1; i < a.size(); ++i)
            if (a[i] != 0.0) acc += a[i] * std::pow(s, (*alphas)[i]);
        return acc;
    }
    // g'(s); for α1 < 1 this blows up at s = 0, callers use s·g'(s) instead.
    double gprime(double s) const {
        if (linear) return 0.0;
        double acc = 0.0;
        for (size_t i = 1; i < a.size(); ++i)
            if (a[i] != 0.0) acc += a[i] * (*alphas)[i] * std::pow(s, (*alphas)[i] - 1.0);
        return acc;
    }
    double s_gprime(double s) const {
        if (linear) return 0.0;
        double acc = 0.0;
        for (size_t i = 1; i < a.size(); ++i)
            if (a[i] != 0.0) acc += a[i] * (*alphas)[i] * std::pow(s, (*alphas)[i]);
        return acc;
    }
    double aN() const { return a.back(); }
    double degree() const { return linear ? 0.0 : alphas->back(); }
    double exponent_a() const {
        const double d = degree();
        return d / (d + 1.0);
    }
};

inline LocalLaw local_law(const ForchheimerModel& m, std::int64_t cell) {
    LocalLaw l;
    l.alphas = &m.alphas;
    l.a.resize(m.coeffs.size());
    for (size_t i = 0; i < m.coeffs.size(); ++i) l.a[i] = m.coeffs[i][size_t(cell)];
    l.linear = m.linear_test_mode;
    l.tol = m.tol;
    return l;
}

struct RootSolveError : std::runtime_error {
    double bracket_lo, bracket_hi;
    RootSolveError(const std::string& msg, double lo, double hi)
        : std::runtime_error(msg), bracket_lo(lo), bracket_hi(hi) {}
};

/**
 * Unique nonnegative root of s·g(x,s) = ξ. Bracketed Newton with bisection
 * fallback on [0, (ξ/a_N)^{1/(αN+1)}]; the upper end is a guaranteed bracket
 * since s g(s) ≥ a_N s^{αN+1}.
 */
inline double solve_s(const LocalLaw& law, double xi) {
    if (xi < 0.0) throw std::domain_error("solve_s: negative flux magnitude");
    if (xi == 0.0) return 0.0;
    if (law.linear) return xi / law.a[0];

    const double target_tol = law.tol.rtol * std::max(xi, law.tol.atol);
    auto residual = [&](double s) { return s * law.g(s) - xi; };

    double lo = 0.0;
    // Both (ξ/a_N)^{1/(αN+1)} and ξ/a_0 over-bracket the root; take the tighter.
    double hi = std::min(std::pow(xi / law.aN(), 1.0 / (law.degree() + 1.0)),
                         xi / law.a[0]);
    double s = hi;
    double f = residual(s);
    for (int it = 0; it < law.tol.max_iter; ++it) {
        if (std::fabs(f) <= target_tol) return s;
        if (f > 0.0) hi = s; else lo = s;
        const double df = law.g(s) + law.s_gprime(s);   // d/ds [s g(s)]
        double step = f / df;
        double snew = s - step;
        if (!(snew > lo) || !(snew < hi)) snew = 0.5 * (lo + hi);
        if (snew == s) snew = 0.5 * (lo + hi);
        s = snew;
        f = residual(s);
        if (hi - lo <= 1e-16 * hi) break;
    }
    if (std::fabs(f) <= 64.0 * target_tol) return s;  // stalled at roundoff
    throw RootSolveError("solve_s: no convergence within max iterations", lo, hi);
}

struct KValue {
    double K;        // 1/g(x, s(x,ξ)), positive
    double dK_dxi;   // analytic, nonpositive
    double s;        // the root s(x,ξ)
    double xi_dK;    // ξ·∂K/∂ξ evaluated in root form (finite for all ξ ≥ 0)
};

/**
 * K(x,ξ) = 1/g(x,s(x,ξ)) with the analytic derivative from implicit
 * differentiation: ds/dξ = 1/(g + s g') and dK/dξ = -g'(s)/(g²(g + s g')).
 * The product ξ·K_ξ = -s g'(s) / (g (g + s g')) stays finite at ξ = 0 even
 * when α1 < 1.
 */
inline KValue eval_K(const LocalLaw& law, double xi) {
    KValue out;
    out.s = solve_s(law, xi);
    const double g = law.g(out.s);
    out.K = 1.0 / g;
    if (law.linear) {
        out.dK_dxi = 0.0;
        out.xi_dK = 0.0;
        return out;
    }
    const double sgp = law.s_gprime(out.s);
    out.xi_dK = -sgp / (g * (g + sgp));
    if (out.s > 0.0) {
        out.dK_dxi = out.xi_dK / xi;
    } else {
        // limit at ξ=0: 0 for α1>1, -a_1/a_0³ at α1=1, -inf for α1<1
        const double a1 = (*law.alphas)[1];
        if (a1 > 1.0) out.dK_dxi = 0.0;
        else if (a1 == 1.0) out.dK_dxi = -law.a[1] / (law.a[0] * law.a[0] * law.a[0]);
        else out.dK_dxi = law.a[1] > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
    }
    return out;
}

namespace detail {

// 15-point Gauss–Kronrod pair on [-1,1] (abscissae/weights, symmetric half).
inline const double gk_x[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
inline const double gk_wk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline const double gk_wg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F>
inline void gk15(const F& f, double lo, double hi, double& kron, double& err) {
    const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
    double resk = 0.0, resg = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = hw * gk_x[i];
        const double fv = (i < 7) ? f(c - dx) + f(c + dx) : f(c);
        resk += gk_wk[i] * fv;
        if (i % 2 == 1) resg += gk_wg[i / 2] * fv;
    }
    kron = resk * hw;
    err = std::fabs((resk - resg) * hw);
}

template <class F>
inline double adaptive_quadrature(const F& f, double lo, double hi, double rel_tol,
                                  const char* what) {
    struct Panel { double lo, hi, val, err; };
    double kron, err;
    gk15(f, lo, hi, kron, err);
    std::vector<Panel> panels{{lo, hi, kron, err}};
    double total = kron, total_err = err;
    for (int round = 0; round < 60; ++round) {
        const double goal = rel_tol * std::max(std::fabs(total), 1e-300);
        if (total_err <= goal) return total;
        // split the worst panel
        size_t worst = 0;
        for (size_t i = 1; i < panels.size(); ++i)
            if (panels[i].err > panels[worst].err) worst = i;
        Panel p = panels[worst];
        panels.erase(panels.begin() + long(worst));
        const double mid = 0.5 * (p.lo + p.hi);
        Panel l{p.lo, mid, 0, 0}, r{mid, p.hi, 0, 0};
        gk15(f, l.lo, l.hi, l.val, l.err);
        gk15(f, r.lo, r.hi, r.val, r.err);
        panels.push_back(l);
        panels.push_back(r);
        total = 0.0;
        total_err = 0.0;
        for (const Panel& q : panels) { total += q.val; total_err += q.err; }
        if (panels.size() > 4096) break;
    }
    if (total_err <= 1e3 * rel_tol * std::max(std::fabs(total), 1e-300)) return total;
    throw std::runtime_error(std::string(what) + ": quadrature did not converge");
}

}  // namespace detail

/**
 * H(x,ξ) = ∫_0^{ξ²} K(x,√σ) dσ, computed in the substituted form
 * ∫_0^ξ 2u K(x,u) du by adaptive Gauss–Kronrod to relative tolerance qtol.
 */
inline double eval_H(const LocalLaw& law, double xi) {
    if (xi < 0.0) throw std::domain_error("eval_H: negative argument");
    if (xi == 0.0) return 0.0;
    if (law.linear) return xi * xi / law.a[0];
    auto integrand = [&](double u) { return 2.0 * u * eval_K(law, u).K; };
    return detail::adaptive_quadrature(integrand, 0.0, xi, law.tol.qtol, "eval_H");
}

// Convenience wrappers taking (model, cell).
inline double eval_g(const ForchheimerModel& m, std::int64_t cell, double s) {
    return local_law(m, cell).g(s);
}
inline double solve_s(const ForchheimerModel& m, std::int64_t cell, double xi) {
    return solve_s(local_law(m, cell), xi);
}
inline KValue eval_K(const ForchheimerModel& m, std::int64_t cell, double xi) {
    return eval_K(local_law(m, cell), xi);
}
inline double eval_H(const ForchheimerModel& m, std::int64_t cell, double xi) {
    return eval_H(local_law(m, cell), xi);
}

struct DerivedWeights {
    bool defined = false;   // false in linear_test_mode: weights are outside the model class
    double a = 0.0;         // αN/(αN+1)
    Field M_field;          // pointwise max of coefficients
    Field m_field;          // pointwise min{a_0, a_N}
    Field W1_field;
    Field W2_field;
    double B1 = 0.0;        // ∫ a_N dx
    double Bstar = 1.0;     // max{B1, 1}
};

inline DerivedWeights compute_weights(const ForchheimerModel& model) {
    DerivedWeights w;
    const Grid& g = model.grid();
    w.M_field = Field(g);
    w.m_field = Field(g);
    w.W1_field = Field(g);
    w.W2_field = Field(g);
    if (model.linear_test_mode) {
        w.defined = false;  // sentinel: bound verification refuses it
        return w;
    }
    w.defined = true;
    const double N = model.num_terms();
    w.a = model.degree() / (model.degree() + 1.0);
    for (size_t k = 0; k < w.M_field.size(); ++k) {
        double M = 0.0;
        for (const Field& c : model.coeffs) M = std::max(M, c[k]);
        const double a0 = model.coeffs.front()[k];
        const double aN = model.coeffs.back()[k];
        w.M_field[k] = M;
        w.m_field[k] = std::min(a0, aN);
        w.W1_field[k] = std::pow(aN, w.a) / (2.0 * N * M);
        w.W2_field[k] = N * M / (w.m_field[k] * std::pow(aN, 1.0 - w.a));
    }
    w.B1 = integrate(model.coeffs.back());
    w.Bstar = std::max(w.B1, 1.0);
    return w;
}

/** One checked inequality family of the pointwise battery. */
struct BoundCheck {
    std::string name;
    std::int64_t samples = 0;
    std::int64_t violations = 0;
    double worst_slack = 0.0;        // most negative margin / scale seen (0 if all pass)
    double worst_ratio = 1.0;        // max LHS/RHS observed (tightness)
    std::int64_t worst_cell = -1;
    double worst_xi = 0.0;
    bool pass() const { return violations == 0; }
};

struct PointwiseBoundsReport {
    std::vector<BoundCheck> families;
    bool pass() const {
        for (const auto& f : families)
            if (!f.pass()) return false;
        return true;
    }
};

struct SamplingPlan {
    std::int64_t samples_per_family = 10000;
    double xi_min = 1e-6;   // log-uniform ξ range (plus explicit ξ = 0 probes)
    double xi_max = 1e3;
    std::uint64_t seed = 2024;
};

namespace detail {

inline void record(BoundCheck& c, double lhs, double rhs, double scale,
                   std::int64_t cell, double xi, double slack) {
    // Checks lhs <= rhs within slack relative to the dominant magnitude.
    ++c.samples;
    const double margin = rhs - lhs;
    const double denom = std::max({std::fabs(lhs), std::fabs(rhs), scale});
    if (margin < -slack * denom) {
        ++c.violations;
    }
    const double rel = denom > 0.0 ? margin / denom : 0.0;
    if (c.samples == 1 || rel < c.worst_slack) {
        c.worst_slack = rel;
        c.worst_cell = cell;
        c.worst_xi = xi;
    }
    if (rhs != 0.0 && std::fabs(rhs) > 1e-300)
        c.worst_ratio = std::max(c.worst_ratio, lhs / rhs);
}

}  // namespace detail

/**
 * Sampled verification of the six pointwise inequality families:
 *   1. 2W1/(ξ^a + a_N^a) ≤ K ≤ W2/ξ^a            (upper side for ξ > 0)
 *   2. W1 ξ^{2-a} - a_N/2 ≤ K ξ² ≤ W2 ξ^{2-a}
 *   3. -aK ≤ ξ K_ξ ≤ 0, analytic and central finite differences
 *   4. K ξ² ≤ H ≤ 2 K ξ²
 *   5. W1 ξ^{2-a} - a_N/2 ≤ H ≤ 2 W2 ξ^{2-a}
 *   6. (K(|y|)y - K(|y'|)y')·(y - y') ≥ (1-a) K(|y|∨|y'|) |y - y'|²
 * Violations are recorded in the report, not thrown.
 */
inline PointwiseBoundsReport verify_pointwise_bounds(const ForchheimerModel& model,
                                                     const SamplingPlan& plan,
                                                     double slack = 1e-8) {
    if (model.linear_test_mode)
        throw std::invalid_argument(
            "verify_pointwise_bounds: linear_test_mode is outside the verified model class");
    const DerivedWeights w = compute_weights(model);
    const double a = w.a;
    const int dim = model.grid().dim;

    PointwiseBoundsReport rep;
    rep.families = {
        {"K.lower", 0, 0, 0, 1, -1, 0}, {"K.upper", 0, 0, 0, 1, -1, 0},
        {"Kxi2.two_sided", 0, 0, 0, 1, -1, 0}, {"K.derivative", 0, 0, 0, 1, -1, 0},
        {"H.vs.Kxi2", 0, 0, 0, 1, -1, 0}, {"H.vs.weights", 0, 0, 0, 1, -1, 0},
        {"monotonicity", 0, 0, 0, 1, -1, 0}};
    BoundCheck& kk_lo = rep.families[0];
    BoundCheck& kk_hi = rep.families[1];
    BoundCheck& ksq = rep.families[2];
    BoundCheck& kderiv = rep.families[3];
    BoundCheck& h_k = rep.families[4];
    BoundCheck& h_w = rep.families[5];
    BoundCheck& mono = rep.families[6];

    std::mt19937_64 rng(plan.seed);
    std::uniform_int_distribution<std::int64_t> cell_dist(0, model.grid().num_cells() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double lxmin = std::log(plan.xi_min), lxmax = std::log(plan.xi_max);

    for (std::int64_t k = 0; k < plan.samples_per_family; ++k) {
        const std::int64_t cell = cell_dist(rng);
        const LocalLaw law = local_law(model, cell);
        // ξ = 0 probes a fixed small fraction of the plan; the K upper bound
        // is vacuous there and is skipped.
        const bool at_zero = (k % 257) == 0;
        const double xi = at_zero ? 0.0 : std::exp(lxmin + (lxmax - lxmin) * unit(rng));

        const double W1 = w.W1_field[size_t(cell)];
        const double W2 = w.W2_field[size_t(cell)];
        const double aN = law.aN();
        const KValue kv = eval_K(law, xi);
        const double H = eval_H(law, xi);
        const double xia = std::pow(xi, a);

        detail::record(kk_lo, 2.0 * W1 / (xia + std::pow(aN, a)), kv.K, kv.K, cell, xi, slack);
        if (xi > 0.0)
            detail::record(kk_hi, kv.K, W2 / xia, kv.K, cell, xi, slack);

        const double kxi2 = kv.K * xi * xi;
        const double xi2a = std::pow(xi, 2.0 - a);
        detail::record(ksq, W1 * xi2a - 0.5 * aN, kxi2, std::max(kxi2, aN), cell, xi, slack);
        detail::record(ksq, kxi2, W2 * xi2a, std::max(kxi2, aN), cell, xi, slack);

        // derivative bound, analytic form
        detail::record(kderiv, -a * kv.K, kv.xi_dK, kv.K, cell, xi, slack);
        detail::record(kderiv, kv.xi_dK, 0.0, kv.K, cell, xi, slack);
        if (xi > 0.0) {
            // cross-check dK/dξ against central differences (Richardson pair);
            // the step is relative so the check stays scale-free near ξ = 0
            const double h = 5e-3 * xi;
            const double d1 = (eval_K(law, xi + h).K - eval_K(law, xi - h).K) / (2 * h);
            const double d2 =
                (eval_K(law, xi + 0.5 * h).K - eval_K(law, xi - 0.5 * h).K) / h;
            const double fd = (4.0 * d2 - d1) / 3.0;
            const double scale = std::max(std::fabs(kv.dK_dxi), kv.K / std::max(xi, 1.0));
            detail::record(kderiv, std::fabs(fd - kv.dK_dxi), 1e-5 * scale, scale,
                           cell, xi, slack);
        }

        detail::record(h_k, kxi2, H, std::max(H, aN), cell, xi, slack);
        detail::record(h_k, H, 2.0 * kxi2, std::max(H, aN), cell, xi, slack);
        detail::record(h_w, W1 * xi2a - 0.5 * aN, H, std::max(H, aN), cell, xi, slack);
        detail::record(h_w, H, 2.0 * W2 * xi2a, std::max(H, aN), cell, xi, slack);

        // monotonicity of y ↦ K(|y|) y over random vector pairs
        {
            double y1[2] = {0, 0}, y2[2] = {0, 0};
            const double r1 = at_zero ? 0.0 : std::exp(lxmin + (lxmax - lxmin) * unit(rng));
            const double r2 = std::exp(lxmin + (lxmax - lxmin) * unit(rng));
            if (dim == 1) {
                y1[0] = (unit(rng) < 0.5 ? -1 : 1) * r1;
                y2[0] = (unit(rng) < 0.5 ? -1 : 1) * r2;
            } else {
                const double t1 = 2 * 3.14159265358979323846 * unit(rng);
                const double t2 = 2 * 3.14159265358979323846 * unit(rng);
                y1[0] = r1 * std::cos(t1); y1[1] = r1 * std::sin(t1);
                y2[0] = r2 * std::cos(t2); y2[1] = r2 * std::sin(t2);
            }
            if (k % 101 == 0) { y2[0] = y1[0]; y2[1] = y1[1]; }  // equality case
            const double n1 = std::hypot(y1[0], y1[1]);
            const double n2 = std::hypot(y2[0], y2[1]);
            const double K1 = eval_K(law, n1).K;
            const double K2 = eval_K(law, n2).K;
            const double Kmx = eval_K(law, std::max(n1, n2)).K;
            const double d0 = y1[0] - y2[0], d1v = y1[1] - y2[1];
            const double lhs = (K1 * y1[0] - K2 * y2[0]) * d0 + (K1 * y1[1] - K2 * y2[1]) * d1v;
            const double rhs = (1.0 - a) * Kmx * (d0 * d0 + d1v * d1v);
            detail::record(mono, rhs, lhs, std::max(std::fabs(lhs), Kmx), cell, n1, slack);
        }
    }
    return rep;
}

}  // namespace forchlab
