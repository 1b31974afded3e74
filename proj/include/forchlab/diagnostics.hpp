#pragma once

/**
 * @file diagnostics.hpp
 * @brief Time series of every weighted norm and boundary functional the
 *        estimate verifiers consume.
 *
 * Single-solution series: ∫p̄²φ, ∫H(x,|∇p|), ∫W1|∇p|^{2-a}, ∫W1|∇p̄|^{2-a},
 * ∫p̄_t²φ and the boundary family
 *
 *   G  = B* + ∫a₀⁻¹|∇Ψ|² + ∫W1|∇Ψ|^{2-a} + (∫|Ψ_t|²φ)^{(2-a)/(2(1-a))}
 *   G₁ = ∫a₀⁻¹|∇Ψ_t|²,   G₂ = ∫|Ψ_tt|²φ,   M(t) = running max{G, 1}
 *
 * Pair series: D, h₁, h₂, R, V, ∫P̄²φ, ∫W1|∇P̄|^{2-a} and the tilde
 * aggregates of the boundary family. Time derivatives of fields come from
 * central differences of stored snapshots; a stride warning is raised when
 * the differencing error estimate is not small against the signal.
 */

#include <cmath>
#include <stdexcept>
#include <vector>

#include "forchlab/norms.hpp"
#include "forchlab/odetoolkit.hpp"
#include "forchlab/solver.hpp"

namespace forchlab {

struct SingleSeries {
    std::vector<double> t;
    // CSV column order (after t)
    std::vector<double> pbar_sq;      // ‖p̄‖²_{L²_φ}
    std::vector<double> H_int;        // ∫ H(x,|∇p|) dx
    std::vector<double> gradp_w1;     // ∫ W1 |∇p|^{2-a} dx
    std::vector<double> gradpbar_w1;  // ∫ W1 |∇p̄|^{2-a} dx
    std::vector<double> pbart_sq;     // ‖p̄_t‖²_{L²_φ}
    std::vector<double> G, G1, G2, M;
    // verifier extras (not in the CSV contract)
    std::vector<double> G0;           // G with B1 in place of B*
    std::vector<double> Kgrad_sq;     // ∫ K(x,|∇p|)|∇p|² dx
    std::vector<double> Kgradq_sq;    // ∫ K(x,|∇p|)|∇q|² dx, q = p_t
    bool stride_warning = false;
    bool differenced_boundary = false;  // Ψ_tt obtained by differencing

    size_t size() const { return t.size(); }
};

struct PairSeries {
    std::vector<double> t;
    // CSV column order (after t)
    std::vector<double> D, h1, h2, R, V;
    std::vector<double> Pbar_sq;      // ‖P̄‖²_{L²_φ}
    std::vector<double> gradPbar_w1;  // ∫ W1 |∇P̄|^{2-a} dx
    // tilde aggregates and majorants
    std::vector<double> Gt, G1t, G2t, Mt;
    std::vector<double> M1;           // ℋ₀ + P̄₀ + M̃^{2/(2-a)} + sup G̃₁
    std::vector<double> M2;           // (ℋ₀+P̄₀)/t₀ + M̃^{2/(2-a)} + sup(G̃₁+G̃₂)
    double P0bar = 0.0;
    double H0 = 0.0;

    size_t size() const { return t.size(); }
};

namespace detail {

struct WeightsView {
    Field W1;
    Field inv_a0;
    Field phi;
    double a;
};

inline WeightsView weights_view(const MediumSpec& medium) {
    WeightsView w;
    w.phi = medium.porosity;
    w.a = medium.weights.defined ? medium.weights.a : 0.0;
    w.W1 = medium.weights.defined ? medium.weights.W1_field : Field(medium.grid, 1.0);
    w.inv_a0 = Field(medium.grid, 0.0);
    for (size_t k = 0; k < w.inv_a0.size(); ++k)
        w.inv_a0[k] = 1.0 / medium.model.coeffs.front()[k];
    return w;
}

}  // namespace detail

/**
 * Boundary functionals on the requested times. Works from the extension Ψ
 * alone; gradients use the same face/cell reconstruction as the solver norms.
 */
inline void boundary_functionals(const BoundaryExtension& boundary, const MediumSpec& medium,
                                 const std::vector<double>& times, SingleSeries& out) {
    const detail::WeightsView w = detail::weights_view(medium);
    const double Bstar = medium.weights.defined ? medium.weights.Bstar : 1.0;
    const double B1 = medium.weights.defined ? medium.weights.B1
                                             : integrate(medium.model.coeffs.back());
    if (!boundary.Psi_t || !boundary.Psi_tt)
        throw std::invalid_argument(
            "boundary_functionals: needs Psi_t and Psi_tt (analytic or differenced)");

    out.t = times;
    out.G.resize(times.size());
    out.G0.resize(times.size());
    out.G1.resize(times.size());
    out.G2.resize(times.size());
    out.M.resize(times.size());
    out.differenced_boundary = !boundary.analytic_derivatives;

    double runmax = 1.0;
    for (size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        const Field Psi = sample_field(medium.grid, [&](double x, double y) {
            return boundary.Psi(x, y, t);
        });
        const Field Psi_t = sample_field(medium.grid, [&](double x, double y) {
            return boundary.Psi_t(x, y, t);
        });
        const Field Psi_tt = sample_field(medium.grid, [&](double x, double y) {
            return boundary.Psi_tt(x, y, t);
        });
        const Field grad_Psi = gradient_magnitude(
            Psi, trace_of([&](double x, double y) { return boundary.Psi(x, y, t); }));
        const Field grad_Psi_t = gradient_magnitude(
            Psi_t, trace_of([&](double x, double y) { return boundary.Psi_t(x, y, t); }));

        const double term_grad = weighted_integral(grad_Psi, w.inv_a0, 2.0);
        const double term_w1 = weighted_integral(grad_Psi, w.W1, 2.0 - w.a);
        const double term_time = std::pow(weighted_integral(Psi_t, w.phi, 2.0),
                                          (2.0 - w.a) / (2.0 * (1.0 - w.a)));
        out.G[k] = Bstar + term_grad + term_w1 + term_time;
        out.G0[k] = B1 + term_grad + term_w1 + term_time;
        out.G1[k] = weighted_integral(grad_Psi_t, w.inv_a0, 2.0);
        out.G2[k] = weighted_integral(Psi_tt, w.phi, 2.0);
        runmax = std::max(runmax, out.G[k]);
        out.M[k] = runmax;
    }
}

/**
 * All single-solution series of a trajectory. p̄_t and p_t come from central
 * differences of stored snapshots (one-sided at the ends).
 */
inline SingleSeries trajectory_functionals(const Trajectory& traj) {
    const MediumSpec& medium = *traj.medium;
    const detail::WeightsView w = detail::weights_view(medium);
    const auto& states = traj.states;
    if (states.size() < 3)
        throw std::invalid_argument("trajectory_functionals: need at least 3 stored states");

    SingleSeries s;
    std::vector<double> times(states.size());
    for (size_t k = 0; k < states.size(); ++k) times[k] = states[k].t;
    boundary_functionals(traj.boundary, medium, times, s);

    const size_t n = states.size();
    s.pbar_sq.resize(n);
    s.H_int.resize(n);
    s.gradp_w1.resize(n);
    s.gradpbar_w1.resize(n);
    s.pbart_sq.resize(n);
    s.Kgrad_sq.resize(n);
    s.Kgradq_sq.resize(n);

    std::vector<Field> grad_p_mag(n);
    for (size_t k = 0; k < n; ++k) {
        const PressureState& st = states[k];
        const double t = st.t;
        s.pbar_sq[k] = weighted_integral(st.pbar, w.phi, 2.0);
        grad_p_mag[k] = gradient_magnitude(
            st.p, trace_of([&](double x, double y) { return traj.boundary.Psi(x, y, t); }));
        const Field grad_pbar_mag = gradient_magnitude(st.pbar, zero_trace());
        s.gradp_w1[k] = weighted_integral(grad_p_mag[k], w.W1, 2.0 - w.a);
        s.gradpbar_w1[k] = weighted_integral(grad_pbar_mag, w.W1, 2.0 - w.a);

        double H_acc = 0.0, Kg_acc = 0.0;
        for (size_t c = 0; c < grad_p_mag[k].size(); ++c) {
            const LocalLaw law = local_law(medium.model, std::int64_t(c));
            const double xi = grad_p_mag[k][c];
            H_acc += eval_H(law, xi);
            Kg_acc += eval_K(law, xi).K * xi * xi;
        }
        s.H_int[k] = H_acc * medium.grid.cell_volume();
        s.Kgrad_sq[k] = Kg_acc * medium.grid.cell_volume();
    }

    // q = p_t and q̄ = p̄_t by central differences of snapshots
    for (size_t k = 0; k < n; ++k) {
        const size_t lo = k == 0 ? 0 : k - 1;
        const size_t hi = k + 1 == n ? k : k + 1;
        const double dt = states[hi].t - states[lo].t;
        Field qbar(medium.grid), q(medium.grid);
        for (size_t c = 0; c < qbar.size(); ++c) {
            qbar[c] = (states[hi].pbar[c] - states[lo].pbar[c]) / dt;
            q[c] = (states[hi].p[c] - states[lo].p[c]) / dt;
        }
        s.pbart_sq[k] = weighted_integral(qbar, w.phi, 2.0);

        const double t = states[k].t;
        const Field grad_q_mag = gradient_magnitude(
            q, trace_of([&](double x, double y) { return traj.boundary.Psi_t(x, y, t); }));
        double acc = 0.0;
        for (size_t c = 0; c < q.size(); ++c) {
            const LocalLaw law = local_law(medium.model, std::int64_t(c));
            acc += eval_K(law, grad_p_mag[k][c]).K * grad_q_mag[c] * grad_q_mag[c];
        }
        s.Kgradq_sq[k] = acc * medium.grid.cell_volume();
    }

    // stride heuristic: third differences of ∫p̄²φ against its variation
    double d3max = 0.0, scale = 1e-300;
    for (size_t k = 2; k + 1 < n; ++k) {
        d3max = std::max(d3max, std::fabs(s.pbar_sq[k + 1] - 3 * s.pbar_sq[k] +
                                          3 * s.pbar_sq[k - 1] - s.pbar_sq[k - 2]));
        scale = std::max(scale, std::fabs(s.pbar_sq[k]));
    }
    s.stride_warning = d3max > 0.25 * scale;
    return s;
}

/**
 * Pair series from two trajectories on the same grid and medium:
 *   D  = ∫a₀⁻¹|∇Φ|² + (∫a₀⁻¹|∇Φ|²)^{1/2} + (∫|Φ_t|²φ)^{1/2},  Φ = Ψ₁-Ψ₂
 *   h₁ = B₁ + Σᵢ ∫H(x,|∇pᵢ|),  h₂ = 1 + Σᵢ ∫[H + p̄ᵢ²φ]
 *   R  = h₂^{1/2} h₁^{a/(2-a)} D
 *   V  = M̃^{2/(2-a)} + ∫_{t-1}^t (G̃₁+G̃₂) dτ
 */
inline PairSeries pair_functionals(const Trajectory& trajA, const Trajectory& trajB,
                                   const SingleSeries& sa, const SingleSeries& sb,
                                   double t0 = 0.25) {
    const MediumSpec& medium = *trajA.medium;
    if (!medium.grid.same_shape(trajB.medium->grid))
        throw std::invalid_argument("pair_functionals: trajectories on different grids");
    if (medium.porosity.v != trajB.medium->porosity.v)
        throw std::invalid_argument("pair_functionals: trajectories on different media");
    if (sa.size() != sb.size() || trajA.states.size() != trajB.states.size())
        throw std::invalid_argument("pair_functionals: trajectories have different sampling");
    const detail::WeightsView w = detail::weights_view(medium);
    const double a = w.a;
    const double B1 = medium.weights.defined ? medium.weights.B1
                                             : integrate(medium.model.coeffs.back());

    PairSeries p;
    p.t = sa.t;
    const size_t n = sa.size();
    p.D.resize(n);
    p.h1.resize(n);
    p.h2.resize(n);
    p.R.resize(n);
    p.V.resize(n);
    p.Pbar_sq.resize(n);
    p.gradPbar_w1.resize(n);
    p.Gt.resize(n);
    p.G1t.resize(n);
    p.G2t.resize(n);
    p.Mt.resize(n);
    p.M1.resize(n);
    p.M2.resize(n);

    p.P0bar = sa.pbar_sq[0] + sb.pbar_sq[0];
    p.H0 = sa.H_int[0] + sb.H_int[0];

    double supG1t = 0.0, supG12t = 0.0;
    for (size_t k = 0; k < n; ++k) {
        const double t = p.t[k];
        // Φ and its time derivative
        const Field Phi = sample_field(medium.grid, [&](double x, double y) {
            return trajA.boundary.Psi(x, y, t) - trajB.boundary.Psi(x, y, t);
        });
        const Field Phi_t = sample_field(medium.grid, [&](double x, double y) {
            return trajA.boundary.Psi_t(x, y, t) - trajB.boundary.Psi_t(x, y, t);
        });
        const Field grad_Phi = gradient_magnitude(Phi, trace_of([&](double x, double y) {
            return trajA.boundary.Psi(x, y, t) - trajB.boundary.Psi(x, y, t);
        }));
        const double D2 = weighted_integral(grad_Phi, w.inv_a0, 2.0);
        const double D1 = weighted_integral(Phi_t, w.phi, 2.0);
        p.D[k] = D2 + std::sqrt(D2) + std::sqrt(D1);

        p.h1[k] = B1 + sa.H_int[k] + sb.H_int[k];
        p.h2[k] = 1.0 + sa.H_int[k] + sb.H_int[k] + sa.pbar_sq[k] + sb.pbar_sq[k];
        p.R[k] = std::sqrt(p.h2[k]) * std::pow(p.h1[k], a / (2.0 - a)) * p.D[k];

        const Field& pbarA = trajA.states[k].pbar;
        const Field& pbarB = trajB.states[k].pbar;
        Field Pbar(medium.grid);
        for (size_t c = 0; c < Pbar.size(); ++c) Pbar[c] = pbarA[c] - pbarB[c];
        p.Pbar_sq[k] = weighted_integral(Pbar, w.phi, 2.0);
        const Field grad_Pbar = gradient_magnitude(Pbar, zero_trace());
        p.gradPbar_w1[k] = weighted_integral(grad_Pbar, w.W1, 2.0 - a);

        p.Gt[k] = sa.G[k] + sb.G[k];
        p.G1t[k] = sa.G1[k] + sb.G1[k];
        p.G2t[k] = sa.G2[k] + sb.G2[k];
        p.Mt[k] = sa.M[k] + sb.M[k];
        supG1t = std::max(supG1t, p.G1t[k]);
        supG12t = std::max(supG12t, p.G1t[k] + p.G2t[k]);
        p.M1[k] = p.H0 + p.P0bar + std::pow(p.Mt[k], 2.0 / (2.0 - a)) + supG1t;
        p.M2[k] = (p.H0 + p.P0bar) / t0 + std::pow(p.Mt[k], 2.0 / (2.0 - a)) + supG12t;
    }

    // V(t) with the sliding unit-window integral of G̃₁+G̃₂ (truncated at 0)
    for (size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (size_t j = 1; j <= k; ++j) {
            const double lo = std::max(p.t[j - 1], p.t[k] - 1.0);
            const double hi = p.t[j];
            if (hi <= lo) continue;
            // trapezoid on the clipped interval
            const double f0 = p.G1t[j - 1] + p.G2t[j - 1];
            const double f1 = p.G1t[j] + p.G2t[j];
            const double w0 = (p.t[j] - p.t[j - 1]);
            const double flo = f0 + (f1 - f0) * (lo - p.t[j - 1]) / w0;
            acc += 0.5 * (flo + f1) * (hi - lo);
        }
        p.V[k] = std::pow(p.Mt[k], 2.0 / (2.0 - a)) + acc;
    }
    return p;
}

struct TailLimits {
    double window = 0.25;
    double A_hat = 1.0;        // tail max of G
    double B_hat = 0.0;        // tail max of [G']⁻
    double G1_hat = 0.0;
    double G2_hat = 0.0;
    double D_hat = 0.0;        // pairs only
    double At_hat = 0.0;       // tilde variants
    double Bt_hat = 0.0;
    double G1t_hat = 0.0;
    double G2t_hat = 0.0;
};

namespace detail {

inline void require_tail_coverage(const std::vector<double>& t, double window) {
    if (t.size() < 8)
        throw std::invalid_argument("tail_limits: series too short");
    if (!(window > 0.0) || window > 1.0 / 3.0)
        throw std::invalid_argument("tail_limits: series must cover at least 3 windows");
}

inline double tail_neg_derivative(const std::vector<double>& t, const std::vector<double>& v,
                                  double window) {
    const auto d = ode_detail::differentiate(t, v);
    std::vector<double> neg(d.size());
    for (size_t k = 0; k < d.size(); ++k) neg[k] = std::max(-d[k], 0.0);
    return ode_detail::tail_max(t, neg, window);
}

}  // namespace detail

inline TailLimits tail_limits(const SingleSeries& s, double window = 0.25) {
    detail::require_tail_coverage(s.t, window);
    TailLimits tl;
    tl.window = window;
    tl.A_hat = ode_detail::tail_max(s.t, s.G, window);
    tl.B_hat = detail::tail_neg_derivative(s.t, s.G, window);
    tl.G1_hat = ode_detail::tail_max(s.t, s.G1, window);
    tl.G2_hat = ode_detail::tail_max(s.t, s.G2, window);
    return tl;
}

inline TailLimits tail_limits_pair(const PairSeries& p, double window = 0.25) {
    detail::require_tail_coverage(p.t, window);
    TailLimits tl;
    tl.window = window;
    tl.At_hat = ode_detail::tail_max(p.t, p.Gt, window);
    tl.Bt_hat = detail::tail_neg_derivative(p.t, p.Gt, window);
    tl.G1t_hat = ode_detail::tail_max(p.t, p.G1t, window);
    tl.G2t_hat = ode_detail::tail_max(p.t, p.G2t, window);
    tl.D_hat = ode_detail::tail_max(p.t, p.D, window);
    return tl;
}

}  // namespace forchlab
