#pragma once

/**
 * @file solver.hpp
 * @brief Time stepping for the degenerate parabolic pressure equation
 *
 *   φ(x) ∂p/∂t = ∇·(K(x,|∇p|) ∇p) + f,    p = ψ on Γ,    p(·,0) = p0,
 *
 * by cell-centered finite volumes and backward Euler with Picard lag on K.
 * Face conductivities are the harmonic mean of the two cell-side K values at
 * the face-normal gradient magnitude of the previous iterate, so every inner
 * solve is symmetric positive definite. Dirichlet data enters through
 * half-cell boundary faces. The optional source f exists for manufactured-
 * solution testing only.
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "forchlab/expression.hpp"
#include "forchlab/medium.hpp"
#include "forchlab/norms.hpp"

namespace forchlab {

using SpaceTimeFn = std::function<double(double x, double y, double t)>;

/**
 * Boundary data ψ given as the trace of an extension Ψ(x,t) defined on the
 * whole domain. Time derivatives are analytic callbacks when available,
 * otherwise central differences of Ψ (flagged, since differenced data is
 * only as smooth as the sampling).
 */
struct BoundaryExtension {
    SpaceTimeFn Psi;
    SpaceTimeFn Psi_t;
    SpaceTimeFn Psi_tt;
    bool analytic_derivatives = true;

    static BoundaryExtension zero() {
        auto z = [](double, double, double) { return 0.0; };
        return {z, z, z, true};
    }

    static BoundaryExtension from_function(SpaceTimeFn psi, double dt_fd = 1e-4) {
        BoundaryExtension b;
        b.Psi = psi;
        b.analytic_derivatives = false;
        b.Psi_t = [psi, dt_fd](double x, double y, double t) {
            return (psi(x, y, t + dt_fd) - psi(x, y, t - dt_fd)) / (2.0 * dt_fd);
        };
        b.Psi_tt = [psi, dt_fd](double x, double y, double t) {
            return (psi(x, y, t + dt_fd) - 2.0 * psi(x, y, t) + psi(x, y, t - dt_fd)) /
                   (dt_fd * dt_fd);
        };
        return b;
    }

    static BoundaryExtension from_expressions(const std::string& psi,
                                              const std::string& psi_t = "",
                                              const std::string& psi_tt = "") {
        const Expression e = Expression::parse(psi);
        BoundaryExtension b;
        b.Psi = [e](double x, double y, double t) { return e.eval(x, y, t); };
        if (!psi_t.empty()) {
            const Expression et = Expression::parse(psi_t);
            b.Psi_t = [et](double x, double y, double t) { return et.eval(x, y, t); };
        }
        if (!psi_tt.empty()) {
            const Expression ett = Expression::parse(psi_tt);
            b.Psi_tt = [ett](double x, double y, double t) { return ett.eval(x, y, t); };
        }
        b.analytic_derivatives = !psi_t.empty() && !psi_tt.empty();
        if (!b.Psi_t || !b.Psi_tt) {
            BoundaryExtension fd = from_function(b.Psi);
            if (!b.Psi_t) b.Psi_t = fd.Psi_t;
            if (!b.Psi_tt) b.Psi_tt = fd.Psi_tt;
        }
        return b;
    }

    Field sample(const Grid& g, double t) const {
        return sample_field(g, [&](double x, double y) { return Psi(x, y, t); });
    }
    BoundaryTrace trace_at(double t) const {
        auto f = Psi;
        return [f, t](int, int, double x, double y) { return f(x, y, t); };
    }
};

// Face conductivities of one accepted Picard iterate (same layout as
// FaceGradients: axis-0 faces then axis-1 faces, boundary faces included).
struct FaceConductivity {
    std::vector<double> K0;
    std::vector<double> K1;
};

struct PressureState {
    double t = 0.0;
    Field p;
    Field pbar;                    // p - Ψ(·,t)
    FaceConductivity face_K;       // from the accepted iterate, for flux identities
};

struct StepLog {
    double t = 0.0;
    int picard_iterations = 0;
    double nonlinear_residual = 0.0;
    std::vector<double> residual_history;
};

struct SolverConfig {
    double dt = 1e-2;
    double t_end = 1.0;
    double picard_tol = 1e-10;
    int picard_max = 200;
    double linear_tol = 1e-12;
    int output_stride = 1;         // store every k-th step
    SpaceTimeFn source;            // optional, manufactured solutions only

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("SolverConfig: dt must be positive");
        if (!(picard_tol > 0.0))
            throw std::invalid_argument("SolverConfig: picard_tol must be positive");
    }
};

struct Trajectory {
    std::shared_ptr<const MediumSpec> medium;
    BoundaryExtension boundary;
    std::vector<PressureState> states;
    std::vector<StepLog> log;
    double dt = 0.0;
};

struct StepError : std::runtime_error {
    std::vector<double> residual_history;
    StepError(const std::string& msg, std::vector<double> hist)
        : std::runtime_error(msg), residual_history(std::move(hist)) {}
};

namespace detail {

// Assembled SPD system: (M + L) p = b with M the φV/dt mass diagonal and L
// the face-transmissibility Laplacian (Dirichlet folded into diag and b).
struct FvSystem {
    const Grid* grid;
    std::vector<double> diag;
    std::vector<double> T0;   // interior+boundary face transmissibilities, axis 0
    std::vector<double> T1;

    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        const Grid& g = *grid;
        const int n0 = g.n[0], n1 = g.n[1];
        for (size_t k = 0; k < x.size(); ++k) y[k] = diag[k] * x[k];
        for (int j = 0; j < n1; ++j)
            for (int f = 1; f < n0; ++f) {
                const double T = T0[size_t(j) * (n0 + 1) + f];
                const size_t l = size_t(g.cell_index(f - 1, j));
                const size_t r = size_t(g.cell_index(f, j));
                y[l] -= T * x[r];
                y[r] -= T * x[l];
            }
        if (g.dim == 2)
            for (int f = 1; f < n1; ++f)
                for (int i = 0; i < n0; ++i) {
                    const double T = T1[size_t(f) * n0 + i];
                    const size_t b = size_t(g.cell_index(i, f - 1));
                    const size_t u = size_t(g.cell_index(i, f));
                    y[b] -= T * x[u];
                    y[u] -= T * x[b];
                }
    }
};

// Jacobi-preconditioned conjugate gradients; the systems are M-matrices with
// strictly positive diagonal.
inline int pcg(const FvSystem& A, const std::vector<double>& b, std::vector<double>& x,
               double rel_tol, int max_iter) {
    const size_t n = b.size();
    std::vector<double> r(n), z(n), p(n), Ap(n);
    A.apply(x, Ap);
    double bnorm = 0.0;
    for (size_t k = 0; k < n; ++k) {
        r[k] = b[k] - Ap[k];
        bnorm += b[k] * b[k];
    }
    bnorm = std::sqrt(std::max(bnorm, 1e-300));
    double rz = 0.0;
    for (size_t k = 0; k < n; ++k) {
        z[k] = r[k] / A.diag[k];
        rz += r[k] * z[k];
        p[k] = z[k];
    }
    for (int it = 0; it < max_iter; ++it) {
        double rn = 0.0;
        for (size_t k = 0; k < n; ++k) rn += r[k] * r[k];
        if (std::sqrt(rn) <= rel_tol * bnorm) return it;
        A.apply(p, Ap);
        double pAp = 0.0;
        for (size_t k = 0; k < n; ++k) pAp += p[k] * Ap[k];
        if (pAp <= 0.0) throw std::runtime_error("pcg: operator lost positive definiteness");
        const double alpha = rz / pAp;
        for (size_t k = 0; k < n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * Ap[k];
        }
        double rz_new = 0.0;
        for (size_t k = 0; k < n; ++k) {
            z[k] = r[k] / A.diag[k];
            rz_new += r[k] * z[k];
        }
        const double beta = rz_new / rz;
        rz = rz_new;
        for (size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    }
    throw std::runtime_error("pcg: no convergence");
}

inline double face_K_value(const MediumSpec& med, std::int64_t cl, std::int64_t cr,
                           double xi) {
    const double Kl = eval_K(med.model, cl, xi).K;
    if (cr < 0) return Kl;  // boundary face: single-sided
    const double Kr = eval_K(med.model, cr, xi).K;
    return 2.0 * Kl * Kr / (Kl + Kr);
}

/**
 * Face conductivities from the face-normal gradients of iterate `p` with
 * boundary trace `psi`.
 */
inline FaceConductivity face_conductivities(const MediumSpec& med, const Field& p,
                                            const BoundaryTrace& psi) {
    const Grid& g = med.grid;
    const FaceGradients fg = face_gradients(p, psi);
    FaceConductivity K;
    K.K0.assign(fg.g0.size(), 0.0);
    const int n0 = g.n[0], n1 = g.n[1];
    for (int j = 0; j < n1; ++j)
        for (int f = 0; f <= n0; ++f) {
            const double xi = std::fabs(fg.at0(g, f, j));
            const std::int64_t cl = f > 0 ? g.cell_index(f - 1, j) : g.cell_index(0, j);
            const std::int64_t cr = f < n0 ? g.cell_index(f, j) : -1;
            const std::int64_t a = f > 0 ? cl : cr;
            const std::int64_t b = (f > 0 && f < n0) ? cr : -1;
            K.K0[size_t(j) * (n0 + 1) + f] = face_K_value(med, a, b, xi);
        }
    if (g.dim == 2) {
        K.K1.assign(fg.g1.size(), 0.0);
        for (int f = 0; f <= n1; ++f)
            for (int i = 0; i < n0; ++i) {
                const double xi = std::fabs(fg.at1(g, i, f));
                const std::int64_t cb = f > 0 ? g.cell_index(i, f - 1) : g.cell_index(i, 0);
                const std::int64_t cu = f < n1 ? g.cell_index(i, f) : -1;
                const std::int64_t a = f > 0 ? cb : cu;
                const std::int64_t b = (f > 0 && f < n1) ? cu : -1;
                K.K1[size_t(f) * n0 + i] = face_K_value(med, a, b, xi);
            }
    }
    return K;
}

// Transmissibility system for given face conductivities; folds Dirichlet
// boundary contributions into diag and rhs.
inline FvSystem assemble(const MediumSpec& med, const FaceConductivity& K, double dt,
                         const BoundaryTrace& psi, const Field& p_old,
                         const SpaceTimeFn& source, double t_new,
                         std::vector<double>& rhs) {
    const Grid& g = med.grid;
    const int n0 = g.n[0], n1 = g.n[1];
    const double V = g.cell_volume();
    FvSystem A;
    A.grid = &g;
    A.diag.assign(size_t(g.num_cells()), 0.0);
    A.T0.assign(K.K0.size(), 0.0);
    A.T1.assign(K.K1.size(), 0.0);
    rhs.assign(size_t(g.num_cells()), 0.0);

    for (size_t k = 0; k < A.diag.size(); ++k) {
        A.diag[k] = med.porosity[k] * V / dt;
        rhs[k] = med.porosity[k] * V / dt * p_old[k];
    }
    if (source) {
        for (int j = 0; j < n1; ++j)
            for (int i = 0; i < n0; ++i) {
                const auto xc = g.cell_center(i, j);
                rhs[size_t(g.cell_index(i, j))] += V * source(xc[0], xc[1], t_new);
            }
    }

    const double h0 = g.spacing(0), area0 = g.face_area(0);
    for (int j = 0; j < n1; ++j) {
        const double y = g.dim == 2 ? g.center(1, j) : 0.0;
        for (int f = 0; f <= n0; ++f) {
            const double Kf = K.K0[size_t(j) * (n0 + 1) + f];
            if (f == 0 || f == n0) {
                const double T = Kf * area0 / (0.5 * h0);
                const size_t c = size_t(g.cell_index(f == 0 ? 0 : n0 - 1, j));
                const double pb = psi(0, f == 0 ? 0 : 1, f == 0 ? g.lo[0] : g.hi[0], y);
                A.diag[c] += T;
                rhs[c] += T * pb;
            } else {
                const double T = Kf * area0 / h0;
                A.T0[size_t(j) * (n0 + 1) + f] = T;
                A.diag[size_t(g.cell_index(f - 1, j))] += T;
                A.diag[size_t(g.cell_index(f, j))] += T;
            }
        }
    }
    if (g.dim == 2) {
        const double h1 = g.spacing(1), area1 = g.face_area(1);
        for (int f = 0; f <= n1; ++f)
            for (int i = 0; i < n0; ++i) {
                const double Kf = K.K1[size_t(f) * n0 + i];
                const double x = g.center(0, i);
                if (f == 0 || f == n1) {
                    const double T = Kf * area1 / (0.5 * h1);
                    const size_t c = size_t(g.cell_index(i, f == 0 ? 0 : n1 - 1));
                    const double pb = psi(1, f == 0 ? 0 : 1, x, f == 0 ? g.lo[1] : g.hi[1]);
                    A.diag[c] += T;
                    rhs[c] += T * pb;
                } else {
                    const double T = Kf * area1 / h1;
                    A.T1[size_t(f) * n0 + i] = T;
                    A.diag[size_t(g.cell_index(i, f - 1))] += T;
                    A.diag[size_t(g.cell_index(i, f))] += T;
                }
            }
    }
    return A;
}

// Direct tridiagonal solve for 1D systems (Thomas algorithm).
inline void thomas(const FvSystem& A, const std::vector<double>& b, std::vector<double>& x) {
    const int n = A.grid->n[0];
    std::vector<double> c(size_t(n), 0.0), d(size_t(n), 0.0);
    auto off = [&](int f) { return -A.T0[size_t(f)]; };  // coupling between f-1 and f
    double beta = A.diag[0];
    c[0] = n > 1 ? off(1) / beta : 0.0;
    d[0] = b[0] / beta;
    for (int i = 1; i < n; ++i) {
        const double lower = off(i);
        beta = A.diag[size_t(i)] - lower * c[size_t(i - 1)];
        if (i + 1 < n) c[size_t(i)] = off(i + 1) / beta;
        d[size_t(i)] = (b[size_t(i)] - lower * d[size_t(i - 1)]) / beta;
    }
    x.assign(size_t(n), 0.0);
    x[size_t(n - 1)] = d[size_t(n - 1)];
    for (int i = n - 2; i >= 0; --i)
        x[size_t(i)] = d[size_t(i)] - c[size_t(i)] * x[size_t(i + 1)];
}

inline void solve_system(const FvSystem& A, const std::vector<double>& b,
                         std::vector<double>& x, double rel_tol) {
    if (A.grid->dim == 1) {
        thomas(A, b, x);
        return;
    }
    pcg(A, b, x, rel_tol, 120 * int(std::sqrt(double(x.size()))) + 1000);
}

inline double relative_residual(const FvSystem& A, const std::vector<double>& x,
                                const std::vector<double>& b) {
    std::vector<double> Ax(x.size());
    A.apply(x, Ax);
    double rn = 0.0, bn = 0.0;
    for (size_t k = 0; k < x.size(); ++k) {
        rn += (b[k] - Ax[k]) * (b[k] - Ax[k]);
        bn += b[k] * b[k];
    }
    return std::sqrt(rn) / std::sqrt(std::max(bn, 1e-300));
}

}  // namespace detail

/**
 * One backward-Euler step with Picard lag on K. Accepts the iterate once both
 * the relative update and the nonlinear residual (system reassembled at the
 * new iterate) drop below picard_tol.
 */
inline PressureState step(const PressureState& state, const MediumSpec& medium,
                          const BoundaryExtension& boundary, double dt,
                          const SolverConfig& config, StepLog* log_out = nullptr) {
    const double t_new = state.t + dt;
    const BoundaryTrace psi = boundary.trace_at(t_new);

    Field p = state.p;  // initial iterate
    std::vector<double> rhs;
    StepLog log;
    log.t = t_new;
    FaceConductivity K = detail::face_conductivities(medium, p, psi);
    double res = 0.0;
    bool accepted = false;
    for (int it = 0; it < config.picard_max; ++it) {
        detail::FvSystem A =
            detail::assemble(medium, K, dt, psi, state.p, config.source, t_new, rhs);
        std::vector<double> x = p.v;
        detail::solve_system(A, rhs, x, config.linear_tol);

        double dn = 0.0, xn = 0.0;
        for (size_t k = 0; k < x.size(); ++k) {
            dn += (x[k] - p.v[k]) * (x[k] - p.v[k]);
            xn += x[k] * x[k];
        }
        const double update = std::sqrt(dn) / std::sqrt(std::max(xn, 1e-300));
        p.v = x;

        // nonlinear residual: reassemble at the new iterate; the conductivities
        // carry over as the next iterate's lag
        K = detail::face_conductivities(medium, p, psi);
        detail::FvSystem An =
            detail::assemble(medium, K, dt, psi, state.p, config.source, t_new, rhs);
        res = detail::relative_residual(An, p.v, rhs);
        log.residual_history.push_back(res);
        log.picard_iterations = it + 1;
        if (update <= config.picard_tol && res <= config.picard_tol) {
            accepted = true;
            break;
        }
    }
    if (!accepted)
        throw StepError("step: Picard iteration did not converge at t = " +
                            std::to_string(t_new),
                        log.residual_history);
    log.nonlinear_residual = res;
    if (log_out) *log_out = log;

    PressureState out;
    out.t = t_new;
    out.p = p;
    out.pbar = p;
    const Field Psi = boundary.sample(medium.grid, t_new);
    for (size_t k = 0; k < out.pbar.size(); ++k) out.pbar[k] -= Psi[k];
    out.face_K = K;
    return out;
}

inline Trajectory simulate(const MediumSpec& medium, const Field& p0,
                           const BoundaryExtension& boundary, const SolverConfig& config) {
    config.validate();
    if (!p0.grid.same_shape(medium.grid))
        throw std::invalid_argument("simulate: initial field does not match the grid");

    Trajectory traj;
    traj.medium = std::make_shared<MediumSpec>(medium);
    traj.boundary = boundary;
    traj.dt = config.dt;

    PressureState s;
    s.t = 0.0;
    s.p = p0;
    s.pbar = p0;
    const Field Psi0 = boundary.sample(medium.grid, 0.0);
    for (size_t k = 0; k < s.pbar.size(); ++k) s.pbar[k] -= Psi0[k];
    s.face_K = detail::face_conductivities(medium, p0, boundary.trace_at(0.0));
    traj.states.push_back(s);

    const auto nsteps = std::int64_t(std::ceil(config.t_end / config.dt - 1e-12));
    for (std::int64_t n = 0; n < nsteps; ++n) {
        StepLog log;
        try {
            s = step(s, medium, boundary, config.dt, config, &log);
        } catch (const StepError& e) {
            throw StepError("simulate: " + std::string(e.what()), e.residual_history);
        }
        traj.log.push_back(log);
        if ((n + 1) % config.output_stride == 0 || n + 1 == nsteps)
            traj.states.push_back(s);
    }
    return traj;
}

/** Face-normal velocities v = -K ∇p using the accepted iterate's face K. */
struct FaceVelocity {
    std::vector<double> v0;  // axis-0 faces
    std::vector<double> v1;
};

inline FaceVelocity velocity_field(const PressureState& state, const MediumSpec& medium,
                                   const BoundaryExtension& boundary) {
    const BoundaryTrace psi = boundary.trace_at(state.t);
    const FaceGradients fg = face_gradients(state.p, psi);
    const FaceConductivity K = state.face_K.K0.empty()
                                   ? detail::face_conductivities(medium, state.p, psi)
                                   : state.face_K;
    FaceVelocity v;
    v.v0.resize(fg.g0.size());
    for (size_t k = 0; k < v.v0.size(); ++k) v.v0[k] = -K.K0[k] * fg.g0[k];
    v.v1.resize(fg.g1.size());
    for (size_t k = 0; k < v.v1.size(); ++k) v.v1[k] = -K.K1[k] * fg.g1[k];
    return v;
}

/**
 * Divergence-form residual of the velocity field against the mass update:
 * max over cells of |φ V Δp/dt + Σ outward flux - V f|, normalized. Exercises
 * the discrete flux identity between velocity_field and step.
 */
inline double flux_identity_residual(const PressureState& before, const PressureState& after,
                                     const MediumSpec& medium,
                                     const BoundaryExtension& boundary, double dt,
                                     const SpaceTimeFn& source = {}) {
    const Grid& g = medium.grid;
    const FaceVelocity v = velocity_field(after, medium, boundary);
    const double V = g.cell_volume();
    double worst = 0.0, scale = 1e-300;
    for (int j = 0; j < g.n[1]; ++j)
        for (int i = 0; i < g.n[0]; ++i) {
            const size_t c = size_t(g.cell_index(i, j));
            double div = (v.v0[size_t(j) * (g.n[0] + 1) + i + 1] -
                          v.v0[size_t(j) * (g.n[0] + 1) + i]) *
                         g.face_area(0);
            if (g.dim == 2)
                div += (v.v1[size_t(j + 1) * g.n[0] + i] - v.v1[size_t(j) * g.n[0] + i]) *
                       g.face_area(1);
            double f = 0.0;
            if (source) {
                const auto xc = g.cell_center(i, j);
                f = source(xc[0], xc[1], after.t);
            }
            const double mass = medium.porosity[c] * V * (after.p[c] - before.p[c]) / dt;
            const double resid = mass - (-div) - V * f;
            worst = std::max(worst, std::fabs(resid));
            scale = std::max(scale, std::fabs(mass) + std::fabs(div) + std::fabs(V * f));
        }
    return worst / scale;
}

}  // namespace forchlab
