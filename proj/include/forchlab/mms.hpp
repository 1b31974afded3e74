#pragma once

/**
 * @file mms.hpp
 * @brief Manufactured-solution and analytic-decay convergence testing.
 *
 * A chosen target p*(x,t) is forced into the scheme via the source
 * f = φ p*_t - ∇·(K(|∇p*|)∇p*); observed temporal and spatial orders come
 * from error tables over dt and resolution lists. Coefficients are taken
 * x-independent here (order verification runs on smooth nondegenerate data).
 */

#include <cmath>
#include <vector>

#include "forchlab/solver.hpp"

namespace forchlab {

struct MmsTarget {
    SpaceTimeFn p;
    SpaceTimeFn p_t;
    SpaceTimeFn p_x;
    SpaceTimeFn p_xx;

    // numeric time/space derivatives for expression-defined targets
    static MmsTarget from_function(SpaceTimeFn f, double delta = 1e-5) {
        MmsTarget t;
        t.p = f;
        t.p_t = [f, delta](double x, double y, double s) {
            return (f(x, y, s + delta) - f(x, y, s - delta)) / (2 * delta);
        };
        t.p_x = [f, delta](double x, double y, double s) {
            return (f(x + delta, y, s) - f(x - delta, y, s)) / (2 * delta);
        };
        t.p_xx = [f, delta](double x, double y, double s) {
            return (f(x + delta, y, s) - 2 * f(x, y, s) + f(x - delta, y, s)) /
                   (delta * delta);
        };
        return t;
    }

    static MmsTarget from_expression(const std::string& expr) {
        const Expression e = Expression::parse(expr);
        return from_function([e](double x, double y, double t) { return e.eval(x, y, t); });
    }
};

/**
 * 1D manufactured source for x-independent coefficients:
 * f = φ p*_t - p*_xx (K(ξ) + ξ K_ξ(ξ)) with ξ = |p*_x|.
 */
inline SpaceTimeFn mms_source_1d(const MediumSpec& medium, const MmsTarget& target) {
    const LocalLaw law = local_law(medium.model, 0);
    auto phi = medium.porosity;
    const Grid g = medium.grid;
    auto t = target;
    return [law, phi, g, t](double x, double y, double time) {
        const double xi = std::fabs(t.p_x(x, y, time));
        const KValue kv = eval_K(law, xi);
        // porosity looked up at the owning cell (piecewise-constant field)
        const int i = std::min(int((x - g.lo[0]) / g.spacing(0)), g.n[0] - 1);
        return phi(std::max(i, 0)) * t.p_t(x, y, time) -
               t.p_xx(x, y, time) * (kv.K + kv.xi_dK);
    };
}

struct ConvergenceRow {
    int resolution = 0;
    double dt = 0.0;
    double err_inf = 0.0;
    double err_l2 = 0.0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double temporal_order = 0.0;   // from successive dt halvings at fixed resolution
    double spatial_order = 0.0;    // from successive h halvings (dt scaled with h²)
    bool monotone = true;          // flagged, not fatal
};

inline double observed_order(double coarse_err, double fine_err) {
    if (!(coarse_err > 0.0) || !(fine_err > 0.0)) return 0.0;
    return std::log2(coarse_err / fine_err);
}

namespace detail {

inline ConvergenceRow mms_case(const MediumSpec& medium, const MmsTarget& target,
                               double dt, double t_end, const SpaceTimeFn& source) {
    BoundaryExtension boundary;
    boundary.Psi = target.p;
    boundary.Psi_t = target.p_t;
    boundary.Psi_tt = [t = target](double x, double y, double s) {
        const double d = 1e-4;
        return (t.p_t(x, y, s + d) - t.p_t(x, y, s - d)) / (2 * d);
    };
    boundary.analytic_derivatives = true;

    Field p0 = sample_field(medium.grid,
                            [&](double x, double y) { return target.p(x, y, 0.0); });
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.output_stride = 1 << 30;  // final state only
    cfg.source = source;
    Trajectory traj = simulate(medium, p0, boundary, cfg);

    const PressureState& last = traj.states.back();
    ConvergenceRow row;
    row.resolution = medium.grid.n[0];
    row.dt = dt;
    double l2 = 0.0;
    for (int j = 0; j < medium.grid.n[1]; ++j)
        for (int i = 0; i < medium.grid.n[0]; ++i) {
            const auto xc = medium.grid.cell_center(i, j);
            const double e = last.p(i, j) - target.p(xc[0], xc[1], last.t);
            row.err_inf = std::max(row.err_inf, std::fabs(e));
            l2 += e * e;
        }
    row.err_l2 = std::sqrt(l2 * medium.grid.cell_volume());
    return row;
}

}  // namespace detail

/**
 * Temporal order: run the dt list (decreasing) at the finest resolution and
 * fit successive halvings. With backward Euler the expectation is 1.
 */
inline ConvergenceTable mms_temporal_orders(const MediumConfig& medium_cfg,
                                            const MmsTarget& target, int resolution,
                                            const std::vector<double>& dts, double t_end,
                                            bool with_source = true) {
    ConvergenceTable table;
    MediumConfig cfg = medium_cfg;
    cfg.resolution = {resolution, resolution};
    MediumSpec medium = build_medium(cfg);
    SpaceTimeFn src = with_source ? mms_source_1d(medium, target) : SpaceTimeFn{};
    std::vector<double> errs;
    for (double dt : dts) {
        auto row = detail::mms_case(medium, target, dt, t_end, src);
        table.rows.push_back(row);
        errs.push_back(row.err_inf);
    }
    for (size_t k = 0; k + 1 < errs.size(); ++k) {
        const double ord =
            observed_order(errs[k], errs[k + 1]) / std::log2(dts[k] / dts[k + 1]);
        table.temporal_order = k == 0 ? ord : std::min(table.temporal_order, ord);
        if (errs[k + 1] > errs[k]) table.monotone = false;
    }
    return table;
}

/**
 * Spatial order: resolutions with dt tied to h² so the first-order time error
 * contracts at the same rate and the observed slope isolates the flux stencil.
 */
inline ConvergenceTable mms_spatial_orders(const MediumConfig& medium_cfg,
                                           const MmsTarget& target,
                                           const std::vector<int>& resolutions,
                                           double t_end, bool with_source = true,
                                           double dt_factor = 0.25) {
    ConvergenceTable table;
    std::vector<double> errs;
    for (int res : resolutions) {
        MediumConfig cfg = medium_cfg;
        cfg.resolution = {res, res};
        MediumSpec medium = build_medium(cfg);
        const double h = medium.grid.spacing(0);
        const double dt = dt_factor * h * h;
        SpaceTimeFn src = with_source ? mms_source_1d(medium, target) : SpaceTimeFn{};
        auto row = detail::mms_case(medium, target, dt, t_end, src);
        table.rows.push_back(row);
        errs.push_back(row.err_inf);
    }
    for (size_t k = 0; k + 1 < errs.size(); ++k) {
        const double ord = observed_order(errs[k], errs[k + 1]);
        table.spatial_order = k == 0 ? ord : std::min(table.spatial_order, ord);
        if (errs[k + 1] > errs[k]) table.monotone = false;
    }
    return table;
}

/**
 * Combined convergence study: the temporal sweep at the finest resolution
 * followed by the spatial sweep with dt tied to h². Non-monotone error decay
 * is flagged, not fatal.
 */
inline ConvergenceTable mms_convergence(const MediumConfig& medium_cfg,
                                        const MmsTarget& target,
                                        const std::vector<int>& resolutions,
                                        const std::vector<double>& dts, double t_end,
                                        bool with_source = true) {
    ConvergenceTable table =
        mms_temporal_orders(medium_cfg, target, resolutions.back(), dts, t_end, with_source);
    ConvergenceTable spatial =
        mms_spatial_orders(medium_cfg, target, resolutions, std::min(t_end, 0.1), with_source);
    table.rows.insert(table.rows.end(), spatial.rows.begin(), spatial.rows.end());
    table.spatial_order = spatial.spatial_order;
    table.monotone = table.monotone && spatial.monotone;
    return table;
}

// Analytic heat-mode decay target e^{-π² t} sin(π x) on (0,1), ψ = 0, K ≡ 1.
inline MmsTarget heat_decay_target() {
    const double pi = 3.14159265358979323846;
    MmsTarget t;
    t.p = [pi](double x, double, double s) { return std::exp(-pi * pi * s) * std::sin(pi * x); };
    t.p_t = [pi](double x, double, double s) {
        return -pi * pi * std::exp(-pi * pi * s) * std::sin(pi * x);
    };
    t.p_x = [pi](double x, double, double s) {
        return pi * std::exp(-pi * pi * s) * std::cos(pi * x);
    };
    t.p_xx = [pi](double x, double, double s) {
        return -pi * pi * std::exp(-pi * pi * s) * std::sin(pi * x);
    };
    return t;
}

inline MediumConfig heat_medium_config(int resolution = 256) {
    MediumConfig cfg;
    cfg.preset = "homogeneous";
    cfg.dim = 1;
    cfg.resolution = {resolution, 1};
    cfg.phi_value = 1.0;
    cfg.alphas = {0.0};
    cfg.coeff_values = {1.0};
    cfg.linear_test_mode = true;
    return cfg;
}

}  // namespace forchlab
