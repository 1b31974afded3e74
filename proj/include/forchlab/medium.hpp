#pragma once

/**
 * @file medium.hpp
 * @brief Heterogeneous medium construction: porosity and Forchheimer
 *        coefficient fields sampled on a grid from named presets, analytic
 *        expressions, or raw arrays.
 *
 * Presets: homogeneous, layered, checkerboard, radial, expression, plus two
 * canned stress cases — near_degenerate (porosity floor 1e-3) and
 * singular_weight (W1 spanning several orders of magnitude).
 */

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "forchlab/constitutive.hpp"
#include "forchlab/expression.hpp"
#include "forchlab/grid.hpp"

namespace forchlab {

struct MediumSpec {
    Grid grid;
    Field porosity;            // φ(x) ∈ (0, 1]
    ForchheimerModel model;
    DerivedWeights weights;

    void validate() const {
        model.validate();
        if (!porosity.grid.same_shape(grid) || !model.grid().same_shape(grid))
            throw std::invalid_argument("MediumSpec: fields sampled on different grids");
        for (double phi : porosity.v)
            if (!(phi > 0.0) || phi > 1.0)
                throw std::invalid_argument("MediumSpec: porosity must lie in (0, 1]");
    }
};

struct MediumConfig {
    std::string preset = "homogeneous";
    int dim = 1;
    std::array<int, 2> resolution{64, 64};
    std::array<double, 2> extent{1.0, 1.0};

    std::vector<double> alphas{0.0, 1.0};
    bool linear_test_mode = false;

    // homogeneous (also the fallback values for other presets)
    double phi_value = 0.5;
    std::vector<double> coeff_values{1.0, 1.0};

    // layered / checkerboard: per-region values, cycled
    int layer_axis = 0;
    std::vector<double> phi_regions;
    std::vector<std::vector<double>> coeff_regions;  // [term][region]
    int layers = 2;
    int tiles = 4;

    // radial: smooth blend between inner and outer values
    std::array<double, 2> center{0.5, 0.5};
    double radius = 0.3;
    double blend_width = 0.05;
    double phi_inner = 0.9, phi_outer = 0.3;
    std::vector<double> coeff_inner, coeff_outer;

    // expression preset
    std::string phi_expr;
    std::vector<std::string> coeff_exprs;

    // raw arrays
    std::vector<double> phi_raw;
    std::vector<std::vector<double>> coeff_raw;

    bool operator==(const MediumConfig&) const = default;

    Grid make_grid() const {
        return dim == 1 ? Grid::make_1d(resolution[0], 0.0, extent[0])
                        : Grid::make_2d(resolution[0], resolution[1], 0.0, extent[0], 0.0,
                                        extent[1]);
    }

    // Canned stress cases from the preset catalogue.
    static MediumConfig near_degenerate(int dim = 1) {
        MediumConfig c;
        c.preset = "layered";
        c.dim = dim;
        c.layers = 2;
        c.phi_regions = {1e-3, 0.9};
        c.coeff_regions = {{1.0, 2.0}, {1.0, 1.0}};
        return c;
    }
    static MediumConfig singular_weight(int dim = 1) {
        MediumConfig c;
        c.preset = "expression";
        c.dim = dim;
        c.phi_expr = "0.5";
        // max coefficient spans e^{16} ≈ 8.9e6, so W1 spans > 3 decades
        c.coeff_exprs = {"exp(8*sin(2*pi*x))", "1.0"};
        return c;
    }
};

namespace detail {

inline int region_of(const MediumConfig& cfg, const Grid& g, int i, int j) {
    if (cfg.preset == "layered") {
        const int n = cfg.layer_axis == 0 ? g.n[0] : g.n[1];
        const int idx = cfg.layer_axis == 0 ? i : j;
        return std::min(idx * cfg.layers / n, cfg.layers - 1);
    }
    // checkerboard
    const int ti = i * cfg.tiles / g.n[0];
    const int tj = g.dim == 2 ? j * cfg.tiles / g.n[1] : 0;
    return (ti + tj) % 2;
}

inline double pick(const std::vector<double>& regions, int r, double fallback) {
    if (regions.empty()) return fallback;
    return regions[size_t(r) % regions.size()];
}

}  // namespace detail

inline MediumSpec build_medium(const MediumConfig& cfg) {
    const Grid g = cfg.make_grid();
    const size_t nterms = cfg.alphas.size();
    MediumSpec spec;
    spec.grid = g;
    spec.porosity = Field(g);
    spec.model.alphas = cfg.alphas;
    spec.model.linear_test_mode = cfg.linear_test_mode;
    spec.model.coeffs.assign(nterms, Field(g));

    auto coeff_fallback = [&](size_t term) {
        return term < cfg.coeff_values.size() ? cfg.coeff_values[term] : 1.0;
    };

    if (cfg.preset == "homogeneous") {
        for (size_t k = 0; k < spec.porosity.size(); ++k) spec.porosity[k] = cfg.phi_value;
        for (size_t term = 0; term < nterms; ++term)
            for (size_t k = 0; k < spec.porosity.size(); ++k)
                spec.model.coeffs[term][k] = coeff_fallback(term);
    } else if (cfg.preset == "layered" || cfg.preset == "checkerboard") {
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i) {
                const int r = detail::region_of(cfg, g, i, j);
                const size_t k = size_t(g.cell_index(i, j));
                spec.porosity[k] = detail::pick(cfg.phi_regions, r, cfg.phi_value);
                for (size_t term = 0; term < nterms; ++term) {
                    const auto& regions = term < cfg.coeff_regions.size()
                                              ? cfg.coeff_regions[term]
                                              : std::vector<double>{};
                    spec.model.coeffs[term][k] = detail::pick(regions, r, coeff_fallback(term));
                }
            }
    } else if (cfg.preset == "radial") {
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i) {
                const auto xc = g.cell_center(i, j);
                const double r = g.dim == 2
                                     ? std::hypot(xc[0] - cfg.center[0], xc[1] - cfg.center[1])
                                     : std::fabs(xc[0] - cfg.center[0]);
                const double w = 1.0 / (1.0 + std::exp((r - cfg.radius) / cfg.blend_width));
                const size_t k = size_t(g.cell_index(i, j));
                spec.porosity[k] = w * cfg.phi_inner + (1.0 - w) * cfg.phi_outer;
                for (size_t term = 0; term < nterms; ++term) {
                    const double ci = term < cfg.coeff_inner.size() ? cfg.coeff_inner[term]
                                                                    : coeff_fallback(term);
                    const double co = term < cfg.coeff_outer.size() ? cfg.coeff_outer[term]
                                                                    : coeff_fallback(term);
                    spec.model.coeffs[term][k] = w * ci + (1.0 - w) * co;
                }
            }
    } else if (cfg.preset == "expression") {
        if (cfg.phi_expr.empty() || cfg.coeff_exprs.size() != nterms)
            throw std::invalid_argument(
                "build_medium: expression preset needs phi_expr and one expression per term");
        const Expression phi = Expression::parse(cfg.phi_expr);
        std::vector<Expression> coeffs;
        for (const auto& s : cfg.coeff_exprs) coeffs.push_back(Expression::parse(s));
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i) {
                const auto xc = g.cell_center(i, j);
                const size_t k = size_t(g.cell_index(i, j));
                spec.porosity[k] = phi.eval(xc[0], xc[1], 0.0);
                for (size_t term = 0; term < nterms; ++term)
                    spec.model.coeffs[term][k] = coeffs[term].eval(xc[0], xc[1], 0.0);
            }
    } else if (cfg.preset == "raw") {
        if (cfg.phi_raw.size() != size_t(g.num_cells()) || cfg.coeff_raw.size() != nterms)
            throw std::invalid_argument("build_medium: raw arrays do not match the grid");
        spec.porosity.v = cfg.phi_raw;
        for (size_t term = 0; term < nterms; ++term) {
            if (cfg.coeff_raw[term].size() != size_t(g.num_cells()))
                throw std::invalid_argument("build_medium: raw coefficient array size mismatch");
            spec.model.coeffs[term].v = cfg.coeff_raw[term];
        }
    } else if (cfg.preset == "near_degenerate") {
        MediumConfig c = MediumConfig::near_degenerate(cfg.dim);
        c.resolution = cfg.resolution;
        c.extent = cfg.extent;
        return build_medium(c);
    } else if (cfg.preset == "singular_weight") {
        MediumConfig c = MediumConfig::singular_weight(cfg.dim);
        c.resolution = cfg.resolution;
        c.extent = cfg.extent;
        return build_medium(c);
    } else {
        throw std::invalid_argument("build_medium: unknown preset '" + cfg.preset + "'");
    }

    spec.validate();
    spec.weights = compute_weights(spec.model);
    return spec;
}

}  // namespace forchlab
