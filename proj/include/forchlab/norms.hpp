#pragma once

/**
 * @file norms.hpp
 * @brief Weighted Lebesgue norms ‖u‖_{L^p_w} = (∫ w |u|^p dx)^{1/p} by midpoint
 *        quadrature on the cell grid.
 */

#include <cmath>

#include "forchlab/grid.hpp"

namespace forchlab {

// ∫ w(x) |u(x)|^p dx  (midpoint rule)
inline double weighted_integral(const Field& u, const Field& w, double p) {
    require_same_grid(u, w, "weighted_integral");
    double s = 0.0;
    if (p == 2.0) {
        for (size_t k = 0; k < u.size(); ++k) s += w[k] * u[k] * u[k];
    } else if (p == 1.0) {
        for (size_t k = 0; k < u.size(); ++k) s += w[k] * std::fabs(u[k]);
    } else {
        for (size_t k = 0; k < u.size(); ++k) s += w[k] * std::pow(std::fabs(u[k]), p);
    }
    return s * u.grid.cell_volume();
}

inline double weighted_norm(const Field& u, const Field& w, double p) {
    if (p < 1.0) throw std::invalid_argument("weighted_norm: p must be >= 1");
    return std::pow(weighted_integral(u, w, p), 1.0 / p);
}

inline double lp_norm(const Field& u, double p) {
    double s = 0.0;
    for (size_t k = 0; k < u.size(); ++k) s += std::pow(std::fabs(u[k]), p);
    return std::pow(s * u.grid.cell_volume(), 1.0 / p);
}

}  // namespace forchlab
