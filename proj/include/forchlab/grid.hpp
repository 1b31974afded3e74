#pragma once

/**
 * @file grid.hpp
 * @brief Uniform cell-centered grids on boxes in 1D/2D, scalar fields on them,
 *        and the discrete gradient machinery shared by the solver and all norms.
 *
 * Cells are axis-aligned boxes of uniform spacing; unknowns live at cell
 * centers. Faces separate cells (interior) or a cell from the domain boundary.
 * Gradients are face-normal differences; per-cell gradients are the average of
 * the two face values along each axis. Boundary faces difference against a
 * trace value at the face center over the half spacing.
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace forchlab {

struct Grid {
    int dim = 1;
    std::array<int, 2> n{4, 1};          // cells per axis (n[1]=1 in 1D)
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};

    static Grid make_1d(int nx, double x0 = 0.0, double x1 = 1.0) {
        Grid g;
        g.dim = 1;
        g.n = {nx, 1};
        g.lo = {x0, 0.0};
        g.hi = {x1, 1.0};
        g.validate();
        return g;
    }

    static Grid make_2d(int nx, int ny, double x0 = 0.0, double x1 = 1.0,
                        double y0 = 0.0, double y1 = 1.0) {
        Grid g;
        g.dim = 2;
        g.n = {nx, ny};
        g.lo = {x0, y0};
        g.hi = {x1, y1};
        g.validate();
        return g;
    }

    void validate() const {
        if (dim != 1 && dim != 2)
            throw std::invalid_argument("Grid: dim must be 1 or 2");
        for (int a = 0; a < dim; ++a) {
            if (n[a] < 4)
                throw std::invalid_argument("Grid: resolution must be >= 4 per axis");
            if (!(hi[a] > lo[a]))
                throw std::invalid_argument("Grid: extent must be positive");
        }
        if (dim == 1 && n[1] != 1)
            throw std::invalid_argument("Grid: 1D grid must have n[1] == 1");
    }

    double spacing(int axis) const { return (hi[axis] - lo[axis]) / n[axis]; }
    double cell_volume() const {
        double v = spacing(0);
        if (dim == 2) v *= spacing(1);
        return v;
    }
    // Face area orthogonal to `axis`.
    double face_area(int axis) const {
        if (dim == 1) return 1.0;
        return spacing(1 - axis);
    }

    std::int64_t num_cells() const { return std::int64_t(n[0]) * n[1]; }
    std::int64_t cell_index(int i, int j = 0) const { return std::int64_t(j) * n[0] + i; }

    double center(int axis, int idx) const {
        return lo[axis] + (idx + 0.5) * spacing(axis);
    }
    // Coordinates of cell (i,j); y is 0 in 1D.
    std::array<double, 2> cell_center(int i, int j = 0) const {
        return {center(0, i), dim == 2 ? center(1, j) : 0.0};
    }

    bool same_shape(const Grid& o) const {
        return dim == o.dim && n == o.n && lo == o.lo && hi == o.hi;
    }
};

struct Field {
    Grid grid;
    std::vector<double> v;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0)
        : grid(g), v(static_cast<size_t>(g.num_cells()), fill) {}

    double& operator()(int i, int j = 0) { return v[size_t(grid.cell_index(i, j))]; }
    double operator()(int i, int j = 0) const { return v[size_t(grid.cell_index(i, j))]; }
    double& operator[](size_t k) { return v[k]; }
    double operator[](size_t k) const { return v[k]; }
    size_t size() const { return v.size(); }

    double min() const {
        double m = v.empty() ? 0.0 : v[0];
        for (double x : v) m = std::min(m, x);
        return m;
    }
    double max() const {
        double m = v.empty() ? 0.0 : v[0];
        for (double x : v) m = std::max(m, x);
        return m;
    }
};

inline void require_same_grid(const Field& a, const Field& b, const char* what) {
    if (!a.grid.same_shape(b.grid))
        throw std::invalid_argument(std::string("grid mismatch in ") + what);
}

// Sample f(x, y) at cell centers.
inline Field sample_field(const Grid& g,
                          const std::function<double(double, double)>& f) {
    Field out(g);
    for (int j = 0; j < g.n[1]; ++j)
        for (int i = 0; i < g.n[0]; ++i)
            out(i, j) = f(g.center(0, i), g.dim == 2 ? g.center(1, j) : 0.0);
    return out;
}

inline double integrate(const Field& f) {
    double s = 0.0;
    for (double x : f.v) s += x;
    return s * f.grid.cell_volume();
}

/**
 * Value at a boundary-face center, used to close gradients at the boundary.
 * `axis` is the face normal, `side` 0 (low) or 1 (high); (x, y) is the face
 * center position.
 */
using BoundaryTrace = std::function<double(int axis, int side, double x, double y)>;

inline BoundaryTrace zero_trace() {
    return [](int, int, double, double) { return 0.0; };
}

// Trace of an analytic function: evaluate it at the face center.
inline BoundaryTrace trace_of(const std::function<double(double, double)>& f) {
    return [f](int, int, double x, double y) { return f(x, y); };
}

/**
 * Face-normal difference quotients of a cell field.
 *
 * For each axis there are n[axis]+1 face planes. Interior faces use the
 * two-cell difference over one spacing; boundary faces use the trace value at
 * the face center over half a spacing.
 *
 * Layout: axis-0 faces at (f, j) with f in [0, n0], then axis-1 faces (2D) at
 * (i, f) with f in [0, n1].
 */
struct FaceGradients {
    std::vector<double> g0;  // axis-0 normal differences, size (n0+1)*n1
    std::vector<double> g1;  // axis-1 normal differences, size n0*(n1+1) (empty in 1D)

    double& at0(const Grid& g, int f, int j) { return g0[size_t(j) * (g.n[0] + 1) + f]; }
    double at0(const Grid& g, int f, int j) const { return g0[size_t(j) * (g.n[0] + 1) + f]; }
    double& at1(const Grid& g, int i, int f) { return g1[size_t(f) * g.n[0] + i]; }
    double at1(const Grid& g, int i, int f) const { return g1[size_t(f) * g.n[0] + i]; }
};

inline FaceGradients face_gradients(const Field& u, const BoundaryTrace& trace) {
    const Grid& g = u.grid;
    FaceGradients fg;
    fg.g0.assign(size_t(g.n[0] + 1) * g.n[1], 0.0);
    const double h0 = g.spacing(0);
    for (int j = 0; j < g.n[1]; ++j) {
        const double y = g.dim == 2 ? g.center(1, j) : 0.0;
        fg.at0(g, 0, j) = (u(0, j) - trace(0, 0, g.lo[0], y)) / (0.5 * h0);
        for (int f = 1; f < g.n[0]; ++f)
            fg.at0(g, f, j) = (u(f, j) - u(f - 1, j)) / h0;
        fg.at0(g, g.n[0], j) = (trace(0, 1, g.hi[0], y) - u(g.n[0] - 1, j)) / (0.5 * h0);
    }
    if (g.dim == 2) {
        fg.g1.assign(size_t(g.n[0]) * (g.n[1] + 1), 0.0);
        const double h1 = g.spacing(1);
        for (int i = 0; i < g.n[0]; ++i) {
            const double x = g.center(0, i);
            fg.at1(g, i, 0) = (u(i, 0) - trace(1, 0, x, g.lo[1])) / (0.5 * h1);
            for (int f = 1; f < g.n[1]; ++f)
                fg.at1(g, i, f) = (u(i, f) - u(i, f - 1)) / h1;
            fg.at1(g, i, g.n[1]) = (trace(1, 1, x, g.hi[1]) - u(i, g.n[1] - 1)) / (0.5 * h1);
        }
    }
    return fg;
}

/**
 * Per-cell gradient vectors reconstructed as the mean of the two adjacent
 * face-normal differences along each axis. Returns one Field per axis.
 */
inline std::array<Field, 2> cell_gradient(const Field& u, const BoundaryTrace& trace) {
    const Grid& g = u.grid;
    FaceGradients fg = face_gradients(u, trace);
    std::array<Field, 2> grad{Field(g), Field(g)};
    for (int j = 0; j < g.n[1]; ++j)
        for (int i = 0; i < g.n[0]; ++i)
            grad[0](i, j) = 0.5 * (fg.at0(g, i, j) + fg.at0(g, i + 1, j));
    if (g.dim == 2) {
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i)
                grad[1](i, j) = 0.5 * (fg.at1(g, i, j) + fg.at1(g, i, j + 1));
    }
    return grad;
}

// |∇u| per cell from the reconstructed gradient.
inline Field gradient_magnitude(const Field& u, const BoundaryTrace& trace) {
    auto grad = cell_gradient(u, trace);
    Field out(u.grid);
    for (size_t k = 0; k < out.size(); ++k) {
        const double gx = grad[0][k];
        const double gy = u.grid.dim == 2 ? grad[1][k] : 0.0;
        out[k] = std::hypot(gx, gy);
    }
    return out;
}

}  // namespace forchlab
