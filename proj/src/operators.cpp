#include "hfl/operators.hpp"

#include <algorithm>
#include <cmath>

namespace hfl {

namespace {

// Applies fn(node_a, node_b, coef) for every edge of the grid, where coef is
// the edge weight of the quadratic form: energy contribution is
// (1/2) coef (U_b - U_a)^2 per component.
template <class F>
void for_each_edge(const HalfSpaceGrid& g, F&& fn) {
    const int m = g.m(), nx = g.nx(), ny = g.ny();
    const double dx = g.dx();
    // vertical edges: transverse measure = horizontal trapezoid weight
    for (int h = 0; h < g.hcount(); ++h) {
        double xw = g.x_weight(h);
        for (int j = 0; j + 1 < ny; ++j)
            fn(g.node(h, j), g.node(h, j + 1), xw * g.face_coef(j) / g.dy(j));
    }
    // horizontal edges along axis 0
    if (m == 1) {
        for (int i = 0; i + 1 < nx; ++i)
            for (int j = 0; j < ny; ++j)
                fn(g.node(i, j), g.node(i + 1, j), g.cell_mass(j) / dx);
    } else {
        for (int i0 = 0; i0 + 1 < nx; ++i0)
            for (int i1 = 0; i1 < nx; ++i1) {
                double tw = g.x_axis_weight(i1);
                for (int j = 0; j < ny; ++j)
                    fn(g.node(i0 * nx + i1, j), g.node((i0 + 1) * nx + i1, j),
                       tw * g.cell_mass(j) / dx);
            }
        // axis 1
        for (int i0 = 0; i0 < nx; ++i0) {
            double tw = g.x_axis_weight(i0);
            for (int i1 = 0; i1 + 1 < nx; ++i1)
                for (int j = 0; j < ny; ++j)
                    fn(g.node(i0 * nx + i1, j), g.node(i0 * nx + i1 + 1, j),
                       tw * g.cell_mass(j) / dx);
        }
    }
}

}  // namespace

double dirichlet_edge_energy(const Field& U) {
    KahanSum e;
    const int ell = U.ell;
    for_each_edge(U.g(), [&](int a, int b, double coef) {
        double s = 0.0;
        for (int c = 0; c < ell; ++c) s += sqr(U.at(b, c) - U.at(a, c));
        e.add(0.5 * coef * s);
    });
    return e.value();
}

void dirichlet_edge_gradient(const Field& U, Field& out) {
    out.grid = U.grid;
    out.ell = U.ell;
    out.v.assign(U.v.size(), 0.0);
    const int ell = U.ell;
    for_each_edge(U.g(), [&](int a, int b, double coef) {
        for (int c = 0; c < ell; ++c) {
            double d = coef * (U.at(b, c) - U.at(a, c));
            out.at(a, c) -= d;
            out.at(b, c) += d;
        }
    });
}

double node_measure(const HalfSpaceGrid& g, int h, int j) {
    return g.x_weight(h) * g.cell_mass(j);
}

void weighted_fv_laplacian(const Field& U, Field& out) {
    dirichlet_edge_gradient(U, out);
    const HalfSpaceGrid& g = U.g();
    const int ell = U.ell;
    for (int h = 0; h < g.hcount(); ++h)
        for (int j = 0; j < g.ny(); ++j) {
            double inv = -1.0 / node_measure(g, h, j);
            int n = g.node(h, j);
            for (int c = 0; c < ell; ++c) out.at(n, c) *= inv;
        }
}

void edge_form_diagonal(const HalfSpaceGrid& g, std::vector<double>& out) {
    out.assign(g.num_nodes(), 0.0);
    for_each_edge(g, [&](int a, int b, double coef) {
        out[a] += coef;
        out[b] += coef;
    });
}

double fv_max_diagonal(const HalfSpaceGrid& g) {
    // Diagonal of -weighted_fv_laplacian at (h, j): horizontal part is
    // 2m / dx^2 at every node; vertical part is the flux-coefficient sum over
    // the node's faces divided by the cell mass.
    double best = 0.0;
    const double hx = 2.0 * g.m() / sqr(g.dx());
    for (int j = 0; j < g.ny(); ++j) {
        double vy = 0.0;
        if (j > 0) vy += g.face_coef(j - 1) / g.dy(j - 1);
        if (j + 1 < g.ny()) vy += g.face_coef(j) / g.dy(j);
        best = std::max(best, hx + vy / g.cell_mass(j));
    }
    return best;
}

double cfl_limit(const HalfSpaceGrid& g) { return 1.0 / fv_max_diagonal(g); }

double weighted_mass_inner(const Field& U, const Field& V) {
    const HalfSpaceGrid& g = U.g();
    const int ell = U.ell;
    KahanSum total;
    for (int h = 0; h < g.hcount(); ++h)
        for (int j = 0; j < g.ny(); ++j) {
            double w = node_measure(g, h, j);
            int n = g.node(h, j);
            double s = 0.0;
            for (int c = 0; c < ell; ++c) s += U.at(n, c) * V.at(n, c);
            total.add(w * s);
        }
    return total.value();
}

}  // namespace hfl
