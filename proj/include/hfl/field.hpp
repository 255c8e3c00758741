/// @file field.hpp
/// @brief Bulk fields, boundary traces, nodal gradients and binary snapshots.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hfl/grid.hpp"

namespace hfl {

/// Nodal values of a map U : grid -> R^ell; components contiguous per node,
/// nodes row-major over (x-axes..., y).
struct Field {
    std::shared_ptr<const HalfSpaceGrid> grid;
    int ell = 0;
    std::vector<double> v;

    static Field zeros(std::shared_ptr<const HalfSpaceGrid> g, int ell);

    double& at(int node, int c) { return v[static_cast<std::size_t>(node) * ell + c]; }
    double at(int node, int c) const { return v[static_cast<std::size_t>(node) * ell + c]; }
    const HalfSpaceGrid& g() const { return *grid; }
};

/// Values on the y = 0 face, one ell-vector per horizontal node.
struct Trace {
    std::shared_ptr<const HalfSpaceGrid> grid;
    int ell = 0;
    std::vector<double> v;

    static Trace zeros(std::shared_ptr<const HalfSpaceGrid> g, int ell);

    double& at(int h, int c) { return v[static_cast<std::size_t>(h) * ell + c]; }
    double at(int h, int c) const { return v[static_cast<std::size_t>(h) * ell + c]; }
    const HalfSpaceGrid& g() const { return *grid; }
};

/// Boundary restriction of a bulk field.
Trace restrict_to_boundary(const Field& U);

/// All first partials at every node: axes 0..m-1 are horizontal, axis m is
/// vertical. Central differences at interior nodes, one-sided second-order at
/// faces; exact on affine data.
struct FieldGradient {
    std::shared_ptr<const HalfSpaceGrid> grid;
    int ell = 0;
    std::vector<double> v;  // [node * (m+1) * ell + axis * ell + c]

    double at(int node, int axis, int c) const {
        int m1 = grid->m() + 1;
        return v[(static_cast<std::size_t>(node) * m1 + axis) * ell + c];
    }
};

FieldGradient gradient(const Field& U);

/// Pointwise squared gradient magnitude |grad U|^2 (all axes, all components).
std::vector<double> gradient_sq(const Field& U);

/// Horizontal gradient of a trace (central / one-sided second-order stencils).
/// Layout: [h * m * ell + axis * ell + c].
std::vector<double> trace_gradient(const Trace& u);

/// Binary snapshot: magic "HFLW", version, m, ell, nx, ny as u32, then s, t,
/// eps as IEEE doubles, then node values row-major, little-endian.
void write_snapshot(const Field& U, double t, double epsilon, const std::string& path);

struct Snapshot {
    Field field;
    double t = 0.0;
    double epsilon = 0.0;
};

/// Reads a snapshot and checks its header against the supplied grid.
Snapshot read_snapshot(const std::string& path, std::shared_ptr<const HalfSpaceGrid> grid);

}  // namespace hfl
