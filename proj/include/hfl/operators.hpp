/// @file operators.hpp
/// @brief Finite-volume form of the weighted operator div(y^a grad U) and the
///        matching discrete Dirichlet energy.
///
/// One edge-based quadratic form underlies the elliptic solve, the explicit
/// step, the minimizing-movement objective and the energy ledger, so discrete
/// integration by parts and per-step dissipation inequalities hold to rounding.
#pragma once

#include "hfl/field.hpp"

namespace hfl {

/// Edge-based discrete Dirichlet energy (1/2) sum over edges of the weighted
/// squared difference quotient; consistent with (1/2) int y^a |grad U|^2.
double dirichlet_edge_energy(const Field& U);

/// Exact gradient of dirichlet_edge_energy with respect to nodal values.
void dirichlet_edge_gradient(const Field& U, Field& out);

/// Node measure W_n = (product of horizontal trapezoid weights) * cell_mass(j).
double node_measure(const HalfSpaceGrid& g, int h, int j);

/// Finite-volume application of y^{-a} div(y^a grad U) with zero-flux closure
/// at every face including y = 0 (boundary forcing is added separately).
/// Defined as -dirichlet_edge_gradient / node measure, so the pair is an exact
/// adjoint at machine precision.
void weighted_fv_laplacian(const Field& U, Field& out);

/// Diagonal of the edge-form Hessian: per node, the sum of incident edge
/// coefficients (one value per node, identical across components).
void edge_form_diagonal(const HalfSpaceGrid& g, std::vector<double>& out);

/// Largest diagonal entry of -weighted_fv_laplacian over all nodes; the
/// forward Euler stability limit is its reciprocal.
double fv_max_diagonal(const HalfSpaceGrid& g);

/// Forward Euler stability bound for the linear part: 1 / fv_max_diagonal.
/// Equals 0.25 * min(dx, dy)^2 on uniform grids at s = 1/2.
double cfl_limit(const HalfSpaceGrid& g);

/// Weighted L^2 inner product of two fields using finite-volume node masses:
/// sum over nodes of W_n <U_n, V_n>.
double weighted_mass_inner(const Field& U, const Field& V);

}  // namespace hfl
