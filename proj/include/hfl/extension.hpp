/// @file extension.hpp
/// @brief Elliptic extension of boundary data and the two evaluation routes
///        for the weighted-flux realization of the nonlocal operator.
#pragma once

#include <memory>
#include <vector>

#include "hfl/field.hpp"
#include "hfl/grid.hpp"

namespace hfl {

enum class ExtendMethod { fd, kernel };

/// Solves -div(y^a grad U) = 0 with Dirichlet data u0 at y = 0 and
/// homogeneous Neumann on the artificial faces.
///
/// fd: preconditioned conjugate gradients on the edge form, relative residual
/// below 1e-10 (SolverError on stall). kernel: per-level convolution of the
/// evenly reflected, periodized trace with the Poisson-type kernel on a
/// sinh-substituted quadrature grid (m = 1 only). Both leave the y = 0 row
/// bit-equal to u0.
Field harmonic_extend(const Trace& u0, ExtendMethod method = ExtendMethod::fd);

/// Weighted Dirichlet integral of y^a |grad U|^2 over the box (no 1/2 factor),
/// by bulk quadrature of the nodal gradient magnitude.
double dirichlet_energy(const Field& U);

/// Weighted boundary flux route: -(1/c_s) lim_{y->0+} y^a dU/dy, from the
/// finite-volume fluxes through the first two interior faces, Richardson
/// extrapolated linearly in y^{1+a} to the boundary. Requires ny >= 8.
Trace frac_op_via_extension(const Field& U);

/// Time-indexed boundary samples feeding the history-integral route. Times
/// are strictly increasing; for queries before times.front() the datum is the
/// first sample held constant.
struct TraceHistory {
    std::shared_ptr<const HalfSpaceGrid> grid;
    int ell = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> samples;  // samples[i][h * ell + c]

    static TraceHistory single(const Trace& u0, double t = 0.0);
    void push(double t, const Trace& u);
};

/// History-integral route for the nonlocal operator at time t (m = 1 only):
///   int_0^inf int ( u(x,t) - u(x - z, t - tau) ) K_s(z, tau) dz dtau
/// split into a Taylor-corrected singular range [0, tau_min] with
/// tau_min = (sample spacing)^2, trapezoid on a geometric tau grid against
/// interpolated history, and an analytic constant-datum tail in tau with the
/// z-kernel expressed through the incomplete gamma function. Horizontal
/// lookups use the even reflection of the trace across the box faces.
Trace frac_op_via_kernel(const TraceHistory& hist, double t);

/// L^2 norm over the trace of the tangential part of w at the normalized base
/// u/|u|: the defect of perpendicularity of w to u. Throws std::domain_error
/// where |u| vanishes to working precision.
double orthogonality_residual(const Trace& u, const Trace& w);

}  // namespace hfl
