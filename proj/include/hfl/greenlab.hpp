/// @file greenlab.hpp
/// @brief Explicit Green function of the heat equation on the upper half-space
///        under an oblique (Robin) boundary condition, Duhamel solutions built
///        from it, and a finite-difference cross-check. Everything here is
///        independent of the flow core and serves as its verification oracle.
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hfl/grid.hpp"

namespace hfl {

/// Kernel parameters: the boundary condition couples the vertical derivative
/// to the value through the coefficient 3 / (4 eps^2).
struct ObliqueParams {
    double epsilon = 1.0;
    int m = 1;  ///< horizontal dimension; the kernel acts in m + 1 space dimensions

    double robin() const { return 3.0 / (4.0 * epsilon * epsilon); }
    static ObliqueParams make(double eps, int m);
};

/// exp(z^2) erfc(z) without overflow; asymptotic series beyond z = 6.
double erfcx(double z);

/// Whole-space heat kernel in `dims` dimensions; zero for t <= 0.
double heat_kernel(std::span<const double> z, double t, int dims);

/// Green function with the oblique boundary condition,
///   G(x, y, t) = K(x - y, t) - K(x - y#, t)
///                - 2 int_0^infty exp(-robin tau) dK/dz_last(x - y# + tau e, t) dtau,
/// where y# reflects the last coordinate and e is the last unit vector. The
/// tail integral runs through adaptive quadrature on the substituted scale
/// tau = eps^2 sigma, absolute tolerance tol_scale times the on-diagonal
/// kernel amplitude. Requires t > 0 and y strictly interior.
double green_oblique(std::span<const double> x, std::span<const double> y, double t,
                     const ObliqueParams& p, double tol_scale = 1e-10);

/// Same kernel in closed form through erfcx:
///   G = K(x - y, t) + (1 - 2 robin sqrt(pi t) erfcx(u0)) K(x - y#, t),
///   u0 = (x_last + y_last) / (2 sqrt t) + robin sqrt t.
/// Used where many kernel values are needed; green_oblique cross-checks it.
double green_oblique_cf(std::span<const double> x, std::span<const double> y, double t,
                        const ObliqueParams& p);

/// Evaluation set for the boundary-condition residual.
struct BoundarySampleSet {
    std::vector<std::vector<double>> boundary_points;  ///< last coordinate 0
    std::vector<std::vector<double>> sources;          ///< strictly interior
    std::vector<double> times;                         ///< all positive
};

/// max over samples of |dG/dz_last - robin G| / (|dG/dz_last| + |robin G| + floor)
/// with both sides quadrature-evaluated independently: the vertical derivative
/// trades the x-derivative of the tail integrand for its tau-derivative, so the
/// residual measures quadrature consistency rather than cancelling identically.
double oblique_bc_residual(const ObliqueParams& p, const BoundarySampleSet& samples,
                           double tol_scale = 1e-10);

using SpaceTimeFn = std::function<double(std::span<const double> x, double t)>;

/// Quadrature controls for duhamel_solve: tensor trapezoid resolution over the
/// grid's box, the terminal band handled by the kernel-mass shortcut, and the
/// Simpson panel count for the time integral.
struct DuhamelOptions {
    int quad_nx = 129;
    int quad_ny = 65;
    double band = 1e-3;
    int s_panels = 40;
};

/// u(x, t) = int_0^t int G(x, y, t - s) f(y, s) dy ds on the nodes of g at the
/// given times, by separable tensor quadrature over the grid's box. The source
/// must be negligible outside that box. One horizontal dimension only.
std::vector<std::vector<double>> duhamel_solve(const SpaceTimeFn& f, const ObliqueParams& p,
                                               const HalfSpaceGrid& g,
                                               const std::vector<double>& times,
                                               const DuhamelOptions& opt = {});

/// Grid with uniform vertical spacing for the unweighted heat runs (s = 1/2).
std::shared_ptr<const HalfSpaceGrid> build_uniform_grid(const GridConfig& cfg);

/// Forward-Euler finite-volume solve of dt u = lap u + f with the Robin flux
/// robin() u through y = 0 and zero-flux artificial faces; returns snapshots at
/// the requested times. Requires an s = 1/2 grid and a stable dt.
std::vector<std::vector<double>> robin_heat_fd(const SpaceTimeFn& f, const ObliqueParams& p,
                                               const HalfSpaceGrid& g, double dt,
                                               const std::vector<double>& times);

struct LadderLevel {
    int nx = 0;
    int ny = 0;
    double dt = 0.0;
    double rel_l2_error = 0.0;
};

/// Relative space-time L^2 error of robin_heat_fd against duhamel_solve across
/// a nested refinement ladder, with the observed convergence order.
struct DuhamelFdReport {
    std::vector<LadderLevel> levels;
    double observed_order = 0.0;
};

DuhamelFdReport duhamel_vs_fd(const SpaceTimeFn& f, const ObliqueParams& p,
                              const GridConfig& coarse, int levels, double T,
                              const DuhamelOptions& opt = {});

/// One verification check: measured residual against its documented tolerance.
struct GreenCheck {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Canonical verification battery (one horizontal dimension): kernel limits,
/// closed-form agreement, boundary residual, epsilon monotonicity, Duhamel
/// linearity, constant-source short-time value, a manufactured Robin solution,
/// and the finite-difference cross-validation order.
std::vector<GreenCheck> run_green_checks();

/// Structured text report, one object per check.
std::string green_report_json(const std::vector<GreenCheck>& checks);

}  // namespace hfl
