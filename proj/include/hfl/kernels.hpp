/// @file kernels.hpp
/// @brief Heat, backward Gaussian, nonlocal space-time and Poisson-type kernels.
///
/// All kernels are evaluated through logarithms (lgamma / log / exp) so that
/// extreme parameter ranges stay finite as long as the true value does.
#pragma once

#include <span>

namespace hfl {

/// Whole-space heat kernel in dimension d = z.size():
/// (4 pi t)^{-d/2} exp(-|z|^2 / (4t)) for t > 0, and 0 for t <= 0.
double heat_kernel(std::span<const double> z, double t);

/// Backward Gaussian weight centered at (X0, t0), evaluated at offset
/// dX = X - X0 in R^{m+1} and dt = t - t0 < 0:
///   exp(-|dX|^2 / (4|dt|)) / ( Gamma(s) (4 pi)^{m/2} |dt|^{m/2 + 1 - s} ).
/// dt >= 0 is a domain error. Scaling: value(R dX, R^2 dt) =
/// R^{-m-2+2s} value(dX, dt); spatial gradient = -dX/(2|dt|) * value.
double backward_kernel(std::span<const double> dX, double dt, double s);

/// Space-time kernel of the nonlocal parabolic operator, z in R^m, tau > 0:
///   exp(-|z|^2/(4 tau)) tau^{-(m/2 + 1 + s)} / ( (4 pi)^{m/2} |Gamma(-s)| ).
/// tau <= 0 is a domain error. Mass identity: integral over z equals
/// tau^{-1-s} / |Gamma(-s)|.
double nonlocal_kernel(std::span<const double> z, double tau, double s);

/// Poisson-type extension kernel, x in R^m, y > 0:
///   B(m, s) y^{2s} / (|x|^2 + y^2)^{(m + 2s)/2},
/// normalized so the x-integral is 1 for every y > 0.
double cs_poisson_kernel(std::span<const double> x, double y, double s);

/// Normalization constant B(m, s): quadrature with a step-doubling check for
/// m = 1 (cached), elementary closed form s/pi for m = 2. At m = 1, s = 1/2
/// it equals 1/pi to quadrature tolerance.
double cs_poisson_normalization(int m, double s);

}  // namespace hfl
