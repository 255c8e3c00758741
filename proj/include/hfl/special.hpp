/// @file special.hpp
/// @brief Small special-function helpers used by the kernel quadratures.
#pragma once

namespace hfl {

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a),
/// a > 0, x >= 0; series for x < a + 1, continued fraction otherwise.
double gamma_p(double a, double x);

/// |Gamma(-s)| = Gamma(1 - s) / s for s in (0, 1).
double abs_gamma_minus(double s);

}  // namespace hfl
