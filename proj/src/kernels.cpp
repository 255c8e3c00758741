#include "hfl/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "hfl/common.hpp"
#include "hfl/special.hpp"

namespace hfl {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

double norm_sq(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

double heat_kernel(std::span<const double> z, double t) {
    if (t <= 0.0) return 0.0;
    const double d = static_cast<double>(z.size());
    double lg = -0.5 * d * std::log(kFourPi * t) - norm_sq(z) / (4.0 * t);
    return std::exp(lg);
}

double backward_kernel(std::span<const double> dX, double dt, double s) {
    if (!(s > 0.0 && s < 1.0)) throw std::domain_error("backward_kernel: s must be in (0,1)");
    if (dX.size() < 2) throw std::invalid_argument("backward_kernel: offset must be in R^{m+1}");
    if (dt >= 0.0) throw std::domain_error("backward_kernel: requires t < t0");
    const double m = static_cast<double>(dX.size()) - 1.0;
    const double tau = -dt;
    double lg = -norm_sq(dX) / (4.0 * tau) - std::lgamma(s) - 0.5 * m * std::log(kFourPi) -
                (0.5 * m + 1.0 - s) * std::log(tau);
    return std::exp(lg);
}

double nonlocal_kernel(std::span<const double> z, double tau, double s) {
    if (!(s > 0.0 && s < 1.0)) throw std::domain_error("nonlocal_kernel: s must be in (0,1)");
    if (z.empty()) throw std::invalid_argument("nonlocal_kernel: z must be in R^m, m >= 1");
    if (tau <= 0.0) throw std::domain_error("nonlocal_kernel: requires tau > 0");
    const double m = static_cast<double>(z.size());
    double lg = -norm_sq(z) / (4.0 * tau) - 0.5 * m * std::log(kFourPi) -
                std::log(abs_gamma_minus(s)) - (0.5 * m + 1.0 + s) * std::log(tau);
    return std::exp(lg);
}

namespace {

// integral over R of (1 + w^2)^{-(1+2s)/2} via w = sinh(v); the transformed
// integrand 2 cosh(v)^{-2s} is even and decays like exp(-2 s v), so the
// trapezoid rule converges beyond all orders in h.
double poisson_shape_integral(double s, double h) {
    const double vmax = std::max(25.0, 28.0 / (2.0 * s));
    KahanSum sum;
    const int n = static_cast<int>(vmax / h) + 1;
    for (int k = 0; k <= n; ++k) {
        double f = 2.0 * std::pow(std::cosh(k * h), -2.0 * s);
        sum.add((k == 0 || k == n) ? 0.5 * h * f : h * f);
    }
    return sum.value();
}

}  // namespace

double cs_poisson_normalization(int m, double s) {
    if (m != 1 && m != 2) throw std::domain_error("cs_poisson_normalization: m must be 1 or 2");
    if (!(s > 0.0 && s < 1.0))
        throw std::domain_error("cs_poisson_normalization: s must be in (0,1)");

    // m = 2: the radial form 2 pi r (1 + r^2)^{-1-s} has the elementary
    // antiderivative -pi (1 + r^2)^{-s} / s, so the shape integral is pi / s.
    if (m == 2) return s / std::numbers::pi;

    static std::map<std::int64_t, double> cache;
    static std::mutex mu;
    auto key = static_cast<std::int64_t>(std::llround(s * 1e12));
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    double coarse = poisson_shape_integral(s, 1.0 / 64.0);
    double fine = poisson_shape_integral(s, 1.0 / 128.0);
    if (std::abs(fine - coarse) > 1e-10 * std::abs(fine))
        throw OracleError("cs_poisson_normalization: quadrature did not settle",
                          std::abs(fine - coarse) / std::abs(fine));
    double b = 1.0 / fine;
    std::lock_guard<std::mutex> lock(mu);
    cache[key] = b;
    return b;
}

double cs_poisson_kernel(std::span<const double> x, double y, double s) {
    if (!(y > 0.0)) throw std::domain_error("cs_poisson_kernel: y must be > 0");
    const int m = static_cast<int>(x.size());
    double b = cs_poisson_normalization(m, s);
    double lg = 2.0 * s * std::log(y) -
                0.5 * (m + 2.0 * s) * std::log(norm_sq(x) + y * y);
    return b * std::exp(lg);
}

}  // namespace hfl
