#include "hfl/kernels.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "hfl/common.hpp"
#include "hfl/special.hpp"

using namespace hfl;

namespace {

constexpr double kPi = std::numbers::pi;

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace

TEST_CASE("incomplete gamma") {
    CHECK(gamma_p(0.5, 0.0) == 0.0);
    CHECK(rel_err(gamma_p(0.5, 1.0), 0.8427007929497149) < 1e-13);  // erf(1)
    CHECK(rel_err(gamma_p(1.0, 2.0), 0.8646647167633873) < 1e-13);  // 1 - e^{-2}
    CHECK(rel_err(gamma_p(1.5, 2.0), 0.7385358700508893) < 1e-12);
    CHECK(gamma_p(2.0, 200.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rel_err(abs_gamma_minus(0.5), 3.5449077018110318) < 1e-13);  // 2 sqrt(pi)
    CHECK(rel_err(abs_gamma_minus(0.25), 4.9016668098607115) < 1e-13);
}

TEST_CASE("heat kernel") {
    std::vector<double> z{0.3, -0.4};
    CHECK(heat_kernel(z, -1.0) == 0.0);
    CHECK(heat_kernel(z, 0.0) == 0.0);

    std::vector<double> zero{0.0, 0.0};
    CHECK(rel_err(heat_kernel(zero, 1.0 / (4.0 * kPi)), 1.0) < 1e-14);

    // Gaussian mass by tensor trapezoid quadrature
    const double t = 0.3;
    const int n = 401;
    const double L = 10.0, h = 2.0 * L / (n - 1);
    KahanSum mass;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
            std::vector<double> p{-L + i * h, -L + j * h};
            mass.add(wi * wj * h * h * heat_kernel(p, t));
        }
    CHECK(std::abs(mass.value() - 1.0) < 1e-6);
}

TEST_CASE("heat kernel solves the heat equation") {
    const double h = 1e-3, dt = 1e-3;
    for (auto pt : {std::pair{0.3, 0.7}, std::pair{-1.1, 0.4}}) {
        std::vector<double> z{pt.first, 0.25};
        const double t = pt.second;
        auto at = [&](double d0, double d1, double tt) {
            std::vector<double> q{z[0] + d0, z[1] + d1};
            return heat_kernel(q, tt);
        };
        double ddt = (at(0, 0, t + dt) - at(0, 0, t - dt)) / (2.0 * dt);
        double lap = (at(h, 0, t) + at(-h, 0, t) + at(0, h, t) + at(0, -h, t) -
                      4.0 * at(0, 0, t)) /
                     (h * h);
        CHECK(std::abs(ddt - lap) < 1e-5);
    }
}

TEST_CASE("backward kernel value and scaling") {
    std::vector<double> zero{0.0, 0.0};
    CHECK(rel_err(backward_kernel(zero, -1.0 / (4.0 * kPi), 0.5), 2.0) < 1e-13);
    CHECK_THROWS_AS(backward_kernel(zero, 0.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(backward_kernel(zero, 0.5, 0.5), std::domain_error);

    const double R = 2.0;
    for (double s : {0.25, 0.5, 0.75}) {
        for (auto& dX : std::vector<std::vector<double>>{{0.3, 0.2}, {-1.0, 0.6}, {0.0, 1.4}}) {
            const double m = static_cast<double>(dX.size()) - 1.0;
            for (double dt : {-0.3, -1.7}) {
                std::vector<double> RX{R * dX[0], R * dX[1]};
                double lhs = backward_kernel(RX, R * R * dt, s);
                double rhs = std::pow(R, -m - 2.0 + 2.0 * s) * backward_kernel(dX, dt, s);
                CHECK(rel_err(lhs, rhs) < 1e-12);
            }
        }
    }
}

TEST_CASE("backward kernel gradient identity") {
    const double h = 1e-5;
    std::vector<double> dX{0.4, 0.9};
    const double dt = -0.6;
    for (double s : {0.25, 0.5}) {
        for (int axis = 0; axis < 2; ++axis) {
            auto p = dX, m = dX;
            p[axis] += h;
            m[axis] -= h;
            double fd = (backward_kernel(p, dt, s) - backward_kernel(m, dt, s)) / (2.0 * h);
            double want = -dX[axis] / (2.0 * std::abs(dt)) * backward_kernel(dX, dt, s);
            CHECK(rel_err(fd, want) < 1e-6);
        }
    }
}

TEST_CASE("backward kernel is caloric at s=1/2") {
    // at s = 1/2, m = 1 the weight solves the backward heat equation in (X, t)
    std::vector<double> dX{0.5, 0.8};
    const double dt = -0.7, h = 1e-3, k = 1e-3;
    auto at = [&](double d0, double d1, double ddt) {
        std::vector<double> q{dX[0] + d0, dX[1] + d1};
        return backward_kernel(q, dt + ddt, 0.5);
    };
    double ddt = (at(0, 0, k) - at(0, 0, -k)) / (2.0 * k);
    double lap =
        (at(h, 0, 0) + at(-h, 0, 0) + at(0, h, 0) + at(0, -h, 0) - 4.0 * at(0, 0, 0)) / (h * h);
    CHECK(std::abs(ddt + lap) < 1e-5);
}

TEST_CASE("nonlocal kernel") {
    std::vector<double> zero1{0.0};
    CHECK(rel_err(nonlocal_kernel(zero1, 1.0, 0.5), 1.0 / (4.0 * kPi)) < 1e-13);
    CHECK_THROWS_AS(nonlocal_kernel(zero1, 0.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(nonlocal_kernel(zero1, -1.0, 0.5), std::domain_error);

    for (double s : {0.25, 0.5, 0.75}) {
        for (double tau : {0.4, 1.3}) {
            std::vector<double> z{0.7};
            CHECK(nonlocal_kernel(z, tau, s) > 0.0);

            // z-mass identity by trapezoid quadrature
            const int n = 3001;
            const double L = 40.0 * std::sqrt(tau), h = 2.0 * L / (n - 1);
            KahanSum mass;
            for (int i = 0; i < n; ++i) {
                double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
                std::vector<double> p{-L + i * h};
                mass.add(w * h * nonlocal_kernel(p, tau, s));
            }
            double want = std::pow(tau, -1.0 - s) / abs_gamma_minus(s);
            CHECK(rel_err(mass.value(), want) < 1e-6);
        }
    }
}

TEST_CASE("log-space path matches direct formulas") {
    for (double s : {0.25, 0.5, 0.75}) {
        std::vector<double> dX{0.8, 1.1};
        double dt = -0.9;
        double direct = std::exp(-(dX[0] * dX[0] + dX[1] * dX[1]) / (4.0 * 0.9)) /
                        (std::tgamma(s) * std::sqrt(4.0 * kPi) * std::pow(0.9, 1.5 - s));
        CHECK(rel_err(backward_kernel(dX, dt, s), direct) < 1e-13);

        std::vector<double> z{0.4};
        double tau = 0.8;
        double direct2 = std::exp(-0.16 / (4.0 * tau)) * std::pow(tau, -(1.5 + s)) /
                         (std::sqrt(4.0 * kPi) * abs_gamma_minus(s));
        CHECK(rel_err(nonlocal_kernel(z, tau, s), direct2) < 1e-13);
    }
    std::vector<double> z{0.3, -0.2};
    double direct3 = std::exp(-0.13 / 2.0) / (4.0 * kPi * 0.5);
    CHECK(rel_err(heat_kernel(z, 0.5), direct3) < 1e-13);
}

TEST_CASE("poisson kernel normalization constant") {
    CHECK(rel_err(cs_poisson_normalization(1, 0.5), 1.0 / kPi) < 1e-9);
    CHECK(rel_err(cs_poisson_normalization(1, 0.25), 0.19068994087545332) < 1e-9);
    CHECK(rel_err(cs_poisson_normalization(1, 0.75), 0.41731342083703665) < 1e-9);
    CHECK(rel_err(cs_poisson_normalization(2, 0.5), 1.0 / (2.0 * kPi)) < 1e-9);
}

TEST_CASE("poisson kernel values and symmetry") {
    std::vector<double> x0{0.0};
    CHECK(rel_err(cs_poisson_kernel(x0, 1.0, 0.5), 1.0 / kPi) < 1e-9);

    // classical half-plane kernel at s = 1/2
    std::vector<double> x{0.7};
    const double y = 0.4;
    double classical = (1.0 / kPi) * y / (0.49 + y * y);
    CHECK(rel_err(cs_poisson_kernel(x, y, 0.5), classical) < 1e-9);

    for (double s : {0.25, 0.5, 0.75}) {
        std::vector<double> xp{1.3}, xm{-1.3};
        CHECK(cs_poisson_kernel(xp, 0.8, s) == cs_poisson_kernel(xm, 0.8, s));
    }
    CHECK_THROWS_AS(cs_poisson_kernel(x0, 0.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(cs_poisson_kernel(x0, -1.0, 0.5), std::domain_error);
}

TEST_CASE("poisson kernel unit mass") {
    // substitute x = y sinh(w): the slow algebraic tail becomes exponential
    for (double s : {0.25, 0.5}) {
        for (double y : {0.1, 1.0}) {
            const double wmax = std::max(30.0, 34.0 / (2.0 * s));
            const int n = 4001;
            const double h = 2.0 * wmax / (n - 1);
            KahanSum mass;
            for (int i = 0; i < n; ++i) {
                double w = -wmax + i * h;
                double wt = (i == 0 || i == n - 1) ? 0.5 : 1.0;
                std::vector<double> x{y * std::sinh(w)};
                mass.add(wt * h * y * std::cosh(w) * cs_poisson_kernel(x, y, s));
            }
            CHECK(std::abs(mass.value() - 1.0) < 1e-6);
        }
    }

    // m = 2 by radial substitution r = y sinh(w), Simpson weights
    {
        const double s = 0.5, y = 0.7;
        const double wmax = 34.0;
        const int n = 4001;
        const double h = wmax / (n - 1);
        KahanSum mass;
        for (int i = 0; i < n; ++i) {
            double w = i * h;
            double wt = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            double r = y * std::sinh(w);
            std::vector<double> x{r, 0.0};
            mass.add(wt * (h / 3.0) * 2.0 * kPi * r * y * std::cosh(w) *
                     cs_poisson_kernel(x, y, s));
        }
        CHECK(std::abs(mass.value() - 1.0) < 1e-6);
    }
}
