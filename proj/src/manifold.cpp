#include "hfl/manifold.hpp"

#include <cmath>

namespace hfl {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

namespace {

double span_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TargetManifold TargetManifold::unit_sphere(int ambient_dim) {
    if (ambient_dim < 2) throw std::invalid_argument("unit_sphere: ambient_dim must be >= 2");
    TargetManifold m;
    m.kind_ = Kind::UnitSphere;
    m.ambient_dim_ = ambient_dim;
    m.tube_radius_ = 1.0;
    m.name_ = "sphere";
    return m;
}

TargetManifold TargetManifold::generic(int ambient_dim, double tube_radius,
                                       ProjectionOracle oracle, std::string name) {
    if (ambient_dim < 2) throw std::invalid_argument("generic: ambient_dim must be >= 2");
    if (!(tube_radius > 0.0)) throw std::invalid_argument("generic: tube_radius must be > 0");
    if (!oracle) throw std::invalid_argument("generic: projection oracle required");
    TargetManifold m;
    m.kind_ = Kind::Generic;
    m.ambient_dim_ = ambient_dim;
    m.tube_radius_ = tube_radius;
    m.oracle_ = std::move(oracle);
    m.name_ = std::move(name);
    return m;
}

TargetManifold TargetManifold::flat_torus() {
    auto oracle = [](std::span<const double> p, std::span<double> out) {
        for (int pair = 0; pair < 2; ++pair) {
            double a = p[2 * pair], b = p[2 * pair + 1];
            double r = std::sqrt(a * a + b * b);
            if (r == 0.0)
                throw std::domain_error("flat_torus projection: coordinate pair at the origin");
            out[2 * pair] = a / r;
            out[2 * pair + 1] = b / r;
        }
    };
    // Projection of a coordinate pair is smooth away from the origin, i.e. for
    // distances < 1; the doubled tube 2 * 0.45 stays inside that.
    return generic(4, 0.45, oracle, "flat_torus");
}

void TargetManifold::project(std::span<const double> p, std::span<double> out) const {
    if (static_cast<int>(p.size()) != ambient_dim_ || static_cast<int>(out.size()) != ambient_dim_)
        throw std::invalid_argument("project: dimension mismatch");
    if (kind_ == Kind::UnitSphere) {
        double r = span_norm(p);
        if (r == 0.0) throw std::domain_error("project: zero vector has no nearest sphere point");
        for (int i = 0; i < ambient_dim_; ++i) out[i] = p[i] / r;
        return;
    }
    oracle_(p, out);
    // The cutoff bridge needs squared distances up to (2 tube_radius)^2, so the
    // projection domain is the doubled tube.
    double d2 = 0.0;
    for (int i = 0; i < ambient_dim_; ++i) d2 += sqr(p[i] - out[i]);
    if (d2 > sqr(2.0 * tube_radius_))
        throw TubeViolationError("project: point outside the projection tube (dist " +
                                 std::to_string(std::sqrt(d2)) + " > 2 * tube_radius " +
                                 std::to_string(2.0 * tube_radius_) + ")");
}

std::vector<double> TargetManifold::project(const std::vector<double>& p) const {
    std::vector<double> out(p.size());
    project(std::span<const double>(p), std::span<double>(out));
    return out;
}

double TargetManifold::dist_sq(std::span<const double> p) const {
    if (kind_ == Kind::UnitSphere) {
        double r = span_norm(p);
        if (r == 0.0) throw std::domain_error("dist_sq: zero vector");
        return sqr(r - 1.0);
    }
    std::vector<double> q(ambient_dim_);
    project(p, q);
    double d2 = 0.0;
    for (int i = 0; i < ambient_dim_; ++i) d2 += sqr(p[i] - q[i]);
    return d2;
}

double penalty_constant(double s) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("penalty_constant: s must be in (0,1)");
    return std::tgamma(1.0 - s) / (std::pow(2.0, 2.0 * s - 1.0) * std::tgamma(s));
}

PenaltyParams PenaltyParams::make(double s, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("PenaltyParams: epsilon must be > 0");
    return PenaltyParams{s, epsilon, penalty_constant(s)};
}

ChiValue chi_cutoff(double t, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("chi_cutoff: delta must be > 0");
    if (t < 0.0) throw std::domain_error("chi_cutoff: negative squared distance");
    const double a = delta * delta;       // identity up to here
    const double b = 4.0 * delta * delta; // constant from here on
    if (t <= a) return {t, 1.0};
    if (t >= b) return {2.5 * delta * delta, 0.0};
    // Bridge: chi' = 1 - q(sigma) with the quintic smoothstep q; chi is C^3,
    // monotone, chi' in [0,1], and the plateau value is a + (b-a)/2.
    double sigma = (t - a) / (b - a);
    double s3 = sigma * sigma * sigma;
    double q = 6.0 * s3 * sigma * sigma - 15.0 * s3 * sigma + 10.0 * s3;
    // integral of q from 0 to sigma
    double s4 = s3 * sigma;
    double iq = s4 * sigma * sigma - 3.0 * s4 * sigma + 2.5 * s4;
    return {a + (b - a) * (sigma - iq), 1.0 - q};
}

double gl_potential_density(const TargetManifold& m, const PenaltyParams& p,
                            std::span<const double> u) {
    if (m.kind() == TargetManifold::Kind::UnitSphere) {
        double r2 = 0.0;
        for (double x : u) r2 += x * x;
        return p.c_s / (4.0 * p.epsilon * p.epsilon) * sqr(1.0 - r2);
    }
    double d2 = m.dist_sq(u);
    // generic targets use the s = 1/2 normalization c_{1/2} = 1
    return chi_cutoff(d2, m.tube_radius()).value / (p.epsilon * p.epsilon);
}

void gl_boundary_force(const TargetManifold& m, const PenaltyParams& p, std::span<const double> u,
                       std::span<double> out) {
    const int n = static_cast<int>(u.size());
    if (m.kind() == TargetManifold::Kind::UnitSphere) {
        double r2 = 0.0;
        for (double x : u) r2 += x * x;
        double f = p.c_s / (p.epsilon * p.epsilon) * (1.0 - r2);
        for (int i = 0; i < n; ++i) out[i] = f * u[i];
        return;
    }
    std::vector<double> q(n);
    m.project(u, q);
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) d2 += sqr(u[i] - q[i]);
    double dchi = chi_cutoff(d2, m.tube_radius()).derivative;
    double f = -2.0 * dchi / (p.epsilon * p.epsilon);
    for (int i = 0; i < n; ++i) out[i] = f * (u[i] - q[i]);
}

std::vector<double> gl_boundary_force(const TargetManifold& m, const PenaltyParams& p,
                                      const std::vector<double>& u) {
    std::vector<double> out(u.size());
    gl_boundary_force(m, p, std::span<const double>(u), std::span<double>(out));
    return out;
}

void tangent_project(std::span<const double> u, std::span<const double> w,
                     std::span<double> out) {
    double r = span_norm(u);
    if (std::abs(r - 1.0) > 0.1)
        throw std::domain_error("tangent_project: base point norm " + std::to_string(r) +
                                " deviates from 1 by more than 0.1");
    double uw = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) uw += u[i] * w[i];
    double f = uw / (r * r);
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = w[i] - f * u[i];
}

std::vector<double> tangent_project(const std::vector<double>& u, const std::vector<double>& w) {
    std::vector<double> out(u.size());
    tangent_project(std::span<const double>(u), std::span<const double>(w),
                    std::span<double>(out));
    return out;
}

}  // namespace hfl
