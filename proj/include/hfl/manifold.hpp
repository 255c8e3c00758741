/// @file manifold.hpp
/// @brief Target manifolds, penalty parameters and the Ginzburg-Landau boundary terms.
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hfl/common.hpp"

namespace hfl {

/// Closed target manifold N embedded in R^ell.
///
/// Two kinds are supported: the round unit sphere S^{ell-1} (closed-form
/// projection) and a generic target given by a nearest-point projection oracle.
/// tube_radius is the cutoff scale delta_N; the oracle must be valid on the
/// doubled tube { p : dist(p, N) <= 2 delta_N }, which is where the cutoff
/// bridge evaluates squared distances.
class TargetManifold {
public:
    enum class Kind { UnitSphere, Generic };

    using ProjectionOracle =
        std::function<void(std::span<const double> p, std::span<double> out)>;

    static TargetManifold unit_sphere(int ambient_dim);

    /// Generic target defined by its projection oracle.
    static TargetManifold generic(int ambient_dim, double tube_radius, ProjectionOracle oracle,
                                  std::string name = "generic");

    /// Flat torus S^1 x S^1 in R^4: both coordinate pairs lie on unit circles.
    static TargetManifold flat_torus();

    Kind kind() const { return kind_; }
    int ambient_dim() const { return ambient_dim_; }
    double tube_radius() const { return tube_radius_; }
    const std::string& name() const { return name_; }

    /// Nearest point on N. Sphere: p/|p| (p = 0 is a domain error).
    /// Generic: oracle value; a point outside the tube raises TubeViolationError.
    void project(std::span<const double> p, std::span<double> out) const;
    std::vector<double> project(const std::vector<double>& p) const;

    /// Squared distance to N of a point in the projection domain.
    double dist_sq(std::span<const double> p) const;

private:
    Kind kind_;
    int ambient_dim_;
    double tube_radius_;
    ProjectionOracle oracle_;
    std::string name_;
};

/// Penalty normalization: order s in (0,1), width eps > 0 and the constant
/// c_s = Gamma(1-s) / (2^{2s-1} Gamma(s)), with c_{1/2} = 1.
struct PenaltyParams {
    double s;
    double epsilon;
    double c_s;

    static PenaltyParams make(double s, double epsilon);
};

/// The constant c_s alone.
double penalty_constant(double s);

/// C^2 cutoff applied to squared distance: identity on [0, delta^2], constant
/// for t >= (2 delta)^2, monotone bridge with derivative in [0,1] in between.
struct ChiValue {
    double value;
    double derivative;
};
ChiValue chi_cutoff(double t, double delta);

/// Boundary potential density W(u):
///   sphere:  (c_s / (4 eps^2)) (1 - |u|^2)^2
///   generic: (c_{1/2} / eps^2) chi(dist^2(u, N))
double gl_potential_density(const TargetManifold& m, const PenaltyParams& p,
                            std::span<const double> u);

/// Restoring force -grad_u W(u); the weighted normal-derivative limit of the
/// extension at the boundary equals -force.
///   sphere:  (c_s / eps^2) (1 - |u|^2) u
///   generic: -(c_{1/2} / eps^2) chi'(d^2) * 2 (u - Pi_N(u))
void gl_boundary_force(const TargetManifold& m, const PenaltyParams& p, std::span<const double> u,
                       std::span<double> out);
std::vector<double> gl_boundary_force(const TargetManifold& m, const PenaltyParams& p,
                                      const std::vector<double>& u);

/// Projection of w onto the tangent space of the unit sphere at u (|u| near 1):
/// w - <w, u/|u|> u/|u|. A base point with |u| deviating from 1 by more than 0.1
/// is a domain error.
void tangent_project(std::span<const double> u, std::span<const double> w, std::span<double> out);
std::vector<double> tangent_project(const std::vector<double>& u, const std::vector<double>& w);

}  // namespace hfl
