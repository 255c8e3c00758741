/// @file diagnostics.hpp
/// @brief A priori theory as executable checks: backward-Gaussian renormalized
///        energies and their monotonicity, the local energy inequality, maximum
///        principle, clearing-out, gradient estimates, singular-set scan, and
///        polar-form residuals.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hfl/flow.hpp"

namespace hfl {

/// Space-time center on the flat boundary: x0 lies in the y = 0 face.
struct SpaceTimeCenter {
    std::vector<double> x0;
    double t0 = 0.0;
};

/// D and E sampled over a list of radii at one center.
///
/// D(R) weighs the energy density of the time slice t0 - R^2 with the backward
/// caloric Gaussian; E(R) integrates the same densities over the time slab
/// (t0 - 4R^2, t0 - R^2). Both are nondecreasing in R for an exact solution,
/// and the suite asserts that up to a quadrature allowance.
struct RenormEnergyCurve {
    SpaceTimeCenter center;
    std::vector<double> R_values;
    std::vector<double> D_values;
    std::vector<double> E_values;
    double truncation_radius = 0.0;  ///< largest |X - X0| kept by the tail cut
};

/// Energy split of one state; identical to the ledger's decomposition.
EnergyParts energy(const FlowState& st, const TargetManifold& m);

/// Backward-Gaussian renormalized energies D(R), E(R) at center Z0.
///
/// Preconditions: R_values strictly increasing, 0 < R < sqrt(t0)/2, and the
/// trajectory covers [t0 - 4 R_max^2, t0]. The Gaussian tail is truncated
/// where it falls below 1e-14 of its slice maximum.
RenormEnergyCurve renormalized_energies(const Trajectory& traj, const TargetManifold& m,
                                        const SpaceTimeCenter& Z0,
                                        const std::vector<double>& R_values);

/// lhs = time-slab integral of |dt U|^2 over the parabolic cylinder P_R^+,
/// rhs = R^-2 (Dirichlet mass of P_2R^+ + penalty mass of its boundary part),
/// constant = lhs / rhs: the empirical constant of the local energy
/// inequality, finite for exact solutions and stable under refinement.
struct LocalEnergyReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double constant = 0.0;
};

LocalEnergyReport local_energy_inequality_check(const Trajectory& traj, const TargetManifold& m,
                                                const SpaceTimeCenter& Z0, double R);

/// Largest nodal |U| over all stored states.
double max_principle_check(const Trajectory& traj);

/// Clearing-out probe: measures E(Z0, R) and the minimum of |U| over the
/// parabolic neighborhood P_delta^+(Z0); cleared means that minimum is >= 1/2.
/// Small measured energy predicts cleared; the converse is never asserted.
struct ClearingOutReport {
    bool cleared = false;
    double min_abs_U = 0.0;
    double measured_E = 0.0;
    double R = 0.0;
    double delta = 0.0;
};

ClearingOutReport clearing_out_check(const Trajectory& traj, const TargetManifold& m,
                                     const SpaceTimeCenter& Z0, double R, double delta);

/// One audited center of the small-energy gradient estimate.
struct EpsRegularityAudit {
    SpaceTimeCenter center;
    double R = 0.0;
    double energy = 0.0;        ///< measured E(Z0, R)
    bool audited = false;       ///< energy < eps0_sq, so the estimate applies
    double scaled_grad_sup = 0.0;  ///< R^2 sup over P_{delta0 R}^+ of |grad U|^2
    double scaled_dt_sup = 0.0;    ///< R^4 sup over P_{delta0 R}^+ of |dt U|^2
};

/// Running sup of sqrt(t) |grad u(., t)|_inf over trace times t >= T0 plus the
/// audit table of the small-energy interior estimates.
struct GradientEstimateReport {
    double sup_sqrt_t_grad = 0.0;
    std::vector<EpsRegularityAudit> audits;
};

GradientEstimateReport gradient_estimate_check(
    const Trajectory& traj, const TargetManifold& m, double T0,
    const std::vector<std::pair<SpaceTimeCenter, double>>& audit_points, double eps0_sq,
    double delta0 = 0.25);

/// Scan configuration; eps0_sq <= 0 selects 0.05 times the initial total
/// energy of the first run.
struct SingularScanOptions {
    double eps0_sq = -1.0;
    double R = 0.0;
    std::vector<double> t0_values;
    int x_stride = 1;  ///< sample every x_stride-th boundary node
};

struct SingularSample {
    SpaceTimeCenter center;
    double energy = 0.0;  ///< min over the supplied runs of E(Z0, R)
    bool flagged = false;
};

/// Flags sample centers whose energy proxy stays >= eps0_sq across every run;
/// the minimum over the finitely many stored penalty levels stands in for the
/// vanishing-epsilon liminf.
struct SingularSetReport {
    double threshold = 0.0;
    double R = 0.0;
    std::vector<double> eps_values;
    std::vector<SingularSample> samples;
    std::vector<std::size_t> flagged_indices;
};

SingularSetReport singular_set_scan(const std::vector<const Trajectory*>& runs,
                                    const TargetManifold& m, const SingularScanOptions& opt);

/// Interior residuals of the polar decomposition U = rho omega:
///   rho equation:   dt rho - lap rho + |grad omega|^2 rho
///   omega equation: dt omega - lap omega - 2 (grad rho / rho) . grad omega
///                   - |grad omega|^2 omega
/// in discrete L^2 over interior nodes; time derivatives come from neighboring
/// stored states. Requires min |U| >= 1/2 on the states involved.
struct PolarResiduals {
    double rho_residual = 0.0;
    double omega_residual = 0.0;
    double max_omega_defect = 0.0;  ///< max of ||omega| - 1|
};

PolarResiduals polar_residuals(const Trajectory& traj, int state_index);

/// Center-shift sanity of the Gaussian-weighted energy: lhs = E(Z1, R/2),
/// rhs_base = E(Z0, R), constant = lhs / (rhs_base + eps1 E0) with E0 the
/// initial total energy.
struct GaussianComparisonReport {
    double lhs = 0.0;
    double rhs_base = 0.0;
    double E0 = 0.0;
    double constant = 0.0;
};

GaussianComparisonReport gaussian_comparison(const Trajectory& traj, const TargetManifold& m,
                                             const SpaceTimeCenter& Z0, const SpaceTimeCenter& Z1,
                                             double R, double eps1);

/// Columns t0,x0[,x1],R,D,E with 17 significant digits, one row per (curve, R).
void write_monotonicity_csv(const std::vector<RenormEnergyCurve>& curves, int m,
                            const std::string& path);

/// Columns t0,x0[,x1],R,energy,flagged with flagged rendered as 0 or 1.
void write_singular_scan_csv(const SingularSetReport& report, int m, const std::string& path);

}  // namespace hfl
