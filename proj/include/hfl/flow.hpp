/// @file flow.hpp
/// @brief Time integration of the extended Ginzburg-Landau system: explicit
/// scheme, minimizing-movement implicit scheme, and epsilon-continuation runs.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hfl/field.hpp"
#include "hfl/grid.hpp"
#include "hfl/manifold.hpp"

namespace hfl {

/// One time level of the flow.
struct FlowState {
    double t = 0.0;
    int step_index = 0;
    Field U;
    PenaltyParams params{0.5, 0.1, 1.0};
};

/// The two energy pieces and their sum:
///   dirichlet = (1/2) int y^a |grad U|^2   (edge form)
///   potential = int_boundary W(trace U)
struct EnergyParts {
    double dirichlet = 0.0;
    double potential = 0.0;
    double total = 0.0;
};
EnergyParts gl_energy(const Field& U, const TargetManifold& m, const PenaltyParams& p);

/// One forward-Euler update of y^a dU/dt = div(y^a grad U) with the penalty
/// flux through y = 0 and homogeneous Neumann closure on the artificial faces.
/// dt above the stability bound cfl_limit(grid) is an invalid_argument.
FlowState explicit_step(const FlowState& st, const TargetManifold& m, double dt);

/// Inner-solver knobs for the implicit step.
struct MmOptions {
    double grad_tol = 1e-8;  // stop when |grad F| / |grad F at start| drops below
    int max_iters = 5000;
};

/// Inner-solver outcome for one implicit step.
struct MmReport {
    int iters = 0;
    double rel_grad = 0.0;
    double objective = 0.0;
};

/// Proximal objective of the implicit step, exposed for independent checks:
/// F(U) = (1/2 tau) int y^a |U - U_prev|^2 + gl_energy(U).
double mm_objective(const Field& U, const Field& U_prev, const TargetManifold& m,
                    const PenaltyParams& p, double tau);

/// One minimizing-movement update: descends F from the previous state by
/// diagonally preconditioned gradient descent with Armijo backtracking, so the
/// accepted point satisfies F(new) <= F(old) and hence the discrete energy
/// dissipation inequality. Unmet gradient tolerance raises SolverError.
FlowState minimizing_movement_step(const FlowState& st, const TargetManifold& m, double tau,
                                   const MmOptions& opt = {}, MmReport* report = nullptr);

enum class Scheme { explicit_euler, minimizing_movement };

struct FlowOptions {
    Scheme scheme = Scheme::minimizing_movement;
    double dt = 1e-3;        // explicit step size / proximal parameter tau
    double T_final = 0.1;
    int snapshot_stride = 10;
    MmOptions mm;
};

/// Per-step energy accounting. dissipation_increment is
/// (1/2 dt) int y^a |U_k - U_{k-1}|^2 (zero on the initial row).
struct LedgerRow {
    int step = 0;
    double t = 0.0;
    double dirichlet = 0.0;
    double potential = 0.0;
    double total = 0.0;
    double dissipation_increment = 0.0;
    double max_abs_U = 0.0;
    double trace_min_abs_u = 0.0;
};

/// Stored run: stride-sampled bulk snapshots (first and last always kept),
/// the boundary trace at every step, and one ledger row per time level.
struct Trajectory {
    std::shared_ptr<const HalfSpaceGrid> grid;
    int ell = 0;
    PenaltyParams params{0.5, 0.1, 1.0};
    std::vector<FlowState> states;
    std::vector<double> times;
    std::vector<std::vector<double>> traces;
    std::vector<LedgerRow> ledger;

    Trace trace_at(int step) const;
};

/// Integrates from U(0) = harmonic_extend(u0) to T_final.
Trajectory run_flow(const Trace& u0, const TargetManifold& m, const PenaltyParams& p,
                    const FlowOptions& opt);

/// Writes the ledger as CSV with header
/// step,t,dirichlet,potential,total,dissipation_increment,max_abs_U,trace_min_abs_u
/// and 17-significant-digit values.
void write_ledger_csv(const Trajectory& traj, const std::string& path);

/// Shared-datum comparison across a non-increasing epsilon list (repeats are
/// allowed and must reproduce identical runs).
struct ContinuationReport {
    std::vector<double> eps;
    std::vector<Trajectory> runs;
    std::vector<double> final_potential_energy;  // int W at T_final, per run
    std::vector<double> final_bare_potential;    // (4 eps^2 / c_s) int W: the raw
                                                 // squared-defect mass
    std::vector<double> pairwise_trace_dist;     // space-time L2 between consecutive runs
    std::vector<double> final_orthogonality;     // tangential defect of the
                                                 // fractional operator at T_final
    double potential_decay_order = 0.0;          // log-log slope of bare potential in eps
};
ContinuationReport epsilon_continuation(const Trace& u0, const TargetManifold& m, double s,
                                        const std::vector<double>& eps_list,
                                        const FlowOptions& opt);

}  // namespace hfl
