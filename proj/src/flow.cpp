#include "hfl/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "hfl/common.hpp"
#include "hfl/extension.hpp"
#include "hfl/operators.hpp"

namespace hfl {

namespace {

double boundary_potential(const Field& U, const TargetManifold& m, const PenaltyParams& p) {
    const HalfSpaceGrid& g = U.g();
    std::vector<double> w(static_cast<std::size_t>(g.hcount()));
    std::vector<double> u(static_cast<std::size_t>(U.ell));
    for (int h = 0; h < g.hcount(); ++h) {
        for (int c = 0; c < U.ell; ++c) u[static_cast<std::size_t>(c)] = U.at(g.node(h, 0), c);
        w[static_cast<std::size_t>(h)] = gl_potential_density(m, p, u);
    }
    return g.integrate_boundary(w);
}

// gradient of gl_energy plus the proximal mass term, all nodes
void objective_gradient(const Field& U, const Field& U_prev, const TargetManifold& m,
                        const PenaltyParams& p, double tau, Field& grad) {
    const HalfSpaceGrid& g = U.g();
    dirichlet_edge_gradient(U, grad);
    for (int h = 0; h < g.hcount(); ++h)
        for (int j = 0; j < g.ny(); ++j) {
            int n = g.node(h, j);
            double meas = node_measure(g, h, j);
            for (int c = 0; c < U.ell; ++c)
                grad.at(n, c) += (meas / tau) * (U.at(n, c) - U_prev.at(n, c));
        }
    std::vector<double> u(static_cast<std::size_t>(U.ell)), f(static_cast<std::size_t>(U.ell));
    for (int h = 0; h < g.hcount(); ++h) {
        int n = g.node(h, 0);
        for (int c = 0; c < U.ell; ++c) u[static_cast<std::size_t>(c)] = U.at(n, c);
        gl_boundary_force(m, p, u, f);
        for (int c = 0; c < U.ell; ++c) grad.at(n, c) -= g.x_weight(h) * f[static_cast<std::size_t>(c)];
    }
}

double field_norm(const Field& A) {
    KahanSum s;
    for (double v : A.v) s.add(v * v);
    return std::sqrt(s.value());
}

LedgerRow make_row(int step, double t, const Field& U, const TargetManifold& m,
                   const PenaltyParams& p, double dissipation) {
    const HalfSpaceGrid& g = U.g();
    EnergyParts e = gl_energy(U, m, p);
    LedgerRow row;
    row.step = step;
    row.t = t;
    row.dirichlet = e.dirichlet;
    row.potential = e.potential;
    row.total = e.total;
    row.dissipation_increment = dissipation;
    double mx = 0.0;
    for (int n = 0; n < g.num_nodes(); ++n) {
        double s2 = 0.0;
        for (int c = 0; c < U.ell; ++c) s2 += sqr(U.at(n, c));
        mx = std::max(mx, s2);
    }
    row.max_abs_U = std::sqrt(mx);
    double mn = std::numeric_limits<double>::infinity();
    for (int h = 0; h < g.hcount(); ++h) {
        double s2 = 0.0;
        for (int c = 0; c < U.ell; ++c) s2 += sqr(U.at(g.node(h, 0), c));
        mn = std::min(mn, s2);
    }
    row.trace_min_abs_u = std::sqrt(mn);
    return row;
}

}  // namespace

EnergyParts gl_energy(const Field& U, const TargetManifold& m, const PenaltyParams& p) {
    EnergyParts e;
    e.dirichlet = dirichlet_edge_energy(U);
    e.potential = boundary_potential(U, m, p);
    e.total = e.dirichlet + e.potential;
    return e;
}

FlowState explicit_step(const FlowState& st, const TargetManifold& m, double dt) {
    const HalfSpaceGrid& g = st.U.g();
    if (!(dt > 0.0) || dt > cfl_limit(g) * (1.0 + 1e-12))
        throw std::invalid_argument("explicit_step: dt exceeds the diffusive stability bound");

    Field lap = Field::zeros(st.U.grid, st.U.ell);
    weighted_fv_laplacian(st.U, lap);

    FlowState out;
    out.t = st.t + dt;
    out.step_index = st.step_index + 1;
    out.params = st.params;
    out.U = st.U;
    for (int n = 0; n < g.num_nodes(); ++n)
        for (int c = 0; c < st.U.ell; ++c) out.U.at(n, c) += dt * lap.at(n, c);

    std::vector<double> u(static_cast<std::size_t>(st.U.ell)),
        f(static_cast<std::size_t>(st.U.ell));
    for (int h = 0; h < g.hcount(); ++h) {
        int n = g.node(h, 0);
        for (int c = 0; c < st.U.ell; ++c) u[static_cast<std::size_t>(c)] = st.U.at(n, c);
        gl_boundary_force(m, st.params, u, f);
        for (int c = 0; c < st.U.ell; ++c)
            out.U.at(n, c) += dt * f[static_cast<std::size_t>(c)] / g.cell_mass(0);
    }
    return out;
}

double mm_objective(const Field& U, const Field& U_prev, const TargetManifold& m,
                    const PenaltyParams& p, double tau) {
    KahanSum mass;
    const HalfSpaceGrid& g = U.g();
    for (int h = 0; h < g.hcount(); ++h)
        for (int j = 0; j < g.ny(); ++j) {
            int n = g.node(h, j);
            double meas = node_measure(g, h, j);
            for (int c = 0; c < U.ell; ++c) mass.add(meas * sqr(U.at(n, c) - U_prev.at(n, c)));
        }
    return mass.value() / (2.0 * tau) + gl_energy(U, m, p).total;
}

FlowState minimizing_movement_step(const FlowState& st, const TargetManifold& m, double tau,
                                   const MmOptions& opt, MmReport* report) {
    if (!(tau > 0.0)) throw std::invalid_argument("minimizing_movement_step: tau must be positive");
    const HalfSpaceGrid& g = st.U.g();
    const Field& U_prev = st.U;

    std::vector<double> diag;
    edge_form_diagonal(g, diag);
    for (int h = 0; h < g.hcount(); ++h)
        for (int j = 0; j < g.ny(); ++j)
            diag[static_cast<std::size_t>(g.node(h, j))] += node_measure(g, h, j) / tau;

    Field U = U_prev;
    Field grad = Field::zeros(st.U.grid, st.U.ell);
    Field trial = Field::zeros(st.U.grid, st.U.ell);
    Field gtrial = Field::zeros(st.U.grid, st.U.ell);

    objective_gradient(U, U_prev, m, st.params, tau, grad);
    const double g0 = field_norm(grad);
    double gn = g0;
    double fcur = mm_objective(U, U_prev, m, st.params, tau);
    double rel = (g0 == 0.0) ? 0.0 : 1.0;
    int it = 0;

    while (rel > opt.grad_tol && it < opt.max_iters) {
        // preconditioned descent direction and its slope
        double slope = 0.0;
        for (int n = 0; n < g.num_nodes(); ++n)
            for (int c = 0; c < st.U.ell; ++c)
                slope -= sqr(grad.at(n, c)) / diag[static_cast<std::size_t>(n)];

        // Once the predicted decrease sinks below the objective's roundoff
        // granularity, Armijo can no longer certify progress even though the
        // iteration still contracts.  Switch to damped preconditioned steps
        // accepted on decay of the diag-weighted gradient norm (-slope): that
        // norm keeps contracting for small enough steps in the quadratic
        // terminal regime and has no cancellation floor, unlike objective
        // differences.  The objective moves only at sub-roundoff scale from
        // here, so F(out) <= F(in) is preserved.
        if (-slope <= 16.0 * std::numeric_limits<double>::epsilon() * std::abs(fcur)) {
            double alpha = 1.0;
            bool took = false;
            while (alpha > 1e-12) {
                for (int n = 0; n < g.num_nodes(); ++n)
                    for (int c = 0; c < st.U.ell; ++c)
                        trial.at(n, c) = U.at(n, c) -
                                         alpha * grad.at(n, c) / diag[static_cast<std::size_t>(n)];
                objective_gradient(trial, U_prev, m, st.params, tau, gtrial);
                double dn_trial = 0.0;
                for (int n = 0; n < g.num_nodes(); ++n)
                    for (int c = 0; c < st.U.ell; ++c)
                        dn_trial += sqr(gtrial.at(n, c)) / diag[static_cast<std::size_t>(n)];
                if (dn_trial < -slope) {
                    U.v.swap(trial.v);
                    grad.v.swap(gtrial.v);
                    took = true;
                    break;
                }
                alpha *= 0.5;
            }
            ++it;
            if (!took) break;  // gradient at its own floor
            gn = field_norm(grad);
            rel = gn / g0;
            fcur = mm_objective(U, U_prev, m, st.params, tau);
            continue;
        }

        double alpha = 1.0;
        bool accepted = false;
        while (alpha > 1e-18) {
            for (int n = 0; n < g.num_nodes(); ++n)
                for (int c = 0; c < st.U.ell; ++c)
                    trial.at(n, c) =
                        U.at(n, c) - alpha * grad.at(n, c) / diag[static_cast<std::size_t>(n)];
            double ftrial = mm_objective(trial, U_prev, m, st.params, tau);
            if (ftrial <= fcur + 1e-4 * alpha * slope) {
                U.v.swap(trial.v);
                fcur = ftrial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        ++it;
        if (!accepted) break;  // objective flat to machine precision
        objective_gradient(U, U_prev, m, st.params, tau, grad);
        gn = field_norm(grad);
        rel = gn / g0;
    }

    if (rel > opt.grad_tol && it >= opt.max_iters)
        throw SolverError("minimizing_movement_step: inner solver missed gradient tolerance", rel);

    if (report) {
        report->iters = it;
        report->rel_grad = rel;
        report->objective = fcur;
    }
    FlowState out;
    out.t = st.t + tau;
    out.step_index = st.step_index + 1;
    out.params = st.params;
    out.U = std::move(U);
    return out;
}

Trace Trajectory::trace_at(int step) const {
    Trace u = Trace::zeros(grid, ell);
    u.v = traces[static_cast<std::size_t>(step)];
    return u;
}

Trajectory run_flow(const Trace& u0, const TargetManifold& m, const PenaltyParams& p,
                    const FlowOptions& opt) {
    if (!(opt.dt > 0.0)) throw std::invalid_argument("run_flow: dt must be positive");
    if (opt.snapshot_stride < 1) throw std::invalid_argument("run_flow: stride must be >= 1");

    Trajectory traj;
    traj.grid = u0.grid;
    traj.ell = u0.ell;
    traj.params = p;

    FlowState state;
    state.t = 0.0;
    state.step_index = 0;
    state.params = p;
    state.U = harmonic_extend(u0);

    traj.ledger.push_back(make_row(0, 0.0, state.U, m, p, 0.0));
    traj.times.push_back(0.0);
    traj.traces.push_back(restrict_to_boundary(state.U).v);
    traj.states.push_back(state);

    const int nsteps = static_cast<int>(std::llround(opt.T_final / opt.dt));
    Field prev = state.U;
    for (int k = 1; k <= nsteps; ++k) {
        prev.v = state.U.v;
        state = (opt.scheme == Scheme::explicit_euler)
                    ? explicit_step(state, m, opt.dt)
                    : minimizing_movement_step(state, m, opt.dt, opt.mm);
        KahanSum inc;
        const HalfSpaceGrid& g = *traj.grid;
        for (int h = 0; h < g.hcount(); ++h)
            for (int j = 0; j < g.ny(); ++j) {
                int n = g.node(h, j);
                double meas = node_measure(g, h, j);
                for (int c = 0; c < traj.ell; ++c)
                    inc.add(meas * sqr(state.U.at(n, c) - prev.at(n, c)));
            }
        double dissipation = inc.value() / (2.0 * opt.dt);
        traj.ledger.push_back(make_row(k, state.t, state.U, m, p, dissipation));
        traj.times.push_back(state.t);
        traj.traces.push_back(restrict_to_boundary(state.U).v);
        if (k % opt.snapshot_stride == 0 || k == nsteps) traj.states.push_back(state);
    }
    return traj;
}

void write_ledger_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_ledger_csv: cannot open " + path);
    out << "step,t,dirichlet,potential,total,dissipation_increment,max_abs_U,trace_min_abs_u\n";
    char buf[64];
    auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << sep;
    };
    for (const LedgerRow& r : traj.ledger) {
        out << r.step << ',';
        put(r.t, ',');
        put(r.dirichlet, ',');
        put(r.potential, ',');
        put(r.total, ',');
        put(r.dissipation_increment, ',');
        put(r.max_abs_U, ',');
        put(r.trace_min_abs_u, '\n');
    }
}

ContinuationReport epsilon_continuation(const Trace& u0, const TargetManifold& m, double s,
                                        const std::vector<double>& eps_list,
                                        const FlowOptions& opt) {
    if (eps_list.empty()) throw std::invalid_argument("epsilon_continuation: empty epsilon list");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (eps_list[i] > eps_list[i - 1])
            throw std::invalid_argument("epsilon_continuation: epsilon list must not increase");

    ContinuationReport rep;
    rep.eps = eps_list;
    for (double eps : eps_list)
        rep.runs.push_back(run_flow(u0, m, PenaltyParams::make(s, eps), opt));

    const HalfSpaceGrid& g = *u0.grid;
    for (std::size_t i = 0; i < rep.runs.size(); ++i) {
        const Trajectory& tr = rep.runs[i];
        double pot = tr.ledger.back().potential;
        rep.final_potential_energy.push_back(pot);
        rep.final_bare_potential.push_back(4.0 * sqr(eps_list[i]) * pot / penalty_constant(s));

        const FlowState& fin = tr.states.back();
        Trace ut = restrict_to_boundary(fin.U);
        Trace w = frac_op_via_extension(fin.U);
        rep.final_orthogonality.push_back(orthogonality_residual(ut, w));
    }

    for (std::size_t i = 0; i + 1 < rep.runs.size(); ++i) {
        const Trajectory& A = rep.runs[i];
        const Trajectory& B = rep.runs[i + 1];
        KahanSum acc;
        std::vector<double> d2(static_cast<std::size_t>(g.hcount()));
        for (std::size_t k = 0; k < A.times.size(); ++k) {
            for (int h = 0; h < g.hcount(); ++h) {
                double s2 = 0.0;
                for (int c = 0; c < A.ell; ++c) {
                    double dv = A.traces[k][static_cast<std::size_t>(h) * A.ell + c] -
                                B.traces[k][static_cast<std::size_t>(h) * B.ell + c];
                    s2 += sqr(dv);
                }
                d2[static_cast<std::size_t>(h)] = s2;
            }
            double wt = opt.dt;
            if (k == 0 || k + 1 == A.times.size()) wt *= 0.5;
            acc.add(wt * g.integrate_boundary(d2));
        }
        rep.pairwise_trace_dist.push_back(std::sqrt(acc.value()));
    }

    // least-squares slope of log(bare potential) against log(eps)
    int npos = 0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (rep.final_bare_potential[i] <= 0.0) continue;
        double x = std::log(eps_list[i]), y = std::log(rep.final_bare_potential[i]);
        ++npos;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    if (npos >= 2) {
        double denom = npos * sxx - sx * sx;
        rep.potential_decay_order = (npos * sxy - sx * sy) / denom;
    }
    return rep;
}

}  // namespace hfl
