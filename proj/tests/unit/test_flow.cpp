#include "hfl/flow.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "hfl/common.hpp"
#include "hfl/extension.hpp"
#include "hfl/field.hpp"
#include "hfl/grid.hpp"
#include "hfl/operators.hpp"

using namespace hfl;
using std::numbers::pi;

namespace {

std::shared_ptr<const HalfSpaceGrid> make_grid(int m, int nx, int ny, double Lx, double Ly,
                                               double s) {
    GridConfig cfg;
    cfg.m = m;
    cfg.nx = nx;
    cfg.ny = ny;
    cfg.Lx = Lx;
    cfg.Ly = Ly;
    cfg.s = s;
    return build_grid(cfg);
}

// unit-circle-valued trace with phase profile theta(x)
Trace circle_trace(std::shared_ptr<const HalfSpaceGrid> g, double amp) {
    Trace u = Trace::zeros(g, 2);
    for (int h = 0; h < g->hcount(); ++h) {
        double th = amp * std::sin(g->x_of(h, 0));
        u.at(h, 0) = std::cos(th);
        u.at(h, 1) = std::sin(th);
    }
    return u;
}

FlowState state_of(Field U, const PenaltyParams& p) {
    FlowState st;
    st.t = 0.0;
    st.step_index = 0;
    st.params = p;
    st.U = std::move(U);
    return st;
}

}  // namespace

TEST_CASE("explicit step: constant on-manifold state is stationary") {
    auto g = make_grid(1, 17, 9, 2.0, 2.0, 0.5);
    auto m = TargetManifold::unit_sphere(2);
    PenaltyParams p = PenaltyParams::make(0.5, 0.2);
    Field U = Field::zeros(g, 2);
    for (int n = 0; n < g->num_nodes(); ++n) {
        U.at(n, 0) = 0.6;
        U.at(n, 1) = 0.8;
    }
    FlowState st = state_of(U, p);
    FlowState out = explicit_step(st, m, cfl_limit(*g));
    for (int n = 0; n < g->num_nodes(); ++n) {
        CHECK(std::abs(out.U.at(n, 0) - 0.6) <= 1e-15);
        CHECK(std::abs(out.U.at(n, 1) - 0.8) <= 1e-15);
    }
    CHECK(out.t == doctest::Approx(cfl_limit(*g)));
    CHECK(out.step_index == 1);

    CHECK_THROWS_AS(explicit_step(st, m, 2.0 * cfl_limit(*g)), std::invalid_argument);
    CHECK_THROWS_AS(explicit_step(st, m, -1.0), std::invalid_argument);
}

TEST_CASE("explicit step matches a straight-line reassembly on a 5x5 grid") {
    auto g = make_grid(1, 5, 5, 1.0, 1.0, 0.5);
    auto m = TargetManifold::unit_sphere(2);
    PenaltyParams p = PenaltyParams::make(0.5, 0.3);
    const double dt = 0.5 * cfl_limit(*g);

    Field U = Field::zeros(g, 2);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            double x = g->x_of(i, 0), y = g->y(j);
            U.at(g->node(i, j), 0) = std::cos(x) * (1.0 - 0.3 * y);
            U.at(g->node(i, j), 1) = std::sin(x) + 0.1 * y * y;
        }

    FlowState out = explicit_step(state_of(U, p), m, dt);

    // independent update: loop the flux balance at every node from the grid
    // coefficients directly
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            for (int c = 0; c < 2; ++c) {
                double flux = 0.0;
                double xw = g->x_weight(i);
                if (j > 0)
                    flux += xw * g->face_coef(j - 1) / g->dy(j - 1) *
                            (U.at(g->node(i, j - 1), c) - U.at(g->node(i, j), c));
                if (j < 4)
                    flux += xw * g->face_coef(j) / g->dy(j) *
                            (U.at(g->node(i, j + 1), c) - U.at(g->node(i, j), c));
                if (i > 0)
                    flux += g->cell_mass(j) / g->dx() *
                            (U.at(g->node(i - 1, j), c) - U.at(g->node(i, j), c));
                if (i < 4)
                    flux += g->cell_mass(j) / g->dx() *
                            (U.at(g->node(i + 1, j), c) - U.at(g->node(i, j), c));
                double want = U.at(g->node(i, j), c) + dt * flux / (xw * g->cell_mass(j));
                if (j == 0) {
                    double u0c = U.at(g->node(i, 0), 0), u1c = U.at(g->node(i, 0), 1);
                    double fac = (p.c_s / (p.epsilon * p.epsilon)) * (1.0 - u0c * u0c - u1c * u1c);
                    double force = fac * (c == 0 ? u0c : u1c);
                    want += dt * force / g->cell_mass(0);
                }
                CHECK(std::abs(out.U.at(g->node(i, j), c) - want) <= 1e-14);
            }
}

TEST_CASE("minimizing movement: constant on-manifold state is a fixed point") {
    auto g = make_grid(1, 17, 9, 2.0, 2.0, 0.5);
    auto m = TargetManifold::unit_sphere(2);
    PenaltyParams p = PenaltyParams::make(0.5, 0.2);
    Field U = Field::zeros(g, 2);
    for (int n = 0; n < g->num_nodes(); ++n) {
        U.at(n, 0) = -0.28;
        U.at(n, 1) = 0.96;
    }
    MmReport rep;
    FlowState out = minimizing_movement_step(state_of(U, p), m, 0.05, {}, &rep);
    CHECK(rep.iters == 0);
    for (int n = 0; n < g->num_nodes(); ++n) {
        CHECK(out.U.at(n, 0) == -0.28);
        CHECK(out.U.at(n, 1) == 0.96);
    }
}

TEST_CASE("minimizing movement: descent and the dissipation inequality") {
    auto g = make_grid(1, 33, 17, pi, 3.0, 0.5);
    auto m = TargetManifold::unit_sphere(2);
    PenaltyParams p = PenaltyParams::make(0.5, 0.2);
    Field U0 = harmonic_extend(circle_trace(g, 0.8));
    FlowState st = state_of(U0, p);

    const double tau = 0.01;
    MmReport rep;
    FlowState out = minimizing_movement_step(st, m, tau, {}, &rep);
    CHECK(rep.rel_grad <= 1e-8);
    CHECK(rep.iters > 0);

    double e_old = gl_energy(st.U, m, p).total;
    double e_new = gl_energy(out.U, m, p).total;
    KahanSum inc;
    for (int h = 0; h < g->hcount(); ++h)
        for (int j = 0; j < g->ny(); ++j) {
            int n = g->node(h, j);
            for (int c = 0; c < 2; ++c)
                inc.add(node_measure(*g, h, j) * sqr(out.U.at(n, c) - st.U.at(n, c)));
        }
    double dissipation = inc.value() / (2.0 * tau);
    CHECK(dissipation > 0.0);
    CHECK(e_new + dissipation <= e_old + 1e-12 * e_old);

    // objective value reported equals an independent evaluation
    CHECK(rep.objective ==
          doctest::Approx(mm_objective(out.U, st.U, m, p, tau)).epsilon(1e-13));

    MmOptions starved;
    starved.max_iters = 1;
    starved.grad_tol = 1e-14;
    CHECK_THROWS_AS(minimizing_movement_step(st, m, tau, starved), SolverError);
}

TEST_CASE("minimizing movement matches an independent descent on a 3x3 grid") {
    auto g = make_grid(1, 3, 3, 1.0, 1.0, 0.5);
    auto m = TargetManifold::unit_sphere(2);
    PenaltyParams p = PenaltyParams::make(0.5, 0.5);
    const double tau = 0.1;

    Field U0 = Field::zeros(g, 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double x = g->x_of(i, 0), y = g->y(j);
            U0.at(g->node(i, j), 0) = std::cos(0.7 * x) - 0.1 * y;
            U0.at(g->node(i, j), 1) = std::sin(0.7 * x) + 0.2 * y;
        }

    MmOptions tight;
    tight.grad_tol = 1e-11;
    FlowState out = minimizing_movement_step(state_of(U0, p), m, tau, tight);

    // independent minimization of the same discrete objective: plain
    // steepest descent on central finite-difference gradients
    Field X = U0;
    const double fd = 1e-6;
    auto fd_gradient = [&](Field& base) {
        std::vector<double> gr(base.v.size());
        for (std::size_t i = 0; i < base.v.size(); ++i) {
            double keep = base.v[i];
            base.v[i] = keep + fd;
            double fp = mm_objective(base, U0, m, p, tau);
            base.v[i] = keep - fd;
            double fm = mm_objective(base, U0, m, p, tau);
            base.v[i] = keep;
            gr[i] = (fp - fm) / (2.0 * fd);
        }
        return gr;
    };
    double fx = mm_objective(X, U0, m, p, tau);
    for (int it = 0; it < 20000; ++it) {
        std::vector<double> gr = fd_gradient(X);
        double gn2 = 0.0;
        for (double v : gr) gn2 += v * v;
        if (std::sqrt(gn2) < 1e-10) break;
        double alpha = 1.0;
        while (alpha > 1e-18) {
            Field T = X;
            for (std::size_t i = 0; i < T.v.size(); ++i) T.v[i] -= alpha * gr[i];
            double ft = mm_objective(T, U0, m, p, tau);
            if (ft <= fx - 1e-4 * alpha * gn2) {
                X.v = T.v;
                fx = ft;
                break;
            }
            alpha *= 0.5;
        }
    }

    for (std::size_t i = 0; i < X.v.size(); ++i)
        CHECK(std::abs(out.U.v[i] - X.v[i]) <= 1e-8);
}

TEST_CASE("run_flow: constant datum gives a trivial ledger") {
    auto g = make_grid(1, 17, 9, 2.0, 2.0, 0.5);
    auto m = TargetManifold::unit_sphere(2);
    PenaltyParams p = PenaltyParams::make(0.5, 0.2);
    Trace u0 = Trace::zeros(g, 2);
    for (int h = 0; h < g->hcount(); ++h) {
        u0.at(h, 0) = 0.6;
        u0.at(h, 1) = 0.8;
    }
    FlowOptions opt;
    opt.scheme = Scheme::minimizing_movement;
    opt.dt = 0.01;
    opt.T_final = 0.05;
    opt.snapshot_stride = 2;
    Trajectory traj = run_flow(u0, m, p, opt);

    CHECK(traj.ledger.size() == 6);
    CHECK(traj.times.size() == traj.ledger.size());
    CHECK(traj.traces.size() == traj.ledger.size());
    for (const LedgerRow& r : traj.ledger) {
        CHECK(r.dirichlet == 0.0);
        CHECK(r.potential == 0.0);
        CHECK(r.dissipation_increment == 0.0);
        CHECK(r.max_abs_U == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(r.trace_min_abs_u == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(traj.states.front().t == 0.0);
    CHECK(traj.states.back().t == doctest::Approx(0.05));
}

TEST_CASE("run_flow: implicit ledger dissipates and obeys the maximum principle") {
    auto g = make_grid(1, 33, 17, pi, 3.0, 0.5);
    auto m = TargetManifold::unit_sphere(2);
    PenaltyParams p = PenaltyParams::make(0.5, 0.2);
    Trace u0 = circle_trace(g, 0.8);

    FlowOptions opt;
    opt.scheme = Scheme::minimizing_movement;
    opt.dt = 2e-3;
    opt.T_final = 0.04;
    Trajectory traj = run_flow(u0, m, p, opt);

    const double e0 = traj.ledger.front().total;
    CHECK(traj.ledger.front().potential <= 1e-28);  // on-manifold datum, quartic roundoff
    for (std::size_t k = 1; k < traj.ledger.size(); ++k) {
        const LedgerRow& prev = traj.ledger[k - 1];
        const LedgerRow& cur = traj.ledger[k];
        CHECK(cur.total + cur.dissipation_increment <= prev.total + 1e-12 * e0);
        CHECK(cur.total <= traj.ledger.front().dirichlet + 1e-12 * e0);
        CHECK(cur.max_abs_U <= 1.0 + 1e-8);
    }
    // motion actually happened and dissipation was recorded
    CHECK(traj.ledger[1].dissipation_increment > 0.0);
    CHECK(traj.ledger.back().total < e0);
}

TEST_CASE("run_flow: explicit scheme under CFL keeps the maximum principle") {
    auto g = make_grid(1, 33, 17, pi, 3.0, 0.5);
    auto m = TargetManifold::unit_sphere(2);
    PenaltyParams p = PenaltyParams::make(0.5, 0.5);
    Trace u0 = circle_trace(g, 0.8);

    // The diffusive CFL bound alone does not control the penalty term; its
    // boundary rate 2 c_s / (eps^2 cm_0) must also fit inside the stability
    // interval, which the halved step and eps = 0.5 guarantee here.
    FlowOptions opt;
    opt.scheme = Scheme::explicit_euler;
    opt.dt = 0.5 * cfl_limit(*g);
    opt.T_final = 60.0 * opt.dt;
    Trajectory traj = run_flow(u0, m, p, opt);

    for (const LedgerRow& r : traj.ledger) CHECK(r.max_abs_U <= 1.0 + 1e-6);
    CHECK(traj.ledger.back().total < traj.ledger.front().total);
}

TEST_CASE("explicit and implicit schemes approach each other as steps shrink") {
    auto g = make_grid(1, 33, 17, pi, 3.0, 0.5);
    auto m = TargetManifold::unit_sphere(2);
    PenaltyParams p = PenaltyParams::make(0.5, 0.3);
    Trace u0 = circle_trace(g, 0.6);
    const double T = 0.02;

    auto dist_at = [&](double dt) {
        FlowOptions oe;
        oe.scheme = Scheme::explicit_euler;
        oe.dt = dt;
        oe.T_final = T;
        FlowOptions oi = oe;
        oi.scheme = Scheme::minimizing_movement;
        Trajectory a = run_flow(u0, m, p, oe);
        Trajectory b = run_flow(u0, m, p, oi);
        Trace ta = a.trace_at(static_cast<int>(a.times.size()) - 1);
        Trace tb = b.trace_at(static_cast<int>(b.times.size()) - 1);
        std::vector<double> d2(static_cast<std::size_t>(g->hcount()));
        for (int h = 0; h < g->hcount(); ++h)
            d2[static_cast<std::size_t>(h)] =
                sqr(ta.at(h, 0) - tb.at(h, 0)) + sqr(ta.at(h, 1) - tb.at(h, 1));
        return std::sqrt(g->integrate_boundary(d2));
    };

    double e1 = dist_at(1e-3);
    double e2 = dist_at(5e-4);
    CHECK(e1 < 0.05);
    CHECK(e2 < 0.7 * e1);
}

TEST_CASE("ledger CSV format and determinism") {
    auto g = make_grid(1, 17, 9, 2.0, 2.0, 0.5);
    auto m = TargetManifold::unit_sphere(2);
    PenaltyParams p = PenaltyParams::make(0.5, 0.25);
    Trace u0 = circle_trace(g, 0.5);
    FlowOptions opt;
    opt.dt = 5e-3;
    opt.T_final = 0.02;
    Trajectory a = run_flow(u0, m, p, opt);
    Trajectory b = run_flow(u0, m, p, opt);

    REQUIRE(a.ledger.size() == b.ledger.size());
    for (std::size_t k = 0; k < a.ledger.size(); ++k) {
        CHECK(a.ledger[k].total == b.ledger[k].total);
        CHECK(a.ledger[k].dissipation_increment == b.ledger[k].dissipation_increment);
        CHECK(a.traces[k] == b.traces[k]);
    }

    std::string path = (std::filesystem::temp_directory_path() / "hfl_ledger_test.csv").string();
    write_ledger_csv(a, path);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "step,t,dirichlet,potential,total,dissipation_increment,max_abs_U,trace_min_abs_u");
    int rows = 0;
    std::string line;
    double third_total = -1.0;
    while (std::getline(in, line)) {
        if (rows == 2) {
            std::stringstream ss(line);
            std::string cell;
            for (int col = 0; col <= 4; ++col) std::getline(ss, cell, ',');
            third_total = std::strtod(cell.c_str(), nullptr);
        }
        ++rows;
    }
    in.close();
    std::filesystem::remove(path);
    CHECK(rows == static_cast<int>(a.ledger.size()));
    CHECK(third_total == a.ledger[2].total);  // 17 significant digits round-trip
}

TEST_CASE("epsilon continuation: repeats reproduce, distances shrink with epsilon") {
    auto g = make_grid(1, 33, 17, pi, 3.0, 0.5);
    auto m = TargetManifold::unit_sphere(2);
    Trace u0 = circle_trace(g, 0.8);
    FlowOptions opt;
    opt.dt = 2e-3;
    opt.T_final = 0.02;

    ContinuationReport twice = epsilon_continuation(u0, m, 0.5, {0.2, 0.2}, opt);
    REQUIRE(twice.pairwise_trace_dist.size() == 1);
    CHECK(twice.pairwise_trace_dist[0] == 0.0);

    CHECK_THROWS_AS(epsilon_continuation(u0, m, 0.5, {0.1, 0.2}, opt), std::invalid_argument);
    CHECK_THROWS_AS(epsilon_continuation(u0, m, 0.5, {}, opt), std::invalid_argument);

    ContinuationReport rep = epsilon_continuation(u0, m, 0.5, {0.2, 0.1}, opt);
    REQUIRE(rep.runs.size() == 2);
    CHECK(rep.pairwise_trace_dist[0] > 0.0);
    CHECK(rep.final_bare_potential[1] < rep.final_bare_potential[0]);
    CHECK(rep.final_potential_energy[0] > 0.0);
    REQUIRE(rep.final_orthogonality.size() == 2);
    for (double r : rep.final_orthogonality) CHECK(std::isfinite(r));
}
