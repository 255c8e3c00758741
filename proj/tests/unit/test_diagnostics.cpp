#include "hfl/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "hfl/extension.hpp"
#include "hfl/field.hpp"
#include "hfl/flow.hpp"
#include "hfl/grid.hpp"
#include "hfl/manifold.hpp"

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

Trace phase_trace(std::shared_ptr<const HalfSpaceGrid> g, double (*theta)(double)) {
    Trace u = Trace::zeros(g, 2);
    for (int h = 0; h < g->hcount(); ++h) {
        double th = theta(g->x_of(h, 0));
        u.at(h, 0) = std::cos(th);
        u.at(h, 1) = std::sin(th);
    }
    return u;
}

double sine_phase(double x) { return 0.5 * std::sin(x); }
double spike_phase(double x) { return 4.0 * std::exp(-(x / 0.3) * (x / 0.3)); }
double flat_phase(double) { return 0.4; }

Trajectory mm_run(std::shared_ptr<const HalfSpaceGrid> g, const Trace& u0, double eps, double dt,
                  double T, int stride) {
    auto m = TargetManifold::unit_sphere(2);
    PenaltyParams p = PenaltyParams::make(g->s(), eps);
    FlowOptions opt;
    opt.scheme = Scheme::minimizing_movement;
    opt.dt = dt;
    opt.T_final = T;
    opt.snapshot_stride = stride;
    return run_flow(u0, m, p, opt);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Shared runs are expensive; compute once across subcase re-entries.
const Trajectory& smooth_coarse() {
    static Trajectory t = [] {
        auto g = make_grid(1, 65, 33, pi, 3.0, 0.5);
        return mm_run(g, phase_trace(g, sine_phase), 0.2, 2e-3, 0.2, 5);
    }();
    return t;
}

const Trajectory& smooth_fine() {
    static Trajectory t = [] {
        auto g = make_grid(1, 129, 65, pi, 3.0, 0.5);
        return mm_run(g, phase_trace(g, sine_phase), 0.2, 1e-3, 0.2, 10);
    }();
    return t;
}

const Trajectory& spike_run(double eps) {
    static auto make = [](double e) {
        auto g = make_grid(1, 129, 65, pi, 3.0, 0.5);
        return mm_run(g, phase_trace(g, spike_phase), e, 5e-4, 0.03, 1);
    };
    static Trajectory wide = make(0.2);
    static Trajectory narrow = make(0.1);
    return eps > 0.15 ? wide : narrow;
}

}  // namespace

TEST_CASE("state energy matches the ledger and exact linear fields") {
    auto man = TargetManifold::unit_sphere(2);

    SUBCASE("linear field on the unit box has Dirichlet energy one") {
        auto g = make_grid(1, 33, 33, 1.0, 1.0, 0.5);
        FlowState st;
        st.U = Field::zeros(g, 2);
        for (int n = 0; n < g->num_nodes(); ++n) st.U.at(n, 0) = g->x_of(n / g->ny(), 0);
        st.params = PenaltyParams::make(0.5, 0.3);
        EnergyParts ep = energy(st, man);
        CHECK(ep.dirichlet == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(ep.total == doctest::Approx(ep.dirichlet + ep.potential).epsilon(1e-14));
    }

    SUBCASE("snapshot energies reproduce the ledger rows") {
        auto g = make_grid(1, 33, 17, pi, 2.0, 0.5);
        Trajectory traj = mm_run(g, phase_trace(g, sine_phase), 0.3, 1e-3, 0.01, 3);
        REQUIRE(traj.states.size() >= 3);
        for (const FlowState& st : traj.states) {
            EnergyParts ep = energy(st, man);
            const LedgerRow& row = traj.ledger[static_cast<std::size_t>(st.step_index)];
            CHECK(ep.dirichlet == doctest::Approx(row.dirichlet).epsilon(1e-12));
            CHECK(ep.potential == doctest::Approx(row.potential).epsilon(1e-12));
            CHECK(ep.total == doctest::Approx(row.total).epsilon(1e-12));
        }
    }
}

TEST_CASE("constant trajectories have vanishing diagnostics and strict validation") {
    auto g = make_grid(1, 17, 9, 1.0, 1.0, 0.5);
    auto man = TargetManifold::unit_sphere(2);
    Trajectory traj = mm_run(g, phase_trace(g, flat_phase), 0.4, 1e-3, 0.01, 1);

    SpaceTimeCenter Z0;
    Z0.x0 = {0.0};
    Z0.t0 = 0.008;

    SUBCASE("renormalized energies vanish at every radius") {
        RenormEnergyCurve c = renormalized_energies(traj, man, Z0, {0.02, 0.03, 0.04});
        for (double d : c.D_values) CHECK(std::abs(d) <= 1e-18);
        for (double e : c.E_values) CHECK(std::abs(e) <= 1e-18);
        CHECK(c.truncation_radius > 0.0);
    }

    SUBCASE("radius and center validation") {
        CHECK_THROWS_AS(renormalized_energies(traj, man, Z0, {}), std::invalid_argument);
        CHECK_THROWS_AS(renormalized_energies(traj, man, Z0, {0.03, 0.02}), std::invalid_argument);
        CHECK_THROWS_AS(renormalized_energies(traj, man, Z0, {0.045}), std::invalid_argument);
        SpaceTimeCenter late;
        late.x0 = {0.0};
        late.t0 = 0.02;
        CHECK_THROWS_AS(renormalized_energies(traj, man, late, {0.04}), std::invalid_argument);
        SpaceTimeCenter wrong;
        wrong.x0 = {0.0, 0.0};
        wrong.t0 = 0.008;
        CHECK_THROWS_AS(renormalized_energies(traj, man, wrong, {0.02}), std::invalid_argument);
        SpaceTimeCenter nonpos;
        nonpos.x0 = {0.0};
        nonpos.t0 = 0.0;
        CHECK_THROWS_AS(renormalized_energies(traj, man, nonpos, {0.02}), std::invalid_argument);
    }

    SUBCASE("clearing out and maximum principle are exact") {
        ClearingOutReport rep = clearing_out_check(traj, man, Z0, 0.04, 0.03);
        CHECK(rep.cleared);
        CHECK(rep.min_abs_U == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(rep.measured_E) <= 1e-18);
        CHECK(max_principle_check(traj) == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("gradient estimate and polar residuals vanish") {
        GradientEstimateReport rep =
            gradient_estimate_check(traj, man, 0.002, {{Z0, 0.04}}, 1e-4);
        CHECK(rep.sup_sqrt_t_grad <= 1e-12);
        REQUIRE(rep.audits.size() == 1);
        CHECK(rep.audits[0].audited);
        CHECK(rep.audits[0].scaled_grad_sup <= 1e-18);
        CHECK(rep.audits[0].scaled_dt_sup <= 1e-18);

        PolarResiduals pr = polar_residuals(traj, static_cast<int>(traj.states.size()) / 2);
        CHECK(pr.rho_residual <= 1e-14);
        CHECK(pr.omega_residual <= 1e-14);
        CHECK(pr.max_omega_defect <= 1e-14);
    }

    SUBCASE("audit coverage errors propagate") {
        SpaceTimeCenter late;
        late.x0 = {0.0};
        late.t0 = 0.02;
        CHECK_THROWS_AS(gradient_estimate_check(traj, man, 0.002, {{late, 0.04}}, 1e-4),
                        std::invalid_argument);
    }
}

TEST_CASE("smooth run battery: monotone curves stable under refinement") {
    auto man = TargetManifold::unit_sphere(2);
    const Trajectory& coarse = smooth_coarse();
    const Trajectory& fine = smooth_fine();

    SpaceTimeCenter Z0;
    Z0.x0 = {0.0};
    Z0.t0 = 0.1;
    const std::vector<double> radii = {0.06, 0.075, 0.09, 0.105, 0.12, 0.135, 0.15};
    RenormEnergyCurve cc = renormalized_energies(coarse, man, Z0, radii);
    RenormEnergyCurve cf = renormalized_energies(fine, man, Z0, radii);

    SUBCASE("D and E increase along the radius ladder") {
        for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
            CHECK(cc.D_values[i] <= cc.D_values[i + 1] * 1.02 + 1e-15);
            CHECK(cc.E_values[i] <= cc.E_values[i + 1] * 1.02 + 1e-15);
            CHECK(cf.D_values[i] <= cf.D_values[i + 1] * 1.02 + 1e-15);
            CHECK(cf.E_values[i] <= cf.E_values[i + 1] * 1.02 + 1e-15);
        }
        CHECK(cc.E_values.front() > 0.0);
        CHECK(cc.truncation_radius > radii.back());
    }

    SUBCASE("values agree across grid and step refinement within two percent") {
        for (std::size_t i = 0; i < radii.size(); ++i) {
            CHECK(std::abs(cf.E_values[i] - cc.E_values[i]) <= 0.02 * cf.E_values[i]);
            CHECK(std::abs(cf.D_values[i] - cc.D_values[i]) <= 0.02 * cf.D_values[i]);
        }
    }

    SUBCASE("local energy inequality constant is refinement stable") {
        LocalEnergyReport lc = local_energy_inequality_check(coarse, man, Z0, 0.15);
        LocalEnergyReport lf = local_energy_inequality_check(fine, man, Z0, 0.15);
        CHECK(lc.lhs > 0.0);
        CHECK(lc.rhs > 0.0);
        CHECK(lc.constant == doctest::Approx(lc.lhs / lc.rhs).epsilon(1e-12));
        CHECK(lf.constant > 0.5 * lc.constant);
        CHECK(lf.constant < 2.0 * lc.constant);
    }

    SUBCASE("maximum principle and clearing out hold on the smooth flow") {
        CHECK(max_principle_check(coarse) <= 1.0 + 1e-8);
        CHECK(max_principle_check(fine) <= 1.0 + 1e-8);
        ClearingOutReport rep = clearing_out_check(coarse, man, Z0, 0.1, 0.025);
        CHECK(rep.cleared);
        CHECK(rep.min_abs_U >= 0.99);
        CHECK(rep.measured_E < 0.05 * coarse.ledger.front().total);
    }

    SUBCASE("gradient estimate stays bounded and audits the small-energy center") {
        double eps0_sq = 0.05 * coarse.ledger.front().total;
        GradientEstimateReport rep =
            gradient_estimate_check(coarse, man, 0.05, {{Z0, 0.1}}, eps0_sq);
        CHECK(rep.sup_sqrt_t_grad > 0.01);
        CHECK(rep.sup_sqrt_t_grad <= 0.5);
        REQUIRE(rep.audits.size() == 1);
        CHECK(rep.audits[0].audited);
        CHECK(rep.audits[0].energy < eps0_sq);
        CHECK(rep.audits[0].scaled_grad_sup <= 0.01);
        CHECK(rep.audits[0].scaled_dt_sup <= 1e-6);
    }

    SUBCASE("polar residuals shrink under refinement") {
        PolarResiduals pc = polar_residuals(coarse, static_cast<int>(coarse.states.size()) / 2);
        PolarResiduals pf = polar_residuals(fine, static_cast<int>(fine.states.size()) / 2);
        CHECK(pc.max_omega_defect <= 1e-12);
        CHECK(pc.rho_residual < 5e-3);
        CHECK(pc.omega_residual < 1e-2);
        CHECK(pf.rho_residual <= 0.7 * pc.rho_residual);
        CHECK(pf.omega_residual <= 0.7 * pc.omega_residual);
    }

    SUBCASE("center-shifted Gaussian comparison is refinement stable") {
        SpaceTimeCenter Z1;
        Z1.x0 = {0.1};
        Z1.t0 = 0.11;
        GaussianComparisonReport rc = gaussian_comparison(coarse, man, Z0, Z1, 0.15, 0.1);
        GaussianComparisonReport rf = gaussian_comparison(fine, man, Z0, Z1, 0.15, 0.1);
        CHECK(rc.E0 == doctest::Approx(coarse.ledger.front().total).epsilon(1e-12));
        CHECK(rc.constant > 0.0);
        CHECK(rf.constant > 0.8 * rc.constant);
        CHECK(rf.constant < 1.25 * rc.constant);
    }

    SUBCASE("singular scan of a smooth run flags nothing at the default threshold") {
        SingularScanOptions opt;
        opt.R = 0.1;
        opt.t0_values = {0.1};
        opt.x_stride = 8;
        SingularSetReport rep = singular_set_scan({&coarse}, man, opt);
        CHECK(rep.threshold ==
              doctest::Approx(0.05 * coarse.ledger.front().total).epsilon(1e-12));
        CHECK(rep.flagged_indices.empty());
        for (const SingularSample& s : rep.samples) CHECK(s.energy < rep.threshold);
    }
}

TEST_CASE("maximum principle reports violated data without spurious growth") {
    auto g = make_grid(1, 33, 17, pi, 2.0, 0.5);
    Trace u0 = phase_trace(g, sine_phase);
    for (int h = 0; h < g->hcount(); ++h)
        for (int c = 0; c < 2; ++c) u0.at(h, c) *= 1.5;
    Trajectory traj = mm_run(g, u0, 0.3, 1e-3, 3e-3, 1);
    double mx = max_principle_check(traj);
    CHECK(mx >= 1.49);
    CHECK(mx <= 1.5 + 1e-6);
}

TEST_CASE("concentrated datum: scan localizes the spike, clearing report stays consistent") {
    auto man = TargetManifold::unit_sphere(2);
    const Trajectory& r1 = spike_run(0.2);
    const Trajectory& r2 = spike_run(0.1);

    SingularScanOptions opt;
    opt.R = 0.05;
    opt.t0_values = {0.02};
    opt.x_stride = 8;

    SUBCASE("default threshold tracks the first run's initial energy") {
        SingularSetReport rep = singular_set_scan({&r1, &r2}, man, opt);
        CHECK(rep.threshold == doctest::Approx(0.05 * r1.ledger.front().total).epsilon(1e-12));
        REQUIRE(rep.eps_values.size() == 2);
        CHECK(rep.eps_values[0] == doctest::Approx(0.2));
        CHECK(rep.eps_values[1] == doctest::Approx(0.1));
        for (const SingularSample& s : rep.samples)
            CHECK(s.flagged == (s.energy >= rep.threshold));
    }

    SUBCASE("explicit threshold flags only centers near the spike") {
        opt.eps0_sq = 0.05;
        SingularSetReport rep = singular_set_scan({&r1, &r2}, man, opt);
        CHECK(rep.threshold == doctest::Approx(0.05));
        CHECK(!rep.flagged_indices.empty());
        bool origin_flagged = false;
        for (std::size_t idx : rep.flagged_indices) {
            const SingularSample& s = rep.samples[idx];
            CHECK(std::abs(s.center.x0[0]) <= 0.5);
            if (std::abs(s.center.x0[0]) <= 1e-12) origin_flagged = true;
        }
        CHECK(origin_flagged);
        for (const SingularSample& s : rep.samples) {
            CHECK(s.flagged == (s.energy >= rep.threshold));
            if (std::abs(s.center.x0[0]) > 2.0) CHECK(s.energy < 1e-3);
        }
    }

    SUBCASE("adding a run can only lower the energy proxy") {
        SingularSetReport one = singular_set_scan({&r1}, man, opt);
        SingularSetReport both = singular_set_scan({&r1, &r2}, man, opt);
        REQUIRE(one.samples.size() == both.samples.size());
        for (std::size_t i = 0; i < one.samples.size(); ++i)
            CHECK(both.samples[i].energy <= one.samples[i].energy + 1e-15);
    }

    SUBCASE("clearing report carries the large measured energy at the spike") {
        SpaceTimeCenter Zc;
        Zc.x0 = {0.0};
        Zc.t0 = 0.02;
        ClearingOutReport rep = clearing_out_check(r2, man, Zc, 0.05, 0.05);
        CHECK(rep.measured_E >= 0.05);
        CHECK((rep.cleared || rep.measured_E >= 0.05));
        CHECK(max_principle_check(r1) <= 1.0 + 1e-8);
        CHECK(max_principle_check(r2) <= 1.0 + 1e-8);
    }

    SUBCASE("scan validation") {
        SingularScanOptions bad = opt;
        bad.R = 0.0;
        CHECK_THROWS_AS(singular_set_scan({&r1}, man, bad), std::invalid_argument);
        bad = opt;
        bad.t0_values.clear();
        CHECK_THROWS_AS(singular_set_scan({&r1}, man, bad), std::invalid_argument);
        bad = opt;
        bad.x_stride = 0;
        CHECK_THROWS_AS(singular_set_scan({&r1}, man, bad), std::invalid_argument);
        CHECK_THROWS_AS(singular_set_scan({}, man, opt), std::invalid_argument);
    }
}

TEST_CASE("polar residuals reject low-modulus states by naming the node") {
    auto g = make_grid(1, 17, 9, 1.0, 1.0, 0.5);
    Trace u0 = Trace::zeros(g, 2);
    for (int h = 0; h < g->hcount(); ++h) u0.at(h, 0) = 0.3;
    Trajectory traj = mm_run(g, u0, 0.5, 1e-4, 3e-4, 1);

    CHECK_THROWS_AS(polar_residuals(traj, 0), std::domain_error);
    try {
        polar_residuals(traj, 0);
        CHECK(false);
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("|U| < 1/2") != std::string::npos);
    }
    CHECK_THROWS_AS(polar_residuals(traj, -1), std::invalid_argument);
    CHECK_THROWS_AS(polar_residuals(traj, static_cast<int>(traj.states.size())),
                    std::invalid_argument);
}

TEST_CASE("csv writers emit fixed headers, binary flags, and deterministic bytes") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "hfl_diag_csv";
    fs::create_directories(dir);

    RenormEnergyCurve c1;
    c1.center.x0 = {0.25};
    c1.center.t0 = 0.5;
    c1.R_values = {0.1, 0.2};
    c1.D_values = {1.0 / 3.0, 2.0 / 3.0};
    c1.E_values = {0.125, 0.25};

    SUBCASE("monotonicity columns for one and two horizontal dimensions") {
        fs::path p1 = dir / "mono1.csv";
        write_monotonicity_csv({c1}, 1, p1.string());
        std::string body = slurp(p1);
        CHECK(body.rfind("t0,x0,R,D,E\n", 0) == 0);
        CHECK(std::count(body.begin(), body.end(), '\n') == 3);
        CHECK(body.find("0.33333333333333331") != std::string::npos);

        RenormEnergyCurve c2 = c1;
        c2.center.x0 = {0.25, -0.75};
        fs::path p2 = dir / "mono2.csv";
        write_monotonicity_csv({c2}, 2, p2.string());
        CHECK(slurp(p2).rfind("t0,x0,x1,R,D,E\n", 0) == 0);

        write_monotonicity_csv({c1}, 1, p1.string());
        CHECK(slurp(p1) == body);
    }

    SUBCASE("scan columns carry zero-one flags") {
        SingularSetReport rep;
        rep.threshold = 0.5;
        rep.R = 0.1;
        SingularSample a;
        a.center.x0 = {0.0};
        a.center.t0 = 0.25;
        a.energy = 0.75;
        a.flagged = true;
        SingularSample b = a;
        b.center.x0 = {1.0};
        b.energy = 0.25;
        b.flagged = false;
        rep.samples = {a, b};
        fs::path p = dir / "scan1.csv";
        write_singular_scan_csv(rep, 1, p.string());
        std::string body = slurp(p);
        CHECK(body.rfind("t0,x0,R,energy,flagged\n", 0) == 0);
        CHECK(body.find(",1\n") != std::string::npos);
        CHECK(body.find(",0\n") != std::string::npos);
        write_singular_scan_csv(rep, 1, p.string());
        CHECK(slurp(p) == body);
    }

    fs::remove_all(dir);
}
