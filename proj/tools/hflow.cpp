// Command-line front end. Every subcommand reads one plain-text config,
// echoes the fully resolved settings (with their hash) into the output
// directory before any computation, and writes deterministic artifacts there.
// Exit codes: 0 success, 2 usage, 3 config validation, 4 solver or check
// failure (with a diagnostic payload in <out>/error.txt).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hfl/config.hpp"
#include "hfl/diagnostics.hpp"
#include "hfl/extension.hpp"
#include "hfl/field.hpp"
#include "hfl/flow.hpp"
#include "hfl/greenlab.hpp"
#include "hfl/operators.hpp"

namespace fs = std::filesystem;
using namespace hfl;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

Trajectory run_configured_flow(const RunConfig& cfg, double epsilon) {
    auto g = make_grid(cfg);
    TargetManifold man = make_manifold(cfg);
    Trace u0 = initial_trace(cfg, g);
    PenaltyParams p = PenaltyParams::make(cfg.s, epsilon);
    FlowOptions opt = flow_options(cfg, *g);
    return run_flow(u0, man, p, opt);
}

void write_states(const Trajectory& traj, const RunConfig& cfg, const fs::path& out) {
    if (!cfg.write_snapshots) return;
    for (const FlowState& st : traj.states) {
        char name[32];
        std::snprintf(name, sizeof name, "state_%06d.snap", st.step_index);
        write_snapshot(st.U, st.t, cfg.epsilon, (out / name).string());
    }
}

void cmd_extend(const RunConfig& cfg, const fs::path& out) {
    auto g = make_grid(cfg);
    Trace u0 = initial_trace(cfg, g);
    Field U = harmonic_extend(u0, ExtendMethod::fd);
    write_snapshot(U, 0.0, cfg.epsilon, (out / "extension.snap").string());
    write_text(out / "extend_summary.csv", "dirichlet\n" + fmt(dirichlet_energy(U)) + "\n");
}

void cmd_flow(const RunConfig& cfg, const fs::path& out) {
    Trajectory traj = run_configured_flow(cfg, cfg.epsilon);
    write_ledger_csv(traj, (out / "ledger.csv").string());
    write_states(traj, cfg, out);
}

void cmd_fracop(const RunConfig& cfg, const fs::path& out) {
    auto g = make_grid(cfg);
    const double pi = 3.14159265358979323846;
    const double k = cfg.fracop_k * pi / g->Lx();  // face-symmetric frequency
    Trace u = Trace::zeros(g, 1);
    for (int h = 0; h < g->hcount(); ++h)
        u.at(h, 0) = std::cos(k * (g->x_of(h, 0) + g->Lx()));

    Trace via_ext = frac_op_via_extension(harmonic_extend(u, ExtendMethod::fd));
    Trace via_ker = frac_op_via_kernel(TraceHistory::single(u), 0.0);

    std::string csv = "x,extension_route,kernel_route,exact\n";
    double num_e = 0.0, num_k = 0.0, num_gap = 0.0, den = 0.0;
    for (int h = 0; h < g->hcount(); ++h) {
        double x = g->x_of(h, 0);
        double exact = k * std::cos(k * (x + g->Lx()));
        csv += fmt(x) + "," + fmt(via_ext.at(h, 0)) + "," + fmt(via_ker.at(h, 0)) + "," +
               fmt(exact) + "\n";
        double w = g->x_weight(h);
        num_e += w * (via_ext.at(h, 0) - exact) * (via_ext.at(h, 0) - exact);
        num_k += w * (via_ker.at(h, 0) - exact) * (via_ker.at(h, 0) - exact);
        num_gap += w * (via_ext.at(h, 0) - via_ker.at(h, 0)) * (via_ext.at(h, 0) - via_ker.at(h, 0));
        den += w * exact * exact;
    }
    write_text(out / "fracop.csv", csv);
    write_text(out / "fracop_summary.csv",
               "k,rel_err_extension,rel_err_kernel,route_gap\n" +
                   std::to_string(cfg.fracop_k) + "," + fmt(std::sqrt(num_e / den)) + "," +
                   fmt(std::sqrt(num_k / den)) + "," + fmt(std::sqrt(num_gap / den)) + "\n");
}

void cmd_monotonicity(const RunConfig& cfg, const fs::path& out) {
    Trajectory traj = run_configured_flow(cfg, cfg.epsilon);
    TargetManifold man = make_manifold(cfg);
    SpaceTimeCenter Z0{cfg.x0, cfg.t0};
    std::vector<RenormEnergyCurve> curves = {renormalized_energies(traj, man, Z0, cfg.radii)};
    write_monotonicity_csv(curves, cfg.grid.m, (out / "monotonicity.csv").string());
}

void cmd_local_energy(const RunConfig& cfg, const fs::path& out) {
    Trajectory traj = run_configured_flow(cfg, cfg.epsilon);
    TargetManifold man = make_manifold(cfg);
    LocalEnergyReport rep = local_energy_inequality_check(traj, man, {cfg.x0, cfg.t0}, cfg.R);
    std::string csv = cfg.grid.m == 1 ? "t0,x0,R,lhs,rhs,constant\n" : "t0,x0,x1,R,lhs,rhs,constant\n";
    csv += fmt(cfg.t0);
    for (double x : cfg.x0) csv += "," + fmt(x);
    csv += "," + fmt(cfg.R) + "," + fmt(rep.lhs) + "," + fmt(rep.rhs) + "," + fmt(rep.constant) + "\n";
    write_text(out / "local_energy.csv", csv);
}

void cmd_singular_scan(const RunConfig& cfg, const fs::path& out) {
    std::vector<double> eps = cfg.eps_list.empty() ? std::vector<double>{cfg.epsilon} : cfg.eps_list;
    std::vector<Trajectory> runs;
    runs.reserve(eps.size());
    for (double e : eps) runs.push_back(run_configured_flow(cfg, e));
    std::vector<const Trajectory*> ptrs;
    for (const Trajectory& t : runs) ptrs.push_back(&t);

    SingularScanOptions opt;
    opt.eps0_sq = cfg.eps0_sq;
    opt.R = cfg.R;
    opt.t0_values = cfg.scan_t0;
    opt.x_stride = cfg.scan_stride;
    TargetManifold man = make_manifold(cfg);
    SingularSetReport rep = singular_set_scan(ptrs, man, opt);
    write_singular_scan_csv(rep, cfg.grid.m, (out / "scan.csv").string());
}

void cmd_green_verify(const RunConfig&, const fs::path& out) {
    std::vector<GreenCheck> checks = run_green_checks();
    write_text(out / "green_report.json", green_report_json(checks));
    std::string failed;
    for (const GreenCheck& c : checks)
        if (!c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
    if (!failed.empty())
        throw OracleError("boundary kernel checks failed: " + failed, 0.0);
}

void cmd_eps_sweep(const RunConfig& cfg, const fs::path& out) {
    auto g = make_grid(cfg);
    TargetManifold man = make_manifold(cfg);
    Trace u0 = initial_trace(cfg, g);
    FlowOptions opt = flow_options(cfg, *g);
    ContinuationReport rep = epsilon_continuation(u0, man, cfg.s, cfg.eps_list, opt);

    std::string csv = "epsilon,final_potential,final_bare_potential,trace_dist_prev,final_orthogonality\n";
    for (size_t i = 0; i < rep.eps.size(); ++i) {
        csv += fmt(rep.eps[i]) + "," + fmt(rep.final_potential_energy[i]) + "," +
               fmt(rep.final_bare_potential[i]) + "," +
               (i ? fmt(rep.pairwise_trace_dist[i - 1]) : std::string("nan")) + "," +
               fmt(rep.final_orthogonality[i]) + "\n";
    }
    write_text(out / "sweep.csv", csv);
    write_text(out / "sweep_summary.csv",
               "potential_decay_order\n" + fmt(rep.potential_decay_order) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for the penalized half-Laplacian heat flow"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::vector<std::string> sets;

    using Handler = std::function<void(const RunConfig&, const fs::path&)>;
    struct Cmd {
        const char* name;
        const char* help;
        Handler fn;
    };
    const std::vector<Cmd> cmds = {
        {"extend", "harmonic extension of the initial trace", cmd_extend},
        {"flow", "time integration with the per-step energy ledger", cmd_flow},
        {"fracop", "operator comparison on a cosine datum (m = 1)", cmd_fracop},
        {"monotonicity", "renormalized energies over a radius ladder", cmd_monotonicity},
        {"local-energy", "windowed dissipation against the local energy bound", cmd_local_energy},
        {"singular-scan", "flagged-center scan over one or more epsilons", cmd_singular_scan},
        {"green-verify", "boundary kernel verification battery", cmd_green_verify},
        {"eps-sweep", "continuation over a decreasing epsilon ladder", cmd_eps_sweep},
    };

    std::vector<CLI::App*> subs;
    for (const Cmd& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--set", sets, "override, repeatable: block.key=value");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const Cmd* active = nullptr;
    for (size_t i = 0; i < cmds.size(); ++i)
        if (subs[i]->parsed()) active = &cmds[i];

    fs::path out(out_dir);
    try {
        RunConfig cfg = parse_config(config_path, sets);
        if (std::string(active->name) == "eps-sweep") validate_sweep(cfg);
        if (std::string(active->name) == "fracop" && cfg.grid.m != 1)
            throw ConfigError("grid.m", "the operator comparison needs m = 1");
        if (cfg.scheme == Scheme::explicit_euler) flow_options(cfg, *make_grid(cfg));

        fs::create_directories(out);
        write_text(out / "resolved_config", resolved_config_text(cfg));
        active->fn(cfg, out);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const SolverError& e) {
        std::error_code ec;
        fs::create_directories(out, ec);
        write_text(out / "error.txt",
                   std::string("solver failure\nmessage = ") + e.what() +
                       "\nachieved_residual = " + fmt(e.achieved_residual()) + "\n");
        std::cerr << "solver failure: " << e.what() << "\n";
        return 4;
    } catch (const OracleError& e) {
        std::error_code ec;
        fs::create_directories(out, ec);
        write_text(out / "error.txt",
                   std::string("verification failure\nmessage = ") + e.what() +
                       "\nachieved_tolerance = " + fmt(e.achieved_tolerance()) + "\n");
        std::cerr << "verification failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::error_code ec;
        fs::create_directories(out, ec);
        write_text(out / "error.txt", std::string("failure\nmessage = ") + e.what() + "\n");
        std::cerr << "failure: " << e.what() << "\n";
        return 4;
    }
}
