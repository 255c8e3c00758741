#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hfl/common.hpp"
#include "hfl/field.hpp"
#include "hfl/flow.hpp"
#include "hfl/grid.hpp"
#include "hfl/manifold.hpp"

namespace hfl {

/// Typed view of a plain-text run configuration. One file drives a whole run;
/// every knob below is a line "block.key = value", '#' starts a comment.
///
/// Schema (defaults in parentheses):
///   grid.m          horizontal dimension, 1 or 2 (1)
///   grid.nx         nodes per horizontal axis on [-Lx, Lx] (65)
///   grid.ny         vertical nodes on [0, Ly] (33)
///   grid.Lx         horizontal half-width (4.0)
///   grid.Ly         vertical extent (4.0)
///   manifold.target "circle" or "sphere" (circle)
///   manifold.init   initial phase curve: "constant", "sine", or "spike" (sine)
///   manifold.amplitude  phase modulation amplitude (0.5)
///   manifold.width      spike width (0.5)
///   manifold.phase      constant phase offset (0.0)
///   penalty.s       fractional order in (0,1) (0.5); also sets the grid weight
///   penalty.epsilon penalization length (0.1)
///   penalty.eps_list  comma-separated epsilons for sweep runs (empty)
///   scheme.kind     "explicit" or "minimizing_movement" (minimizing_movement)
///   scheme.dt       step size / proximal parameter (1e-3)
///   scheme.dt_factor  if > 0, explicit dt = factor * stability bound (0)
///   scheme.T_final  horizon (0.1)
///   scheme.snapshot_stride  keep every k-th state (10)
///   scheme.grad_tol relative gradient tolerance of the inner solver (1e-8)
///   scheme.max_iters  inner-solver iteration cap (5000)
///   diagnostics.t0  center time for windowed energies (0.05)
///   diagnostics.x0  comma-separated center point, grid.m entries (0)
///   diagnostics.radii  comma-separated window radii, increasing (0.02,0.05,0.1)
///   diagnostics.R   outer radius for the local energy bound (0.1)
///   diagnostics.delta  clearing-out smallness threshold (0.05)
///   diagnostics.eps0_sq  flag threshold for the scan; <= 0 means automatic (-1)
///   diagnostics.scan_t0  comma-separated scan times (defaults to t0)
///   diagnostics.scan_stride  horizontal subsampling stride of the scan (1)
///   diagnostics.fracop_k  wave number of the operator test datum (1)
///   output.write_snapshots  emit binary state snapshots, true/false (true)
///
/// Unknown keys, malformed values, and out-of-range settings raise ConfigError
/// carrying the offending field path.
struct RunConfig {
    GridConfig grid;

    std::string target = "circle";
    std::string init = "sine";
    double amplitude = 0.5;
    double width = 0.5;
    double phase = 0.0;

    double s = 0.5;
    double epsilon = 0.1;
    std::vector<double> eps_list;

    Scheme scheme = Scheme::minimizing_movement;
    double dt = 1e-3;
    double dt_factor = 0.0;
    double T_final = 0.1;
    int snapshot_stride = 10;
    double grad_tol = 1e-8;
    int max_iters = 5000;

    double t0 = 0.05;
    std::vector<double> x0 = {0.0};
    std::vector<double> radii = {0.02, 0.05, 0.1};
    double R = 0.1;
    double delta = 0.05;
    double eps0_sq = -1.0;
    std::vector<double> scan_t0;  // filled with {t0} when left empty
    int scan_stride = 1;
    int fracop_k = 1;

    bool write_snapshots = true;
};

/// Parse a configuration file, apply "block.key=value" overrides in order
/// (later wins), inject defaults, and validate.
RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Same from in-memory text.
RunConfig parse_config_text(const std::string& text,
                            const std::vector<std::string>& overrides = {});

/// Full echo of a validated configuration: every key with its effective value,
/// fixed order and formatting, preceded by a "# config_hash = <16 hex>" line.
/// The hash covers everything after that first line, so byte-identical
/// effective configurations hash identically regardless of input formatting.
std::string resolved_config_text(const RunConfig& cfg);

/// The hash line value for a resolved text produced by resolved_config_text.
std::string config_hash(const RunConfig& cfg);

/// Sweep runs need a strictly decreasing epsilon ladder; raises ConfigError
/// on "penalty.eps_list" otherwise.
void validate_sweep(const RunConfig& cfg);

/// Grid with the vertical weight taken from penalty.s.
std::shared_ptr<const HalfSpaceGrid> make_grid(const RunConfig& cfg);

TargetManifold make_manifold(const RunConfig& cfg);

/// Initial data: a phase curve theta(x) mapped onto the unit circle, embedded
/// equatorially for the sphere target.
///   constant: theta = phase
///   sine:     theta = phase + amplitude * prod_d sin(pi x_d / Lx)
///   spike:    theta = phase + amplitude * exp(-|x|^2 / width^2)
Trace initial_trace(const RunConfig& cfg, std::shared_ptr<const HalfSpaceGrid> g);

/// Flow options with the effective step size. For the explicit scheme with
/// dt_factor > 0 the step is dt_factor * cfl_limit(grid); an explicit step
/// above the stability bound is a ConfigError on "scheme.dt".
FlowOptions flow_options(const RunConfig& cfg, const HalfSpaceGrid& g);

}  // namespace hfl
