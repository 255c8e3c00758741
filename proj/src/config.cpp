#include "hfl/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "hfl/operators.hpp"

namespace hfl {
namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt(v[i]);
    }
    return out;
}

// Raw "block.key" -> value lines in last-wins order.
using RawMap = std::map<std::string, std::string>;

void add_line(RawMap& raw, const std::string& line, const char* origin) {
    std::string stripped = line.substr(0, line.find('#'));
    stripped = trim(stripped);
    if (stripped.empty()) return;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos)
        throw ConfigError(stripped, std::string("expected 'block.key = value' in ") + origin);
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || key.find('.') == std::string::npos)
        throw ConfigError(key.empty() ? stripped : key, "key must look like 'block.name'");
    raw.insert_or_assign(key, value);
}

double to_double(const std::string& key, const std::string& v) {
    const char* c = v.c_str();
    char* end = nullptr;
    double x = std::strtod(c, &end);
    if (end == c || *end != '\0' || !std::isfinite(x))
        throw ConfigError(key, "expected a finite number, got '" + v + "'");
    return x;
}

int to_int(const std::string& key, const std::string& v) {
    const char* c = v.c_str();
    char* end = nullptr;
    long x = std::strtol(c, &end, 10);
    if (end == c || *end != '\0' || x < -1000000000L || x > 1000000000L)
        throw ConfigError(key, "expected an integer, got '" + v + "'");
    return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(key, "empty list entry");
        out.push_back(to_double(key, item));
    }
    return out;
}

const char* const kKnownKeys[] = {
    "grid.m", "grid.nx", "grid.ny", "grid.Lx", "grid.Ly",
    "manifold.target", "manifold.init", "manifold.amplitude", "manifold.width",
    "manifold.phase",
    "penalty.s", "penalty.epsilon", "penalty.eps_list",
    "scheme.kind", "scheme.dt", "scheme.dt_factor", "scheme.T_final",
    "scheme.snapshot_stride", "scheme.grad_tol", "scheme.max_iters",
    "diagnostics.t0", "diagnostics.x0", "diagnostics.radii", "diagnostics.R",
    "diagnostics.delta", "diagnostics.eps0_sq", "diagnostics.scan_t0",
    "diagnostics.scan_stride", "diagnostics.fracop_k",
    "output.write_snapshots",
};

void check_positive(const std::string& key, double v) {
    if (!(v > 0.0)) throw ConfigError(key, "must be positive");
}

RunConfig build(const RawMap& raw) {
    for (const auto& [key, value] : raw) {
        bool known = false;
        for (const char* k : kKnownKeys) known = known || key == k;
        if (!known) throw ConfigError(key, "unknown key");
        (void)value;
    }

    RunConfig c;
    auto has = [&](const char* k) { return raw.count(k) != 0; };
    auto str = [&](const char* k) { return raw.at(k); };

    if (has("grid.m")) c.grid.m = to_int("grid.m", str("grid.m"));
    if (has("grid.nx")) c.grid.nx = to_int("grid.nx", str("grid.nx"));
    if (has("grid.ny")) c.grid.ny = to_int("grid.ny", str("grid.ny"));
    if (has("grid.Lx")) c.grid.Lx = to_double("grid.Lx", str("grid.Lx"));
    if (has("grid.Ly")) c.grid.Ly = to_double("grid.Ly", str("grid.Ly"));

    if (has("manifold.target")) c.target = str("manifold.target");
    if (has("manifold.init")) c.init = str("manifold.init");
    if (has("manifold.amplitude"))
        c.amplitude = to_double("manifold.amplitude", str("manifold.amplitude"));
    if (has("manifold.width")) c.width = to_double("manifold.width", str("manifold.width"));
    if (has("manifold.phase")) c.phase = to_double("manifold.phase", str("manifold.phase"));

    if (has("penalty.s")) c.s = to_double("penalty.s", str("penalty.s"));
    if (has("penalty.epsilon")) c.epsilon = to_double("penalty.epsilon", str("penalty.epsilon"));
    if (has("penalty.eps_list")) c.eps_list = to_list("penalty.eps_list", str("penalty.eps_list"));

    if (has("scheme.kind")) {
        const std::string& k = str("scheme.kind");
        if (k == "explicit")
            c.scheme = Scheme::explicit_euler;
        else if (k == "minimizing_movement")
            c.scheme = Scheme::minimizing_movement;
        else
            throw ConfigError("scheme.kind", "must be 'explicit' or 'minimizing_movement'");
    }
    if (has("scheme.dt")) c.dt = to_double("scheme.dt", str("scheme.dt"));
    if (has("scheme.dt_factor"))
        c.dt_factor = to_double("scheme.dt_factor", str("scheme.dt_factor"));
    if (has("scheme.T_final")) c.T_final = to_double("scheme.T_final", str("scheme.T_final"));
    if (has("scheme.snapshot_stride"))
        c.snapshot_stride = to_int("scheme.snapshot_stride", str("scheme.snapshot_stride"));
    if (has("scheme.grad_tol")) c.grad_tol = to_double("scheme.grad_tol", str("scheme.grad_tol"));
    if (has("scheme.max_iters")) c.max_iters = to_int("scheme.max_iters", str("scheme.max_iters"));

    if (has("diagnostics.t0")) c.t0 = to_double("diagnostics.t0", str("diagnostics.t0"));
    if (has("diagnostics.x0")) c.x0 = to_list("diagnostics.x0", str("diagnostics.x0"));
    if (has("diagnostics.radii")) c.radii = to_list("diagnostics.radii", str("diagnostics.radii"));
    if (has("diagnostics.R")) c.R = to_double("diagnostics.R", str("diagnostics.R"));
    if (has("diagnostics.delta")) c.delta = to_double("diagnostics.delta", str("diagnostics.delta"));
    if (has("diagnostics.eps0_sq"))
        c.eps0_sq = to_double("diagnostics.eps0_sq", str("diagnostics.eps0_sq"));
    if (has("diagnostics.scan_t0"))
        c.scan_t0 = to_list("diagnostics.scan_t0", str("diagnostics.scan_t0"));
    if (has("diagnostics.scan_stride"))
        c.scan_stride = to_int("diagnostics.scan_stride", str("diagnostics.scan_stride"));
    if (has("diagnostics.fracop_k"))
        c.fracop_k = to_int("diagnostics.fracop_k", str("diagnostics.fracop_k"));

    if (has("output.write_snapshots"))
        c.write_snapshots = to_bool("output.write_snapshots", str("output.write_snapshots"));

    // Range validation with the offending path.
    if (c.grid.m != 1 && c.grid.m != 2) throw ConfigError("grid.m", "must be 1 or 2");
    if (c.grid.nx < 3) throw ConfigError("grid.nx", "must be at least 3");
    if (c.grid.ny < 3) throw ConfigError("grid.ny", "must be at least 3");
    check_positive("grid.Lx", c.grid.Lx);
    check_positive("grid.Ly", c.grid.Ly);

    if (c.target != "circle" && c.target != "sphere")
        throw ConfigError("manifold.target", "must be 'circle' or 'sphere'");
    if (c.init != "constant" && c.init != "sine" && c.init != "spike")
        throw ConfigError("manifold.init", "must be 'constant', 'sine', or 'spike'");
    check_positive("manifold.width", c.width);

    if (!(c.s > 0.0 && c.s < 1.0)) throw ConfigError("penalty.s", "must lie in (0, 1)");
    check_positive("penalty.epsilon", c.epsilon);
    for (double e : c.eps_list)
        if (!(e > 0.0)) throw ConfigError("penalty.eps_list", "entries must be positive");

    check_positive("scheme.dt", c.dt);
    if (!(c.dt_factor >= 0.0 && c.dt_factor <= 1.0))
        throw ConfigError("scheme.dt_factor", "must lie in [0, 1]");
    check_positive("scheme.T_final", c.T_final);
    if (c.snapshot_stride < 1) throw ConfigError("scheme.snapshot_stride", "must be at least 1");
    check_positive("scheme.grad_tol", c.grad_tol);
    if (c.max_iters < 1) throw ConfigError("scheme.max_iters", "must be at least 1");

    check_positive("diagnostics.t0", c.t0);
    if (static_cast<int>(c.x0.size()) != c.grid.m)
        throw ConfigError("diagnostics.x0", "needs exactly grid.m entries");
    if (c.radii.empty()) throw ConfigError("diagnostics.radii", "needs at least one radius");
    for (size_t i = 0; i < c.radii.size(); ++i) {
        if (!(c.radii[i] > 0.0)) throw ConfigError("diagnostics.radii", "entries must be positive");
        if (i && !(c.radii[i] > c.radii[i - 1]))
            throw ConfigError("diagnostics.radii", "must be strictly increasing");
    }
    check_positive("diagnostics.R", c.R);
    if (!(c.delta > 0.0 && c.delta < 1.0))
        throw ConfigError("diagnostics.delta", "must lie in (0, 1)");
    if (c.scan_t0.empty()) c.scan_t0 = {c.t0};
    for (double t : c.scan_t0)
        check_positive("diagnostics.scan_t0", t);
    if (c.scan_stride < 1) throw ConfigError("diagnostics.scan_stride", "must be at least 1");
    if (c.fracop_k < 1) throw ConfigError("diagnostics.fracop_k", "must be at least 1");

    c.grid.s = c.s;
    return c;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
    RawMap raw;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) add_line(raw, line, "config");
    for (const std::string& o : overrides) add_line(raw, o, "override");
    return build(raw);
}

RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), overrides);
}

std::string resolved_config_text(const RunConfig& c) {
    std::string b;
    auto put = [&](const char* key, const std::string& value) {
        b += key;
        b += value.empty() ? " =" : " = " + value;
        b += '\n';
    };
    put("grid.m", std::to_string(c.grid.m));
    put("grid.nx", std::to_string(c.grid.nx));
    put("grid.ny", std::to_string(c.grid.ny));
    put("grid.Lx", fmt(c.grid.Lx));
    put("grid.Ly", fmt(c.grid.Ly));
    put("manifold.target", c.target);
    put("manifold.init", c.init);
    put("manifold.amplitude", fmt(c.amplitude));
    put("manifold.width", fmt(c.width));
    put("manifold.phase", fmt(c.phase));
    put("penalty.s", fmt(c.s));
    put("penalty.epsilon", fmt(c.epsilon));
    put("penalty.eps_list", fmt_list(c.eps_list));
    put("scheme.kind",
        c.scheme == Scheme::explicit_euler ? "explicit" : "minimizing_movement");
    put("scheme.dt", fmt(c.dt));
    put("scheme.dt_factor", fmt(c.dt_factor));
    put("scheme.T_final", fmt(c.T_final));
    put("scheme.snapshot_stride", std::to_string(c.snapshot_stride));
    put("scheme.grad_tol", fmt(c.grad_tol));
    put("scheme.max_iters", std::to_string(c.max_iters));
    put("diagnostics.t0", fmt(c.t0));
    put("diagnostics.x0", fmt_list(c.x0));
    put("diagnostics.radii", fmt_list(c.radii));
    put("diagnostics.R", fmt(c.R));
    put("diagnostics.delta", fmt(c.delta));
    put("diagnostics.eps0_sq", fmt(c.eps0_sq));
    put("diagnostics.scan_t0", fmt_list(c.scan_t0));
    put("diagnostics.scan_stride", std::to_string(c.scan_stride));
    put("diagnostics.fracop_k", std::to_string(c.fracop_k));
    put("output.write_snapshots", c.write_snapshots ? "true" : "false");

    char head[64];
    std::snprintf(head, sizeof head, "# config_hash = %016llx\n",
                  static_cast<unsigned long long>(fnv1a64(b)));
    return head + b;
}

std::string config_hash(const RunConfig& cfg) {
    std::string text = resolved_config_text(cfg);
    return text.substr(16, 16);
}

void validate_diagnostics(const RunConfig& cfg) {
    if (!(cfg.t0 <= cfg.T_final))
        throw ConfigError("diagnostics.t0", "must lie in (0, scheme.T_final]");
    for (double t : cfg.scan_t0)
        if (!(t <= cfg.T_final))
            throw ConfigError("diagnostics.scan_t0", "entries must lie in (0, scheme.T_final]");
}

void validate_sweep(const RunConfig& cfg) {
    if (cfg.eps_list.size() < 2)
        throw ConfigError("penalty.eps_list", "sweep needs at least two epsilons");
    for (size_t i = 1; i < cfg.eps_list.size(); ++i)
        if (!(cfg.eps_list[i] < cfg.eps_list[i - 1]))
            throw ConfigError("penalty.eps_list", "must be strictly decreasing");
}

std::shared_ptr<const HalfSpaceGrid> make_grid(const RunConfig& cfg) {
    return std::make_shared<HalfSpaceGrid>(cfg.grid);
}

TargetManifold make_manifold(const RunConfig& cfg) {
    return TargetManifold::unit_sphere(cfg.target == "circle" ? 2 : 3);
}

Trace initial_trace(const RunConfig& cfg, std::shared_ptr<const HalfSpaceGrid> g) {
    const int ell = cfg.target == "circle" ? 2 : 3;
    Trace u = Trace::zeros(g, ell);
    const double pi = 3.14159265358979323846;
    for (int h = 0; h < g->hcount(); ++h) {
        double theta = cfg.phase;
        if (cfg.init == "sine") {
            double prod = 1.0;
            for (int d = 0; d < g->m(); ++d) prod *= std::sin(pi * g->x_of(h, d) / g->Lx());
            theta += cfg.amplitude * prod;
        } else if (cfg.init == "spike") {
            double r_sq = 0.0;
            for (int d = 0; d < g->m(); ++d) r_sq += g->x_of(h, d) * g->x_of(h, d);
            theta += cfg.amplitude * std::exp(-r_sq / (cfg.width * cfg.width));
        }
        u.at(h, 0) = std::cos(theta);
        u.at(h, 1) = std::sin(theta);
    }
    return u;
}

FlowOptions flow_options(const RunConfig& cfg, const HalfSpaceGrid& g) {
    FlowOptions o;
    o.scheme = cfg.scheme;
    o.dt = cfg.dt;
    o.T_final = cfg.T_final;
    o.snapshot_stride = cfg.snapshot_stride;
    o.mm.grad_tol = cfg.grad_tol;
    o.mm.max_iters = cfg.max_iters;
    if (cfg.scheme == Scheme::explicit_euler) {
        double limit = cfl_limit(g);
        if (cfg.dt_factor > 0.0) o.dt = cfg.dt_factor * limit;
        if (o.dt > limit * (1.0 + 1e-12)) {
            char msg[128];
            std::snprintf(msg, sizeof msg,
                          "explicit step %.3g exceeds the stability bound %.3g", o.dt, limit);
            throw ConfigError("scheme.dt", msg);
        }
    }
    return o;
}

}  // namespace hfl
