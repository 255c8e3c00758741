#include "hfl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "hfl/common.hpp"
#include "hfl/operators.hpp"

namespace hfl {

namespace {

constexpr double kTailCut = 1e-14;

double time_tol(const Trajectory& traj) {
    double span = traj.times.empty() ? 1.0 : traj.times.back() - traj.times.front();
    return 1e-9 * std::max(1.0, std::abs(span));
}

void check_center(const HalfSpaceGrid& g, const SpaceTimeCenter& Z0, const char* who) {
    if (static_cast<int>(Z0.x0.size()) != g.m())
        throw std::invalid_argument(std::string(who) + ": center dimension does not match the grid");
    if (!(Z0.t0 > 0.0)) throw std::invalid_argument(std::string(who) + ": t0 must be positive");
}

void check_window(const Trajectory& traj, double ta, double tb, const char* who) {
    double tol = time_tol(traj);
    if (traj.times.empty() || traj.times.front() > ta + tol || traj.times.back() < tb - tol)
        throw std::invalid_argument(std::string(who) + ": trajectory does not cover the time window");
}

double dist_sq(const HalfSpaceGrid& g, const std::vector<double>& x0, int h, double y) {
    double d2 = y * y;
    for (int axis = 0; axis < g.m(); ++axis) d2 += sqr(g.x_of(h, axis) - x0[axis]);
    return d2;
}

/// 1 / (Gamma(s) (4 pi)^{m/2} lag^{m/2 + 1 - s})
double gauss_prefactor(const HalfSpaceGrid& g, double lag) {
    double expo = 0.5 * g.m() + 1.0 - g.s();
    return 1.0 / (std::tgamma(g.s()) * std::pow(4.0 * std::numbers::pi, 0.5 * g.m()) *
                  std::pow(lag, expo));
}

/// Fills w with the backward Gaussian on the given squared distances, applies
/// the relative tail cut, and widens *trunc to the largest kept radius.
void gauss_weights(const HalfSpaceGrid& g, double lag, const std::vector<double>& d2,
                   std::vector<double>& w, double* trunc) {
    double pref = gauss_prefactor(g, lag);
    double mx = 0.0;
    w.resize(d2.size());
    for (std::size_t i = 0; i < d2.size(); ++i) {
        w[i] = pref * std::exp(-d2[i] / (4.0 * lag));
        mx = std::max(mx, w[i]);
    }
    double floor_w = kTailCut * mx;
    for (std::size_t i = 0; i < d2.size(); ++i) {
        if (w[i] < floor_w)
            w[i] = 0.0;
        else if (trunc)
            *trunc = std::max(*trunc, std::sqrt(d2[i]));
    }
}

/// Linear-in-time interpolation between stored bulk states (exact at hits,
/// clamped outside).
Field interp_state(const Trajectory& traj, double t) {
    const auto& st = traj.states;
    if (st.empty()) throw std::invalid_argument("trajectory stores no states");
    if (t <= st.front().t) return st.front().U;
    if (t >= st.back().t) return st.back().U;
    std::size_t hi = 1;
    while (st[hi].t < t) ++hi;
    const Field& A = st[hi - 1].U;
    const Field& B = st[hi].U;
    double th = (t - st[hi - 1].t) / (st[hi].t - st[hi - 1].t);
    Field out = A;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += th * (B.v[i] - A.v[i]);
    return out;
}

Trace interp_trace(const Trajectory& traj, double t) {
    const auto& ts = traj.times;
    if (ts.empty()) throw std::invalid_argument("trajectory stores no traces");
    if (t <= ts.front()) return traj.trace_at(0);
    if (t >= ts.back()) return traj.trace_at(static_cast<int>(ts.size()) - 1);
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    const std::vector<double>& A = traj.traces[hi - 1];
    const std::vector<double>& B = traj.traces[hi];
    double th = (t - ts[hi - 1]) / (ts[hi] - ts[hi - 1]);
    Trace out = traj.trace_at(static_cast<int>(hi) - 1);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = A[i] + th * (B[i] - A[i]);
    return out;
}

/// Centered difference of stored states, one-sided at the ends.
Field state_dt(const Trajectory& traj, std::size_t k) {
    const auto& st = traj.states;
    if (st.size() < 2) throw std::invalid_argument("time derivative needs at least two states");
    std::size_t lo = (k == 0) ? 0 : k - 1;
    std::size_t hi = (k + 1 == st.size()) ? k : k + 1;
    double dt = st[hi].t - st[lo].t;
    Field out = st[hi].U;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = (out.v[i] - st[lo].U.v[i]) / dt;
    return out;
}

/// (1/2) int_slice G y^a |grad U|^2 at time t with lag t0 - t.
double gauss_bulk_slice(const Trajectory& traj, const SpaceTimeCenter& Z0, double t,
                        double* trunc) {
    const HalfSpaceGrid& g = *traj.grid;
    Field U = interp_state(traj, t);
    std::vector<double> gsq = gradient_sq(U);
    std::vector<double> d2(static_cast<std::size_t>(g.num_nodes()));
    for (int h = 0; h < g.hcount(); ++h)
        for (int j = 0; j < g.ny(); ++j)
            d2[static_cast<std::size_t>(g.node(h, j))] = dist_sq(g, Z0.x0, h, g.y(j));
    std::vector<double> w;
    gauss_weights(g, Z0.t0 - t, d2, w, trunc);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= gsq[i];
    return 0.5 * g.integrate_bulk(w);
}

/// int_slice G (penalty density) over the y = 0 face at time t.
double gauss_boundary_slice(const Trajectory& traj, const TargetManifold& m,
                            const SpaceTimeCenter& Z0, double t, double* trunc) {
    const HalfSpaceGrid& g = *traj.grid;
    Trace u = interp_trace(traj, t);
    std::vector<double> d2(static_cast<std::size_t>(g.hcount()));
    for (int h = 0; h < g.hcount(); ++h) d2[static_cast<std::size_t>(h)] = dist_sq(g, Z0.x0, h, 0.0);
    std::vector<double> w;
    gauss_weights(g, Z0.t0 - t, d2, w, trunc);
    std::vector<double> uh(static_cast<std::size_t>(traj.ell));
    for (int h = 0; h < g.hcount(); ++h) {
        for (int c = 0; c < traj.ell; ++c) uh[static_cast<std::size_t>(c)] = u.at(h, c);
        w[static_cast<std::size_t>(h)] *= gl_potential_density(m, traj.params, uh);
    }
    return g.integrate_boundary(w);
}

/// Trapezoid of f over [ta, tb] on the sample times inside plus interpolated
/// endpoint values; sample_times must be increasing.
template <class F>
double slab_trapezoid(const std::vector<double>& sample_times, double ta, double tb, F&& f) {
    std::vector<double> ts;
    ts.push_back(ta);
    for (double t : sample_times)
        if (t > ta && t < tb) ts.push_back(t);
    ts.push_back(tb);
    std::vector<double> vals(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) vals[i] = f(ts[i]);
    KahanSum s;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i)
        s.add(0.5 * (vals[i] + vals[i + 1]) * (ts[i + 1] - ts[i]));
    return s.value();
}

std::vector<double> state_times(const Trajectory& traj) {
    std::vector<double> ts;
    ts.reserve(traj.states.size());
    for (const FlowState& st : traj.states) ts.push_back(st.t);
    return ts;
}

/// E(Z0, R): slab integral over (t0 - 4R^2, t0 - R^2) of the Gaussian-weighted
/// energy densities.
double e_value(const Trajectory& traj, const TargetManifold& m, const SpaceTimeCenter& Z0,
               double R, double* trunc) {
    double ta = Z0.t0 - 4.0 * R * R;
    double tb = Z0.t0 - R * R;
    double bulk = slab_trapezoid(state_times(traj), ta, tb,
                                 [&](double t) { return gauss_bulk_slice(traj, Z0, t, trunc); });
    double bnd = slab_trapezoid(traj.times, ta, tb, [&](double t) {
        return gauss_boundary_slice(traj, m, Z0, t, trunc);
    });
    return bulk + bnd;
}

double d_value(const Trajectory& traj, const TargetManifold& m, const SpaceTimeCenter& Z0,
               double R, double* trunc) {
    double t = Z0.t0 - R * R;
    return R * R *
           (gauss_bulk_slice(traj, Z0, t, trunc) + gauss_boundary_slice(traj, m, Z0, t, trunc));
}

void check_radius(const SpaceTimeCenter& Z0, double R, const char* who) {
    if (!(R > 0.0)) throw std::invalid_argument(std::string(who) + ": R must be positive");
    if (!(R < 0.5 * std::sqrt(Z0.t0)))
        throw std::invalid_argument(std::string(who) + ": R must stay below sqrt(t0)/2");
}

/// Piecewise-linear interpolation of scalar samples (ts increasing).
double interp_samples(const std::vector<double>& ts, const std::vector<double>& vs, double t) {
    if (t <= ts.front()) return vs.front();
    if (t >= ts.back()) return vs.back();
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    double th = (t - ts[hi - 1]) / (ts[hi] - ts[hi - 1]);
    return vs[hi - 1] + th * (vs[hi] - vs[hi - 1]);
}

/// Trapezoid of presampled values over [ta, tb] with interpolated endpoints.
double window_trapezoid(const std::vector<double>& ts, const std::vector<double>& vs, double ta,
                        double tb) {
    std::vector<double> xt;
    std::vector<double> xv;
    xt.push_back(ta);
    xv.push_back(interp_samples(ts, vs, ta));
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (ts[i] > ta && ts[i] < tb) {
            xt.push_back(ts[i]);
            xv.push_back(vs[i]);
        }
    xt.push_back(tb);
    xv.push_back(interp_samples(ts, vs, tb));
    KahanSum s;
    for (std::size_t i = 0; i + 1 < xt.size(); ++i)
        s.add(0.5 * (xv[i] + xv[i + 1]) * (xt[i + 1] - xt[i]));
    return s.value();
}

double node_norm_sq(const Field& U, int n) {
    double s2 = 0.0;
    for (int c = 0; c < U.ell; ++c) s2 += sqr(U.at(n, c));
    return s2;
}

}  // namespace

EnergyParts energy(const FlowState& st, const TargetManifold& m) {
    return gl_energy(st.U, m, st.params);
}

RenormEnergyCurve renormalized_energies(const Trajectory& traj, const TargetManifold& m,
                                        const SpaceTimeCenter& Z0,
                                        const std::vector<double>& R_values) {
    const char* who = "renormalized_energies";
    check_center(*traj.grid, Z0, who);
    if (R_values.empty()) throw std::invalid_argument(std::string(who) + ": empty radius list");
    for (std::size_t i = 0; i < R_values.size(); ++i) {
        check_radius(Z0, R_values[i], who);
        if (i > 0 && !(R_values[i] > R_values[i - 1]))
            throw std::invalid_argument(std::string(who) + ": radii must increase strictly");
    }
    double Rmax = R_values.back();
    check_window(traj, Z0.t0 - 4.0 * Rmax * Rmax, Z0.t0, who);

    RenormEnergyCurve curve;
    curve.center = Z0;
    curve.R_values = R_values;
    for (double R : R_values) {
        curve.D_values.push_back(d_value(traj, m, Z0, R, &curve.truncation_radius));
        curve.E_values.push_back(e_value(traj, m, Z0, R, &curve.truncation_radius));
    }
    return curve;
}

LocalEnergyReport local_energy_inequality_check(const Trajectory& traj, const TargetManifold& m,
                                                const SpaceTimeCenter& Z0, double R) {
    const char* who = "local_energy_inequality_check";
    const HalfSpaceGrid& g = *traj.grid;
    check_center(g, Z0, who);
    check_radius(Z0, R, who);
    check_window(traj, Z0.t0 - 4.0 * R * R, Z0.t0 + 4.0 * R * R, who);

    // squared distances once; masks differ only in radius
    std::vector<double> d2(static_cast<std::size_t>(g.num_nodes()));
    for (int h = 0; h < g.hcount(); ++h)
        for (int j = 0; j < g.ny(); ++j)
            d2[static_cast<std::size_t>(g.node(h, j))] = dist_sq(g, Z0.x0, h, g.y(j));

    std::vector<double> ts = state_times(traj);
    std::vector<double> lhs_s(ts.size()), grad_s(ts.size());
    std::vector<double> mask(static_cast<std::size_t>(g.num_nodes()));
    for (std::size_t k = 0; k < ts.size(); ++k) {
        Field dtU = state_dt(traj, k);
        for (int n = 0; n < g.num_nodes(); ++n)
            mask[static_cast<std::size_t>(n)] =
                (d2[static_cast<std::size_t>(n)] <= R * R) ? node_norm_sq(dtU, n) : 0.0;
        lhs_s[k] = g.integrate_bulk(mask);
        std::vector<double> gsq = gradient_sq(traj.states[k].U);
        for (int n = 0; n < g.num_nodes(); ++n)
            mask[static_cast<std::size_t>(n)] =
                (d2[static_cast<std::size_t>(n)] <= 4.0 * R * R) ? gsq[static_cast<std::size_t>(n)]
                                                                 : 0.0;
        grad_s[k] = g.integrate_bulk(mask);
    }

    std::vector<double> pot_s(traj.times.size());
    std::vector<double> uh(static_cast<std::size_t>(traj.ell));
    std::vector<double> bw(static_cast<std::size_t>(g.hcount()));
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const std::vector<double>& u = traj.traces[i];
        for (int h = 0; h < g.hcount(); ++h) {
            double dx2 = dist_sq(g, Z0.x0, h, 0.0);
            if (dx2 <= 4.0 * R * R) {
                for (int c = 0; c < traj.ell; ++c)
                    uh[static_cast<std::size_t>(c)] = u[static_cast<std::size_t>(h * traj.ell + c)];
                bw[static_cast<std::size_t>(h)] = gl_potential_density(m, traj.params, uh);
            } else {
                bw[static_cast<std::size_t>(h)] = 0.0;
            }
        }
        pot_s[i] = g.integrate_boundary(bw);
    }

    LocalEnergyReport rep;
    rep.lhs = window_trapezoid(ts, lhs_s, Z0.t0 - R * R, Z0.t0 + R * R);
    double grad_mass = window_trapezoid(ts, grad_s, Z0.t0 - 4.0 * R * R, Z0.t0 + 4.0 * R * R);
    double pot_mass =
        window_trapezoid(traj.times, pot_s, Z0.t0 - 4.0 * R * R, Z0.t0 + 4.0 * R * R);
    rep.rhs = (grad_mass + pot_mass) / (R * R);
    rep.constant = (rep.rhs > 0.0) ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

double max_principle_check(const Trajectory& traj) {
    double mx = 0.0;
    for (const FlowState& st : traj.states)
        for (int n = 0; n < st.U.g().num_nodes(); ++n) mx = std::max(mx, node_norm_sq(st.U, n));
    return std::sqrt(mx);
}

ClearingOutReport clearing_out_check(const Trajectory& traj, const TargetManifold& m,
                                     const SpaceTimeCenter& Z0, double R, double delta) {
    const char* who = "clearing_out_check";
    const HalfSpaceGrid& g = *traj.grid;
    check_center(g, Z0, who);
    check_radius(Z0, R, who);
    if (!(delta > 0.0)) throw std::invalid_argument(std::string(who) + ": delta must be positive");
    check_window(traj, Z0.t0 - 4.0 * R * R, Z0.t0, who);
    check_window(traj, Z0.t0 - delta * delta, Z0.t0 + delta * delta, who);

    ClearingOutReport rep;
    rep.R = R;
    rep.delta = delta;
    rep.measured_E = e_value(traj, m, Z0, R, nullptr);

    double ta = Z0.t0 - delta * delta;
    double tb = Z0.t0 + delta * delta;
    double tol = time_tol(traj);
    double mn = std::numeric_limits<double>::infinity();
    auto scan_field = [&](const Field& U) {
        for (int h = 0; h < g.hcount(); ++h)
            for (int j = 0; j < g.ny(); ++j)
                if (dist_sq(g, Z0.x0, h, g.y(j)) <= delta * delta)
                    mn = std::min(mn, node_norm_sq(U, g.node(h, j)));
    };
    for (const FlowState& st : traj.states)
        if (st.t >= ta - tol && st.t <= tb + tol) scan_field(st.U);
    scan_field(interp_state(traj, ta));
    scan_field(interp_state(traj, tb));
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        if (traj.times[i] >= ta - tol && traj.times[i] <= tb + tol) {
            const std::vector<double>& u = traj.traces[i];
            for (int h = 0; h < g.hcount(); ++h)
                if (dist_sq(g, Z0.x0, h, 0.0) <= delta * delta) {
                    double s2 = 0.0;
                    for (int c = 0; c < traj.ell; ++c)
                        s2 += sqr(u[static_cast<std::size_t>(h * traj.ell + c)]);
                    mn = std::min(mn, s2);
                }
        }
    rep.min_abs_U = std::isfinite(mn) ? std::sqrt(mn) : 0.0;
    rep.cleared = rep.min_abs_U >= 0.5;
    return rep;
}

GradientEstimateReport gradient_estimate_check(
    const Trajectory& traj, const TargetManifold& m, double T0,
    const std::vector<std::pair<SpaceTimeCenter, double>>& audit_points, double eps0_sq,
    double delta0) {
    const HalfSpaceGrid& g = *traj.grid;
    GradientEstimateReport rep;
    double tol = time_tol(traj);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        double t = traj.times[i];
        if (t < T0 - tol || t <= 0.0) continue;
        std::vector<double> tg = trace_gradient(traj.trace_at(static_cast<int>(i)));
        int stride = g.m() * traj.ell;
        double mx = 0.0;
        for (int h = 0; h < g.hcount(); ++h) {
            double s2 = 0.0;
            for (int q = 0; q < stride; ++q) s2 += sqr(tg[static_cast<std::size_t>(h * stride + q)]);
            mx = std::max(mx, s2);
        }
        rep.sup_sqrt_t_grad = std::max(rep.sup_sqrt_t_grad, std::sqrt(t) * std::sqrt(mx));
    }

    for (const auto& [Z0, R] : audit_points) {
        check_center(g, Z0, "gradient_estimate_check");
        check_radius(Z0, R, "gradient_estimate_check");
        check_window(traj, Z0.t0 - 4.0 * R * R, Z0.t0, "gradient_estimate_check");
        EpsRegularityAudit a;
        a.center = Z0;
        a.R = R;
        a.energy = e_value(traj, m, Z0, R, nullptr);
        a.audited = a.energy < eps0_sq;
        if (a.audited) {
            double r = delta0 * R;
            double ta = Z0.t0 - r * r;
            double tb = Z0.t0 + r * r;
            double sup_g = 0.0, sup_dt = 0.0;
            bool hit = false;
            auto scan = [&](std::size_t k) {
                std::vector<double> gsq = gradient_sq(traj.states[k].U);
                Field dtU = state_dt(traj, k);
                for (int h = 0; h < g.hcount(); ++h)
                    for (int j = 0; j < g.ny(); ++j)
                        if (dist_sq(g, Z0.x0, h, g.y(j)) <= r * r) {
                            int n = g.node(h, j);
                            sup_g = std::max(sup_g, gsq[static_cast<std::size_t>(n)]);
                            sup_dt = std::max(sup_dt, node_norm_sq(dtU, n));
                        }
            };
            std::size_t nearest = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < traj.states.size(); ++k) {
                double t = traj.states[k].t;
                if (t >= ta - tol && t <= tb + tol) {
                    scan(k);
                    hit = true;
                }
                if (std::abs(t - Z0.t0) < best) {
                    best = std::abs(t - Z0.t0);
                    nearest = k;
                }
            }
            if (!hit) scan(nearest);
            a.scaled_grad_sup = R * R * sup_g;
            a.scaled_dt_sup = R * R * R * R * sup_dt;
        }
        rep.audits.push_back(std::move(a));
    }
    return rep;
}

SingularSetReport singular_set_scan(const std::vector<const Trajectory*>& runs,
                                    const TargetManifold& m, const SingularScanOptions& opt) {
    const char* who = "singular_set_scan";
    if (runs.empty() || runs.front() == nullptr)
        throw std::invalid_argument(std::string(who) + ": no runs supplied");
    if (!(opt.R > 0.0)) throw std::invalid_argument(std::string(who) + ": scan radius required");
    if (opt.t0_values.empty())
        throw std::invalid_argument(std::string(who) + ": no sample times supplied");
    if (opt.x_stride < 1) throw std::invalid_argument(std::string(who) + ": x_stride must be >= 1");
    const HalfSpaceGrid& g = *runs.front()->grid;

    SingularSetReport rep;
    rep.R = opt.R;
    rep.threshold =
        opt.eps0_sq > 0.0 ? opt.eps0_sq : 0.05 * runs.front()->ledger.front().total;
    for (const Trajectory* run : runs) {
        if (run == nullptr) throw std::invalid_argument(std::string(who) + ": null run");
        rep.eps_values.push_back(run->params.epsilon);
    }

    for (double t0 : opt.t0_values) {
        SpaceTimeCenter Z0;
        Z0.t0 = t0;
        Z0.x0.assign(static_cast<std::size_t>(g.m()), 0.0);
        check_radius(Z0, opt.R, who);
        for (const Trajectory* run : runs)
            check_window(*run, t0 - 4.0 * opt.R * opt.R, t0, who);
        for (int h = 0; h < g.hcount(); h += opt.x_stride) {
            for (int axis = 0; axis < g.m(); ++axis)
                Z0.x0[static_cast<std::size_t>(axis)] = g.x_of(h, axis);
            SingularSample sample;
            sample.center = Z0;
            sample.energy = std::numeric_limits<double>::infinity();
            for (const Trajectory* run : runs)
                sample.energy = std::min(sample.energy, e_value(*run, m, Z0, opt.R, nullptr));
            sample.flagged = sample.energy >= rep.threshold;
            if (sample.flagged) rep.flagged_indices.push_back(rep.samples.size());
            rep.samples.push_back(std::move(sample));
        }
    }
    return rep;
}

PolarResiduals polar_residuals(const Trajectory& traj, int state_index) {
    const char* who = "polar_residuals";
    const HalfSpaceGrid& g = *traj.grid;
    if (state_index < 0 || state_index >= static_cast<int>(traj.states.size()))
        throw std::invalid_argument(std::string(who) + ": state index out of range");
    if (traj.states.size() < 2)
        throw std::invalid_argument(std::string(who) + ": need at least two states");

    std::size_t k = static_cast<std::size_t>(state_index);
    std::size_t lo = (k == 0) ? 0 : k - 1;
    std::size_t hi = (k + 1 == traj.states.size()) ? k : k + 1;

    auto polar_split = [&](const FlowState& st, Field& rho, Field& omega) {
        rho = Field::zeros(traj.grid, 1);
        omega = Field::zeros(traj.grid, traj.ell);
        for (int h = 0; h < g.hcount(); ++h)
            for (int j = 0; j < g.ny(); ++j) {
                int n = g.node(h, j);
                double r = std::sqrt(node_norm_sq(st.U, n));
                if (r < 0.5) {
                    char buf[128];
                    std::snprintf(buf, sizeof(buf),
                                  "polar_residuals: |U| < 1/2 at node (h=%d, j=%d, t=%.6g)", h, j,
                                  st.t);
                    throw std::domain_error(buf);
                }
                rho.at(n, 0) = r;
                for (int c = 0; c < traj.ell; ++c) omega.at(n, c) = st.U.at(n, c) / r;
            }
    };

    Field rho_lo, rho_k, rho_hi, om_lo, om_k, om_hi;
    polar_split(traj.states[lo], rho_lo, om_lo);
    polar_split(traj.states[k], rho_k, om_k);
    polar_split(traj.states[hi], rho_hi, om_hi);
    double dt = traj.states[hi].t - traj.states[lo].t;

    Field lap_rho = Field::zeros(traj.grid, 1);
    Field lap_om = Field::zeros(traj.grid, traj.ell);
    weighted_fv_laplacian(rho_k, lap_rho);
    weighted_fv_laplacian(om_k, lap_om);
    FieldGradient grho = gradient(rho_k);
    FieldGradient gom = gradient(om_k);
    std::vector<double> gsq_om = gradient_sq(om_k);

    KahanSum rho_acc, om_acc;
    double om_defect = 0.0;
    auto interior_h = [&](int h) {
        if (g.m() == 1) return h > 0 && h < g.nx() - 1;
        int i0 = h / g.nx(), i1 = h % g.nx();
        return i0 > 0 && i0 < g.nx() - 1 && i1 > 0 && i1 < g.nx() - 1;
    };
    for (int h = 0; h < g.hcount(); ++h)
        for (int j = 0; j < g.ny(); ++j) {
            int n = g.node(h, j);
            double s2 = node_norm_sq(om_k, n);
            om_defect = std::max(om_defect, std::abs(std::sqrt(s2) - 1.0));
            if (!interior_h(h) || j == 0 || j == g.ny() - 1) continue;
            double meas = node_measure(g, h, j);
            double dtr = (rho_hi.at(n, 0) - rho_lo.at(n, 0)) / dt;
            double res_r = dtr - lap_rho.at(n, 0) + gsq_om[static_cast<std::size_t>(n)] * rho_k.at(n, 0);
            rho_acc.add(meas * sqr(res_r));
            for (int c = 0; c < traj.ell; ++c) {
                double dtw = (om_hi.at(n, c) - om_lo.at(n, c)) / dt;
                double adv = 0.0;
                for (int axis = 0; axis <= g.m(); ++axis)
                    adv += grho.at(n, axis, 0) * gom.at(n, axis, c);
                double res_w = dtw - lap_om.at(n, c) - 2.0 * adv / rho_k.at(n, 0) -
                               gsq_om[static_cast<std::size_t>(n)] * om_k.at(n, c);
                om_acc.add(meas * sqr(res_w));
            }
        }

    PolarResiduals out;
    out.rho_residual = std::sqrt(rho_acc.value());
    out.omega_residual = std::sqrt(om_acc.value());
    out.max_omega_defect = om_defect;
    return out;
}

GaussianComparisonReport gaussian_comparison(const Trajectory& traj, const TargetManifold& m,
                                             const SpaceTimeCenter& Z0, const SpaceTimeCenter& Z1,
                                             double R, double eps1) {
    const char* who = "gaussian_comparison";
    check_center(*traj.grid, Z0, who);
    check_center(*traj.grid, Z1, who);
    check_radius(Z0, R, who);
    check_radius(Z1, 0.5 * R, who);
    if (!(eps1 > 0.0)) throw std::invalid_argument(std::string(who) + ": eps1 must be positive");
    check_window(traj, Z0.t0 - 4.0 * R * R, Z0.t0, who);
    check_window(traj, Z1.t0 - R * R, Z1.t0, who);

    GaussianComparisonReport rep;
    rep.lhs = e_value(traj, m, Z1, 0.5 * R, nullptr);
    rep.rhs_base = e_value(traj, m, Z0, R, nullptr);
    rep.E0 = traj.ledger.front().total;
    rep.constant = rep.lhs / (rep.rhs_base + eps1 * rep.E0);
    return rep;
}

namespace {

void append_g17(std::string& line, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
}

}  // namespace

void write_monotonicity_csv(const std::vector<RenormEnergyCurve>& curves, int m,
                            const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_monotonicity_csv: cannot open " + path);
    out << (m == 1 ? "t0,x0,R,D,E\n" : "t0,x0,x1,R,D,E\n");
    for (const RenormEnergyCurve& c : curves)
        for (std::size_t i = 0; i < c.R_values.size(); ++i) {
            std::string line;
            append_g17(line, c.center.t0);
            for (double x : c.center.x0) {
                line += ',';
                append_g17(line, x);
            }
            line += ',';
            append_g17(line, c.R_values[i]);
            line += ',';
            append_g17(line, c.D_values[i]);
            line += ',';
            append_g17(line, c.E_values[i]);
            out << line << '\n';
        }
}

void write_singular_scan_csv(const SingularSetReport& report, int m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_singular_scan_csv: cannot open " + path);
    out << (m == 1 ? "t0,x0,R,energy,flagged\n" : "t0,x0,x1,R,energy,flagged\n");
    for (const SingularSample& s : report.samples) {
        std::string line;
        append_g17(line, s.center.t0);
        for (double x : s.center.x0) {
            line += ',';
            append_g17(line, x);
        }
        line += ',';
        append_g17(line, report.R);
        line += ',';
        append_g17(line, s.energy);
        line += ',';
        line += s.flagged ? '1' : '0';
        out << line << '\n';
    }
}

}  // namespace hfl
