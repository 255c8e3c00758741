#include "hfl/extension.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hfl/common.hpp"
#include "hfl/manifold.hpp"
#include "hfl/operators.hpp"
#include "hfl/special.hpp"

namespace hfl {

namespace {

// Even reflection of a horizontal index across both box faces (period
// 2(nx-1)); matches the homogeneous Neumann closure of the stencils.
int reflect_index(int i, int nx) {
    const int p = 2 * (nx - 1);
    int r = i % p;
    if (r < 0) r += p;
    return (r <= nx - 1) ? r : p - r;
}

// Value of the evenly reflected, periodized trace at an arbitrary abscissa,
// by linear interpolation on the boundary lattice.
double reflect_interp(const HalfSpaceGrid& g, const double* u, int ell, int c, double xi) {
    const double period = 4.0 * g.Lx();
    double r = std::fmod(xi + g.Lx(), period);
    if (r < 0.0) r += period;
    if (r > 2.0 * g.Lx()) r = period - r;  // fold onto [0, 2 Lx]
    double pos = r / g.dx();
    int i = std::min(static_cast<int>(pos), g.nx() - 2);
    double w = pos - i;
    return (1.0 - w) * u[static_cast<std::size_t>(i) * ell + c] +
           w * u[static_cast<std::size_t>(i + 1) * ell + c];
}

Field extend_fd(const Trace& u0) {
    auto g = u0.grid;
    const int ell = u0.ell, ny = g->ny(), hc = g->hcount();

    // x holds the full field with the boundary row pinned to u0; CG runs on
    // the rows j >= 1 of the edge form.
    Field x = Field::zeros(g, ell);
    for (int h = 0; h < hc; ++h)
        for (int j = 0; j < ny; ++j)
            for (int c = 0; c < ell; ++c) x.at(g->node(h, j), c) = u0.at(h, c);

    std::vector<double> diag;
    edge_form_diagonal(*g, diag);

    Field grad = Field::zeros(g, ell);
    Field p = Field::zeros(g, ell);
    Field q = Field::zeros(g, ell);
    Field z = Field::zeros(g, ell);

    auto free_dot = [&](const Field& A, const Field& B) {
        KahanSum s;
        for (int h = 0; h < hc; ++h)
            for (int j = 1; j < ny; ++j) {
                int n = g->node(h, j);
                for (int c = 0; c < ell; ++c) s.add(A.at(n, c) * B.at(n, c));
            }
        return s.value();
    };

    // reference scale: gradient with the free rows zeroed (pure data term)
    Field lift = Field::zeros(g, ell);
    for (int h = 0; h < hc; ++h)
        for (int c = 0; c < ell; ++c) lift.at(g->node(h, 0), c) = u0.at(h, c);
    dirichlet_edge_gradient(lift, grad);
    double bnorm = std::sqrt(free_dot(grad, grad));
    if (bnorm == 0.0) return x;

    const double tol = 1e-10 * bnorm;

    // r = -grad E(x) on free rows
    Field r = Field::zeros(g, ell);
    dirichlet_edge_gradient(x, grad);
    for (int h = 0; h < hc; ++h)
        for (int j = 1; j < ny; ++j) {
            int n = g->node(h, j);
            for (int c = 0; c < ell; ++c) r.at(n, c) = -grad.at(n, c);
        }

    auto precondition = [&](const Field& rr, Field& zz) {
        for (int h = 0; h < hc; ++h)
            for (int j = 1; j < ny; ++j) {
                int n = g->node(h, j);
                for (int c = 0; c < ell; ++c) zz.at(n, c) = rr.at(n, c) / diag[n];
            }
    };

    double rnorm = std::sqrt(free_dot(r, r));
    if (rnorm <= tol) return x;

    precondition(r, z);
    p.v = z.v;
    double rz = free_dot(r, z);

    const int max_iters = 40000;
    for (int it = 0; it < max_iters; ++it) {
        dirichlet_edge_gradient(p, q);  // p has zero boundary row, so A p = grad at p
        double pq = free_dot(p, q);
        if (!(pq > 0.0)) throw SolverError("harmonic_extend: edge form lost definiteness", rnorm);
        double alpha = rz / pq;
        for (int h = 0; h < hc; ++h)
            for (int j = 1; j < ny; ++j) {
                int n = g->node(h, j);
                for (int c = 0; c < ell; ++c) {
                    x.at(n, c) += alpha * p.at(n, c);
                    r.at(n, c) -= alpha * q.at(n, c);
                }
            }
        rnorm = std::sqrt(free_dot(r, r));
        if (rnorm <= tol) return x;
        precondition(r, z);
        double rz_new = free_dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (int h = 0; h < hc; ++h)
            for (int j = 1; j < ny; ++j) {
                int n = g->node(h, j);
                for (int c = 0; c < ell; ++c) p.at(n, c) = z.at(n, c) + beta * p.at(n, c);
            }
    }
    throw SolverError("harmonic_extend: fd solver did not reach tolerance", rnorm / bnorm);
}

Field extend_kernel(const Trace& u0) {
    auto g = u0.grid;
    if (g->m() != 1)
        throw std::invalid_argument("harmonic_extend: kernel method supports m = 1 only");
    const int ell = u0.ell, ny = g->ny(), nx = g->nx();
    const double s = g->s();

    // z = y sinh(v) turns the kernel row integral into a cosh power with
    // exponential decay; discrete weights are renormalized to unit mass so
    // constants extend exactly.
    const double hv = 1.0 / 128.0;
    const double vmax = std::max(25.0, 28.0 / (2.0 * s));
    const int nv = static_cast<int>(vmax / hv);
    std::vector<double> wv(2 * nv + 1), sh(2 * nv + 1);
    double wsum = 0.0;
    for (int l = -nv; l <= nv; ++l) {
        double v = l * hv;
        double w = std::pow(std::cosh(v), -2.0 * s);
        wv[l + nv] = w;
        sh[l + nv] = std::sinh(v);
        wsum += w;
    }
    for (double& w : wv) w /= wsum;

    Field U = Field::zeros(g, ell);
    for (int i = 0; i < nx; ++i)
        for (int c = 0; c < ell; ++c) U.at(g->node(i, 0), c) = u0.at(i, c);
    for (int j = 1; j < ny; ++j) {
        const double y = g->y(j);
        for (int i = 0; i < nx; ++i) {
            const double x = g->x_of(i, 0);
            for (int c = 0; c < ell; ++c) {
                KahanSum acc;
                for (int l = 0; l < 2 * nv + 1; ++l)
                    acc.add(wv[l] * reflect_interp(*g, u0.v.data(), ell, c, x - y * sh[l]));
                U.at(g->node(i, j), c) = acc.value();
            }
        }
    }
    return U;
}

}  // namespace

Field harmonic_extend(const Trace& u0, ExtendMethod method) {
    if (!u0.grid) throw std::invalid_argument("harmonic_extend: trace has no grid");
    if (static_cast<int>(u0.v.size()) != u0.grid->hcount() * u0.ell)
        throw std::invalid_argument("harmonic_extend: trace size mismatch");
    return method == ExtendMethod::fd ? extend_fd(u0) : extend_kernel(u0);
}

double dirichlet_energy(const Field& U) { return U.g().integrate_bulk(gradient_sq(U)); }

Trace frac_op_via_extension(const Field& U) {
    const HalfSpaceGrid& g = U.g();
    if (g.ny() < 8)
        throw std::invalid_argument("frac_op_via_extension: needs ny >= 8 for the flux stencil");
    const double a = g.a();
    const double cs = penalty_constant(g.s());
    const double eta0 = std::pow(0.5 * (g.y(0) + g.y(1)), 1.0 + a);
    const double eta1 = std::pow(0.5 * (g.y(1) + g.y(2)), 1.0 + a);

    Trace out = Trace::zeros(U.grid, U.ell);
    for (int h = 0; h < g.hcount(); ++h) {
        for (int c = 0; c < U.ell; ++c) {
            double f0 = g.face_coef(0) * (U.at(g.node(h, 1), c) - U.at(g.node(h, 0), c)) / g.dy(0);
            double f1 = g.face_coef(1) * (U.at(g.node(h, 2), c) - U.at(g.node(h, 1), c)) / g.dy(1);
            double flux0 = f0 - eta0 * (f1 - f0) / (eta1 - eta0);
            out.at(h, c) = -flux0 / cs;
        }
    }
    return out;
}

TraceHistory TraceHistory::single(const Trace& u0, double t) {
    TraceHistory h;
    h.grid = u0.grid;
    h.ell = u0.ell;
    h.times.push_back(t);
    h.samples.push_back(u0.v);
    return h;
}

void TraceHistory::push(double t, const Trace& u) {
    if (!grid) {
        grid = u.grid;
        ell = u.ell;
    }
    if (u.grid.get() != grid.get() || u.ell != ell)
        throw std::invalid_argument("TraceHistory::push: trace does not match history layout");
    if (!times.empty() && !(t > times.back()))
        throw std::invalid_argument("TraceHistory::push: times must increase strictly");
    times.push_back(t);
    samples.push_back(u.v);
}

namespace {

// Linear interpolation of the stored history at time tq (clamped to the
// constant initial datum before times.front()).
std::vector<double> interp_history(const TraceHistory& hist, double tq) {
    if (tq <= hist.times.front()) return hist.samples.front();
    if (tq >= hist.times.back()) return hist.samples.back();
    auto it = std::upper_bound(hist.times.begin(), hist.times.end(), tq);
    std::size_t k = static_cast<std::size_t>(it - hist.times.begin());
    double t0 = hist.times[k - 1], t1 = hist.times[k];
    double w = (tq - t0) / (t1 - t0);
    std::vector<double> out(hist.samples[k - 1].size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - w) * hist.samples[k - 1][i] + w * hist.samples[k][i];
    return out;
}

}  // namespace

Trace frac_op_via_kernel(const TraceHistory& hist, double t) {
    if (!hist.grid || hist.samples.empty())
        throw std::invalid_argument("frac_op_via_kernel: empty history");
    const HalfSpaceGrid& g = *hist.grid;
    if (g.m() != 1) throw std::invalid_argument("frac_op_via_kernel: supports m = 1 only");
    const int nx = g.nx(), ell = hist.ell;
    const double dx = g.dx(), s = g.s();
    const double span = hist.times.back() - hist.times.front();
    if (t < hist.times.front() - 1e-12 || t > hist.times.back() + 1e-9 * std::max(1.0, span))
        throw std::invalid_argument("frac_op_via_kernel: time outside history coverage");

    const double ags = abs_gamma_minus(s);
    double dt_sample = dx;
    if (hist.times.size() > 1) {
        dt_sample = 0.0;
        for (std::size_t k = 1; k < hist.times.size(); ++k)
            dt_sample = std::max(dt_sample, hist.times[k] - hist.times[k - 1]);
    }
    const double tau_min = dt_sample * dt_sample;
    const double tau_tail = std::max(tau_min, t - hist.times.front());

    const std::vector<double> u_now = interp_history(hist, t);
    const std::vector<double>& u_init = hist.samples.front();

    Trace out = Trace::zeros(hist.grid, ell);

    // Taylor-corrected singular range [0, tau_min]: the inner integral equals
    // tau (d/dt - Lap) u + O(tau^2), integrated exactly against the tau mass.
    {
        const double coeff = std::pow(tau_min, 1.0 - s) / ((1.0 - s) * ags);
        const double hback = std::min(dt_sample, t - hist.times.front());
        std::vector<double> u_prev;
        if (hback > 0.0) u_prev = interp_history(hist, t - hback);
        for (int i = 0; i < nx; ++i) {
            int il = reflect_index(i - 1, nx), ir = reflect_index(i + 1, nx);
            for (int c = 0; c < ell; ++c) {
                double lap = (u_now[static_cast<std::size_t>(ir) * ell + c] -
                              2.0 * u_now[static_cast<std::size_t>(i) * ell + c] +
                              u_now[static_cast<std::size_t>(il) * ell + c]) /
                             (dx * dx);
                double dtu = 0.0;
                if (hback > 0.0)
                    dtu = (u_now[static_cast<std::size_t>(i) * ell + c] -
                           u_prev[static_cast<std::size_t>(i) * ell + c]) /
                          hback;
                out.at(i, c) += coeff * (dtu - lap);
            }
        }
    }

    // numeric range [tau_min, tau_tail] against interpolated history, with a
    // mass-renormalized Gaussian on the boundary lattice
    if (tau_tail > tau_min * (1.0 + 1e-9)) {
        std::vector<double> taus{tau_min};
        while (taus.back() < tau_tail) taus.push_back(std::min(taus.back() * 1.1, tau_tail));
        std::vector<double> gk_prev(static_cast<std::size_t>(nx) * ell),
            gk(static_cast<std::size_t>(nx) * ell);
        for (std::size_t k = 0; k < taus.size(); ++k) {
            const double tau = taus[k];
            const double mass = std::pow(tau, -1.0 - s) / ags;
            const int J = static_cast<int>(11.4 * std::sqrt(tau) / dx) + 1;
            std::vector<double> w(static_cast<std::size_t>(2 * J + 1));
            double wsum = 0.0;
            for (int l = -J; l <= J; ++l) {
                w[static_cast<std::size_t>(l + J)] = std::exp(-sqr(l * dx) / (4.0 * tau));
                wsum += w[static_cast<std::size_t>(l + J)];
            }
            for (double& ww : w) ww /= wsum;
            std::vector<double> u_then = interp_history(hist, t - tau);
            for (int i = 0; i < nx; ++i)
                for (int c = 0; c < ell; ++c) {
                    KahanSum conv;
                    for (int l = -J; l <= J; ++l)
                        conv.add(w[static_cast<std::size_t>(l + J)] *
                                 u_then[static_cast<std::size_t>(reflect_index(i - l, nx)) * ell +
                                        c]);
                    gk[static_cast<std::size_t>(i) * ell + c] =
                        mass * (u_now[static_cast<std::size_t>(i) * ell + c] - conv.value());
                }
            if (k > 0) {
                const double half = 0.5 * (taus[k] - taus[k - 1]);
                for (int i = 0; i < nx; ++i)
                    for (int c = 0; c < ell; ++c)
                        out.at(i, c) += half * (gk_prev[static_cast<std::size_t>(i) * ell + c] +
                                                gk[static_cast<std::size_t>(i) * ell + c]);
            }
            std::swap(gk_prev, gk);
        }
    }

    // analytic tail tau > tau_tail against the constant initial datum:
    // W(z) = int_tau_tail^inf K_s dz-kernel has an incomplete-gamma closed form
    {
        const double alpha = 0.5 + s;  // m/2 + s at m = 1
        const double pref = 1.0 / (ags * std::sqrt(4.0 * std::numbers::pi));
        const double m_tail = std::pow(tau_tail, -s) / (s * ags);
        auto wz = [&](double z) {
            if (z == 0.0) return pref * std::pow(tau_tail, -alpha) / alpha;
            double A = 0.25 * z * z;
            return pref * std::tgamma(alpha) * std::pow(A, -alpha) * gamma_p(alpha, A / tau_tail);
        };
        std::vector<double> wlat{wz(0.0)};
        const long l_cap = std::max(1000L, 10000000L / nx);
        for (long l = 1; l <= l_cap; ++l) {
            double z = l * dx;
            double w = wz(z);
            wlat.push_back(w);
            if (z >= 10.0 * std::sqrt(tau_tail) && w * z / s <= 1e-5 * m_tail) break;
        }
        const int J = static_cast<int>(wlat.size()) - 1;
        double s_in = dx * wlat[0];
        for (int l = 1; l <= J; ++l) s_in += 2.0 * dx * wlat[static_cast<std::size_t>(l)];

        std::vector<double> mean(ell, 0.0);
        for (int c = 0; c < ell; ++c) {
            std::vector<double> comp(nx);
            for (int i = 0; i < nx; ++i) comp[i] = u_init[static_cast<std::size_t>(i) * ell + c];
            mean[c] = g.integrate_boundary(comp) / (2.0 * g.Lx());
        }

        for (int i = 0; i < nx; ++i)
            for (int c = 0; c < ell; ++c) {
                KahanSum conv;
                conv.add(dx * wlat[0] * u_init[static_cast<std::size_t>(i) * ell + c]);
                for (int l = 1; l <= J; ++l) {
                    double w = dx * wlat[static_cast<std::size_t>(l)];
                    conv.add(w * u_init[static_cast<std::size_t>(reflect_index(i - l, nx)) * ell +
                                        c]);
                    conv.add(w * u_init[static_cast<std::size_t>(reflect_index(i + l, nx)) * ell +
                                        c]);
                }
                conv.add((m_tail - s_in) * mean[c]);
                out.at(i, c) +=
                    m_tail * u_now[static_cast<std::size_t>(i) * ell + c] - conv.value();
            }
    }

    return out;
}

double orthogonality_residual(const Trace& u, const Trace& w) {
    const HalfSpaceGrid& g = u.g();
    if (w.ell != u.ell || w.grid.get() != u.grid.get())
        throw std::invalid_argument("orthogonality_residual: trace layout mismatch");
    const int ell = u.ell;
    std::vector<double> tp_sq(g.hcount());
    std::vector<double> base(ell), vec(ell), tp(ell);
    for (int h = 0; h < g.hcount(); ++h) {
        double nrm = 0.0;
        for (int c = 0; c < ell; ++c) {
            base[c] = u.at(h, c);
            vec[c] = w.at(h, c);
            nrm += sqr(base[c]);
        }
        nrm = std::sqrt(nrm);
        if (nrm < 1e-14)
            throw std::domain_error("orthogonality_residual: |u| vanishes at a boundary node");
        for (int c = 0; c < ell; ++c) base[c] /= nrm;
        tangent_project(base, vec, tp);
        double s2 = 0.0;
        for (int c = 0; c < ell; ++c) s2 += sqr(tp[c]);
        tp_sq[h] = s2;
    }
    return std::sqrt(g.integrate_boundary(tp_sq));
}

}  // namespace hfl
