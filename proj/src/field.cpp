#include "hfl/field.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace hfl {

Field Field::zeros(std::shared_ptr<const HalfSpaceGrid> g, int ell) {
    Field f;
    f.grid = std::move(g);
    f.ell = ell;
    f.v.assign(static_cast<std::size_t>(f.grid->num_nodes()) * ell, 0.0);
    return f;
}

Trace Trace::zeros(std::shared_ptr<const HalfSpaceGrid> g, int ell) {
    Trace t;
    t.grid = std::move(g);
    t.ell = ell;
    t.v.assign(static_cast<std::size_t>(t.grid->hcount()) * ell, 0.0);
    return t;
}

Trace restrict_to_boundary(const Field& U) {
    Trace t = Trace::zeros(U.grid, U.ell);
    const HalfSpaceGrid& g = U.g();
    for (int h = 0; h < g.hcount(); ++h)
        for (int c = 0; c < U.ell; ++c) t.at(h, c) = U.at(g.node(h, 0), c);
    return t;
}

namespace {

// Three-point first-derivative stencil on possibly non-uniform nodes,
// exact on quadratics.
struct Stencil3 {
    int idx[3];
    double w[3];
};

Stencil3 d1_stencil(const std::vector<double>& t, int i) {
    const int n = static_cast<int>(t.size());
    Stencil3 s;
    if (i > 0 && i < n - 1) {
        double hm = t[i] - t[i - 1], hp = t[i + 1] - t[i];
        s.idx[0] = i - 1;
        s.idx[1] = i;
        s.idx[2] = i + 1;
        s.w[0] = -hp / (hm * (hm + hp));
        s.w[1] = (hp - hm) / (hm * hp);
        s.w[2] = hm / (hp * (hm + hp));
    } else if (i == 0) {
        double h1 = t[1] - t[0], h2 = t[2] - t[1];
        s.idx[0] = 0;
        s.idx[1] = 1;
        s.idx[2] = 2;
        s.w[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2));
        s.w[1] = (h1 + h2) / (h1 * h2);
        s.w[2] = -h1 / (h2 * (h1 + h2));
    } else {
        double h1 = t[n - 1] - t[n - 2], h2 = t[n - 2] - t[n - 3];
        s.idx[0] = n - 1;
        s.idx[1] = n - 2;
        s.idx[2] = n - 3;
        s.w[0] = (2.0 * h1 + h2) / (h1 * (h1 + h2));
        s.w[1] = -(h1 + h2) / (h1 * h2);
        s.w[2] = h1 / (h2 * (h1 + h2));
    }
    return s;
}

std::vector<double> uniform_axis(int n, double lo, double step) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = lo + step * i;
    return t;
}

}  // namespace

FieldGradient gradient(const Field& U) {
    const HalfSpaceGrid& g = U.g();
    const int m = g.m(), nx = g.nx(), ny = g.ny(), ell = U.ell;
    const int m1 = m + 1;
    FieldGradient out;
    out.grid = U.grid;
    out.ell = ell;
    out.v.assign(static_cast<std::size_t>(g.num_nodes()) * m1 * ell, 0.0);

    std::vector<double> xa = uniform_axis(nx, -g.Lx(), g.dx());
    std::vector<Stencil3> sx(nx), sy(ny);
    for (int i = 0; i < nx; ++i) sx[i] = d1_stencil(xa, i);
    for (int j = 0; j < ny; ++j) sy[j] = d1_stencil(g.y_nodes(), j);

    auto val = [&](int node, int c) { return U.at(node, c); };
    auto slot = [&](int node, int axis, int c) -> double& {
        return out.v[(static_cast<std::size_t>(node) * m1 + axis) * ell + c];
    };

    for (int h = 0; h < g.hcount(); ++h) {
        int i0 = (m == 1) ? h : h / nx;
        int i1 = (m == 1) ? 0 : h % nx;
        for (int j = 0; j < ny; ++j) {
            int node = g.node(h, j);
            for (int c = 0; c < ell; ++c) {
                // horizontal axes
                {
                    const Stencil3& s = sx[i0];
                    double d = 0.0;
                    for (int k = 0; k < 3; ++k) {
                        int hh = (m == 1) ? s.idx[k] : s.idx[k] * nx + i1;
                        d += s.w[k] * val(g.node(hh, j), c);
                    }
                    slot(node, 0, c) = d;
                }
                if (m == 2) {
                    const Stencil3& s = sx[i1];
                    double d = 0.0;
                    for (int k = 0; k < 3; ++k)
                        d += s.w[k] * val(g.node(i0 * nx + s.idx[k], j), c);
                    slot(node, 1, c) = d;
                }
                // vertical axis
                {
                    const Stencil3& s = sy[j];
                    double d = 0.0;
                    for (int k = 0; k < 3; ++k) d += s.w[k] * val(g.node(h, s.idx[k]), c);
                    slot(node, m, c) = d;
                }
            }
        }
    }
    return out;
}

std::vector<double> gradient_sq(const Field& U) {
    FieldGradient gr = gradient(U);
    const HalfSpaceGrid& g = U.g();
    const int m1 = g.m() + 1, ell = U.ell;
    std::vector<double> out(g.num_nodes(), 0.0);
    for (int n = 0; n < g.num_nodes(); ++n) {
        double s = 0.0;
        for (int axis = 0; axis < m1; ++axis)
            for (int c = 0; c < ell; ++c) s += sqr(gr.at(n, axis, c));
        out[n] = s;
    }
    return out;
}

std::vector<double> trace_gradient(const Trace& u) {
    const HalfSpaceGrid& g = u.g();
    const int m = g.m(), nx = g.nx(), ell = u.ell;
    std::vector<double> out(static_cast<std::size_t>(g.hcount()) * m * ell, 0.0);
    std::vector<double> xa = uniform_axis(nx, -g.Lx(), g.dx());
    std::vector<Stencil3> sx(nx);
    for (int i = 0; i < nx; ++i) sx[i] = d1_stencil(xa, i);

    for (int h = 0; h < g.hcount(); ++h) {
        int i0 = (m == 1) ? h : h / nx;
        int i1 = (m == 1) ? 0 : h % nx;
        for (int c = 0; c < ell; ++c) {
            {
                const Stencil3& s = sx[i0];
                double d = 0.0;
                for (int k = 0; k < 3; ++k) {
                    int hh = (m == 1) ? s.idx[k] : s.idx[k] * nx + i1;
                    d += s.w[k] * u.at(hh, c);
                }
                out[(static_cast<std::size_t>(h) * m + 0) * ell + c] = d;
            }
            if (m == 2) {
                const Stencil3& s = sx[i1];
                double d = 0.0;
                for (int k = 0; k < 3; ++k) d += s.w[k] * u.at(i0 * nx + s.idx[k], c);
                out[(static_cast<std::size_t>(h) * m + 1) * ell + c] = d;
            }
        }
    }
    return out;
}

namespace {

constexpr std::uint32_t kSnapshotVersion = 1;

void put_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ofstream& f, double v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t get_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
double get_f64(std::ifstream& f) {
    double v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

}  // namespace

void write_snapshot(const Field& U, double t, double epsilon, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_snapshot: cannot open " + path);
    f.write("HFLW", 4);
    put_u32(f, kSnapshotVersion);
    put_u32(f, static_cast<std::uint32_t>(U.g().m()));
    put_u32(f, static_cast<std::uint32_t>(U.ell));
    put_u32(f, static_cast<std::uint32_t>(U.g().nx()));
    put_u32(f, static_cast<std::uint32_t>(U.g().ny()));
    put_f64(f, U.g().s());
    put_f64(f, t);
    put_f64(f, epsilon);
    f.write(reinterpret_cast<const char*>(U.v.data()),
            static_cast<std::streamsize>(U.v.size() * sizeof(double)));
    if (!f) throw std::runtime_error("write_snapshot: write failed for " + path);
}

Snapshot read_snapshot(const std::string& path, std::shared_ptr<const HalfSpaceGrid> grid) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_snapshot: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "HFLW", 4) != 0)
        throw std::runtime_error("read_snapshot: bad magic in " + path);
    std::uint32_t version = get_u32(f);
    if (version != kSnapshotVersion)
        throw std::runtime_error("read_snapshot: unsupported version in " + path);
    std::uint32_t m = get_u32(f), ell = get_u32(f), nx = get_u32(f), ny = get_u32(f);
    double s = get_f64(f);
    Snapshot snap;
    snap.t = get_f64(f);
    snap.epsilon = get_f64(f);
    if (static_cast<int>(m) != grid->m() || static_cast<int>(nx) != grid->nx() ||
        static_cast<int>(ny) != grid->ny() || s != grid->s())
        throw std::runtime_error("read_snapshot: header does not match grid in " + path);
    snap.field.grid = std::move(grid);
    snap.field.ell = static_cast<int>(ell);
    snap.field.v.resize(static_cast<std::size_t>(snap.field.grid->num_nodes()) * ell);
    f.read(reinterpret_cast<char*>(snap.field.v.data()),
           static_cast<std::streamsize>(snap.field.v.size() * sizeof(double)));
    if (!f) throw std::runtime_error("read_snapshot: truncated data in " + path);
    return snap;
}

}  // namespace hfl
