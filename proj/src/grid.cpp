#include "hfl/grid.hpp"

#include <algorithm>
#include <cmath>

namespace hfl {

double HalfSpaceGrid::weight_moment0(double alpha, double beta, double a) {
    // integral of y^a; 1 + a > 0 for s in (0,1)
    return (std::pow(beta, 1.0 + a) - std::pow(alpha, 1.0 + a)) / (1.0 + a);
}

double HalfSpaceGrid::weight_moment1(double alpha, double beta, double a) {
    return (std::pow(beta, 2.0 + a) - std::pow(alpha, 2.0 + a)) / (2.0 + a);
}

HalfSpaceGrid::HalfSpaceGrid(const GridConfig& cfg) {
    if (cfg.s == 0.5) {
        y_nodes_.resize(cfg.ny);
        for (int j = 0; j < cfg.ny; ++j) y_nodes_[j] = cfg.Ly * j / (cfg.ny - 1);
    } else {
        double a = 1.0 - 2.0 * cfg.s;
        double gamma = std::max(1.0, 2.0 / (1.0 + a));
        y_nodes_.resize(cfg.ny);
        for (int j = 0; j < cfg.ny; ++j)
            y_nodes_[j] = cfg.Ly * std::pow(static_cast<double>(j) / (cfg.ny - 1), gamma);
    }
    y_nodes_.front() = 0.0;
    y_nodes_.back() = cfg.Ly;
    init(cfg);
}

HalfSpaceGrid::HalfSpaceGrid(const GridConfig& cfg, std::vector<double> y_nodes)
    : y_nodes_(std::move(y_nodes)) {
    if (static_cast<int>(y_nodes_.size()) != cfg.ny)
        throw std::invalid_argument("HalfSpaceGrid: y_nodes size does not match ny");
    if (y_nodes_.front() != 0.0)
        throw std::invalid_argument("HalfSpaceGrid: y_nodes must start at 0");
    for (int j = 0; j + 1 < cfg.ny; ++j)
        if (!(y_nodes_[j] < y_nodes_[j + 1]))
            throw std::invalid_argument("HalfSpaceGrid: y_nodes must be strictly increasing");
    init(cfg);
}

void HalfSpaceGrid::init(const GridConfig& cfg) {
    m_ = cfg.m;
    nx_ = cfg.nx;
    ny_ = cfg.ny;
    Lx_ = cfg.Lx;
    Ly_ = y_nodes_.back();
    s_ = cfg.s;
    a_ = 1.0 - 2.0 * cfg.s;
    dx_ = 2.0 * Lx_ / (nx_ - 1);
    hcount_ = (m_ == 1) ? nx_ : nx_ * nx_;

    min_dy_ = Ly_;
    for (int j = 0; j + 1 < ny_; ++j) min_dy_ = std::min(min_dy_, dy(j));

    x_weight_.resize(hcount_);
    if (m_ == 1) {
        for (int i = 0; i < nx_; ++i) x_weight_[i] = x_axis_weight(i);
    } else {
        for (int i0 = 0; i0 < nx_; ++i0)
            for (int i1 = 0; i1 < nx_; ++i1)
                x_weight_[i0 * nx_ + i1] = x_axis_weight(i0) * x_axis_weight(i1);
    }

    // Weighted node quadrature: on each cell [y_j, y_{j+1}] integrate y^a times
    // the linear interpolant exactly; exact for integrands constant or linear
    // in y, and a finite-volume treatment of the degenerate weight at y = 0.
    quad_wy_.assign(ny_, 0.0);
    for (int j = 0; j + 1 < ny_; ++j) {
        double yl = y_nodes_[j], yr = y_nodes_[j + 1], h = yr - yl;
        double m0 = weight_moment0(yl, yr, a_);
        double m1 = weight_moment1(yl, yr, a_);
        quad_wy_[j] += (yr * m0 - m1) / h;
        quad_wy_[j + 1] += (m1 - yl * m0) / h;
    }

    cell_mass_.assign(ny_, 0.0);
    face_coef_.assign(ny_ - 1, 0.0);
    for (int j = 0; j < ny_; ++j) {
        double lo = (j == 0) ? 0.0 : 0.5 * (y_nodes_[j - 1] + y_nodes_[j]);
        double hi = (j == ny_ - 1) ? Ly_ : 0.5 * (y_nodes_[j] + y_nodes_[j + 1]);
        cell_mass_[j] = weight_moment0(lo, hi, a_);
    }
    for (int j = 0; j + 1 < ny_; ++j)
        face_coef_[j] = std::pow(0.5 * (y_nodes_[j] + y_nodes_[j + 1]), a_);
}

double HalfSpaceGrid::x_of(int h, int axis) const {
    int i = (m_ == 1) ? h : (axis == 0 ? h / nx_ : h % nx_);
    return -Lx_ + dx_ * i;
}

double HalfSpaceGrid::integrate_bulk(std::span<const double> samples) const {
    if (static_cast<int>(samples.size()) != num_nodes())
        throw std::invalid_argument("integrate_bulk: sample count does not match node count");
    KahanSum total;
    for (int h = 0; h < hcount_; ++h) {
        double col = 0.0;
        const double* p = samples.data() + static_cast<std::size_t>(h) * ny_;
        for (int j = 0; j < ny_; ++j) col += quad_wy_[j] * p[j];
        total.add(x_weight_[h] * col);
    }
    return total.value();
}

double HalfSpaceGrid::integrate_boundary(std::span<const double> samples) const {
    if (static_cast<int>(samples.size()) != hcount_)
        throw std::invalid_argument(
            "integrate_boundary: sample count does not match horizontal node count");
    KahanSum total;
    for (int h = 0; h < hcount_; ++h) total.add(x_weight_[h] * samples[h]);
    return total.value();
}

std::shared_ptr<const HalfSpaceGrid> build_grid(const GridConfig& cfg) {
    if (cfg.m != 1 && cfg.m != 2) throw ConfigError("grid.m", "must be 1 or 2");
    if (cfg.nx < 3) throw ConfigError("grid.nx", "must be >= 3");
    if (cfg.ny < 3) throw ConfigError("grid.ny", "must be >= 3");
    if (!(cfg.Lx > 0.0)) throw ConfigError("grid.Lx", "must be > 0");
    if (!(cfg.Ly > 0.0)) throw ConfigError("grid.Ly", "must be > 0");
    if (!(cfg.s > 0.0 && cfg.s < 1.0)) throw ConfigError("penalty.s", "must be in (0,1)");
    return std::make_shared<const HalfSpaceGrid>(cfg);
}

}  // namespace hfl
