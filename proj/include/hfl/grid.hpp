/// @file grid.hpp
/// @brief Truncated upper half-space grid with the degenerate weight y^a, a = 1 - 2s.
#pragma once

#include <memory>
#include <span>
#include <vector>

#include "hfl/common.hpp"

namespace hfl {

struct GridConfig {
    int m = 1;          // horizontal dimension (1 or 2)
    int nx = 65;        // nodes per horizontal axis on [-Lx, Lx]
    int ny = 33;        // vertical nodes on [0, Ly], y_0 = 0
    double Lx = 4.0;
    double Ly = 4.0;
    double s = 0.5;     // order in (0,1); vertical weight y^{1-2s}
};

/// Tensor grid on [-Lx,Lx]^m x [0,Ly]. The vertical axis is uniform for
/// s = 1/2 and graded toward y = 0 as y_j = Ly (j/(ny-1))^gamma with
/// gamma = max(1, 2/(1+a)) otherwise. Node storage is row-major over
/// (x-axes..., y): the vertical index varies fastest.
class HalfSpaceGrid {
public:
    explicit HalfSpaceGrid(const GridConfig& cfg);

    /// Same geometry but with a caller-supplied strictly increasing vertical
    /// node set starting at 0 (used by coarsening cross-checks).
    HalfSpaceGrid(const GridConfig& cfg, std::vector<double> y_nodes);

    int m() const { return m_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double Lx() const { return Lx_; }
    double Ly() const { return Ly_; }
    double s() const { return s_; }
    double a() const { return a_; }
    double dx() const { return dx_; }

    const std::vector<double>& y_nodes() const { return y_nodes_; }
    double y(int j) const { return y_nodes_[j]; }
    double dy(int j) const { return y_nodes_[j + 1] - y_nodes_[j]; }  // spacing of cell j
    double min_dy() const { return min_dy_; }

    /// Horizontal node count nx^m; total node count nx^m * ny.
    int hcount() const { return hcount_; }
    int num_nodes() const { return hcount_ * ny_; }
    int node(int h, int j) const { return h * ny_ + j; }

    /// Horizontal coordinates of horizontal index h.
    double x_of(int h, int axis) const;
    /// Horizontal index decomposition; axis 0 is the slowest.
    int h_index(int i0, int i1 = 0) const { return m_ == 1 ? i0 : i0 * nx_ + i1; }

    /// Trapezoid weight along one horizontal axis.
    double x_axis_weight(int i) const { return (i == 0 || i == nx_ - 1) ? 0.5 * dx_ : dx_; }
    /// Product of per-axis trapezoid weights for horizontal index h.
    double x_weight(int h) const { return x_weight_[h]; }

    /// Node quadrature weight in y for the weighted integral: per cell the first
    /// two moments of y^a are exact against the linear interpolant.
    double quad_wy(int j) const { return quad_wy_[j]; }
    /// Finite-volume mass of the node cell, integral of y^a over
    /// [y_{j-1/2}, y_{j+1/2}] clipped to [0, Ly].
    double cell_mass(int j) const { return cell_mass_[j]; }
    /// Face transmissivity between nodes j and j+1: midpoint value of y^a.
    double face_coef(int j) const { return face_coef_[j]; }

    /// Quadrature of the weighted bulk integral of nodal samples (one value per
    /// node): approximates the integral of y^a f over the box.
    double integrate_bulk(std::span<const double> samples) const;

    /// Unweighted trapezoid integral over the y = 0 face (one value per
    /// horizontal node).
    double integrate_boundary(std::span<const double> samples) const;

    /// Closed-form integral of y^a over [alpha, beta] (0 <= alpha <= beta).
    static double weight_moment0(double alpha, double beta, double a);
    /// Closed-form integral of y^{a+1} over [alpha, beta].
    static double weight_moment1(double alpha, double beta, double a);

private:
    void init(const GridConfig& cfg);

    int m_, nx_, ny_;
    double Lx_, Ly_, s_, a_, dx_, min_dy_;
    int hcount_;
    std::vector<double> y_nodes_;
    std::vector<double> x_weight_;
    std::vector<double> quad_wy_;
    std::vector<double> cell_mass_;
    std::vector<double> face_coef_;
};

/// Validates the configuration and builds the grid.
std::shared_ptr<const HalfSpaceGrid> build_grid(const GridConfig& cfg);

}  // namespace hfl
