#pragma once

#include "alef/background.hpp"
#include "alef/field.hpp"
#include "alef/grid.hpp"

namespace alef {

/// Precomputed per-node frame data for a (background, grid) pair: analytic
/// frame coefficients and their derivatives in the chart coordinate, the
/// orthonormal-frame connection of g0, the analytic background curvature,
/// quadrature weights and the distance/weight functions. All operators and
/// norms read from this cache; it is immutable after construction.
class GeometryCache {
public:
    GeometryCache(const BackgroundMetric& bg, const RadialGrid& grid);

    const BackgroundMetric& bg() const { return *bg_; }
    const RadialGrid& grid() const { return *grid_; }
    int dim() const { return n_; }
    size_t nnodes() const { return N_; }
    InnerBoundary inner() const { return inner_; }

    double x(size_t i) const { return x_[i]; }
    double radius(size_t i) const { return r_[i]; }
    double f0(size_t i) const { return f0_[i]; }
    double df0(size_t i) const { return df0_[i]; }
    double w(size_t i, int k) const { return w_[i * (n_ - 1) + (k - 1)]; }
    double s_dist(size_t i) const { return s_[i]; }
    double rho(size_t i) const { return rho_[i]; }

    /// volume density J = F0 * prod W_k at a node (without link measure)
    double jdens(size_t i) const { return j_[i]; }
    /// cell quadrature weight, including the link measure: integrals are
    /// sum_i weight(i) * f(x_i)
    double weight(size_t i) const { return wq_[i]; }
    /// volume of the excluded inner region [0, r_min] (cones/annuli); zero
    /// for grids that start at a smooth center or bolt
    double inner_volume() const { return inner_vol_; }

    /// g0 connection in the orthonormal frame: Gamma^c_{ab}
    double gamma0(size_t i, int a, int b, int c) const {
        return th_[((i * n_ + a) * n_ + b) * n_ + c];
    }
    /// d/dx of Gamma^c_{ab}
    double dgamma0(size_t i, int a, int b, int c) const {
        return dth_[((i * n_ + a) * n_ + b) * n_ + c];
    }
    /// frame commutator coefficients gamma^c_{ab} of [e_a, e_b]
    double comm(size_t i, int a, int b, int c) const {
        return cm_[((i * n_ + a) * n_ + b) * n_ + c];
    }
    /// d/dx of the commutator coefficients
    double dcomm(size_t i, int a, int b, int c) const {
        return dcm_[((i * n_ + a) * n_ + b) * n_ + c];
    }
    /// true when the analytic background curvature vanishes identically
    bool rm0_zero() const { return rm0_zero_; }
    /// analytic background curvature Rm0_{abcd} = g0(R(e_a,e_b)e_c, e_d)
    double rm0(size_t i, int a, int b, int c, int d) const {
        return rm_[(((i * n_ + a) * n_ + b) * n_ + c) * n_ + d];
    }

    // contiguous per-node blocks for hot loops (layout [a][b][c](n^3) and
    // [a][b][c][d](n^4))
    const double* gamma0_block(size_t i) const { return &th_[i * n_ * n_ * n_]; }
    const double* dgamma0_block(size_t i) const { return &dth_[i * n_ * n_ * n_]; }
    const double* rm0_block(size_t i) const { return &rm_[i * n_ * n_ * n_ * n_]; }

    // second-order finite-difference stencils in the chart coordinate.
    // Interior nodes use 3-point centered stencils on (i-1, i, i+1);
    // endpoints use one-sided stencils on the first/last three nodes.
    struct Stencil {
        double c0 = 0, c1 = 0, c2 = 0; // weights of the three referenced nodes
    };
    const Stencil& d1(size_t i) const { return d1_[i]; }
    const Stencil& d2(size_t i) const { return d2_[i]; }

    /// apply D1/D2 to a nodal array (one-sided at the ends)
    double apply_d1(const double* u, size_t i) const;
    double apply_d2(const double* u, size_t i) const;

    /// midpoint flux coefficient mu = J / F0^2 evaluated analytically at
    /// (x_i + x_{i+1})/2, used by the self-adjoint flux-form operators
    double mu_half(size_t i) const { return mu_[i]; }

    /// value of J at an arbitrary x (analytic)
    double jdens_at(double xq) const;

private:
    const BackgroundMetric* bg_;
    const RadialGrid* grid_;
    int n_ = 0;
    size_t N_ = 0;
    InnerBoundary inner_ = InnerBoundary::dirichlet;

    bool rm0_zero_ = true;
    double inner_vol_ = 0.0;
    std::vector<double> x_, r_, f0_, df0_, w_, s_, rho_, j_, wq_, mu_;
    std::vector<double> th_, dth_, cm_, dcm_, rm_;
    std::vector<Stencil> d1_, d2_;
};

} // namespace alef
