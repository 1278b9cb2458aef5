#pragma once

#include "alef/common.hpp"
#include "alef/grid.hpp"
#include "alef/jet.hpp"

namespace alef {

enum class BackgroundKind { euclidean, cone, eguchi_hanson };

enum class InnerBoundary {
    center,   // smooth center / bolt: parity regularity, node 0 is not an unknown
    dirichlet // excluded apex or annulus edge: fields pinned to zero
};

/// An exact ALE Ricci-flat reference metric in a cohomogeneity-one frame,
/// g0 = F0(x)^2 dx^2 + sum_i W_i(x)^2 e_i (x) e_i, where x is the grid
/// coordinate of the chart. For euclidean and cone backgrounds x = r; for
/// Eguchi-Hanson x = sqrt(r - a), which keeps every frame coefficient
/// analytic across the bolt.
struct BackgroundMetric {
    BackgroundKind kind = BackgroundKind::euclidean;
    int n = 0;            // ambient dimension
    int gamma_order = 1;  // |Gamma|
    double bolt_a = 0.0;  // Eguchi-Hanson bolt radius
    double ale_order = 0; // tau; +inf sentinel when exactly conical

    /// true when the link carries the su(2) invariant coframe
    /// (otherwise the round-sphere warped reduction is used)
    bool bianchi = false;

    /// curvature of the unit link metric entering warped-product curvature;
    /// unused in the Bianchi case where structure constants carry it
    double link_kappa = 1.0;

    /// total invariant measure of the link (already divided by |Gamma|)
    double link_measure = 0.0;

    /// grid coordinate of a radius, and back
    double chart_x(double r) const;
    double radius_of(double x) const;

    /// frame coefficients as jets in the grid coordinate
    Jet2 frame_f(double x) const;          // F0
    Jet2 frame_w(int i, double x) const;   // W_i, i = 1..n-1

    /// link coframe structure constants c^k_{ij} on tangential indices 1..n-1
    double structure_c(int k, int i, int j) const;

    InnerBoundary inner_boundary(const RadialGrid& grid) const;

    /// Reject grids incompatible with this background.
    void validate_with(const RadialGrid& grid) const;
};

BackgroundMetric background_euclidean(int n);
BackgroundMetric background_cone(int n, int gamma_order);
BackgroundMetric background_eguchi_hanson(double a);

/// Volume of the unit (n-1)-sphere, 2 pi^(n/2) / Gamma(n/2).
double unit_sphere_volume(int n);

} // namespace alef
