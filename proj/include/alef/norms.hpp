#pragma once

#include "alef/field.hpp"
#include "alef/geometry_cache.hpp"

namespace alef {

/// Weighted-space specification: L^p_delta with k derivatives.
struct WeightSpec {
    double p = 2.0; // may be infinity
    int k = 0;
    double delta = 0.0;

    static WeightSpec lp(double p, double delta) { return {p, 0, delta}; }
};

/// ||u||_{L^p_delta} = ( int |rho^{-delta} u|^p rho^{-n} dmu )^{1/p};
/// for k >= 1 the Sobolev sum over l <= k of ||nabla^l u||_{L^p_{delta-l}};
/// p = inf returns max over l <= k of sup rho^{-delta+l} |nabla^l u|.
/// Supports k <= 2. NaNs in the field raise ComputeError.
double weighted_norm(const GeometryCache& geo, const TensorField& u, const WeightSpec& spec);

/// plain L2 inner product and norms with the discrete cell measure
double inner_l2(const GeometryCache& geo, const TensorField& u, const TensorField& v);
double norm_l2(const GeometryCache& geo, const TensorField& u);
double norm_inf(const TensorField& u);
/// sup of |u| over nodes with geodesic distance >= s0
double norm_inf_outside(const GeometryCache& geo, const TensorField& u, double s0);
/// L2 norm of the full covariant derivative, and its sup norm
double grad_norm_l2(const GeometryCache& geo, const TensorField& u);
double grad_norm_inf(const GeometryCache& geo, const TensorField& u);

double inner_l2_scalar(const GeometryCache& geo, const ScalarField& u, const ScalarField& v);
double norm_l2_vector(const GeometryCache& geo, const VectorField& v);

/// Asymptotic volume ratio estimate with extrapolation residual.
struct AvrResult {
    double value = 0.0;
    double residual = 0.0; // relative extrapolation residual
    bool flagged = false;  // residual > 10%
};
AvrResult avr_estimate(const GeometryCache& geo);

} // namespace alef
