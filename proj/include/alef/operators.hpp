#pragma once

#include "alef/field.hpp"
#include "alef/geometry_cache.hpp"

namespace alef {

/// Connection and curvature of an invariant metric g = g0 + h, in the fixed
/// g0-orthonormal frame. Frame derivatives of the nodal data use the grid
/// stencils; the analytic path for g0 itself is background_geometry().
struct GeometryData {
    int n = 0;
    size_t nnodes = 0;
    std::vector<double> gamma; // Gamma(g)^c_{ab}: [((i n + a) n + b) n + c]
    std::vector<double> rm;    // Rm(g)_{abcd}
    std::vector<double> ric;   // Ric(g)_{ab}: [(i n + a) n + b]
    std::vector<double> scal;  // scalar curvature
    std::vector<double> ginv;  // inverse metric components

    double gam(size_t i, int a, int b, int c) const {
        return gamma[((i * n + a) * n + b) * n + c];
    }
    double rm_at(size_t i, int a, int b, int c, int d) const {
        return rm[(((i * n + a) * n + b) * n + c) * n + d];
    }
    double ric_at(size_t i, int a, int b) const { return ric[(i * n + a) * n + b]; }
    double ginv_at(size_t i, int a, int b) const { return ginv[(i * n + a) * n + b]; }

    /// max |Ric| frame norm over nodes (skipping unset center node)
    double max_ric(const GeometryCache& geo) const;
    double max_rm(const GeometryCache& geo) const;
};

/// Curvature data of g = g0 + h via stencil differentiation of the nodal
/// frame components. Throws ComputeError naming the first node where g
/// fails to be positive definite.
GeometryData connection_curvature(const GeometryCache& geo, const TensorField& h);

/// Analytic-path geometry of the background itself (exact derivatives).
GeometryData background_geometry(const GeometryCache& geo);

/// Ricci tensor of g = g0 + h as a TensorField.
TensorField ricci(const GeometryCache& geo, const TensorField& h);

/// DeTurck vector V^c = g^{ab}(Gamma(g)^c_{ab} - Gamma(g0)^c_{ab}).
VectorField deturck_vector(const GeometryCache& geo, const TensorField& h);

/// Lie derivative of g = g0 + h along an invariant vector field.
TensorField lie_derivative_metric(const GeometryCache& geo, const VectorField& v,
                                  const TensorField& h);

/// Evolution right-hand side -2 Ric(g) + L_V g in the coordinate (Shi) form,
/// evaluated at interior nodes; endpoint nodes are zero. The h = 0 value is
/// subtracted so the background is a bitwise fixed point.
TensorField ricci_deturck_rhs(const GeometryCache& geo, const TensorField& h);

/// Cross-check path: -2 Ric(g) + L_{V(g,g0)} g assembled from
/// connection_curvature and deturck_vector directly.
TensorField ricci_deturck_rhs_direct(const GeometryCache& geo, const TensorField& h);

/// Lichnerowicz Laplacian at g0 in self-adjoint flux form:
/// L h = Delta h + 2 Rm(g0) * h (the Ricci terms vanish on the backgrounds).
TensorField lichnerowicz(const GeometryCache& geo, const TensorField& h);

/// Rough (connection) Laplacian on symmetric 2-tensors, same flux form,
/// no curvature term. Used for the strong-positivity comparison.
TensorField rough_laplacian_tensor(const GeometryCache& geo, const TensorField& h);

/// General-metric Lichnerowicz L_gbar h (stencil machinery, not flux form);
/// gbar = g0 + hbar must be positive definite.
TensorField lichnerowicz_at(const GeometryCache& geo, const TensorField& hbar,
                            const TensorField& h);

/// Lichnerowicz operator at g0 in the same stencil arrangement as the
/// evolution operator; this is the exact discrete linearization of
/// ricci_deturck_rhs at h = 0.
TensorField lichnerowicz_machinery(const GeometryCache& geo, const TensorField& h);

/// trace and divergence with respect to g0
ScalarField trace_g0(const GeometryCache& geo, const TensorField& h);
VectorField divergence_g0(const GeometryCache& geo, const TensorField& h);

/// scalar and vector rough Laplacians (stencil machinery)
ScalarField laplacian_scalar(const GeometryCache& geo, const ScalarField& u);
VectorField laplacian_vector(const GeometryCache& geo, const VectorField& v);

/// scalar Laplacian in the self-adjoint flux form (the radial part of the
/// flux-form tensor operators; trace intertwining is exact against it)
ScalarField laplacian_scalar_flux(const GeometryCache& geo, const ScalarField& u);

/// Background curvature recomputed with stencil-differentiated samples of
/// the frame coefficients (no analytic derivatives). This is the
/// finite-difference verification path for the backgrounds; its Ricci
/// residual is O(dx^2) and shrinks under refinement.
GeometryData background_geometry_fd(const GeometryCache& geo);

/// covariant derivative of h: full rank-3 frame components at one node
/// P[c][a][b] = (nabla_{e_c} h)(e_a, e_b); pointwise norms for diagnostics
double grad_norm2_at(const GeometryCache& geo, const TensorField& h, size_t i);
/// squared norm of the full second covariant derivative at a node
double hess_norm2_at(const GeometryCache& geo, const TensorField& h, size_t i);

/// decomposition of the evolution right-hand side around a stationary gbar:
/// total = linear + lie + remainder (exact by construction)
struct RhsSplit {
    TensorField linear_part;
    TensorField lie_part;
    TensorField remainder;
    TensorField total;
};

/// Split of ricci_deturck_rhs(gbar + h) into the Lichnerowicz part, the Lie
/// correction along <h, Gamma(gbar) - Gamma(g0)>, and the quadratic
/// remainder. gbar defaults to g0 (pass nullptr); a non-stationary gbar is
/// rejected with the measured residual in the message.
RhsSplit rhs_expansion(const GeometryCache& geo, const TensorField& h,
                       const TensorField* hbar = nullptr);

/// zero-order component coupling of the rough Laplacian at a node
/// (pointwise matrix on layout components); with_curvature adds 2 Rm0*.
Mat algebraic_coupling(const GeometryCache& geo, const ComponentLayout& lay, size_t i,
                       bool with_curvature);

/// Apply the flux-form radial second-order part to one component array,
/// writing into out[i] for interior i; shared by operators and assembly.
void flux_radial_apply(const GeometryCache& geo, const double* u, double* out);

/// effective cell volume used by flux operators and spectral mass
/// (center grids merge the node-0 cell into node 1)
double flux_cell_volume(const GeometryCache& geo, size_t i);

/// Fill the center node (node 0) of a center-type grid by parity
/// extrapolation; no-op for dirichlet-type inner boundaries.
void fill_center(const GeometryCache& geo, TensorField& h);

/// largest eigenvalue of g^{-1} over the grid (principal symbol bound)
double max_inverse_metric_eigen(const GeometryCache& geo, const TensorField& h);

} // namespace alef
