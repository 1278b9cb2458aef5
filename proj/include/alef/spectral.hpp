#pragma once

#include "alef/field.hpp"
#include "alef/geometry_cache.hpp"
#include "alef/linalg.hpp"

namespace alef {

/// Discretization of a self-adjoint operator over the stacked invariant
/// components at interior nodes, stored in similarity-transformed ("hat")
/// coordinates x = sqrt(mass) h where it is symmetric:
/// A_hat = S Op S^{-1}, S = diag(sqrt(mass)).
struct OperatorMatrix {
    ComponentLayout layout;
    const GeometryCache* geo = nullptr;
    size_t node_lo = 1, node_hi = 0; // unknown nodes [node_lo, node_hi]
    BandedSym A;
    std::vector<double> mass;

    size_t dofs() const { return A.n; }
    int ncomp() const { return layout.count(); }
    size_t dof(size_t i, int c) const { return (i - node_lo) * ncomp() + c; }

    std::vector<double> from_field(const TensorField& h) const;
    TensorField to_field(const std::vector<double>& hat) const;
    /// weighted L2 inner product of hat vectors (plain dot by construction)
    static double dot(const std::vector<double>& a, const std::vector<double>& b);
};

enum class OperatorKind { neg_lichnerowicz, neg_rough_laplacian };

/// Assemble -L_{g0} or -Delta_{g0} in flux form; symmetric by construction
/// and identical to the direct operator application.
OperatorMatrix assemble_operator(const GeometryCache& geo, const ComponentLayout& lay,
                                 OperatorKind kind);

/// Assemble -L_{g,g0} at a stationary gbar = g0 + hbar by probing the direct
/// operator. Asymmetry beyond max(1e-10, C |hbar|) * scale raises an error;
/// the returned matrix is the symmetric part.
OperatorMatrix assemble_operator_at(const GeometryCache& geo, const ComponentLayout& lay,
                                    const TensorField& hbar);

struct EigenSolveOpts {
    int m = 6;
    unsigned seed = 20240901u;
    double tol = 1e-9;
    int max_iter = 600;
};

struct SpectralResult {
    std::vector<double> values;
    std::vector<double> residuals;
    std::vector<std::vector<double>> hat_vectors;
    std::vector<TensorField> fields;

    int kernel_dim = 0;
    bool kernel_ambiguous = false;
    std::vector<double> trace_residual; // per reported pair, relative
    std::vector<double> div_residual;
    std::vector<double> decay_slope;
    double first_nonzero = 0.0;
};

/// Lowest m eigenpairs via shift-invert Lanczos with deterministic seeding.
SpectralResult lowest_eigenpairs(const OperatorMatrix& op, const EigenSolveOpts& opts);

/// Gap-ratio kernel clustering: candidates are eigenvalues below tol_kern;
/// they count as kernel only when the next eigenvalue sits a factor >= 10
/// above the cluster. Returns (dimension, ambiguous).
std::pair<int, bool> cluster_kernel(const std::vector<double>& values, double tol_kern);

/// Kernel extraction by spectral-gap clustering, with trace/divergence
/// residuals and outer-third log-log decay slopes filled for every pair.
void kernel_analyze(const OperatorMatrix& op, SpectralResult& r, double tol_kern);

/// Largest alpha with alpha (-Delta h, h) <= (-L h, h) for h orthogonal to
/// the kernel: the smallest generalized eigenvalue of (-L, -Delta) on the
/// kernel-orthogonal complement (kernel handled by penalization).
/// Returns alpha and the solver residual. alpha <= 0 is reported, not thrown.
struct AlphaResult {
    double alpha = 0.0;
    double residual = 0.0;
};
AlphaResult strong_positivity_alpha(const OperatorMatrix& neg_l, const OperatorMatrix& neg_rough,
                                    const std::vector<std::vector<double>>& kernel_hat,
                                    unsigned seed = 20240902u);

/// Hardy constant: best C in  int r^{-2} phi^2 <= C int |grad phi|^2  over
/// radial test functions = 1 / (smallest generalized eigenvalue of
/// (-Delta, r^{-2})). Requires AVR > 0 (checked).
struct HardyResult {
    double constant = 0.0;
    double eigenvalue = 0.0;
    double residual = 0.0;
};
HardyResult hardy_constant(const GeometryCache& geo, unsigned seed = 20240903u);

/// Rayleigh-quotient refinement of an approximate eigenfield against op's
/// matrix (used to carry kernel bases across grids: interpolation is the
/// seed, the flow grid's own eigenvector is the result). Returns the
/// refined eigenvalue.
double refine_eigenfield(const OperatorMatrix& op, TensorField& f, int iterations = 6);

/// Smallest m eigenpairs of (A + penalty sum_k v_k v_k^T) x = lambda B x
/// with symmetric banded A, B (B positive definite), via shift-invert
/// Lanczos in the B-inner product with a Woodbury-corrected banded solve.
std::vector<std::pair<double, std::vector<double>>>
generalized_smallest(const BandedSym& A, const BandedSym& B,
                     const std::vector<std::vector<double>>& deflate, double penalty, int m,
                     unsigned seed, double tol = 1e-10, int max_iter = 400);

} // namespace alef
