#include "alef/spectral.hpp"
#include <memory>

#include "alef/norms.hpp"
#include "alef/operators.hpp"

#include <algorithm>
#include <random>

namespace alef {

namespace {

std::vector<double> seeded_vector(size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::vector<double> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = (double(rng()) / 4294967296.0) - 0.5;
    return v;
}


} // namespace

std::vector<double> OperatorMatrix::from_field(const TensorField& h) const {
    std::vector<double> x(dofs());
    for (size_t i = node_lo; i <= node_hi; ++i)
        for (int c = 0; c < ncomp(); ++c) x[dof(i, c)] = h.at(c, i) * std::sqrt(mass[dof(i, c)]);
    return x;
}

TensorField OperatorMatrix::to_field(const std::vector<double>& hat) const {
    TensorField h(layout, geo->nnodes());
    for (size_t i = node_lo; i <= node_hi; ++i)
        for (int c = 0; c < ncomp(); ++c) h.at(c, i) = hat[dof(i, c)] / std::sqrt(mass[dof(i, c)]);
    fill_center(*geo, h);
    return h;
}

double OperatorMatrix::dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

OperatorMatrix assemble_operator(const GeometryCache& geo, const ComponentLayout& lay,
                                 OperatorKind kind) {
    const size_t N = geo.nnodes();
    OperatorMatrix op;
    op.layout = lay;
    op.geo = &geo;
    op.node_lo = 1;
    op.node_hi = N - 2;
    const int nc = lay.count();
    const size_t dofs = (N - 2) * size_t(nc);
    op.A = BandedSym(dofs, size_t(nc));
    op.mass.assign(dofs, 0.0);

    for (size_t i = 1; i + 1 < N; ++i)
        for (int c = 0; c < nc; ++c)
            op.mass[op.dof(i, c)] = flux_cell_volume(geo, i) * lay.multiplicity(c);

    const double lm = geo.bg().link_measure;
    const bool center = geo.inner() == InnerBoundary::center;
    const bool with_curv = (kind == OperatorKind::neg_lichnerowicz);

    for (size_t i = 1; i + 1 < N; ++i) {
        const double vol = flux_cell_volume(geo, i);
        const double dxp = geo.x(i + 1) - geo.x(i);
        const double dxm = geo.x(i) - geo.x(i - 1);
        const double fp = lm * geo.mu_half(i) / dxp;
        const double fm = (center && i == 1) ? 0.0 : lm * geo.mu_half(i - 1) / dxm;
        for (int c = 0; c < nc; ++c) {
            const size_t d = op.dof(i, c);
            // -Delta flux part: diagonal (fp+fm)/vol; hat off-diagonal
            // -fp/sqrt(vol_i vol_{i+1}) (symmetric by construction)
            op.A.add(d, d, (fp + fm) / vol);
            if (i + 1 <= op.node_hi) {
                const size_t dr = op.dof(i + 1, c);
                op.A.add(dr, d, -fp / std::sqrt(vol * flux_cell_volume(geo, i + 1)));
            }
        }
        // algebraic coupling: -K (operator is -L = -(flux + K));
        // hat element -K_ab sqrt(mult_a/mult_b)
        const Mat K = algebraic_coupling(geo, lay, i, with_curv);
        for (int a = 0; a < nc; ++a)
            for (int b = a; b < nc; ++b) {
                const size_t da = op.dof(i, a), db = op.dof(i, b);
                const double ma = lay.multiplicity(a), mb = lay.multiplicity(b);
                const double hat = -K(a, b) * std::sqrt(ma / mb);
                if (a == b) {
                    op.A.add(da, da, hat);
                } else {
                    // weighted self-adjointness: mult_a K_ab = mult_b K_ba
                    const double hat2 = -K(b, a) * std::sqrt(mb / ma);
                    if (std::abs(hat - hat2) >
                        1e-9 * std::max(1.0, std::max(std::abs(hat), std::abs(hat2))))
                        throw ComputeError("assemble_operator: coupling not self-adjoint "
                                           "(discretization bug) at node " +
                                           std::to_string(i));
                    op.A.add(db, da, 0.5 * (hat + hat2));
                }
            }
    }
    return op;
}

OperatorMatrix assemble_operator_at(const GeometryCache& geo, const ComponentLayout& lay,
                                    const TensorField& hbar) {
    // stationarity precondition
    TensorField rbar = ricci_deturck_rhs(geo, hbar);
    double res = 0.0;
    for (size_t i = 0; i < geo.nnodes(); ++i) res = std::max(res, std::sqrt(rbar.norm2_at(i)));
    if (res > 1e-3)
        throw InputError("assemble_operator_at: gbar not stationary (residual " +
                         std::to_string(res) + ")");

    const size_t N = geo.nnodes();
    OperatorMatrix op;
    op.layout = lay;
    op.geo = &geo;
    op.node_lo = 1;
    op.node_hi = N - 2;
    const int nc = lay.count();
    const size_t dofs = (N - 2) * size_t(nc);
    const size_t hb = 3 * size_t(nc);
    op.mass.assign(dofs, 0.0);
    for (size_t i = 1; i + 1 < N; ++i)
        for (int c = 0; c < nc; ++c)
            op.mass[op.dof(i, c)] = flux_cell_volume(geo, i) * lay.multiplicity(c);

    // probe -(L_gbar h - Lie correction) with comb vectors
    auto apply = [&](const TensorField& h) {
        RhsSplit s = rhs_expansion(geo, h, &hbar);
        TensorField out = s.linear_part;
        out.axpy(1.0, s.lie_part);
        out.scale(-1.0);
        return out;
    };
    // general band accumulation (possibly asymmetric), then symmetrize
    std::vector<double> full((2 * hb + 1) * dofs, 0.0);
    auto ent = [&](size_t r, size_t c) -> double& { return full[c * (2 * hb + 1) + (hb + r - c)]; };
    TensorField probe(lay, N);
    const size_t stride = 2 * hb + 1;
    for (size_t color = 0; color < stride; ++color) {
        std::fill(probe.data.begin(), probe.data.end(), 0.0);
        for (size_t d = color; d < dofs; d += stride) {
            const size_t i = op.node_lo + d / nc;
            probe.at(int(d % nc), i) = 1.0 / std::sqrt(op.mass[d]);
        }
        TensorField out = apply(probe);
        for (size_t d = color; d < dofs; d += stride)
            for (size_t r = (d >= hb ? d - hb : 0); r <= std::min(dofs - 1, d + hb); ++r) {
                const size_t i = op.node_lo + r / nc;
                ent(r, d) = out.at(int(r % nc), i) * std::sqrt(op.mass[r]);
            }
    }
    // asymmetry measurement
    double scale = 0.0, asym = 0.0;
    for (size_t c = 0; c < dofs; ++c)
        for (size_t r = (c >= hb ? c - hb : 0); r <= std::min(dofs - 1, c + hb); ++r) {
            scale = std::max(scale, std::abs(ent(r, c)));
            if (r > c) asym = std::max(asym, std::abs(ent(r, c) - ent(c, r)));
        }
    double hbar_inf = norm_inf(hbar);
    const double tol = std::max(1e-10, 4.0 * hbar_inf) * std::max(1.0, scale);
    if (asym > tol)
        throw ComputeError("assemble_operator_at: asymmetry " + std::to_string(asym) +
                           " beyond tolerance (discretization bug)");
    op.A = BandedSym(dofs, hb);
    for (size_t c = 0; c < dofs; ++c)
        for (size_t r = c; r <= std::min(dofs - 1, c + hb); ++r)
            op.A.at(r, c) = 0.5 * (ent(r, c) + ent(c, r));
    return op;
}

// ---------------------------------------------------------------------------
// standard shift-invert Lanczos on a symmetric banded matrix
// ---------------------------------------------------------------------------

SpectralResult lowest_eigenpairs(const OperatorMatrix& op, const EigenSolveOpts& opts) {
    require(opts.m >= 1, "lowest_eigenpairs: m >= 1 required");
    const size_t n = op.dofs();
    const int m = std::min<int>(opts.m, int(n));
    const double scale = std::max(1.0, op.A.max_abs());

    // place the shift just below the smallest eigenvalue, using the inertia
    // of the LDL^T factorization (number of negative pivots = number of
    // eigenvalues below sigma); this keeps the shift-invert spectrum sharply
    // separated at the bottom
    double delta = 1e-8 * scale;
    double sigma = 0.0;
    std::unique_ptr<BandedLDLT> fact_ptr;
    for (int tries = 0; tries < 12; ++tries) {
        sigma = -delta;
        BandedSym As = op.A;
        for (size_t j = 0; j < n; ++j) As.d[j * (As.hb + 1)] -= sigma;
        try {
            auto f = std::make_unique<BandedLDLT>(As);
            bool clean = true;
            for (double dpiv : f->diag)
                if (dpiv <= 0.0) { clean = false; break; }
            if (clean) {
                fact_ptr = std::move(f);
                break;
            }
        } catch (const ComputeError&) {
            // indefinite factorization without pivoting can break down;
            // retreat further below the spectrum
        }
        delta *= 50.0;
    }
    if (!fact_ptr)
        throw ComputeError("lowest_eigenpairs: could not bracket the smallest eigenvalue");
    const BandedLDLT& fact = *fact_ptr;

    const int kmax = std::min<size_t>(n, size_t(opts.max_iter));
    std::vector<std::vector<double>> V;
    std::vector<double> alpha, beta;
    std::vector<double> v = seeded_vector(n, opts.seed);
    {
        double nv = std::sqrt(OperatorMatrix::dot(v, v));
        for (auto& x : v) x /= nv;
    }
    V.push_back(v);
    std::vector<double> ritz_prev;

    auto tridiag_eig = [&](size_t k) {
        std::vector<double> T(k * k, 0.0);
        for (size_t i = 0; i < k; ++i) {
            T[i * k + i] = alpha[i];
            if (i + 1 < k) T[i * k + i + 1] = T[(i + 1) * k + i] = beta[i];
        }
        return dense_symmetric_eig(T, k);
    };

    size_t k = 0;
    DenseEig te;
    for (int it = 0; it < kmax; ++it) {
        std::vector<double> w = fact.solve(V.back());
        const double a = OperatorMatrix::dot(w, V.back());
        alpha.push_back(a);
        for (size_t i = 0; i < n; ++i) w[i] -= a * V.back()[i];
        if (V.size() >= 2) {
            const double b = beta.back();
            for (size_t i = 0; i < n; ++i) w[i] -= b * V[V.size() - 2][i];
        }
        // full reorthogonalization, two passes
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : V) {
                const double c = OperatorMatrix::dot(w, q);
                for (size_t i = 0; i < n; ++i) w[i] -= c * q[i];
            }
        const double b = std::sqrt(OperatorMatrix::dot(w, w));
        k = alpha.size();
        if (b < 1e-14 * scale) break; // invariant subspace exhausted
        if (int(k) >= m + 2 && (k % 10 == 0 || int(it) == kmax - 1)) {
            te = tridiag_eig(k);
            // largest theta correspond to smallest lambda; convergence of top m
            bool done = true;
            for (int j = 0; j < m; ++j) {
                const size_t idx = k - 1 - j;
                // residual bound |beta_k * last element of Ritz vector|
                const double bound = std::abs(b * te.vectors[idx * k + (k - 1)]);
                if (bound > opts.tol * std::max(1.0, std::abs(te.values[idx]))) done = false;
            }
            if (done) {
                beta.push_back(b);
                for (auto& x : w) x /= b;
                V.push_back(w);
                break;
            }
        }
        beta.push_back(b);
        for (auto& x : w) x /= b;
        V.push_back(w);
    }
    k = alpha.size();
    te = tridiag_eig(k);

    SpectralResult out;
    for (int j = 0; j < m; ++j) {
        const size_t idx = k - 1 - j; // descending theta
        const double theta = te.values[idx];
        if (theta <= 0.0)
            throw ComputeError("lowest_eigenpairs: nonpositive shifted Ritz value (no convergence)");
        const double lam = sigma + 1.0 / theta;
        std::vector<double> vec(n, 0.0);
        for (size_t i = 0; i < k; ++i) {
            const double c = te.vectors[idx * k + i];
            const auto& q = V[i];
            for (size_t r = 0; r < n; ++r) vec[r] += c * q[r];
        }
        double nv = std::sqrt(OperatorMatrix::dot(vec, vec));
        for (auto& x : vec) x /= nv;
        // true residual
        std::vector<double> av = op.A.apply(vec);
        double rs = 0.0;
        for (size_t r = 0; r < n; ++r) rs += sqr(av[r] - lam * vec[r]);
        rs = std::sqrt(rs);
        out.values.push_back(lam);
        out.residuals.push_back(rs);
        out.hat_vectors.push_back(std::move(vec));
    }
    // ensure ascending order
    std::vector<size_t> order(out.values.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return out.values[a] < out.values[b]; });
    SpectralResult sorted;
    for (size_t i : order) {
        sorted.values.push_back(out.values[i]);
        sorted.residuals.push_back(out.residuals[i]);
        sorted.hat_vectors.push_back(std::move(out.hat_vectors[i]));
    }

    // Rayleigh-quotient polish with deflation: clustered and degenerate
    // eigenvalues out of Lanczos may carry residuals above the reporting
    // tolerance; a few shifted inverse iterations fix that deterministically.
    for (size_t j = 0; j < sorted.values.size(); ++j) {
        std::vector<double> v = sorted.hat_vectors[j];
        double lam = sorted.values[j];
        double res = sorted.residuals[j];
        for (int it = 0; it < 8 && res > 1e-11 * std::max(1.0, std::abs(lam)); ++it) {
            BandedSym As = op.A;
            const double guard = (it == 0 ? 1e-8 : 1e-10) * scale + 1e-300;
            for (size_t r = 0; r < n; ++r) As.d[r * (As.hb + 1)] -= (lam - guard);
            std::vector<double> w;
            try {
                BandedLDLT f(As);
                w = f.solve(v);
            } catch (const ComputeError&) {
                break; // singular shift: keep the current pair
            }
            for (size_t p = 0; p < j; ++p) {
                const double c = OperatorMatrix::dot(w, sorted.hat_vectors[p]);
                for (size_t r = 0; r < n; ++r) w[r] -= c * sorted.hat_vectors[p][r];
            }
            const double nw = std::sqrt(OperatorMatrix::dot(w, w));
            if (!(nw > 0.0) || !finite(nw)) break;
            for (auto& x : w) x /= nw;
            std::vector<double> aw = op.A.apply(w);
            lam = OperatorMatrix::dot(aw, w);
            double rs = 0.0;
            for (size_t r = 0; r < n; ++r) rs += sqr(aw[r] - lam * w[r]);
            res = std::sqrt(rs);
            v = std::move(w);
        }
        sorted.values[j] = lam;
        sorted.residuals[j] = res;
        sorted.hat_vectors[j] = std::move(v);
    }
    // re-sort after polish
    std::vector<size_t> order2(sorted.values.size());
    for (size_t i = 0; i < order2.size(); ++i) order2[i] = i;
    std::sort(order2.begin(), order2.end(),
              [&](size_t a, size_t b) { return sorted.values[a] < sorted.values[b]; });
    SpectralResult fin;
    for (size_t i : order2) {
        fin.values.push_back(sorted.values[i]);
        fin.residuals.push_back(sorted.residuals[i]);
        fin.hat_vectors.push_back(std::move(sorted.hat_vectors[i]));
    }
    for (const auto& hv : fin.hat_vectors) fin.fields.push_back(op.to_field(hv));
    for (size_t i = 0; i < fin.values.size(); ++i) {
        if (fin.residuals[i] > 1e-8 * std::max(1.0, std::abs(fin.values[i])))
            throw ComputeError("lowest_eigenpairs: residual " + std::to_string(fin.residuals[i]) +
                               " for eigenvalue " + std::to_string(fin.values[i]) +
                               " (not converged)");
    }
    return fin;
}

std::pair<int, bool> cluster_kernel(const std::vector<double>& values, double tol_kern) {
    const size_t nv = values.size();
    size_t cand = 0;
    while (cand < nv && std::abs(values[cand]) < tol_kern) ++cand;
    if (cand == 0) {
        // no candidate below the cutoff; flag near-misses instead of
        // silently reporting an empty kernel
        const bool ambiguous = nv >= 2 && values[0] < 3.0 * tol_kern &&
                               std::abs(values[0]) < 0.3 * std::abs(values[1]);
        return {0, ambiguous};
    }
    if (cand >= nv) return {int(cand), true}; // everything tiny: no gap visible
    double m = 0.0;
    for (size_t i = 0; i < cand; ++i) m = std::max(m, std::abs(values[i]));
    m = std::max(m, 1e-14 * std::max(1.0, std::abs(values[nv - 1])));
    if (values[cand] >= 10.0 * m) return {int(cand), false};
    return {0, true};
}

void kernel_analyze(const OperatorMatrix& op, SpectralResult& r, double tol_kern) {
    const GeometryCache& geo = *op.geo;
    const size_t nv = r.values.size();
    r.trace_residual.assign(nv, 0.0);
    r.div_residual.assign(nv, 0.0);
    r.decay_slope.assign(nv, 0.0);
    for (size_t j = 0; j < nv; ++j) {
        const TensorField& f = r.fields[j];
        const double fn = std::max(1e-300, norm_l2(geo, f));
        ScalarField tr = trace_g0(geo, f);
        double trn = std::sqrt(std::max(0.0, inner_l2_scalar(geo, tr, tr)));
        VectorField dv = divergence_g0(geo, f);
        r.trace_residual[j] = trn / fn;
        r.div_residual[j] = norm_l2_vector(geo, dv) / fn;
        // outer-third log-log slope, excluding the outermost 5% (Dirichlet)
        std::vector<double> lx, ly;
        const size_t N = geo.nnodes();
        double fmax = 0.0;
        for (size_t i = 0; i < N; ++i) fmax = std::max(fmax, std::sqrt(f.norm2_at(i)));
        for (size_t i = 2 * N / 3; i < N - std::max<size_t>(2, N / 20); ++i) {
            const double mag = std::sqrt(f.norm2_at(i));
            if (mag > 1e-13 * fmax && geo.radius(i) > 0.0) {
                lx.push_back(std::log(geo.radius(i)));
                ly.push_back(std::log(mag));
            }
        }
        r.decay_slope[j] = (lx.size() >= 4) ? fit_line(lx, ly).slope : 0.0;
    }
    auto [dim, ambiguous] = cluster_kernel(r.values, tol_kern);
    r.kernel_dim = dim;
    r.kernel_ambiguous = ambiguous;
    r.first_nonzero = (size_t(r.kernel_dim) < nv) ? r.values[r.kernel_dim] : 0.0;
}

double refine_eigenfield(const OperatorMatrix& op, TensorField& f, int iterations) {
    std::vector<double> v = op.from_field(f);
    double nv = std::sqrt(OperatorMatrix::dot(v, v));
    for (auto& x : v) x /= nv;
    const size_t n = op.dofs();
    const double scale = std::max(1.0, op.A.max_abs());
    std::vector<double> av = op.A.apply(v);
    double lam = OperatorMatrix::dot(av, v);
    for (int it = 0; it < iterations; ++it) {
        double rs = 0.0;
        for (size_t i = 0; i < n; ++i) rs += sqr(av[i] - lam * v[i]);
        if (std::sqrt(rs) < 1e-12 * std::max(1.0, std::abs(lam))) break;
        BandedSym As = op.A;
        const double guard = 1e-9 * scale;
        for (size_t r = 0; r < n; ++r) As.d[r * (As.hb + 1)] -= (lam - guard);
        try {
            BandedLDLT fact(As);
            std::vector<double> w = fact.solve(v);
            const double nw = std::sqrt(OperatorMatrix::dot(w, w));
            if (!(nw > 0.0) || !finite(nw)) break;
            for (auto& x : w) x /= nw;
            v = std::move(w);
        } catch (const ComputeError&) {
            break;
        }
        av = op.A.apply(v);
        lam = OperatorMatrix::dot(av, v);
    }
    f = op.to_field(v);
    return lam;
}

std::vector<std::pair<double, std::vector<double>>>
generalized_smallest(const BandedSym& A, const BandedSym& B,
                     const std::vector<std::vector<double>>& deflate, double penalty, int m,
                     unsigned seed, double tol, int max_iter) {
    const size_t n = A.n;
    require(B.n == n, "generalized_smallest: dimension mismatch");

    // Scale estimate for the pencil: one inverse-power step from a seeded
    // vector lands near the low end of the generalized spectrum, which is
    // where the shift has to sit for sharp shift-invert separation.
    double lam_scale;
    {
        double trA = 0.0, trB = 0.0;
        for (size_t j = 0; j < n; ++j) {
            trA += A.d[j * (A.hb + 1)];
            trB += B.d[j * (B.hb + 1)];
        }
        const double reg = 1e-10 * std::abs(trA / std::max(1e-300, trB));
        BandedSym Ar = A;
        const size_t hb = std::max(A.hb, B.hb);
        (void)hb;
        for (size_t j = 0; j < n; ++j) {
            const size_t kmax = std::min(B.hb, n - 1 - j);
            for (size_t k = 0; k <= kmax; ++k)
                if (k <= Ar.hb) Ar.d[j * (Ar.hb + 1) + k] += reg * B.d[j * (B.hb + 1) + k];
        }
        std::vector<double> v = seeded_vector(n, seed ^ 0x9e3779b9u);
        try {
            BandedLDLT f(Ar);
            for (int it = 0; it < 3; ++it) {
                v = f.solve(B.apply(v));
                double nv = std::sqrt(OperatorMatrix::dot(v, v));
                for (auto& x : v) x /= nv;
            }
        } catch (const ComputeError&) {
            // fall through with the raw vector
        }
        std::vector<double> av = A.apply(v), bv = B.apply(v);
        lam_scale = std::abs(OperatorMatrix::dot(av, v) / std::max(1e-300, OperatorMatrix::dot(bv, v)));
        if (!(lam_scale > 0.0) || !finite(lam_scale)) lam_scale = 1.0;
    }
    const double sigma = -0.05 * lam_scale - 1e-14;
    const double pen = (penalty > 0.0) ? penalty : 1e6 * lam_scale;

    // M = A - sigma B (banded), plus pen * sum v v^T via Woodbury
    const size_t hb = std::max(A.hb, B.hb);
    BandedSym M(n, hb);
    for (size_t j = 0; j < n; ++j) {
        for (size_t k = 0; k <= hb; ++k) {
            double v = 0.0;
            if (k <= A.hb) v += A.d[j * (A.hb + 1) + k];
            if (k <= B.hb) v -= sigma * B.d[j * (B.hb + 1) + k];
            if (j + k < n) M.d[j * (hb + 1) + k] = v;
        }
    }
    BandedLDLT fact(M);
    const size_t kdef = deflate.size();
    std::vector<std::vector<double>> Y;   // M^{-1} v_k
    std::vector<double> C;                // (1/pen I + V^T M^{-1} V), dense kdef x kdef
    if (kdef > 0) {
        for (const auto& vk : deflate) Y.push_back(fact.solve(vk));
        C.assign(kdef * kdef, 0.0);
        for (size_t a = 0; a < kdef; ++a) {
            for (size_t b = 0; b < kdef; ++b) {
                double s = 0.0;
                for (size_t i = 0; i < n; ++i) s += deflate[a][i] * Y[b][i];
                C[a * kdef + b] = s + (a == b ? 1.0 / pen : 0.0);
            }
        }
    }
    auto small_solve = [&](std::vector<double> Cm, std::vector<double> y) {
        for (size_t p = 0; p < kdef; ++p) {
            size_t piv = p;
            for (size_t r2 = p + 1; r2 < kdef; ++r2)
                if (std::abs(Cm[r2 * kdef + p]) > std::abs(Cm[piv * kdef + p])) piv = r2;
            if (piv != p) {
                for (size_t c2 = 0; c2 < kdef; ++c2) std::swap(Cm[p * kdef + c2], Cm[piv * kdef + c2]);
                std::swap(y[p], y[piv]);
            }
            for (size_t r2 = p + 1; r2 < kdef; ++r2) {
                const double f = Cm[r2 * kdef + p] / Cm[p * kdef + p];
                for (size_t c2 = p; c2 < kdef; ++c2) Cm[r2 * kdef + c2] -= f * Cm[p * kdef + c2];
                y[r2] -= f * y[p];
            }
        }
        for (size_t p = kdef; p-- > 0;) {
            for (size_t c2 = p + 1; c2 < kdef; ++c2) y[p] -= Cm[p * kdef + c2] * y[c2];
            y[p] /= Cm[p * kdef + p];
        }
        return y;
    };
    auto solveM = [&](const std::vector<double>& rhs) {
        std::vector<double> z = fact.solve(rhs);
        if (kdef == 0) return z;
        std::vector<double> c(kdef, 0.0);
        for (size_t a = 0; a < kdef; ++a)
            for (size_t i = 0; i < n; ++i) c[a] += deflate[a][i] * z[i];
        std::vector<double> y = small_solve(C, c);
        for (size_t a = 0; a < kdef; ++a)
            for (size_t i = 0; i < n; ++i) z[i] -= Y[a][i] * y[a];
        return z;
    };
    auto bdot = [&](const std::vector<double>& u, const std::vector<double>& v) {
        std::vector<double> bv = B.apply(v);
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += u[i] * bv[i];
        return s;
    };

    // Lanczos in the B inner product on Op = M^{-1} B
    std::vector<std::vector<double>> V;
    std::vector<double> alpha, beta;
    std::vector<double> v = seeded_vector(n, seed);
    {
        const double nb = std::sqrt(std::max(1e-300, bdot(v, v)));
        for (auto& x : v) x /= nb;
    }
    V.push_back(v);
    const int kmax = std::min<size_t>(n, size_t(max_iter));
    for (int it = 0; it < kmax; ++it) {
        std::vector<double> w = solveM(B.apply(V.back()));
        const double a = bdot(w, V.back());
        alpha.push_back(a);
        for (size_t i = 0; i < n; ++i) w[i] -= a * V.back()[i];
        if (V.size() >= 2) {
            const double b = beta.back();
            for (size_t i = 0; i < n; ++i) w[i] -= b * V[V.size() - 2][i];
        }
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : V) {
                const double c = bdot(w, q);
                for (size_t i = 0; i < n; ++i) w[i] -= c * q[i];
            }
        const double b = std::sqrt(std::max(0.0, bdot(w, w)));
        if (b < 1e-13) break;
        beta.push_back(b);
        for (auto& x : w) x /= b;
        V.push_back(w);
        const size_t k = alpha.size();
        if (int(k) >= m + 2 && k % 12 == 0) {
            std::vector<double> T(k * k, 0.0);
            for (size_t i = 0; i < k; ++i) {
                T[i * k + i] = alpha[i];
                if (i + 1 < k) T[i * k + i + 1] = T[(i + 1) * k + i] = beta[i];
            }
            DenseEig te = dense_symmetric_eig(T, k);
            bool done = true;
            for (int j = 0; j < m; ++j) {
                const size_t idx = k - 1 - j;
                const double bound = std::abs(b * te.vectors[idx * k + (k - 1)]);
                if (bound > tol * std::max(1e-3, std::abs(te.values[idx]))) done = false;
            }
            if (done) break;
        }
    }
    const size_t k = alpha.size();
    std::vector<double> T(k * k, 0.0);
    for (size_t i = 0; i < k; ++i) {
        T[i * k + i] = alpha[i];
        if (i + 1 < k) T[i * k + i + 1] = T[(i + 1) * k + i] = beta[i];
    }
    DenseEig te = dense_symmetric_eig(T, k);
    std::vector<std::pair<double, std::vector<double>>> out;
    for (int j = 0; j < m && size_t(j) < k; ++j) {
        const size_t idx = k - 1 - j;
        const double theta = te.values[idx];
        if (theta == 0.0) throw ComputeError("generalized_smallest: zero Ritz value");
        const double lam = sigma + 1.0 / theta;
        std::vector<double> vec(n, 0.0);
        for (size_t i = 0; i < k; ++i) {
            const double c = te.vectors[idx * k + i];
            for (size_t r = 0; r < n; ++r) vec[r] += c * V[i][r];
        }
        out.emplace_back(lam, std::move(vec));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    // Polish by inverse iteration on the penalized pencil. Earlier pairs are
    // deflated in the B inner product so higher pairs do not collapse onto
    // the bottom of the pencil.
    for (size_t j = 0; j < out.size(); ++j) {
        auto& lam = out[j].first;
        auto& vec = out[j].second;
        for (int it = 0; it < 8; ++it) {
            std::vector<double> av = A.apply(vec), bv = B.apply(vec);
            for (size_t a = 0; a < kdef; ++a) {
                double c = 0.0;
                for (size_t i = 0; i < n; ++i) c += deflate[a][i] * vec[i];
                for (size_t i = 0; i < n; ++i) av[i] += pen * c * deflate[a][i];
            }
            double num = OperatorMatrix::dot(av, vec), den = OperatorMatrix::dot(bv, vec);
            lam = num / den;
            double rs = 0.0, ns = 0.0;
            for (size_t i = 0; i < n; ++i) {
                rs += sqr(av[i] - lam * bv[i]);
                ns += sqr(vec[i]);
            }
            if (std::sqrt(rs / ns) < 1e-11 * std::max(1e-6, std::abs(lam))) break;
            std::vector<double> w = solveM(bv);
            for (size_t p = 0; p < j; ++p) {
                const double c = bdot(w, out[p].second);
                for (size_t i = 0; i < n; ++i) w[i] -= c * out[p].second[i];
            }
            double nb2 = std::sqrt(std::max(1e-300, bdot(w, w)));
            for (auto& x : w) x /= nb2;
            vec = std::move(w);
        }
        // B-normalize so later deflations are projections
        const double nb = std::sqrt(std::max(1e-300, bdot(vec, vec)));
        for (auto& x : vec) x /= nb;
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

AlphaResult strong_positivity_alpha(const OperatorMatrix& neg_l, const OperatorMatrix& neg_rough,
                                    const std::vector<std::vector<double>>& kernel_hat,
                                    unsigned seed) {
    // The kernel directions are generalized eigenvectors of the pencil with
    // near-zero eigenvalue, and pencil eigenvectors are (-Delta)-orthogonal,
    // so alpha is the first pencil eigenvalue past the kernel block. (An
    // explicit L2 deflation is ill-conditioned here: the quotient is
    // infinitely sensitive to the O(dx^2) error of the kernel vector.)
    const int skip = int(kernel_hat.size());
    auto pairs = generalized_smallest(neg_l.A, neg_rough.A, {}, 0.0, skip + 1, seed);
    AlphaResult out;
    out.alpha = pairs.at(skip).first;
    const auto& x = pairs.at(skip).second;
    std::vector<double> ax = neg_l.A.apply(x), bx = neg_rough.A.apply(x);
    double rs = 0.0, nx = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        rs += sqr(ax[i] - out.alpha * bx[i]);
        nx += sqr(x[i]);
    }
    out.residual = std::sqrt(rs / std::max(1e-300, nx));
    return out;
}

HardyResult hardy_constant(const GeometryCache& geo, unsigned seed) {
    AvrResult avr = avr_estimate(geo);
    if (!(avr.value > 0.0) || avr.flagged)
        throw InputError("hardy_constant: AVR not positive/stable on this grid");
    const size_t N = geo.nnodes();
    const size_t dofs = N - 2;
    // scalar flux Laplacian in hat coordinates
    BandedSym A(dofs, 1);
    BandedSym B(dofs, 0);
    const double lm = geo.bg().link_measure;
    const bool center = geo.inner() == InnerBoundary::center;
    std::vector<double> mass(dofs);
    for (size_t i = 1; i + 1 < N; ++i) mass[i - 1] = flux_cell_volume(geo, i);
    for (size_t i = 1; i + 1 < N; ++i) {
        const size_t d = i - 1;
        const double vol = flux_cell_volume(geo, i);
        const double dxp = geo.x(i + 1) - geo.x(i);
        const double dxm = geo.x(i) - geo.x(i - 1);
        const double fp = lm * geo.mu_half(i) / dxp;
        const double fm = (center && i == 1) ? 0.0 : lm * geo.mu_half(i - 1) / dxm;
        A.add(d, d, (fp + fm) / vol);
        if (i + 1 <= N - 2) A.add(d + 1, d, -fp / std::sqrt(mass[d] * mass[d + 1]));
        // weight 1/r_x^2: distance to the base point. At an Eguchi-Hanson
        // bolt the base point sits on a 2-sphere of extent ~ a/2; the
        // distance to a point on it is floored by that extent, which also
        // keeps the reduced quadratic form finite (the raw 1/s^2 weight is
        // log-divergent against the collapsing fibre volume).
        const double s0 = (geo.bg().kind == BackgroundKind::eguchi_hanson)
                              ? 0.5 * geo.bg().bolt_a
                              : 0.0;
        const double s = geo.s_dist(i);
        B.add(d, d, 1.0 / (s * s + s0 * s0 + 1e-300));
    }
    auto pairs = generalized_smallest(A, B, {}, 0.0, 1, seed);
    HardyResult out;
    out.eigenvalue = pairs.front().first;
    out.constant = 1.0 / out.eigenvalue;
    const auto& x = pairs.front().second;
    std::vector<double> ax = A.apply(x), bx = B.apply(x);
    double rs = 0.0, nx = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        rs += sqr(ax[i] - out.eigenvalue * bx[i]);
        nx += sqr(x[i]);
    }
    out.residual = std::sqrt(rs / std::max(1e-300, nx));
    return out;
}

} // namespace alef
