#include <doctest.h>

#include "alef/data_families.hpp"
#include "alef/norms.hpp"
#include "alef/operators.hpp"

using namespace alef;

namespace {

GeometryCache flat_geo(size_t N = 512, double rmax = 12.0) {
    static BackgroundMetric bg = background_euclidean(4);
    RadialGrid grid = build_grid(4, 0.0, rmax, N, 1.0);
    return GeometryCache(bg, grid);
}

GeometryCache eh_geo(size_t N = 512, double rmax = 21.0, double stretch = 1.006) {
    static BackgroundMetric bg = background_eguchi_hanson(1.0);
    RadialGrid grid = build_grid(4, 1.0, rmax, N, stretch);
    return GeometryCache(bg, grid);
}

double field_sup_diff(const TensorField& a, const TensorField& b, size_t lo, size_t hi) {
    double m = 0.0;
    for (size_t i = lo; i <= hi; ++i) {
        TensorField d = a;
        double s = 0.0;
        for (int c = 0; c < a.layout.count(); ++c)
            s += a.layout.multiplicity(c) * sqr(a.at(c, i) - b.at(c, i));
        (void)d;
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

} // namespace

TEST_CASE("flat background: stencil curvature path vanishes") {
    GeometryCache geo = flat_geo(256);
    ComponentLayout lay = ComponentLayout::of(geo.bg());
    TensorField h(lay, geo.nnodes());
    GeometryData gd = connection_curvature(geo, h);
    CHECK(gd.max_rm(geo) < 1e-12);
    CHECK(gd.max_ric(geo) < 1e-12);
}

TEST_CASE("finite-difference frame path: flat vanishes, eguchi-hanson converges") {
    {
        // the sampled-frame verification path carries the O(dx^2) stencil
        // residual of differentiating the 1/r connection coefficients
        double prev = 0.0;
        for (size_t N : {512u, 1024u}) {
            GeometryCache geo = flat_geo(N, 20.0);
            GeometryData gd = background_geometry_fd(geo);
            double worst = 0.0;
            for (size_t i = 3; i + 2 < geo.nnodes(); ++i) {
                if (geo.radius(i) < 1.0) continue; // coordinate center excluded
                double s = 0.0;
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) s += sqr(gd.ric_at(i, a, b));
                worst = std::max(worst, std::sqrt(s));
            }
            CHECK(worst < 1e-2);
            if (prev > 0.0) CHECK(prev / worst > 3.0);
            prev = worst;
        }
    }
    double prev = 0.0;
    for (size_t N : {1024u, 2048u}) {
        GeometryCache geo = eh_geo(N, 21.0, std::pow(1.006, 1024.0 / N));
        GeometryData gd = background_geometry_fd(geo);
        double worst = 0.0;
        for (size_t i = 3; i + 2 < geo.nnodes(); ++i) {
            if (geo.radius(i) < 3.0 || geo.radius(i) > 20.0) continue;
            double s = 0.0;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) s += sqr(gd.ric_at(i, a, b));
            worst = std::max(worst, std::sqrt(s));
        }
        if (prev > 0.0) CHECK(prev / worst > 3.0); // second-order shrink
        prev = worst;
    }
}

TEST_CASE("warped curvature of a cone-angle metric matches the closed form") {
    // g = dr^2 + (c r)^2 ghat: K(link,link) = (1 - c^2)/(c r)^2, radial flat
    GeometryCache geo = flat_geo(256, 10.0);
    ComponentLayout lay = ComponentLayout::of(geo.bg());
    const double c2 = 1.21; // (1 + h_tt) = c^2
    TensorField h(lay, geo.nnodes());
    for (size_t i = 0; i < geo.nnodes(); ++i) h.at(1, i) = c2 - 1.0;
    GeometryData gd = connection_curvature(geo, h);
    for (size_t i : {size_t(64), size_t(128), size_t(200)}) {
        const double r = geo.radius(i);
        const double expect = (1.0 - c2) / (c2 * r * r);
        // Rm_{ijji} = K(e_i, e_j) with the g-normalization of the frame:
        // frame vectors are g0-unit, so Rm(e_i,e_j,e_j,e_i) = K * (c^2)^2
        const double got = gd.rm_at(i, 1, 2, 2, 1);
        CHECK(got == doctest::Approx(expect * c2 * c2).epsilon(1e-9));
        CHECK(std::abs(gd.rm_at(i, 0, 1, 1, 0)) < 1e-10);
    }
}

TEST_CASE("deturck vector vanishes for the background and its scalings") {
    for (bool eh : {false, true}) {
        GeometryCache geo = eh ? eh_geo(256) : flat_geo(256);
        ComponentLayout lay = ComponentLayout::of(geo.bg());
        TensorField h(lay, geo.nnodes());
        VectorField v0 = deturck_vector(geo, h);
        double m = 0.0;
        for (size_t i = 0; i < geo.nnodes(); ++i)
            for (int c = 0; c < 4; ++c) m = std::max(m, std::abs(v0.at(c, i)));
        CHECK(m < 1e-12);
        // constant scaling: Christoffels are scale-invariant
        for (int c = 0; c < lay.count(); ++c)
            for (size_t i = 0; i < geo.nnodes(); ++i) h.at(c, i) = 0.44;
        VectorField v1 = deturck_vector(geo, h);
        m = 0.0;
        for (size_t i = 0; i < geo.nnodes(); ++i)
            for (int c = 0; c < 4; ++c) m = std::max(m, std::abs(v1.at(c, i)));
        CHECK(m < 1e-12);
    }
}

TEST_CASE("deturck vector agrees with the intrinsic divergence/trace form") {
    // V^k = g^{ij}(Gamma(g) - Gamma(g0))^k_{ij} against
    // g0(V, .) = -div_g g0 + (1/2) grad^g tr_g g0 (the sign fixed here; the
    // opposite overall sign fails this test)
    GeometryCache geo = eh_geo(512);
    ComponentLayout lay = ComponentLayout::of(geo.bg());
    TensorField h = random_smooth_field(geo, lay, 17u);
    h.scale(1e-3 / norm_inf(h));
    VectorField v = deturck_vector(geo, h);

    GeometryData gd = connection_curvature(geo, h);
    const int n = 4;
    const size_t N = geo.nnodes();
    // (div_g g0)_k = g^{ij} (nabla^g_i g0)_{jk}; (nabla^g_c g0)_{ab} uses
    // Gamma(g) on the constant frame components of g0 (the identity)
    double worst = 0.0, scale = 0.0;
    for (size_t i = 8; i + 8 < N; ++i) {
        Mat gi(n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) gi(a, b) = gd.ginv_at(i, a, b);
        // tr_g g0 = g^{ab} delta_ab
        // grad^g (tr_g g0)^k: via the nodal array path below
        double dv[kMaxDim] = {0};
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    // (nabla^g_a g0)_{bk} = -Gamma(g)^m_{ab} delta_mk - Gamma^m_{ak} delta_bm
                    s += gi(a, b) * (-gd.gam(i, a, b, k) - gd.gam(i, a, k, b));
                }
            dv[k] = s; // = (div_g g0)_k with the frame index lowered by g0
        }
        // numeric radial gradient of tr_g g0
        // build tr at i-1, i, i+1
        double tr[3];
        for (int o = -1; o <= 1; ++o) {
            Mat g = Mat::identity(n) + h.matrix(i + o);
            Mat giv = spd_inverse(g, "test");
            double t = 0.0;
            for (int a = 0; a < n; ++a) t += giv(a, a);
            tr[o + 1] = t;
        }
        const auto& st = geo.d1(i);
        const double dtr_dx = st.c0 * tr[0] + st.c1 * tr[1] + st.c2 * tr[2];
        // grad^g: raise with g^{..}; radial frame derivative e0 = (1/F0) d/dx
        for (int k = 0; k < n; ++k) {
            double grad_k = 0.0;
            for (int a = 0; a < n; ++a)
                grad_k += gi(k, a) * ((a == 0) ? dtr_dx / geo.f0(i) : 0.0);
            const double rhs = -dv[k] + 0.5 * grad_k;
            worst = std::max(worst, std::abs(v.at(k, i) - rhs));
            scale = std::max(scale, std::abs(v.at(k, i)));
        }
    }
    CHECK(scale > 1e-6);         // the test is not vacuous
    CHECK(worst < 0.02 * scale); // matches within discretization error
}

TEST_CASE("lichnerowicz on conformal data is the componentwise scalar heat operator") {
    GeometryCache geo = flat_geo(512, 16.0);
    ComponentLayout lay = ComponentLayout::of(geo.bg());
    TensorField h(lay, geo.nnodes());
    ScalarField phi(geo.nnodes());
    for (size_t i = 0; i < geo.nnodes(); ++i) {
        const double s = geo.s_dist(i);
        phi[i] = std::exp(-sqr(s - 6.0) / 4.0);
        h.at(0, i) = h.at(1, i) = phi[i];
    }
    TensorField lh = lichnerowicz(geo, h);
    ScalarField lphi = laplacian_scalar_flux(geo, phi);
    double worst = 0.0;
    for (size_t i = 1; i + 1 < geo.nnodes(); ++i) {
        worst = std::max(worst, std::abs(lh.at(0, i) - lphi[i]));
        worst = std::max(worst, std::abs(lh.at(1, i) - lphi[i]));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("lichnerowicz annihilates the parallel background metric") {
    GeometryCache geo = eh_geo(384);
    ComponentLayout lay = ComponentLayout::of(geo.bg());
    TensorField g0field(lay, geo.nnodes());
    for (int c = 0; c < lay.count(); ++c)
        for (size_t i = 0; i < geo.nnodes(); ++i) g0field.at(c, i) = 1.0;
    TensorField lg = lichnerowicz(geo, g0field);
    double m = 0.0;
    for (size_t i = 1; i + 1 < geo.nnodes(); ++i) m = std::max(m, std::sqrt(lg.norm2_at(i)));
    CHECK(m < 1e-10);
}

TEST_CASE("trace intertwines with the Lichnerowicz operator exactly") {
    for (bool eh : {false, true}) {
        GeometryCache geo = eh ? eh_geo(512) : flat_geo(512);
        for (unsigned seed = 0; seed < 20; ++seed) {
            ComponentLayout lay = ComponentLayout::of(geo.bg());
            TensorField h = random_smooth_field(geo, lay, 1000 + seed);
            TensorField lh = lichnerowicz(geo, h);
            ScalarField tr_lh = trace_g0(geo, lh);
            ScalarField lap_tr = laplacian_scalar_flux(geo, trace_g0(geo, h));
            double worst = 0.0;
            for (size_t i = 1; i + 1 < geo.nnodes(); ++i)
                worst = std::max(worst, std::abs(tr_lh[i] - lap_tr[i]));
            CHECK(worst < 1e-8);
        }
    }
}

TEST_CASE("divergence intertwining holds to discretization order") {
    // div(L h) = Delta(div h) residual shrinks at second order; the absolute
    // level at these resolutions sits far above 1e-8 (see the acceptance
    // suite for the honest measured values)
    double prev = 0.0;
    for (size_t N : {512u, 1024u, 2048u}) {
        GeometryCache geo = flat_geo(N);
        ComponentLayout lay = ComponentLayout::of(geo.bg());
        TensorField h = random_smooth_field(geo, lay, 7u);
        TensorField lh = lichnerowicz_machinery(geo, h);
        VectorField dv_lh = divergence_g0(geo, lh);
        VectorField lap_dv = laplacian_vector(geo, divergence_g0(geo, h));
        double worst = 0.0;
        for (size_t i = 3; i + 3 < geo.nnodes(); ++i)
            for (int c = 0; c < 4; ++c)
                worst = std::max(worst, std::abs(dv_lh.at(c, i) - lap_dv.at(c, i)));
        if (prev > 0.0) CHECK(prev / worst > 2.0);
        prev = worst;
    }
}

TEST_CASE("trace and divergence of the parallel metric") {
    GeometryCache geo = eh_geo(256);
    ComponentLayout lay = ComponentLayout::of(geo.bg());
    TensorField g0field(lay, geo.nnodes());
    for (int c = 0; c < lay.count(); ++c)
        for (size_t i = 0; i < geo.nnodes(); ++i) g0field.at(c, i) = 1.0;
    ScalarField tr = trace_g0(geo, g0field);
    VectorField dv = divergence_g0(geo, g0field);
    for (size_t i = 1; i + 1 < geo.nnodes(); ++i) {
        CHECK(tr[i] == doctest::Approx(4.0).epsilon(1e-14));
        for (int c = 0; c < 4; ++c) CHECK(std::abs(dv.at(c, i)) < 1e-13);
    }
}

TEST_CASE("divergence of a radial hessian matches the gradient-laplacian oracle") {
    GeometryCache geo = flat_geo(1024, 16.0);
    ComponentLayout lay = ComponentLayout::of(geo.bg());
    // phi radial gaussian: Hess phi = phi'' dr x dr + (phi'/r) (tangential)
    auto phi = [](double r) { return std::exp(-sqr(r - 6.0) / 3.0); };
    auto dphi = [&](double r) { return -2.0 * (r - 6.0) / 3.0 * phi(r); };
    auto d2phi = [&](double r) {
        return (-2.0 / 3.0 + sqr(2.0 * (r - 6.0) / 3.0)) * phi(r);
    };
    TensorField h(lay, geo.nnodes());
    for (size_t i = 1; i < geo.nnodes(); ++i) {
        const double r = geo.radius(i);
        h.at(0, i) = d2phi(r);
        h.at(1, i) = dphi(r) / r;
    }
    fill_center(geo, h);
    VectorField dv = divergence_g0(geo, h);
    // oracle: div(Hess phi) = grad(Delta phi): radial component
    auto lap = [&](double r) { return d2phi(r) + 3.0 * dphi(r) / r; };
    double worst = 0.0;
    for (size_t i = 8; i + 8 < geo.nnodes(); ++i) {
        const double r = geo.radius(i);
        const double dr = 1e-6 * std::max(1.0, r);
        const double oracle = (lap(r + dr) - lap(r - dr)) / (2.0 * dr);
        worst = std::max(worst, std::abs(dv.at(0, i) - oracle));
    }
    CHECK(worst < 2e-3); // O(dr^2) at this resolution
}

TEST_CASE("coordinate-form and direct evolution operators agree at second order") {
    double prev = 0.0;
    for (size_t N : {384u, 768u}) {
        GeometryCache geo = eh_geo(N, 21.0, std::pow(1.006, 384.0 / N));
        ComponentLayout lay = ComponentLayout::of(geo.bg());
        TensorField h = random_smooth_field(geo, lay, 3u);
        h.scale(1e-2 / norm_inf(h));
        TensorField a = ricci_deturck_rhs(geo, h);
        TensorField b = ricci_deturck_rhs_direct(geo, h);
        double worst = 0.0;
        for (size_t i = 2; i + 2 < geo.nnodes(); ++i) {
            // the bolt-adjacent stencils of the direct path carry a lower
            // order prefactor; compare where both paths are asymptotic
            if (geo.radius(i) < 1.3) continue;
            double s = 0.0;
            for (int c = 0; c < lay.count(); ++c)
                s += lay.multiplicity(c) * sqr(a.at(c, i) - b.at(c, i));
            worst = std::max(worst, std::sqrt(s));
        }
        if (prev > 0.0) CHECK(prev / worst > 2.5);
        prev = worst;
    }
}

TEST_CASE("evolution operator is stationary at the background and its scalings") {
    for (bool eh : {false, true}) {
        GeometryCache geo = eh ? eh_geo(256) : flat_geo(256);
        ComponentLayout lay = ComponentLayout::of(geo.bg());
        TensorField h(lay, geo.nnodes());
        TensorField r0 = ricci_deturck_rhs(geo, h);
        for (double v : r0.data) CHECK(v == 0.0); // bitwise fixed point
        for (int c = 0; c < lay.count(); ++c)
            for (size_t i = 0; i < geo.nnodes(); ++i) h.at(c, i) = 0.3;
        TensorField r1 = ricci_deturck_rhs(geo, h);
        double m = 0.0;
        for (size_t i = 0; i < geo.nnodes(); ++i) m = std::max(m, std::sqrt(r1.norm2_at(i)));
        CHECK(m < 1e-11);
    }
}

TEST_CASE("linearization of the evolution operator is the Lichnerowicz operator") {
    for (bool eh : {true, false}) {
        GeometryCache geo = eh ? eh_geo(512) : flat_geo(512);
        ComponentLayout lay = ComponentLayout::of(geo.bg());
        for (unsigned seed = 0; seed < 10; ++seed) {
            TensorField h = random_smooth_field(geo, lay, 50 + seed);
            h.scale(1.0 / norm_inf(h));
            double prev = 0.0;
            for (double eps : {1e-2, 5e-3}) {
                TensorField he = h;
                he.scale(eps);
                TensorField rhs = ricci_deturck_rhs(geo, he);
                TensorField lin = lichnerowicz_machinery(geo, he);
                TensorField diff = rhs;
                diff.axpy(-1.0, lin);
                const double e = norm_l2(geo, diff);
                if (prev > 0.0) {
                    const double ratio = prev / e;
                    CHECK(ratio > 3.5);
                    CHECK(ratio < 4.5);
                }
                prev = e;
            }
        }
    }
}

TEST_CASE("rhs split: zero input, exactness, quadratic remainder") {
    GeometryCache geo = eh_geo(512);
    ComponentLayout lay = ComponentLayout::of(geo.bg());
    {
        TensorField z(lay, geo.nnodes());
        RhsSplit s = rhs_expansion(geo, z);
        CHECK(norm_inf(s.total) == 0.0);
        CHECK(norm_inf(s.linear_part) == 0.0);
        CHECK(norm_inf(s.lie_part) == 0.0);
        CHECK(norm_inf(s.remainder) == 0.0);
    }
    TensorField h = random_smooth_field(geo, lay, 5u);
    h.scale(1.0 / norm_inf(h));
    // exactness: total = linear + lie + remainder by construction
    {
        TensorField he = h;
        he.scale(1e-2);
        RhsSplit s = rhs_expansion(geo, he);
        TensorField sum = s.linear_part;
        sum.axpy(1.0, s.lie_part);
        sum.axpy(1.0, s.remainder);
        sum.axpy(-1.0, s.total);
        CHECK(norm_inf(sum) < 1e-12 * std::max(1.0, norm_inf(s.total)));
    }
    // remainder scales quadratically: ||rem(eps h)||/eps^2 constant within 5%
    double base = 0.0;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        TensorField he = h;
        he.scale(eps);
        RhsSplit s = rhs_expansion(geo, he);
        const double q = norm_l2(geo, s.remainder) / (eps * eps);
        if (base == 0.0)
            base = q;
        else
            CHECK(q == doctest::Approx(base).epsilon(0.05));
    }
}

TEST_CASE("relabeling the two equal axes commutes with the operators") {
    GeometryCache geo = eh_geo(384);
    ComponentLayout lay = ComponentLayout::of(geo.bg());
    TensorField h = random_smooth_field(geo, lay, 23u);
    h.scale(1e-2 / norm_inf(h));
    auto swap12 = [&](const TensorField& f) {
        TensorField g = f;
        for (size_t i = 0; i < f.nnodes; ++i) {
            g.at(1, i) = f.at(2, i);
            g.at(2, i) = f.at(1, i);
        }
        return g;
    };
    TensorField a = ricci_deturck_rhs(geo, swap12(h));
    TensorField b = swap12(ricci_deturck_rhs(geo, h));
    double m = 0.0;
    for (size_t i = 0; i < geo.nnodes(); ++i) {
        double s = 0.0;
        for (int c = 0; c < lay.count(); ++c) s += sqr(a.at(c, i) - b.at(c, i));
        m = std::max(m, std::sqrt(s));
    }
    CHECK(m < 1e-13);
    TensorField la = lichnerowicz(geo, swap12(h));
    TensorField lb = swap12(lichnerowicz(geo, h));
    m = 0.0;
    for (size_t i = 0; i < geo.nnodes(); ++i) {
        double s = 0.0;
        for (int c = 0; c < lay.count(); ++c) s += sqr(la.at(c, i) - lb.at(c, i));
        m = std::max(m, std::sqrt(s));
    }
    CHECK(m < 1e-13);
}

TEST_CASE("flux-form operators are self-adjoint in the weighted inner product") {
    for (bool eh : {false, true}) {
        GeometryCache geo = eh ? eh_geo(256) : flat_geo(256);
        ComponentLayout lay = ComponentLayout::of(geo.bg());
        for (unsigned seed : {1u, 2u, 3u}) {
            TensorField u = random_smooth_field(geo, lay, 300 + seed);
            TensorField v = random_smooth_field(geo, lay, 400 + seed);
            const double a = inner_l2(geo, lichnerowicz(geo, u), v);
            const double b = inner_l2(geo, u, lichnerowicz(geo, v));
            CHECK(a == doctest::Approx(b).epsilon(1e-10));
        }
    }
}

TEST_CASE("positivity loss is reported with the offending node") {
    GeometryCache geo = flat_geo(64, 10.0);
    ComponentLayout lay = ComponentLayout::of(geo.bg());
    TensorField h(lay, geo.nnodes());
    h.at(0, 20) = -1.5;
    try {
        connection_curvature(geo, h);
        CHECK(false);
    } catch (const ComputeError& e) {
        CHECK(std::string(e.what()).find("node") != std::string::npos);
    }
}
