#include "alef/geometry_cache.hpp"

namespace alef {

namespace {

struct FrameJets {
    Jet2 f;
    std::vector<Jet2> w;
};

FrameJets eval_frame(const BackgroundMetric& bg, double x) {
    FrameJets fj;
    fj.f = bg.frame_f(x);
    fj.w.resize(bg.n - 1);
    for (int k = 1; k < bg.n; ++k) fj.w[k - 1] = bg.frame_w(k, x);
    return fj;
}

} // namespace

double GeometryCache::jdens_at(double xq) const {
    double j = bg_->frame_f(xq).v;
    for (int k = 1; k < n_; ++k) j *= bg_->frame_w(k, xq).v;
    return j;
}

double GeometryCache::apply_d1(const double* u, size_t i) const {
    const Stencil& s = d1_[i];
    size_t b = (i == 0) ? 0 : (i == N_ - 1 ? N_ - 3 : i - 1);
    return s.c0 * u[b] + s.c1 * u[b + 1] + s.c2 * u[b + 2];
}

double GeometryCache::apply_d2(const double* u, size_t i) const {
    const Stencil& s = d2_[i];
    size_t b = (i == 0) ? 0 : (i == N_ - 1 ? N_ - 3 : i - 1);
    return s.c0 * u[b] + s.c1 * u[b + 1] + s.c2 * u[b + 2];
}

GeometryCache::GeometryCache(const BackgroundMetric& bg, const RadialGrid& grid)
    : bg_(&bg), grid_(&grid) {
    bg.validate_with(grid);
    n_ = bg.n;
    N_ = grid.size();
    inner_ = bg.inner_boundary(grid);

    x_.resize(N_); r_.resize(N_); f0_.resize(N_); df0_.resize(N_);
    w_.resize(N_ * (n_ - 1));
    s_.assign(N_, 0.0); rho_.resize(N_); j_.resize(N_); wq_.resize(N_);
    mu_.resize(N_ - 1);
    d1_.resize(N_); d2_.resize(N_);

    const size_t n3 = size_t(n_) * n_ * n_;
    const size_t n4 = n3 * n_;
    th_.assign(N_ * n3, 0.0);
    dth_.assign(N_ * n3, 0.0);
    cm_.assign(N_ * n3, 0.0);
    dcm_.assign(N_ * n3, 0.0);
    rm_.assign(N_ * n4, 0.0);
    rm0_zero_ = (bg.kind != BackgroundKind::eguchi_hanson);

    // node data
    std::vector<FrameJets> fj(N_);
    for (size_t i = 0; i < N_; ++i) {
        x_[i] = bg.chart_x(grid.nodes[i]);
        r_[i] = grid.nodes[i];
        fj[i] = eval_frame(bg, x_[i]);
        f0_[i] = fj[i].f.v;
        df0_[i] = fj[i].f.d;
        double j = fj[i].f.v;
        for (int k = 1; k < n_; ++k) {
            w_[i * (n_ - 1) + (k - 1)] = fj[i].w[k - 1].v;
            j *= fj[i].w[k - 1].v;
        }
        j_[i] = j;
    }

    // stencils
    for (size_t i = 1; i + 1 < N_; ++i) {
        const double hm = x_[i] - x_[i - 1], hp = x_[i + 1] - x_[i];
        d1_[i] = {-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))};
        d2_[i] = {2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))};
    }
    {
        const double h1 = x_[1] - x_[0], h2 = x_[2] - x_[1];
        d1_[0] = {-(2.0 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2),
                  -h1 / (h2 * (h1 + h2))};
        d2_[0] = {2.0 / (h1 * (h1 + h2)), -2.0 / (h1 * h2), 2.0 / (h2 * (h1 + h2))};
        const double g1 = x_[N_ - 2] - x_[N_ - 3], g2 = x_[N_ - 1] - x_[N_ - 2];
        d1_[N_ - 1] = {g2 / (g1 * (g1 + g2)), -(g1 + g2) / (g1 * g2),
                       (g1 + 2.0 * g2) / (g2 * (g1 + g2))};
        d2_[N_ - 1] = {2.0 / (g1 * (g1 + g2)), -2.0 / (g1 * g2), 2.0 / (g2 * (g1 + g2))};
    }

    // geodesic distance from the base point. Round-sphere reductions measure
    // from the apex/origin (f = 1, so s = r exactly, even when the grid
    // starts at r_min > 0); Eguchi-Hanson integrates F0 from the bolt.
    if (bg.kind == BackgroundKind::eguchi_hanson) {
        for (size_t i = 1; i < N_; ++i) {
            const double a = x_[i - 1], b = x_[i];
            const double fm = bg.frame_f(0.5 * (a + b)).v;
            s_[i] = s_[i - 1] + (b - a) / 6.0 * (f0_[i - 1] + 4.0 * fm + f0_[i]);
        }
    } else {
        for (size_t i = 0; i < N_; ++i) s_[i] = r_[i];
    }
    for (size_t i = 0; i < N_; ++i) rho_[i] = std::sqrt(1.0 + s_[i] * s_[i]);

    // quadrature weights: volume integral of J over the node cell, Simpson
    auto cell_int = [&](double a, double b) {
        const double m = 0.5 * (a + b);
        return (b - a) / 6.0 * (jdens_at(a) + 4.0 * jdens_at(m) + jdens_at(b));
    };
    for (size_t i = 0; i < N_; ++i) {
        const double lo = (i == 0) ? x_[0] : 0.5 * (x_[i - 1] + x_[i]);
        const double hi = (i + 1 == N_) ? x_[N_ - 1] : 0.5 * (x_[i] + x_[i + 1]);
        wq_[i] = bg.link_measure * (cell_int(lo, 0.5 * (lo + hi)) + cell_int(0.5 * (lo + hi), hi));
    }

    // flux coefficients mu = J/F0^2 at interval midpoints
    for (size_t i = 0; i + 1 < N_; ++i) {
        const double m = 0.5 * (x_[i] + x_[i + 1]);
        mu_[i] = jdens_at(m) / sqr(bg.frame_f(m).v);
    }

    // excluded inner-ball volume for apex-excluded grids: J = r^{n-1} there
    if (bg.kind != BackgroundKind::eguchi_hanson && grid.r_min > 0.0)
        inner_vol_ = bg.link_measure * std::pow(grid.r_min, double(n_)) / double(n_);

    // connection and commutators. At a center node the frame degenerates
    // (some W -> 0); its entries are left zero and never read.
    const size_t i0 = (inner_ == InnerBoundary::center) ? 1 : 0;
    auto TH = [&](size_t i, int a, int b, int c) -> double& {
        return th_[((i * n_ + a) * n_ + b) * n_ + c];
    };
    auto DTH = [&](size_t i, int a, int b, int c) -> double& {
        return dth_[((i * n_ + a) * n_ + b) * n_ + c];
    };
    auto CM = [&](size_t i, int a, int b, int c) -> double& {
        return cm_[((i * n_ + a) * n_ + b) * n_ + c];
    };

    for (size_t i = i0; i < N_; ++i) {
        const Jet2 F = fj[i].f;
        // gamma^c_{ab} and d/dx as value/derivative pairs
        // A_k = W'_k / (F0 W_k); B^k_{ij} = c^k_{ij} W_k/(W_i W_j)
        std::vector<double> A(n_, 0.0), dA(n_, 0.0);
        for (int k = 1; k < n_; ++k) {
            const Jet2& W = fj[i].w[k - 1];
            const double fw = F.v * W.v;
            const double dfw = F.d * W.v + F.v * W.d;
            A[k] = W.d / fw;
            dA[k] = (W.dd * fw - W.d * dfw) / (fw * fw);
        }
        // gamma values and x-derivatives
        std::vector<double> gam(n3, 0.0), dgam(n3, 0.0);
        auto G = [&](int a, int b, int c) -> double& { return gam[(size_t(a) * n_ + b) * n_ + c]; };
        auto DG = [&](int a, int b, int c) -> double& { return dgam[(size_t(a) * n_ + b) * n_ + c]; };
        for (int k = 1; k < n_; ++k) {
            G(0, k, k) = -A[k]; DG(0, k, k) = -dA[k];
            G(k, 0, k) = +A[k]; DG(k, 0, k) = +dA[k];
        }
        if (bg.bianchi) {
            for (int k = 1; k < n_; ++k)
                for (int a = 1; a < n_; ++a)
                    for (int b = 1; b < n_; ++b) {
                        const double c = bg.structure_c(k, a, b);
                        if (c == 0.0) continue;
                        const Jet2& Wk = fj[i].w[k - 1];
                        const Jet2& Wa = fj[i].w[a - 1];
                        const Jet2& Wb = fj[i].w[b - 1];
                        const double den = Wa.v * Wb.v;
                        const double dden = Wa.d * Wb.v + Wa.v * Wb.d;
                        G(a, b, k) = c * Wk.v / den;
                        DG(a, b, k) = c * (Wk.d * den - Wk.v * dden) / (den * den);
                    }
        }
        auto DCM = [&](size_t ii, int a, int b, int c) -> double& {
            return dcm_[((ii * n_ + a) * n_ + b) * n_ + c];
        };
        for (int a = 0; a < n_; ++a)
            for (int b = 0; b < n_; ++b)
                for (int c = 0; c < n_; ++c) {
                    CM(i, a, b, c) = G(a, b, c);
                    DCM(i, a, b, c) = DG(a, b, c);
                    // Koszul in the orthonormal frame:
                    // Gamma^c_{ab} = (gam_{ab,c} - gam_{bc,a} + gam_{ca,b}) / 2
                    TH(i, a, b, c) = 0.5 * (G(a, b, c) - G(b, c, a) + G(c, a, b));
                    DTH(i, a, b, c) = 0.5 * (DG(a, b, c) - DG(b, c, a) + DG(c, a, b));
                }
    }

    // analytic background curvature. Euclidean and cone backgrounds are flat:
    // the zero is exact by definition, not a numerical cancellation.
    if (bg.kind != BackgroundKind::euclidean && bg.kind != BackgroundKind::cone) {
        auto RM = [&](size_t i, int a, int b, int c, int d) -> double& {
            return rm_[(((i * n_ + a) * n_ + b) * n_ + c) * n_ + d];
        };
        for (size_t i = i0; i < N_; ++i) {
            const double inv_f = 1.0 / f0_[i];
            for (int a = 0; a < n_; ++a)
                for (int b = 0; b < n_; ++b)
                    for (int c = 0; c < n_; ++c)
                        for (int d = 0; d < n_; ++d) {
                            double v = 0.0;
                            if (a == 0) v += inv_f * dgamma0(i, b, c, d);
                            if (b == 0) v -= inv_f * dgamma0(i, a, c, d);
                            for (int e = 0; e < n_; ++e) {
                                v += gamma0(i, b, c, e) * gamma0(i, a, e, d);
                                v -= gamma0(i, a, c, e) * gamma0(i, b, e, d);
                                v -= comm(i, a, b, e) * gamma0(i, e, c, d);
                            }
                            RM(i, a, b, c, d) = v;
                        }
            if (!bg.bianchi && bg.link_kappa != 0.0) {
                const double W = w(i, 1);
                const double corr = bg.link_kappa / (W * W);
                for (int a = 1; a < n_; ++a)
                    for (int b = 1; b < n_; ++b)
                        for (int c = 1; c < n_; ++c)
                            for (int d = 1; d < n_; ++d)
                                RM(i, a, b, c, d) +=
                                    corr * ((a == d && b == c ? 1.0 : 0.0) -
                                            (a == c && b == d ? 1.0 : 0.0));
            }
        }
    }
}

} // namespace alef
