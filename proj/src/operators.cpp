#include "alef/operators.hpp"

#include <algorithm>
#include <cstring>

namespace alef {

namespace {

// Per-node scratch holding the frame matrices of h at the stencil nodes and
// the derived quantities of g = g0 + h.
struct NodeScratch {
    Mat H;         // h at the node
    Mat G;         // g = I + h
    Mat Gi;        // g^{-1}
    Mat Gx, Gxx;   // d/dx, d^2/dx^2 of the components
    std::array<Mat, kMaxDim> P; // (nabla^{g0} h)_{c,ab}, slot c = derivative
};

size_t eval_lo(const GeometryCache& geo) {
    return geo.inner() == InnerBoundary::center ? 1 : 0;
}

// stencil base index for node i (one-sided at the ends)
size_t stencil_base(const GeometryCache& geo, size_t i) {
    const size_t N = geo.nnodes();
    return (i == 0) ? 0 : (i == N - 1 ? N - 3 : i - 1);
}

// need_metric: the field is a metric perturbation and g = g0 + h must be
// positive definite (computes the inverse). Plain covariant-derivative
// machinery on arbitrary tensor fields passes false.
void load_scratch(const GeometryCache& geo, const TensorField& h, size_t i, NodeScratch& ns,
                  const char* where, bool need_metric = true) {
    const int n = geo.dim();
    const size_t b = stencil_base(geo, i);
    const Mat m0 = h.matrix(b), m1 = h.matrix(b + 1), m2 = h.matrix(b + 2);
    ns.H = h.matrix(i);
    ns.G = Mat::identity(n) + ns.H;
    if (need_metric) {
        try {
            ns.Gi = spd_inverse(ns.G, where);
        } catch (const ComputeError&) {
            throw ComputeError(std::string(where) +
                               ": metric lost positive definiteness at node " + std::to_string(i));
        }
    } else {
        ns.Gi = Mat::identity(n);
    }
    const auto& s1 = geo.d1(i);
    const auto& s2 = geo.d2(i);
    ns.Gx = s1.c0 * m0 + (s1.c1 * m1 + s1.c2 * m2);
    ns.Gxx = s2.c0 * m0 + (s2.c1 * m1 + s2.c2 * m2);

    // covariant derivative slices P[c]_{ab} = (nabla_{e_c} h)(e_a, e_b)
    const double invf = 1.0 / geo.f0(i);
    ns.P[0] = invf * ns.Gx;
    for (int c = 1; c < n; ++c) {
        Mat& p = ns.P[c];
        p = Mat(n);
        for (int a = 0; a < n; ++a)
            for (int bb = 0; bb < n; ++bb) {
                double v = 0.0;
                for (int m = 0; m < n; ++m)
                    v -= geo.gamma0(i, c, a, m) * ns.H(m, bb) +
                         geo.gamma0(i, c, bb, m) * ns.H(a, m);
                p(a, bb) = v;
            }
    }
}

// d/dx of P[c] for c != 0 (algebraic slices), used by Hessian terms
Mat dPc_dx(const GeometryCache& geo, const NodeScratch& ns, size_t i, int c) {
    const int n = geo.dim();
    Mat out(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double v = 0.0;
            for (int m = 0; m < n; ++m) {
                v -= geo.dgamma0(i, c, a, m) * ns.H(m, b) + geo.gamma0(i, c, a, m) * ns.Gx(m, b);
                v -= geo.dgamma0(i, c, b, m) * ns.H(a, m) + geo.gamma0(i, c, b, m) * ns.Gx(a, m);
            }
            out(a, b) = v;
        }
    return out;
}

// G^{dc}-contracted second covariant derivative of h at node i.
// weight = G^{-1} of the evolving metric (or identity for the plain trace).
Mat contracted_hessian(const GeometryCache& geo, const NodeScratch& ns, size_t i,
                       const Mat& weight) {
    const int n = geo.dim();
    const double invf = 1.0 / geo.f0(i);
    const double f = geo.f0(i), df = geo.df0(i);
    const double* g0 = geo.gamma0_block(i); // [d][c][m]
    Mat out(n);

    // (0,0): e0(P0) with P0 = Gx/F0
    {
        const double w00 = weight(0, 0);
        if (w00 != 0.0) {
            Mat h00 = (1.0 / (f * f)) * ns.Gxx - (df / (f * f * f)) * ns.Gx;
            out = out + w00 * h00;
        }
    }
    // (0,c), c != 0: e0(P_c); Gamma^._{0 .} of g0 vanishes in this frame
    for (int c = 1; c < n; ++c) {
        const double w = weight(0, c);
        if (w == 0.0) continue;
        out = out + (w * invf) * dPc_dx(geo, ns, i, c);
    }
    // (d,c) with d != 0: -Gamma^m_{dc} P_m - Gamma^m_{da} P_{c,mb} - Gamma^m_{db} P_{c,am}
    // restructured with the d-sums precontracted:
    //   T_m = sum_{d>=1,c} w(d,c) Gamma^m_{dc}
    //   S[c](a,m) = sum_{d>=1} w(d,c) Gamma^m_{da}
    double T[kMaxDim] = {0};
    std::array<Mat, kMaxDim> S;
    for (int c = 0; c < n; ++c) S[c] = Mat(n);
    for (int d = 1; d < n; ++d) {
        const double* gd = g0 + size_t(d) * n * n; // [c][m]
        for (int c = 0; c < n; ++c) {
            const double w = weight(d, c);
            if (w == 0.0) continue;
            for (int m = 0; m < n; ++m) T[m] += w * gd[c * n + m];
            for (int a = 0; a < n; ++a)
                for (int m = 0; m < n; ++m) S[c](a, m) += w * gd[a * n + m];
        }
    }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double v = 0.0;
            for (int m = 0; m < n; ++m) v -= T[m] * ns.P[m](a, b);
            for (int c = 0; c < n; ++c) {
                const Mat& Sc = S[c];
                const Mat& Pc = ns.P[c];
                double v2 = 0.0;
                for (int m = 0; m < n; ++m)
                    v2 += Sc(a, m) * Pc(m, b) + Sc(b, m) * Pc(a, m);
                v -= v2;
            }
            out(a, b) += v;
        }
    return out;
}

Mat rm_star(const GeometryCache& geo, size_t i, const Mat& H) {
    const int n = geo.dim();
    Mat out(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double v = 0.0;
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) v += geo.rm0(i, a, k, l, b) * H(k, l);
            out(a, b) = v;
        }
    return out;
}

} // namespace

double GeometryData::max_ric(const GeometryCache& geo) const {
    double m = 0.0;
    const size_t lo = eval_lo(geo);
    for (size_t i = lo; i < nnodes; ++i) {
        double s = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) s += sqr(ric_at(i, a, b));
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

double GeometryData::max_rm(const GeometryCache& geo) const {
    double m = 0.0;
    const size_t lo = eval_lo(geo);
    for (size_t i = lo; i < nnodes; ++i) {
        double s = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d) s += sqr(rm_at(i, a, b, c, d));
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

GeometryData connection_curvature(const GeometryCache& geo, const TensorField& h) {
    const int n = geo.dim();
    const size_t N = geo.nnodes();
    GeometryData gd;
    gd.n = n;
    gd.nnodes = N;
    const size_t n2 = size_t(n) * n, n3 = n2 * n, n4 = n3 * n;
    gd.gamma.assign(N * n3, 0.0);
    gd.rm.assign(N * n4, 0.0);
    gd.ric.assign(N * n2, 0.0);
    gd.scal.assign(N, 0.0);
    gd.ginv.assign(N * n2, 0.0);

    const size_t lo = eval_lo(geo);
    NodeScratch ns;
    std::vector<double> theta(n3), dtheta(n3), gam(n3), dgam(n3);

    for (size_t i = lo; i < N; ++i) {
        load_scratch(geo, h, i, ns, "connection_curvature");
        const double f = geo.f0(i), df = geo.df0(i);

        // Theta_{ab,c} and its x-derivative
        auto TH = [&](int a, int b, int c) -> double& { return theta[(size_t(a) * n + b) * n + c]; };
        auto DTH = [&](int a, int b, int c) -> double& { return dtheta[(size_t(a) * n + b) * n + c]; };
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) {
                    double v = 0.0, dv = 0.0;
                    if (a == 0) { v += ns.Gx(b, c) / f; dv += ns.Gxx(b, c) / f - df * ns.Gx(b, c) / (f * f); }
                    if (b == 0) { v += ns.Gx(a, c) / f; dv += ns.Gxx(a, c) / f - df * ns.Gx(a, c) / (f * f); }
                    if (c == 0) { v -= ns.Gx(a, b) / f; dv -= ns.Gxx(a, b) / f - df * ns.Gx(a, b) / (f * f); }
                    for (int m = 0; m < n; ++m) {
                        v += geo.comm(i, a, b, m) * ns.G(m, c) - geo.comm(i, b, c, m) * ns.G(m, a) +
                             geo.comm(i, c, a, m) * ns.G(m, b);
                        dv += geo.dcomm(i, a, b, m) * ns.G(m, c) + geo.comm(i, a, b, m) * ns.Gx(m, c);
                        dv -= geo.dcomm(i, b, c, m) * ns.G(m, a) + geo.comm(i, b, c, m) * ns.Gx(m, a);
                        dv += geo.dcomm(i, c, a, m) * ns.G(m, b) + geo.comm(i, c, a, m) * ns.Gx(m, b);
                    }
                    TH(a, b, c) = 0.5 * v;
                    DTH(a, b, c) = 0.5 * dv;
                }

        // Gamma^c_{ab} = G^{cd} Theta_{ab,d}; dGamma uses dG^{-1} = -G^{-1} Gx G^{-1}
        Mat dGi = (-1.0) * mul(ns.Gi, mul(ns.Gx, ns.Gi));
        auto GM = [&](int a, int b, int c) -> double& { return gam[(size_t(a) * n + b) * n + c]; };
        auto DGM = [&](int a, int b, int c) -> double& { return dgam[(size_t(a) * n + b) * n + c]; };
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) {
                    double v = 0.0, dv = 0.0;
                    for (int d = 0; d < n; ++d) {
                        v += ns.Gi(c, d) * TH(a, b, d);
                        dv += dGi(c, d) * TH(a, b, d) + ns.Gi(c, d) * DTH(a, b, d);
                    }
                    GM(a, b, c) = v;
                    DGM(a, b, c) = dv;
                    gd.gamma[((i * n + a) * n + b) * n + c] = v;
                }

        // curvature: Rm_{abcd} = <R(e_a,e_b)e_c, e_d>
        const double invf = 1.0 / f;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    for (int e = 0; e < n; ++e) {
                        double up = 0.0;
                        if (a == 0) up += invf * DGM(b, c, e);
                        if (b == 0) up -= invf * DGM(a, c, e);
                        for (int m = 0; m < n; ++m) {
                            up += GM(b, c, m) * GM(a, m, e) - GM(a, c, m) * GM(b, m, e);
                            up -= geo.comm(i, a, b, m) * GM(m, c, e);
                        }
                        for (int d = 0; d < n; ++d)
                            gd.rm[(((i * n + a) * n + b) * n + c) * n + d] += up * ns.G(e, d);
                    }

        // round-link curvature contribution for the warped reduction
        if (!geo.bg().bianchi && geo.bg().link_kappa != 0.0) {
            const double W = geo.w(i, 1);
            const double corr = geo.bg().link_kappa / (W * W * ns.G(1, 1));
            for (int a = 1; a < n; ++a)
                for (int b = 1; b < n; ++b)
                    for (int c = 1; c < n; ++c)
                        for (int d = 1; d < n; ++d)
                            gd.rm[(((i * n + a) * n + b) * n + c) * n + d] +=
                                corr * (ns.G(a, d) * ns.G(b, c) - ns.G(a, c) * ns.G(b, d));
        }

        // Ricci and scalar curvature
        double sc = 0.0;
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                double v = 0.0;
                for (int a = 0; a < n; ++a)
                    for (int d = 0; d < n; ++d)
                        v += ns.Gi(a, d) * gd.rm[(((i * n + a) * n + b) * n + c) * n + d];
                gd.ric[(i * n + b) * n + c] = v;
            }
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) sc += ns.Gi(b, c) * gd.ric[(i * n + b) * n + c];
        gd.scal[i] = sc;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) gd.ginv[(i * n + a) * n + b] = ns.Gi(a, b);
    }
    return gd;
}

GeometryData background_geometry(const GeometryCache& geo) {
    const int n = geo.dim();
    const size_t N = geo.nnodes();
    GeometryData gd;
    gd.n = n;
    gd.nnodes = N;
    const size_t n2 = size_t(n) * n, n3 = n2 * n, n4 = n3 * n;
    gd.gamma.assign(N * n3, 0.0);
    gd.rm.assign(N * n4, 0.0);
    gd.ric.assign(N * n2, 0.0);
    gd.scal.assign(N, 0.0);
    gd.ginv.assign(N * n2, 0.0);
    const size_t lo = eval_lo(geo);
    for (size_t i = lo; i < N; ++i) {
        for (int a = 0; a < n; ++a) {
            gd.ginv[(i * n + a) * n + a] = 1.0;
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    gd.gamma[((i * n + a) * n + b) * n + c] = geo.gamma0(i, a, b, c);
        }
        double sc = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d)
                        gd.rm[(((i * n + a) * n + b) * n + c) * n + d] = geo.rm0(i, a, b, c, d);
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                double v = 0.0;
                for (int a = 0; a < n; ++a) v += geo.rm0(i, a, b, c, a);
                gd.ric[(i * n + b) * n + c] = v;
                if (b == c) sc += v;
            }
        gd.scal[i] = sc;
    }
    return gd;
}

TensorField ricci(const GeometryCache& geo, const TensorField& h) {
    GeometryData gd = connection_curvature(geo, h);
    TensorField out(h.layout, geo.nnodes());
    const int n = geo.dim();
    const size_t lo = eval_lo(geo);
    for (size_t i = lo; i < geo.nnodes(); ++i) {
        Mat m(n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) m(a, b) = gd.ric_at(i, a, b);
        out.set_from_matrix(i, m);
    }
    if (geo.inner() == InnerBoundary::center) fill_center(geo, out);
    return out;
}

VectorField deturck_vector(const GeometryCache& geo, const TensorField& h) {
    GeometryData gd = connection_curvature(geo, h);
    const int n = geo.dim();
    const size_t N = geo.nnodes();
    VectorField v(n, N);
    const size_t lo = eval_lo(geo);
    for (size_t i = lo; i < N; ++i)
        for (int c = 0; c < n; ++c) {
            double s = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    s += gd.ginv_at(i, a, b) * (gd.gam(i, a, b, c) - geo.gamma0(i, a, b, c));
            v.at(c, i) = s;
        }
    return v;
}

TensorField lie_derivative_metric(const GeometryCache& geo, const VectorField& v,
                                  const TensorField& h) {
    GeometryData gd = connection_curvature(geo, h);
    const int n = geo.dim();
    const size_t N = geo.nnodes();
    TensorField out(h.layout, N);
    const size_t lo = eval_lo(geo);
    for (size_t i = lo; i < N; ++i) {
        const Mat G = Mat::identity(n) + h.matrix(i);
        const double invf = 1.0 / geo.f0(i);
        // nabla_a V^c = e_a(V^c) + Gamma(g)^c_{am} V^m
        Mat nv(n); // nv(a,c)
        for (int a = 0; a < n; ++a)
            for (int c = 0; c < n; ++c) {
                double s = (a == 0) ? invf * geo.apply_d1(v.data.data() + size_t(c) * N, i) : 0.0;
                for (int m = 0; m < n; ++m) s += gd.gam(i, a, m, c) * v.at(m, i);
                nv(a, c) = s;
            }
        Mat lie(n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double s = 0.0;
                for (int c = 0; c < n; ++c) s += G(c, b) * nv(a, c) + G(c, a) * nv(b, c);
                lie(a, b) = s;
            }
        out.set_from_matrix(i, lie);
    }
    return out;
}

TensorField ricci_deturck_rhs(const GeometryCache& geo, const TensorField& h) {
    const int n = geo.dim();
    const size_t N = geo.nnodes();
    TensorField out(h.layout, N);
    NodeScratch ns;
    const bool flat_bg = geo.rm0_zero();

    for (size_t i = 1; i + 1 < N; ++i) {
        load_scratch(geo, h, i, ns, "ricci_deturck_rhs");
        Mat rhs = contracted_hessian(geo, ns, i, ns.Gi);

        if (!flat_bg) {
            // -g^{kl} g_{ip} Rm0_{jklp} - g^{kl} g_{jp} Rm0_{iklp}, minus its
            // h = 0 value so the background is an exact fixed point
            Mat R1(n); // R1(j,p) = G^{kl} Rm0_{jklp}
            Mat R10(n);
            for (int j = 0; j < n; ++j)
                for (int p = 0; p < n; ++p) {
                    double s = 0.0, s0 = 0.0;
                    for (int k = 0; k < n; ++k) {
                        s0 += geo.rm0(i, j, k, k, p);
                        for (int l = 0; l < n; ++l) s += ns.Gi(k, l) * geo.rm0(i, j, k, l, p);
                    }
                    R1(j, p) = s;
                    R10(j, p) = s0;
                }
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    double s = 0.0;
                    for (int p = 0; p < n; ++p) {
                        s -= ns.G(a, p) * R1(b, p) + ns.G(b, p) * R1(a, p);
                        s += (a == p ? R10(b, p) : 0.0) + (b == p ? R10(a, p) : 0.0);
                    }
                    rhs(a, b) += s;
                }
        }

        // quadratic gradient terms
        std::array<Mat, kMaxDim> W2, U;
        for (int c = 0; c < n; ++c) W2[c] = mul(ns.Gi, mul(ns.P[c], ns.Gi));
        for (int b = 0; b < n; ++b) {
            U[b] = Mat(n);
            for (int j = 0; j < n; ++j)
                for (int p = 0; p < n; ++p) {
                    double su = 0.0;
                    for (int a = 0; a < n; ++a) su += ns.Gi(a, b) * ns.P[a](j, p);
                    U[b](j, p) = su;
                }
        }
        // C1_{ji} = sum_b (U[b] Gi P[b])_{ji}
        Mat C1(n);
        for (int b = 0; b < n; ++b) C1 = C1 + mul(U[b], mul(ns.Gi, ns.P[b]));

        // quadratic gradient terms in Shi's arrangement: the mixed term is
        // added, the three aligned-derivative products are subtracted. (The
        // two paths -2 Ric + Lie and this coordinate form are validated
        // against each other; see the operator tests.)
        for (int a = 0; a < n; ++a)
            for (int b2 = 0; b2 < n; ++b2) {
                double t1 = 0.0, t2 = 0.0, c2 = 0.0, c3 = 0.0;
                for (int p = 0; p < n; ++p)
                    for (int q = 0; q < n; ++q) {
                        t1 += W2[a](p, q) * ns.P[b2](p, q);
                        t2 += U[q](b2, p) * U[p](a, q);
                        c2 += W2[b2](q, p) * ns.P[p](a, q);
                        c3 += W2[a](q, p) * ns.P[p](b2, q);
                    }
                rhs(a, b2) += 0.5 * t1 + t2 - C1(b2, a) - c2 - c3;
            }
        out.set_from_matrix(i, rhs);
    }
    return out;
}

TensorField ricci_deturck_rhs_direct(const GeometryCache& geo, const TensorField& h) {
    TensorField ric = ricci(geo, h);
    VectorField v = deturck_vector(geo, h);
    TensorField lie = lie_derivative_metric(geo, v, h);
    TensorField out = lie;
    out.axpy(-2.0, ric);
    // evolution range: endpoints pinned like the coordinate-form path
    for (int c = 0; c < out.layout.count(); ++c) {
        out.at(c, 0) = 0.0;
        out.at(c, geo.nnodes() - 1) = 0.0;
    }
    return out;
}

double flux_cell_volume(const GeometryCache& geo, size_t i) {
    if (geo.inner() == InnerBoundary::center && i == 1) return geo.weight(0) + geo.weight(1);
    return geo.weight(i);
}

void flux_radial_apply(const GeometryCache& geo, const double* u, double* out) {
    const size_t N = geo.nnodes();
    const double lm = geo.bg().link_measure;
    const bool center = geo.inner() == InnerBoundary::center;
    out[0] = 0.0;
    out[N - 1] = 0.0;
    for (size_t i = 1; i + 1 < N; ++i) {
        const double dxp = geo.x(i + 1) - geo.x(i);
        const double dxm = geo.x(i) - geo.x(i - 1);
        const double fp = lm * geo.mu_half(i) * (u[i + 1] - u[i]) / dxp;
        const double fm = (center && i == 1) ? 0.0 : lm * geo.mu_half(i - 1) * (u[i] - u[i - 1]) / dxm;
        out[i] = (fp - fm) / flux_cell_volume(geo, i);
    }
}

Mat algebraic_coupling(const GeometryCache& geo, const ComponentLayout& lay, size_t i,
                       bool with_curvature) {
    const int n = geo.dim();
    const int nc = lay.count();
    Mat K(nc);
    TensorField unit(lay, 1);
    for (int beta = 0; beta < nc; ++beta) {
        for (int c = 0; c < nc; ++c) unit.at(c, 0) = (c == beta) ? 1.0 : 0.0;
        const Mat H = unit.matrix(0);
        // P^alg_{c,ab} = -Gamma^m_{ca} H_{mb} - Gamma^m_{cb} H_{am}
        std::array<Mat, kMaxDim> P;
        for (int c = 0; c < n; ++c) {
            P[c] = Mat(n);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    double v = 0.0;
                    for (int m = 0; m < n; ++m)
                        v -= geo.gamma0(i, c, a, m) * H(m, b) + geo.gamma0(i, c, b, m) * H(a, m);
                    P[c](a, b) = v;
                }
        }
        Mat out(n);
        for (int c = 0; c < n; ++c)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    double v = 0.0;
                    for (int m = 0; m < n; ++m) {
                        v -= geo.gamma0(i, c, c, m) * P[m](a, b);
                        v -= geo.gamma0(i, c, a, m) * P[c](m, b);
                        v -= geo.gamma0(i, c, b, m) * P[c](a, m);
                    }
                    out(a, b) += v;
                }
        if (with_curvature) out = out + 2.0 * rm_star(geo, i, H);
        // project the output matrix onto the component basis
        TensorField proj(lay, 1);
        proj.set_from_matrix(0, out);
        for (int alpha = 0; alpha < nc; ++alpha) K(alpha, beta) = proj.at(alpha, 0);
    }
    return K;
}

static TensorField flux_operator(const GeometryCache& geo, const TensorField& h,
                                 bool with_curvature) {
    const size_t N = geo.nnodes();
    const int nc = h.layout.count();
    TensorField out(h.layout, N);
    for (int c = 0; c < nc; ++c) flux_radial_apply(geo, h.comp(c), out.comp(c));
    for (size_t i = 1; i + 1 < N; ++i) {
        const Mat K = algebraic_coupling(geo, h.layout, i, with_curvature);
        for (int a = 0; a < nc; ++a) {
            double v = 0.0;
            for (int b = 0; b < nc; ++b) v += K(a, b) * h.at(b, i);
            out.at(a, i) += v;
        }
    }
    return out;
}

TensorField lichnerowicz(const GeometryCache& geo, const TensorField& h) {
    return flux_operator(geo, h, true);
}

TensorField rough_laplacian_tensor(const GeometryCache& geo, const TensorField& h) {
    return flux_operator(geo, h, false);
}

ScalarField trace_g0(const GeometryCache& geo, const TensorField& h) {
    const size_t N = geo.nnodes();
    ScalarField t(N);
    const int n = geo.dim();
    for (size_t i = 0; i < N; ++i) {
        const Mat m = h.matrix(i);
        double s = 0.0;
        for (int a = 0; a < n; ++a) s += m(a, a);
        t[i] = s;
    }
    return t;
}

VectorField divergence_g0(const GeometryCache& geo, const TensorField& h) {
    const int n = geo.dim();
    const size_t N = geo.nnodes();
    VectorField out(n, N);
    NodeScratch ns;
    for (size_t i = eval_lo(geo); i < N; ++i) {
        load_scratch(geo, h, i, ns, "divergence_g0", false);
        for (int b = 0; b < n; ++b) {
            double s = 0.0;
            for (int c = 0; c < n; ++c) s += ns.P[c](c, b);
            out.at(b, i) = s;
        }
    }
    // invariant vector components vanish by parity at a smooth center
    return out;
}

ScalarField laplacian_scalar(const GeometryCache& geo, const ScalarField& u) {
    const size_t N = geo.nnodes();
    ScalarField out(N);
    const int n = geo.dim();
    for (size_t i = 1; i + 1 < N; ++i) {
        const double f = geo.f0(i), df = geo.df0(i);
        const double d1 = geo.apply_d1(u.data.data(), i);
        const double d2 = geo.apply_d2(u.data.data(), i);
        double v = d2 / (f * f) - df * d1 / (f * f * f);
        for (int c = 1; c < n; ++c) {
            // -Gamma^0_{cc} * (grad u)_0 with Gamma^0_{cc} = -W'_c/(F0 W_c)
            v -= geo.gamma0(i, c, c, 0) * d1 / f;
        }
        out[i] = v;
    }
    return out;
}

ScalarField laplacian_scalar_flux(const GeometryCache& geo, const ScalarField& u) {
    ScalarField out(geo.nnodes());
    flux_radial_apply(geo, u.data.data(), out.data.data());
    return out;
}

GeometryData background_geometry_fd(const GeometryCache& geo) {
    // Recompute gamma0, its derivative and the curvature from nodal samples
    // of F0, W_k alone, replacing every analytic derivative by a stencil.
    const int n = geo.dim();
    const size_t N = geo.nnodes();
    GeometryData gd;
    gd.n = n;
    gd.nnodes = N;
    const size_t n2 = size_t(n) * n, n3 = n2 * n, n4 = n3 * n;
    gd.gamma.assign(N * n3, 0.0);
    gd.rm.assign(N * n4, 0.0);
    gd.ric.assign(N * n2, 0.0);
    gd.scal.assign(N, 0.0);
    gd.ginv.assign(N * n2, 0.0);

    // nodal samples
    std::vector<double> F(N), W((n - 1) * N);
    for (size_t i = 0; i < N; ++i) {
        F[i] = geo.f0(i);
        for (int k = 1; k < n; ++k) W[(k - 1) * N + i] = geo.w(i, k);
    }
    // stencil first derivatives of the samples
    std::vector<double> dF(N, 0.0), dW((n - 1) * N, 0.0);
    for (size_t i = 0; i < N; ++i) {
        dF[i] = geo.apply_d1(F.data(), i);
        for (int k = 1; k < n; ++k) dW[(k - 1) * N + i] = geo.apply_d1(&W[(k - 1) * N], i);
    }
    // gamma (frame commutators) from the sampled data, then gamma0 by Koszul
    const size_t lo = (geo.inner() == InnerBoundary::center) ? 2 : 1;
    std::vector<double> th(N * n3, 0.0), cmfd(N * n3, 0.0);
    auto TH = [&](size_t i, int a, int b, int c) -> double& {
        return th[((i * n + a) * n + b) * n + c];
    };
    auto CMF = [&](size_t i, int a, int b, int c) -> double& {
        return cmfd[((i * n + a) * n + b) * n + c];
    };
    for (size_t i = lo; i < N; ++i) {
        std::vector<double> gam(n3, 0.0);
        auto G = [&](int a, int b, int c) -> double& { return gam[(size_t(a) * n + b) * n + c]; };
        for (int k = 1; k < n; ++k) {
            const double A = dW[(k - 1) * N + i] / (F[i] * W[(k - 1) * N + i]);
            G(0, k, k) = -A;
            G(k, 0, k) = +A;
        }
        if (geo.bg().bianchi) {
            for (int k = 1; k < n; ++k)
                for (int a = 1; a < n; ++a)
                    for (int b = 1; b < n; ++b) {
                        const double cc = geo.bg().structure_c(k, a, b);
                        if (cc != 0.0)
                            G(a, b, k) = cc * W[(k - 1) * N + i] /
                                         (W[(a - 1) * N + i] * W[(b - 1) * N + i]);
                    }
        }
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) {
                    CMF(i, a, b, c) = G(a, b, c);
                    TH(i, a, b, c) = 0.5 * (G(a, b, c) - G(b, c, a) + G(c, a, b));
                    gd.gamma[((i * n + a) * n + b) * n + c] = TH(i, a, b, c);
                }
    }
    // curvature with stencil-differentiated gamma0
    const size_t lo2 = lo + 1;
    for (size_t i = lo2; i + 1 < N; ++i) {
        const double invf = 1.0 / F[i];
        double sc = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d) {
                        double v = 0.0;
                        if (a == 0 || b == 0) {
                            // stencil d/dx of Gamma^d_{bc} and Gamma^d_{ac}
                            const auto& s1 = geo.d1(i);
                            auto dgam = [&](int aa, int bb, int cc) {
                                return s1.c0 * TH(i - 1, aa, bb, cc) + s1.c1 * TH(i, aa, bb, cc) +
                                       s1.c2 * TH(i + 1, aa, bb, cc);
                            };
                            if (a == 0) v += invf * dgam(b, c, d);
                            if (b == 0) v -= invf * dgam(a, c, d);
                        }
                        for (int e = 0; e < n; ++e) {
                            v += TH(i, b, c, e) * TH(i, a, e, d);
                            v -= TH(i, a, c, e) * TH(i, b, e, d);
                            v -= CMF(i, a, b, e) * TH(i, e, c, d);
                        }
                        gd.rm[(((i * n + a) * n + b) * n + c) * n + d] = v;
                    }
        if (!geo.bg().bianchi && geo.bg().link_kappa != 0.0) {
            const double Wl = geo.w(i, 1);
            const double corr = geo.bg().link_kappa / (Wl * Wl);
            for (int a = 1; a < n; ++a)
                for (int b = 1; b < n; ++b)
                    for (int c = 1; c < n; ++c)
                        for (int d = 1; d < n; ++d)
                            gd.rm[(((i * n + a) * n + b) * n + c) * n + d] +=
                                corr * ((a == d && b == c ? 1.0 : 0.0) -
                                        (a == c && b == d ? 1.0 : 0.0));
        }
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                double v = 0.0;
                for (int a = 0; a < n; ++a) v += gd.rm[(((i * n + a) * n + b) * n + c) * n + a];
                gd.ric[(i * n + b) * n + c] = v;
                if (b == c) sc += v;
            }
        gd.scal[i] = sc;
        for (int a = 0; a < n; ++a) gd.ginv[(i * n + a) * n + a] = 1.0;
    }
    return gd;
}

VectorField laplacian_vector(const GeometryCache& geo, const VectorField& v) {
    const int n = geo.dim();
    const size_t N = geo.nnodes();
    VectorField out(n, N);
    // (nabla v)_{c,b} = e_c(v_b) - Gamma^m_{cb} v_m
    std::vector<double> pv(size_t(n) * n * N, 0.0); // pv[(c*n+b)*N + i]
    for (size_t i = 1; i + 1 < N; ++i) {
        const double invf = 1.0 / geo.f0(i);
        for (int c = 0; c < n; ++c)
            for (int b = 0; b < n; ++b) {
                double s = (c == 0) ? invf * geo.apply_d1(v.data.data() + size_t(b) * N, i) : 0.0;
                for (int m = 0; m < n; ++m) s -= geo.gamma0(i, c, b, m) * v.at(m, i);
                pv[(size_t(c) * n + b) * N + i] = s;
            }
    }
    const size_t lo = std::max<size_t>(2, eval_lo(geo) + 1);
    for (size_t i = lo; i + 2 < N; ++i) {
        const double invf = 1.0 / geo.f0(i);
        for (int b = 0; b < n; ++b) {
            double s = 0.0;
            // (0,0) term: e_0 (nabla v)_{0,b}
            s += invf * geo.apply_d1(&pv[(0 * size_t(n) + b) * N], i);
            for (int m = 0; m < n; ++m)
                s -= geo.gamma0(i, 0, b, m) * pv[(0 * size_t(n) + m) * N + i];
            for (int c = 1; c < n; ++c) {
                for (int m = 0; m < n; ++m) {
                    s -= geo.gamma0(i, c, c, m) * pv[(size_t(m) * n + b) * N + i];
                    s -= geo.gamma0(i, c, b, m) * pv[(size_t(c) * n + m) * N + i];
                }
            }
            out.at(b, i) = s;
        }
    }
    return out;
}

double grad_norm2_at(const GeometryCache& geo, const TensorField& h, size_t i) {
    const size_t N = geo.nnodes();
    if (i == 0 || i + 1 >= N) return 0.0;
    NodeScratch ns;
    load_scratch(geo, h, i, ns, "grad_norm2_at", false);
    const int n = geo.dim();
    double s = 0.0;
    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) s += sqr(ns.P[c](a, b));
    return s;
}

double hess_norm2_at(const GeometryCache& geo, const TensorField& h, size_t i) {
    const size_t N = geo.nnodes();
    if (i < 2 || i + 2 >= N) return 0.0;
    // full rank-4 second derivative: reuse contracted_hessian with unit
    // weights on each (d,c) pair
    NodeScratch ns;
    load_scratch(geo, h, i, ns, "hess_norm2_at", false);
    const int n = geo.dim();
    double s = 0.0;
    Mat w(n);
    for (int d = 0; d < n; ++d)
        for (int c = 0; c < n; ++c) {
            w.set_zero();
            w(d, c) = 1.0;
            Mat hdc = contracted_hessian(geo, ns, i, w);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) s += sqr(hdc(a, b));
        }
    return s;
}

TensorField lichnerowicz_at(const GeometryCache& geo, const TensorField& hbar,
                            const TensorField& h) {
    GeometryData gd = connection_curvature(geo, hbar);
    const int n = geo.dim();
    const size_t N = geo.nnodes();
    TensorField out(h.layout, N);

    // pass 1: (nabla^gbar h)_{c,ab} on the grid
    std::vector<double> P(size_t(n) * n * n * N, 0.0);
    auto PP = [&](int c, int a, int b, size_t i) -> double& {
        return P[((size_t(c) * n + a) * n + b) * N + i];
    };
    const size_t lo = std::max<size_t>(1, eval_lo(geo));
    for (size_t i = lo; i + 1 < N; ++i) {
        const double invf = 1.0 / geo.f0(i);
        const Mat H = h.matrix(i);
        for (int c = 0; c < n; ++c)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    double s = 0.0;
                    if (c == 0) {
                        // e_0(h_{ab}): stencil on the component arrays
                        const size_t sbase = stencil_base(geo, i);
                        const Mat m0 = h.matrix(sbase), m1 = h.matrix(sbase + 1),
                                  m2 = h.matrix(sbase + 2);
                        const auto& st = geo.d1(i);
                        s += invf * (st.c0 * m0(a, b) + st.c1 * m1(a, b) + st.c2 * m2(a, b));
                    }
                    for (int m = 0; m < n; ++m)
                        s -= gd.gam(i, c, a, m) * H(m, b) + gd.gam(i, c, b, m) * H(a, m);
                    PP(c, a, b, i) = s;
                }
    }
    // pass 2: gbar^{dc} nabla_d (nabla h)_c + curvature terms
    for (size_t i = lo + 1; i + 2 < N; ++i) {
        const double invf = 1.0 / geo.f0(i);
        const Mat Gi = [&] {
            Mat g(n);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) g(a, b) = gd.ginv_at(i, a, b);
            return g;
        }();
        Mat acc(n);
        for (int d = 0; d < n; ++d)
            for (int c = 0; c < n; ++c) {
                const double w = Gi(d, c);
                if (w == 0.0) continue;
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) {
                        double s = 0.0;
                        if (d == 0) s += invf * geo.apply_d1(&P[((size_t(c) * n + a) * n + b) * N], i);
                        for (int m = 0; m < n; ++m) {
                            s -= gd.gam(i, d, c, m) * PP(m, a, b, i);
                            s -= gd.gam(i, d, a, m) * PP(c, m, b, i);
                            s -= gd.gam(i, d, b, m) * PP(c, a, m, i);
                        }
                        acc(a, b) += w * s;
                    }
            }
        // + 2 Rm(gbar)*h with gbar-raised indices, - Ric o h - h o Ric
        const Mat H = h.matrix(i);
        Mat HR = mul(Gi, mul(H, Gi)); // h^{kl}
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double s = 0.0;
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) s += gd.rm_at(i, a, k, l, b) * HR(k, l);
                acc(a, b) += 2.0 * s;
            }
        Mat Ric(n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) Ric(a, b) = gd.ric_at(i, a, b);
        Mat RH = mul(Ric, mul(Gi, H));
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) acc(a, b) -= RH(a, b) + RH(b, a);
        out.set_from_matrix(i, acc);
    }
    return out;
}

RhsSplit rhs_expansion(const GeometryCache& geo, const TensorField& h, const TensorField* hbar) {
    RhsSplit out;
    const size_t N = geo.nnodes();
    if (hbar == nullptr) {
        // gbar = g0: the Lie block vanishes identically and the linear part is
        // the Lichnerowicz operator in the evolution discretization.
        out.total = ricci_deturck_rhs(geo, h);
        out.lie_part = TensorField(h.layout, N);
        out.linear_part = lichnerowicz_machinery(geo, h);
        out.remainder = out.total;
        out.remainder.axpy(-1.0, out.linear_part);
        return out;
    }
    // stationarity check of gbar
    TensorField rbar = ricci_deturck_rhs(geo, *hbar);
    double res = 0.0;
    for (size_t i = 0; i < N; ++i) res = std::max(res, std::sqrt(rbar.norm2_at(i)));
    if (res > 1e-3)
        throw InputError("rhs_expansion: gbar is not stationary (residual " + std::to_string(res) +
                         ")");
    GeometryData gd = connection_curvature(geo, *hbar);
    const int n = geo.dim();
    // W^k = h_{pq} gbar^{pi} gbar^{qj} (Gamma(gbar) - Gamma(g0))^k_{ij}
    VectorField W(n, N);
    const size_t lo = std::max<size_t>(1, eval_lo(geo));
    for (size_t i = lo; i < N; ++i) {
        Mat Gi(n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) Gi(a, b) = gd.ginv_at(i, a, b);
        const Mat H = h.matrix(i);
        const Mat HU = mul(Gi, mul(H, Gi));
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    s += HU(a, b) * (gd.gam(i, a, b, k) - geo.gamma0(i, a, b, k));
            W.at(k, i) = s;
        }
    }
    out.lie_part = lie_derivative_metric(geo, W, *hbar);
    out.lie_part.scale(-1.0);
    out.linear_part = lichnerowicz_at(geo, *hbar, h);
    TensorField gph = *hbar;
    gph.axpy(1.0, h);
    out.total = ricci_deturck_rhs(geo, gph);
    out.total.axpy(-1.0, rbar);
    out.remainder = out.total;
    out.remainder.axpy(-1.0, out.linear_part);
    out.remainder.axpy(-1.0, out.lie_part);
    return out;
}

void fill_center(const GeometryCache& geo, TensorField& h) {
    if (geo.inner() != InnerBoundary::center) return;
    const double x1 = geo.x(1), x2 = geo.x(2);
    const double den = x2 * x2 - x1 * x1;
    for (int c = 0; c < h.layout.count(); ++c) {
        if (h.layout.odd_at_center(c)) {
            h.at(c, 0) = 0.0;
        } else {
            h.at(c, 0) = (x2 * x2 * h.at(c, 1) - x1 * x1 * h.at(c, 2)) / den;
        }
    }
}

double max_inverse_metric_eigen(const GeometryCache& geo, const TensorField& h) {
    const int n = geo.dim();
    double worst = 1.0;
    for (size_t i = 0; i < geo.nnodes(); ++i) {
        const Mat m = h.matrix(i);
        // Gershgorin lower bound on eigenvalues of g = I + h
        for (int a = 0; a < n; ++a) {
            double offd = 0.0;
            for (int b = 0; b < n; ++b)
                if (b != a) offd += std::abs(m(a, b));
            const double lo = 1.0 + m(a, a) - offd;
            if (lo <= 0.0)
                throw ComputeError("max_inverse_metric_eigen: metric degenerate at node " +
                                   std::to_string(i));
            worst = std::max(worst, 1.0 / lo);
        }
    }
    return worst;
}

TensorField lichnerowicz_machinery(const GeometryCache& geo, const TensorField& h) {
    // linearization of the coordinate-form evolution operator at g0:
    // trace of the g0-Hessian plus 2 Rm0 *
    const int n = geo.dim();
    const size_t N = geo.nnodes();
    TensorField out(h.layout, N);
    NodeScratch ns;
    const Mat id = Mat::identity(n);
    for (size_t i = 1; i + 1 < N; ++i) {
        load_scratch(geo, h, i, ns, "lichnerowicz_machinery", false);
        Mat acc = contracted_hessian(geo, ns, i, id);
        acc = acc + 2.0 * rm_star(geo, i, ns.H);
        out.set_from_matrix(i, acc);
    }
    return out;
}

} // namespace alef
