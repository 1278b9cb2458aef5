#include "alef/data_families.hpp"
#include "alef/norms.hpp"

#include <algorithm>

namespace alef {

DataFamily parse_family(const std::string& name) {
    if (name == "gaussian") return DataFamily::gaussian;
    if (name == "tt_bump") return DataFamily::tt_bump;
    if (name == "kernel") return DataFamily::kernel;
    if (name == "power_tail") return DataFamily::power_tail;
    if (name == "kink") return DataFamily::kink;
    if (name == "neck") return DataFamily::neck;
    throw InputError("unknown initial data family: " + name);
}

std::string family_name(DataFamily f) {
    switch (f) {
        case DataFamily::gaussian: return "gaussian";
        case DataFamily::tt_bump: return "tt_bump";
        case DataFamily::kernel: return "kernel";
        case DataFamily::power_tail: return "power_tail";
        case DataFamily::kink: return "kink";
        case DataFamily::neck: return "neck";
    }
    return "?";
}

namespace {

// C-infinity step: exactly 0 for t <= 0 and exactly 1 for t >= 1, with all
// derivatives vanishing at the ends. Fields built with it are identically
// zero outside their support, which keeps composed stencils clean at the
// coordinate center and the truncation boundary.
double smoother(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double e1 = std::exp(-1.0 / t);
    const double e2 = std::exp(-1.0 / (1.0 - t));
    return e1 / (e1 + e2);
}

// even bump profile in the distance variable
double mirrored_gauss(double s, double c, double w) {
    return std::exp(-sqr((s - c) / w)) + std::exp(-sqr((s + c) / w));
}

} // namespace

TensorField make_initial_data(const GeometryCache& geo, const ComponentLayout& lay,
                              const DataParams& p) {
    const size_t N = geo.nnodes();
    TensorField h(lay, N);
    const double smax = geo.s_dist(N - 1);
    const int nc = lay.count();
    require(p.width > 0.0, "initial data: width > 0 required");

    // outer taper so the data respects the Dirichlet truncation
    auto taper = [&](double s) { return 1.0 - smoother((s / smax - 0.85) / 0.12); };

    switch (p.family) {
        case DataFamily::gaussian: {
            for (size_t i = 0; i < N; ++i) {
                const double v = 0.5 * p.amplitude * mirrored_gauss(geo.s_dist(i), p.center, p.width) *
                                 taper(geo.s_dist(i));
                for (int c = 0; c < nc; ++c)
                    if (!lay.odd_at_center(c)) h.at(c, i) = v;
            }
            break;
        }
        case DataFamily::power_tail: {
            const double beta = (p.tail_exponent > 0.0) ? p.tail_exponent : 0.5 * geo.dim() + 0.2;
            for (size_t i = 0; i < N; ++i) {
                const double s = geo.s_dist(i);
                const double v =
                    p.amplitude * std::pow(1.0 + sqr(s / p.width), -0.5 * beta) * taper(s);
                for (int c = 0; c < nc; ++c)
                    if (!lay.odd_at_center(c)) h.at(c, i) = v;
            }
            break;
        }
        case DataFamily::kink: {
            // steep cliff: the profile drops from the amplitude to zero over
            // the given width, so the initial gradient scale is 1/width
            require(p.center > 4.0 * p.width, "kink data: cliff must sit inside the grid");
            for (size_t i = 0; i < N; ++i) {
                const double s = geo.s_dist(i);
                const double v =
                    p.amplitude * 0.5 * (1.0 - std::tanh((s - p.center) / p.width));
                for (int c = 0; c < nc; ++c)
                    if (!lay.odd_at_center(c)) h.at(c, i) = v;
            }
            break;
        }
        case DataFamily::neck: {
            for (size_t i = 0; i < N; ++i) {
                const double s = geo.s_dist(i);
                const double v = -p.amplitude * mirrored_gauss(s, p.center, p.width) * taper(s);
                if (!lay.bianchi) {
                    h.at(1, i) = v;
                } else {
                    h.at(1, i) = h.at(2, i) = h.at(3, i) = v;
                }
            }
            break;
        }
        case DataFamily::tt_bump: {
            // trace-free pattern, then divergence projection
            for (size_t i = 0; i < N; ++i) {
                const double v = 0.5 * p.amplitude * mirrored_gauss(geo.s_dist(i), p.center, p.width) *
                                 taper(geo.s_dist(i));
                if (!lay.bianchi) {
                    h.at(0, i) = -(lay.n - 1) * v;
                    h.at(1, i) = v;
                } else {
                    h.at(0, i) = v;
                    h.at(3, i) = -v;
                }
            }
            h = tt_project(geo, h);
            // restore the requested amplitude after projection
            const double m = norm_inf(h);
            if (m > 0.0) h.scale(p.amplitude / m);
            break;
        }
        case DataFamily::kernel:
            throw InputError("kernel initial data must be resolved by the caller");
    }
    fill_center(geo, h);
    for (int c = 0; c < nc; ++c) h.at(c, N - 1) = 0.0;
    return h;
}

TensorField tt_project(const GeometryCache& geo, const TensorField& h) {
    const size_t N = geo.nnodes();
    const int n = geo.dim();
    // Solve div(L_X g0) - (2/n) grad(div X) = div h - (1/n) grad(tr h)
    // for a radial X = phi e0 with phi = 0 at both ends, then subtract the
    // Lie and conformal parts.
    TensorField zero(h.layout, N);
    auto apply_M = [&](const std::vector<double>& phi) {
        VectorField X(n, N);
        for (size_t i = 0; i < N; ++i) X.at(0, i) = phi[i];
        TensorField lie = lie_derivative_metric(geo, X, zero);
        VectorField dl = divergence_g0(geo, lie);
        // div X and its radial gradient
        ScalarField dx(N);
        for (size_t i = 1; i + 1 < N; ++i) {
            double s = geo.apply_d1(phi.data(), i) / geo.f0(i);
            for (int c = 1; c < n; ++c) s += geo.gamma0(i, c, 0, c) * phi[i];
            dx[i] = s;
        }
        std::vector<double> out(N, 0.0);
        for (size_t i = 2; i + 2 < N; ++i)
            out[i] = dl.at(0, i) - (2.0 / n) * geo.apply_d1(dx.data.data(), i) / geo.f0(i);
        return out;
    };

    // right-hand side
    VectorField dh = divergence_g0(geo, h);
    ScalarField tr = trace_g0(geo, h);
    std::vector<double> F(N, 0.0);
    for (size_t i = 2; i + 2 < N; ++i)
        F[i] = dh.at(0, i) - (1.0 / n) * geo.apply_d1(tr.data.data(), i) / geo.f0(i);

    // assemble the band by probing (operator is local: two stencils deep)
    const size_t lo = 2, hi = N - 3; // unknown phi_i, i in [lo, hi]
    const size_t m = hi - lo + 1;
    const size_t band = 4;
    BandedLU lu(m, band, band);
    std::vector<double> phi(N, 0.0);
    for (size_t color = 0; color < 2 * band + 1; ++color) {
        std::fill(phi.begin(), phi.end(), 0.0);
        for (size_t k = color; k < m; k += 2 * band + 1) phi[lo + k] = 1.0;
        std::vector<double> out = apply_M(phi);
        for (size_t k = color; k < m; k += 2 * band + 1)
            for (size_t dj = 0; dj <= band; ++dj) {
                if (k + dj < m) lu.entry(k + dj, k) = out[lo + k + dj];
                if (dj > 0 && k >= dj) lu.entry(k - dj, k) = out[lo + k - dj];
            }
    }
    lu.factor();
    std::vector<double> rhs(m);
    for (size_t k = 0; k < m; ++k) rhs[k] = F[lo + k];
    lu.solve_in_place(rhs);

    std::fill(phi.begin(), phi.end(), 0.0);
    for (size_t k = 0; k < m; ++k) phi[lo + k] = rhs[k];

    VectorField X(n, N);
    for (size_t i = 0; i < N; ++i) X.at(0, i) = phi[i];
    TensorField lie = lie_derivative_metric(geo, X, zero);
    ScalarField dx(N);
    for (size_t i = 1; i + 1 < N; ++i) {
        double s = geo.apply_d1(phi.data(), i) / geo.f0(i);
        for (int c = 1; c < n; ++c) s += geo.gamma0(i, c, 0, c) * phi[i];
        dx[i] = s;
    }
    TensorField out = h;
    out.axpy(-1.0, lie);
    // conformal part: psi = (tr h - 2 div X)/n times g0
    ScalarField trh = trace_g0(geo, h);
    for (size_t i = 0; i < N; ++i) {
        const double psi = (trh[i] - 2.0 * dx[i]) / n;
        Mat mpsi = out.matrix(i);
        for (int a = 0; a < n; ++a) mpsi(a, a) -= psi;
        out.set_from_matrix(i, mpsi);
    }
    fill_center(geo, out);
    for (int c = 0; c < out.layout.count(); ++c) out.at(c, N - 1) = 0.0;
    return out;
}

TensorField interpolate_field(const GeometryCache& src, const TensorField& f,
                              const GeometryCache& dst) {
    TensorField out(f.layout, dst.nnodes());
    const size_t Ns = src.nnodes();
    for (size_t j = 0; j < dst.nnodes(); ++j) {
        const double r = dst.radius(j);
        // locate the source interval by radius
        size_t lo = 0, hi = Ns - 1;
        if (r <= src.radius(0)) {
            lo = hi = 0;
        } else if (r >= src.radius(Ns - 1)) {
            lo = hi = Ns - 1;
        } else {
            while (hi - lo > 1) {
                const size_t mid = (lo + hi) / 2;
                if (src.radius(mid) <= r) lo = mid;
                else hi = mid;
            }
        }
        for (int c = 0; c < f.layout.count(); ++c) {
            if (lo == hi) {
                out.at(c, j) = f.at(c, lo);
            } else {
                const double t = (r - src.radius(lo)) / (src.radius(hi) - src.radius(lo));
                out.at(c, j) = (1.0 - t) * f.at(c, lo) + t * f.at(c, hi);
            }
        }
    }
    fill_center(dst, out);
    for (int c = 0; c < f.layout.count(); ++c) out.at(c, dst.nnodes() - 1) = 0.0;
    return out;
}

TensorField random_smooth_field(const GeometryCache& geo, const ComponentLayout& lay,
                                unsigned seed) {
    const size_t N = geo.nnodes();
    TensorField h(lay, N);
    std::mt19937 rng(seed);
    auto uni = [&](double a, double b) {
        return a + (b - a) * (double(rng()) / 4294967296.0);
    };
    const double smax = geo.s_dist(N - 1);
    const int nc = lay.count();
    for (int c = 0; c < nc; ++c) {
        if (lay.odd_at_center(c)) continue;
        for (int k = 0; k < 3; ++k) {
            const double amp = uni(-1.0, 1.0);
            const double ctr = uni(0.20, 0.70) * smax;
            const double wid = uni(0.06, 0.20) * smax;
            for (size_t i = 0; i < N; ++i)
                h.at(c, i) += amp * mirrored_gauss(geo.s_dist(i), ctr, wid);
        }
    }
    // window to the bulk: vanish near both ends
    for (size_t i = 0; i < N; ++i) {
        const double t = geo.s_dist(i) / smax;
        const double win = smoother((t - 0.06) / 0.10) * (1.0 - smoother((t - 0.80) / 0.12));
        for (int c = 0; c < nc; ++c) h.at(c, i) *= win;
    }
    const double nrm = norm_l2(geo, h);
    if (nrm > 0.0) h.scale(1.0 / nrm);
    return h;
}

} // namespace alef
