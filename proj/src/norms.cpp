#include "alef/norms.hpp"

#include "alef/operators.hpp"

#include <algorithm>
#include <limits>

namespace alef {

double inner_l2(const GeometryCache& geo, const TensorField& u, const TensorField& v) {
    const int nc = u.layout.count();
    double s = 0.0;
    for (size_t i = 0; i < geo.nnodes(); ++i) {
        double p = 0.0;
        for (int c = 0; c < nc; ++c) p += u.layout.multiplicity(c) * u.at(c, i) * v.at(c, i);
        s += geo.weight(i) * p;
    }
    return s;
}

double norm_l2(const GeometryCache& geo, const TensorField& u) {
    return std::sqrt(std::max(0.0, inner_l2(geo, u, u)));
}

double norm_inf(const TensorField& u) {
    double m = 0.0;
    for (size_t i = 0; i < u.nnodes; ++i) m = std::max(m, std::sqrt(u.norm2_at(i)));
    return m;
}

double norm_inf_outside(const GeometryCache& geo, const TensorField& u, double s0) {
    double m = 0.0;
    for (size_t i = 0; i < u.nnodes; ++i)
        if (geo.s_dist(i) >= s0) m = std::max(m, std::sqrt(u.norm2_at(i)));
    return m;
}

double grad_norm_l2(const GeometryCache& geo, const TensorField& u) {
    double s = 0.0;
    for (size_t i = 1; i + 1 < geo.nnodes(); ++i)
        s += geo.weight(i) * grad_norm2_at(geo, u, i);
    return std::sqrt(std::max(0.0, s));
}

double grad_norm_inf(const GeometryCache& geo, const TensorField& u) {
    double m = 0.0;
    for (size_t i = 1; i + 1 < geo.nnodes(); ++i)
        m = std::max(m, std::sqrt(grad_norm2_at(geo, u, i)));
    return m;
}

double inner_l2_scalar(const GeometryCache& geo, const ScalarField& u, const ScalarField& v) {
    double s = 0.0;
    for (size_t i = 0; i < geo.nnodes(); ++i) s += geo.weight(i) * u[i] * v[i];
    return s;
}

double norm_l2_vector(const GeometryCache& geo, const VectorField& v) {
    double s = 0.0;
    for (size_t i = 0; i < geo.nnodes(); ++i) {
        double p = 0.0;
        for (int c = 0; c < v.n; ++c) p += sqr(v.at(c, i));
        s += geo.weight(i) * p;
    }
    return std::sqrt(std::max(0.0, s));
}

double weighted_norm(const GeometryCache& geo, const TensorField& u, const WeightSpec& spec) {
    require(spec.p >= 1.0, "weighted_norm: p >= 1 required");
    require(spec.k >= 0 && spec.k <= 2, "weighted_norm: derivative order k <= 2 supported");
    if (!u.all_finite()) throw ComputeError("weighted_norm: non-finite field values");

    const size_t N = geo.nnodes();
    const int n = geo.dim();
    const bool inf_norm = std::isinf(spec.p);

    // pointwise magnitude of nabla^l u for l = 0..k
    auto level_mag = [&](int l, size_t i) -> double {
        if (l == 0) return std::sqrt(u.norm2_at(i));
        if (l == 1) return std::sqrt(grad_norm2_at(geo, u, i));
        return std::sqrt(hess_norm2_at(geo, u, i));
    };

    if (inf_norm) {
        double m = 0.0;
        for (int l = 0; l <= spec.k; ++l) {
            for (size_t i = 0; i < N; ++i) {
                const double v = std::pow(geo.rho(i), -spec.delta + l) * level_mag(l, i);
                if (!finite(v)) throw ComputeError("weighted_norm: non-finite weighted value");
                m = std::max(m, v);
            }
        }
        return m;
    }

    double total = 0.0;
    for (int l = 0; l <= spec.k; ++l) {
        const double dl = spec.delta - l;
        double acc = 0.0;
        for (size_t i = 0; i < N; ++i) {
            const double mag = level_mag(l, i);
            acc += geo.weight(i) * std::pow(std::pow(geo.rho(i), -dl) * mag, spec.p) *
                   std::pow(geo.rho(i), -double(n));
        }
        total += std::pow(acc, 1.0 / spec.p);
    }
    if (!finite(total)) throw ComputeError("weighted_norm: non-finite result");
    return total;
}

AvrResult avr_estimate(const GeometryCache& geo) {
    const size_t N = geo.nnodes();
    // cumulative volume against geodesic distance
    std::vector<double> vol(N, 0.0);
    double acc = geo.inner_volume();
    for (size_t i = 0; i < N; ++i) {
        acc += geo.weight(i);
        vol[i] = acc;
    }
    const int n = geo.dim();
    // ratio a(s) = V(s)/s^n over the outer third, extrapolated as A + B/s
    // (the 1/s term absorbs the geodesic-distance offset of curved ends).
    // V(i) integrates J up to the outer cell edge, so the matching distance
    // is the geodesic distance of that edge, not of the node.
    std::vector<double> xs, ys;
    for (size_t i = 2 * N / 3; i + 1 < N; ++i) {
        const double s = 0.5 * (geo.s_dist(i) + geo.s_dist(i + 1));
        if (s <= 0.0) continue;
        xs.push_back(1.0 / s);
        ys.push_back(vol[i] / std::pow(s, double(n)));
    }
    AvrResult out;
    if (xs.size() < 4) {
        out.value = ys.empty() ? 0.0 : ys.back();
        out.residual = 1.0;
        out.flagged = true;
        return out;
    }
    LineFit f = fit_line(xs, ys);
    out.value = f.intercept;
    const double tail = ys.back();
    out.residual = std::abs(tail - f.intercept) / std::max(1e-300, std::abs(f.intercept)) +
                   f.residual / std::max(1e-300, std::abs(f.intercept));
    out.flagged = out.residual > 0.10;
    return out;
}

} // namespace alef
