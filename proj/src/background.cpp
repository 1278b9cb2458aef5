#include "alef/background.hpp"

#include <limits>

namespace alef {

double unit_sphere_volume(int n) {
    // 2 pi^(n/2) / Gamma(n/2)
    return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

double BackgroundMetric::chart_x(double r) const {
    if (kind == BackgroundKind::eguchi_hanson) return std::sqrt(std::max(0.0, r - bolt_a));
    return r;
}

double BackgroundMetric::radius_of(double x) const {
    if (kind == BackgroundKind::eguchi_hanson) return bolt_a + x * x;
    return x;
}

Jet2 BackgroundMetric::frame_f(double x) const {
    if (kind == BackgroundKind::eguchi_hanson) {
        const Jet2 X = Jet2::var(x);
        const Jet2 r = bolt_a + X * X;
        // F0 = f(r) dr/dx = 2 r^2 / sqrt((r + a)(r^2 + a^2)); analytic at the bolt
        return 2.0 * r * r / sqrt((r + bolt_a) * (r * r + bolt_a * bolt_a));
    }
    return Jet2(1.0, 0.0, 0.0);
}

Jet2 BackgroundMetric::frame_w(int i, double x) const {
    if (kind == BackgroundKind::eguchi_hanson) {
        const Jet2 X = Jet2::var(x);
        const Jet2 r = bolt_a + X * X;
        if (i == 3) {
            // w3 = (r/2) sqrt(1 - (a/r)^4) = x sqrt((r + a)(r^2 + a^2)) / (2 r)
            return X * sqrt((r + bolt_a) * (r * r + bolt_a * bolt_a)) / (2.0 * r);
        }
        return 0.5 * r;
    }
    (void)i;
    return Jet2::var(x); // w_i = r on the round-sphere reduction
}

double BackgroundMetric::structure_c(int k, int i, int j) const {
    if (!bianchi) return 0.0;
    // su(2): c^k_{ij} = epsilon_{kij...}: [X_i, X_j] = eps_{ijk} X_k with the
    // convention d sigma_i = -sigma_j ^ sigma_k (cyclic)
    if (k == i || k == j || i == j) return 0.0;
    // permutation sign of (k,i,j) as indices {1,2,3}
    const int perm[3] = {k, i, j};
    int sign = 1;
    int p[3] = {perm[0], perm[1], perm[2]};
    if (p[0] > p[1]) { std::swap(p[0], p[1]); sign = -sign; }
    if (p[1] > p[2]) { std::swap(p[1], p[2]); sign = -sign; }
    if (p[0] > p[1]) { std::swap(p[0], p[1]); sign = -sign; }
    // epsilon_{kij} with (1,2,3) positively oriented
    return double(sign);
}

InnerBoundary BackgroundMetric::inner_boundary(const RadialGrid& grid) const {
    switch (kind) {
        case BackgroundKind::euclidean:
            return grid.r_min == 0.0 ? InnerBoundary::center : InnerBoundary::dirichlet;
        case BackgroundKind::cone:
            return InnerBoundary::dirichlet;
        case BackgroundKind::eguchi_hanson:
            return InnerBoundary::center;
    }
    return InnerBoundary::dirichlet;
}

void BackgroundMetric::validate_with(const RadialGrid& grid) const {
    require(grid.n == n, "background/grid dimension mismatch");
    if (kind == BackgroundKind::cone)
        require(grid.r_min > 0.0, "cone background: r_min > 0 required (apex excluded)");
    if (kind == BackgroundKind::eguchi_hanson)
        require(grid.r_min == bolt_a, "eguchi_hanson background: r_min must equal the bolt radius");
}

BackgroundMetric background_euclidean(int n) {
    require(n >= 3, "background_euclidean: n >= 3 required (Hardy constant degenerates below)");
    BackgroundMetric b;
    b.kind = BackgroundKind::euclidean;
    b.n = n;
    b.gamma_order = 1;
    b.ale_order = std::numeric_limits<double>::infinity();
    b.bianchi = false;
    b.link_kappa = 1.0;
    b.link_measure = unit_sphere_volume(n);
    return b;
}

BackgroundMetric background_cone(int n, int gamma_order) {
    require(n >= 3, "background_cone: n >= 3 required");
    require(gamma_order >= 2, "background_cone: gamma_order >= 2 required");
    BackgroundMetric b;
    b.kind = BackgroundKind::cone;
    b.n = n;
    b.gamma_order = gamma_order;
    b.ale_order = std::numeric_limits<double>::infinity();
    b.bianchi = false;
    b.link_kappa = 1.0;
    b.link_measure = unit_sphere_volume(n) / double(gamma_order);
    return b;
}

BackgroundMetric background_eguchi_hanson(double a) {
    require(a > 0.0, "background_eguchi_hanson: bolt parameter a > 0 required");
    BackgroundMetric b;
    b.kind = BackgroundKind::eguchi_hanson;
    b.n = 4;
    b.gamma_order = 2;
    b.bolt_a = a;
    b.ale_order = 4.0;
    b.bianchi = true;
    b.link_kappa = 0.0; // carried by the su(2) structure constants
    // integral of sigma1^sigma2^sigma3 over SU(2) is 16 pi^2; |Gamma| = 2
    b.link_measure = 16.0 * M_PI * M_PI / 2.0;
    return b;
}

} // namespace alef
