#include "alef/grid.hpp"

#include <algorithm>

namespace alef {

void validate_grid(const RadialGrid& g) {
    require(g.size() >= 16, "grid: N >= 16 required");
    require(g.nodes.front() == g.r_min && g.nodes.back() == g.r_max,
            "grid: endpoint nodes must equal r_min/r_max");
    for (size_t i = 1; i < g.size(); ++i)
        require(g.nodes[i] > g.nodes[i - 1], "grid: nodes must be strictly increasing");
    // spacing ratio equals stretch to within 1e-12, plus the unavoidable
    // floor from representing nodes in double (ulp(r)/dr per difference)
    constexpr double eps = 2.3e-16;
    for (size_t i = 2; i < g.size(); ++i) {
        const double dm = g.nodes[i - 1] - g.nodes[i - 2];
        const double dp = g.nodes[i] - g.nodes[i - 1];
        const double floor = 8.0 * eps * std::abs(g.nodes[i]) / std::min(dm, dp);
        const double r = dp / dm;
        if (std::abs(r - g.stretch) > 1e-12 * std::max(1.0, g.stretch) + floor)
            throw InputError("grid: spacing ratio deviates from stretch at node " +
                             std::to_string(i) + " (ratio " + std::to_string(r) + " vs " +
                             std::to_string(g.stretch) + ")");
    }
}

RadialGrid build_grid(int n, double r_min, double r_max, size_t N, double stretch) {
    require(n >= 3 && n <= kMaxDim, "build_grid: dimension 3 <= n <= 6 required");
    require(r_max > r_min && r_min >= 0.0, "build_grid: need r_max > r_min >= 0");
    require(N >= 16, "build_grid: N >= 16 required");
    require(stretch >= 1.0, "build_grid: stretch >= 1 required");

    RadialGrid g;
    g.n = n;
    g.r_min = r_min;
    g.r_max = r_max;
    g.stretch = stretch;
    g.nodes.resize(N);

    const double span = r_max - r_min;
    // span = dr0 * (stretch^(N-1) - 1)/(stretch - 1), or (N-1)*dr0 if uniform.
    // Spacings are evaluated in closed form and accumulated with
    // compensation, then scaled so the outer endpoint lands exactly.
    if (stretch == 1.0) {
        const double dr0 = span / double(N - 1);
        for (size_t i = 0; i < N; ++i) g.nodes[i] = r_min + double(i) * dr0;
    } else {
        std::vector<double> cum(N, 0.0);
        double acc = 0.0, comp = 0.0;
        for (size_t i = 1; i < N; ++i) {
            const double dr = std::pow(stretch, double(i - 1));
            const double y = dr - comp;
            const double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            cum[i] = acc;
        }
        const double scale = span / acc;
        for (size_t i = 0; i < N; ++i) g.nodes[i] = r_min + cum[i] * scale;
    }
    g.nodes[0] = r_min;
    g.nodes[N - 1] = r_max;
    validate_grid(g);
    return g;
}

RadialGrid build_log_grid(int n, double r_min, double r_max, size_t N) {
    require(r_min > 0.0, "build_log_grid: r_min > 0 required");
    require(r_max > r_min, "build_log_grid: r_max > r_min required");
    require(N >= 16, "build_log_grid: N >= 16 required");
    // nodes r_i = r_min q^i have spacing dr_i = r_min (q-1) q^i, ratio exactly
    // q; evaluating through exp keeps neighbouring-node errors uncorrelated so
    // the ratio invariant survives in floating point
    const double la = std::log(r_min), lb = std::log(r_max);
    const double dl = (lb - la) / double(N - 1);
    RadialGrid g;
    g.n = n;
    g.r_min = r_min;
    g.r_max = r_max;
    g.stretch = std::exp(dl);
    g.nodes.resize(N);
    for (size_t i = 0; i < N; ++i) g.nodes[i] = std::exp(la + double(i) * dl);
    g.nodes[0] = r_min;
    g.nodes[N - 1] = r_max;
    validate_grid(g);
    return g;
}

} // namespace alef
