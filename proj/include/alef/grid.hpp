#pragma once

#include "alef/common.hpp"
#include "alef/linalg.hpp"

namespace alef {

/// 1D radial discretization of a cohomogeneity-one ALE space.
/// Nodes are radii r_0 < ... < r_{N-1} with geometrically stretched spacing:
/// dr_i = dr_0 * stretch^i. Immutable after construction.
struct RadialGrid {
    int n = 0;          // ambient dimension
    double r_min = 0.0;
    double r_max = 0.0;
    double stretch = 1.0;
    std::vector<double> nodes;

    size_t size() const { return nodes.size(); }
};

/// Build a grid with geometric spacing. dr_0 is determined by the span:
/// sum of dr_0 * stretch^i over N-1 intervals equals r_max - r_min.
RadialGrid build_grid(int n, double r_min, double r_max, size_t N, double stretch);

/// Build a grid whose nodes form an exact geometric sequence
/// r_i = r_min * q^i (requires r_min > 0). Used for large dynamic range
/// elliptic problems (Hardy constants); spacing ratio is exactly q.
RadialGrid build_log_grid(int n, double r_min, double r_max, size_t N);

/// Check the grid invariants; throws InputError on violation.
void validate_grid(const RadialGrid& g);

} // namespace alef
