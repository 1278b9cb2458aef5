#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace alef {

using std::size_t;

/// Error thrown on rejected inputs and violated preconditions.
/// The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Error thrown when a computation fails (non-convergence, loss of
/// positive definiteness, NaN propagation).
class ComputeError : public std::runtime_error {
public:
    explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InputError(msg);
}

inline bool finite(double x) { return std::isfinite(x); }

inline double sqr(double x) { return x * x; }

/// Least-squares line fit of y against x. Returns (slope, intercept, rms residual).
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InputError("fit_line: need >= 2 points with matching sizes");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-300) throw ComputeError("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0;
    for (size_t i = 0; i < x.size(); ++i) ss += sqr(y[i] - f.slope * x[i] - f.intercept);
    f.residual = std::sqrt(ss / n);
    return f;
}

} // namespace alef
