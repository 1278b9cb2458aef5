#pragma once

#include "alef/common.hpp"

#include <array>
#include <cstring>

namespace alef {

constexpr int kMaxDim = 6; // supports reductions up to ambient dimension 6

/// Small dense square matrix with runtime dimension n <= kMaxDim.
/// Used for per-node frame algebra; stack storage, value semantics.
struct Mat {
    int n = 0;
    std::array<double, kMaxDim * kMaxDim> a{};

    Mat() = default;
    explicit Mat(int dim) : n(dim) {}

    double& operator()(int i, int j) { return a[i * kMaxDim + j]; }
    double operator()(int i, int j) const { return a[i * kMaxDim + j]; }

    static Mat identity(int dim) {
        Mat m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }
    void set_zero() { a.fill(0.0); }
};

inline Mat operator+(const Mat& x, const Mat& y) {
    Mat r(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) r(i, j) = x(i, j) + y(i, j);
    return r;
}
inline Mat operator-(const Mat& x, const Mat& y) {
    Mat r(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) r(i, j) = x(i, j) - y(i, j);
    return r;
}
inline Mat operator*(double c, const Mat& x) {
    Mat r(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) r(i, j) = c * x(i, j);
    return r;
}
inline Mat mul(const Mat& x, const Mat& y) {
    Mat r(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int k = 0; k < x.n; ++k) {
            const double xik = x(i, k);
            if (xik == 0.0) continue;
            for (int j = 0; j < x.n; ++j) r(i, j) += xik * y(k, j);
        }
    return r;
}

/// Inverse of a small symmetric positive definite matrix via Cholesky.
/// Throws ComputeError if not positive definite; `where` names the caller.
Mat spd_inverse(const Mat& m, const char* where);

/// Cholesky test only: true if symmetric m is positive definite.
bool is_spd(const Mat& m);

// ---------------------------------------------------------------------------
// Dense symmetric eigensolver (Householder tridiagonalization + implicit QL).
// Used as the reference path for spectral computations and as the test
// oracle against the banded Lanczos solver.
// ---------------------------------------------------------------------------

/// Eigen-decomposition of a dense symmetric matrix stored row-major (size n*n).
/// On return eigenvalues are ascending; eigenvectors[k*n..] is the k-th vector.
struct DenseEig {
    std::vector<double> values;
    std::vector<double> vectors; // row k = eigenvector k
};

DenseEig dense_symmetric_eig(const std::vector<double>& a, size_t n);

// ---------------------------------------------------------------------------
// Symmetric banded matrix (lower storage) with LDL^T factorization and solve.
// ---------------------------------------------------------------------------

/// Symmetric banded matrix, lower triangle stored: band(j, i-j) = A(i,j)
/// for 0 <= i-j <= hb. Dimension n, half bandwidth hb.
struct BandedSym {
    size_t n = 0;
    size_t hb = 0;
    std::vector<double> d; // d[j*(hb+1) + k] = A(j+k, j), k = 0..hb

    BandedSym() = default;
    BandedSym(size_t dim, size_t halfband) : n(dim), hb(halfband), d(dim * (halfband + 1), 0.0) {}

    double& at(size_t row, size_t col) { // requires row >= col, row-col <= hb
        return d[col * (hb + 1) + (row - col)];
    }
    double get(size_t row, size_t col) const {
        size_t i = row, j = col;
        if (i < j) std::swap(i, j);
        if (i - j > hb) return 0.0;
        return d[j * (hb + 1) + (i - j)];
    }
    void add(size_t row, size_t col, double v) {
        size_t i = row, j = col;
        if (i < j) std::swap(i, j);
        d[j * (hb + 1) + (i - j)] += v;
    }

    void apply(const double* x, double* y) const;
    std::vector<double> apply(const std::vector<double>& x) const;

    /// Largest |A(i,j)| asymmetry against a second accumulation is zero by
    /// storage; this returns max |A(i,j)| for scaling.
    double max_abs() const;
};

/// LDL^T factorization of a symmetric banded matrix (no pivoting; intended
/// for (quasi) definite shifted matrices). Throws ComputeError on breakdown.
struct BandedLDLT {
    size_t n = 0, hb = 0;
    std::vector<double> l; // unit lower band, same layout as BandedSym
    std::vector<double> diag;

    explicit BandedLDLT(const BandedSym& a);
    void solve_in_place(std::vector<double>& x) const;
    std::vector<double> solve(const std::vector<double>& b) const;
};

/// General banded matrix with LU factorization and partial pivoting
/// (LAPACK band storage). kl/ku are the lower/upper bandwidths.
struct BandedLU {
    size_t n = 0, kl = 0, ku = 0;
    std::vector<double> ab; // (2kl+ku+1) rows x n cols, column-major
    std::vector<size_t> piv;
    bool factored = false;

    BandedLU(size_t dim, size_t lower, size_t upper)
        : n(dim), kl(lower), ku(upper), ab((2 * lower + upper + 1) * dim, 0.0) {}

    double& entry(size_t i, size_t j) { // valid for |i-j| within (kl, ku)
        return ab[j * (2 * kl + ku + 1) + (kl + ku + i - j)];
    }
    void factor();
    void solve_in_place(std::vector<double>& x) const;
};

} // namespace alef
