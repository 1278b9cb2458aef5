#include "alef/linalg.hpp"

#include <algorithm>

namespace alef {

static bool cholesky(const Mat& m, Mat& l) {
    const int n = m.n;
    l = Mat(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0 || !finite(s)) return false;
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return true;
}

bool is_spd(const Mat& m) {
    Mat l;
    return cholesky(m, l);
}

Mat spd_inverse(const Mat& m, const char* where) {
    Mat l;
    if (!cholesky(m, l))
        throw ComputeError(std::string(where) + ": matrix not positive definite");
    const int n = m.n;
    // invert L, then A^-1 = L^-T L^-1
    Mat li(n);
    for (int i = 0; i < n; ++i) {
        li(i, i) = 1.0 / l(i, i);
        for (int j = 0; j < i; ++j) {
            double s = 0.0;
            for (int k = j; k < i; ++k) s -= l(i, k) * li(k, j);
            li(i, j) = s / l(i, i);
        }
    }
    Mat inv(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            double s = 0.0;
            for (int k = i; k < n; ++k) s += li(k, i) * li(k, j);
            inv(i, j) = inv(j, i) = s;
        }
    return inv;
}

// ---------------------------------------------------------------------------
// Dense symmetric eigensolver
// ---------------------------------------------------------------------------

// Householder reduction to tridiagonal form; accumulates the transform in z.
static void tridiagonalize(std::vector<double>& z, size_t n,
                           std::vector<double>& diag, std::vector<double>& off) {
    diag.assign(n, 0.0);
    off.assign(n, 0.0);
    for (size_t i = n - 1; i >= 1; --i) {
        size_t l = i - 1;
        double h = 0.0, scale = 0.0;
        if (l > 0) {
            for (size_t k = 0; k <= l; ++k) scale += std::abs(z[i * n + k]);
            if (scale == 0.0) {
                off[i] = z[i * n + l];
            } else {
                for (size_t k = 0; k <= l; ++k) {
                    z[i * n + k] /= scale;
                    h += z[i * n + k] * z[i * n + k];
                }
                double f = z[i * n + l];
                double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
                off[i] = scale * g;
                h -= f * g;
                z[i * n + l] = f - g;
                f = 0.0;
                for (size_t j = 0; j <= l; ++j) {
                    z[j * n + i] = z[i * n + j] / h;
                    g = 0.0;
                    for (size_t k = 0; k <= j; ++k) g += z[j * n + k] * z[i * n + k];
                    for (size_t k = j + 1; k <= l; ++k) g += z[k * n + j] * z[i * n + k];
                    off[j] = g / h;
                    f += off[j] * z[i * n + j];
                }
                double hh = f / (h + h);
                for (size_t j = 0; j <= l; ++j) {
                    f = z[i * n + j];
                    off[j] = g = off[j] - hh * f;
                    for (size_t k = 0; k <= j; ++k)
                        z[j * n + k] -= f * off[k] + g * z[i * n + k];
                }
            }
        } else {
            off[i] = z[i * n + l];
        }
        diag[i] = h;
    }
    diag[0] = 0.0;
    off[0] = 0.0;
    for (size_t i = 0; i < n; ++i) {
        size_t l = i;
        if (diag[i] != 0.0) {
            for (size_t j = 0; j < l; ++j) {
                double g = 0.0;
                for (size_t k = 0; k < l; ++k) g += z[i * n + k] * z[k * n + j];
                for (size_t k = 0; k < l; ++k) z[k * n + j] -= g * z[k * n + i];
            }
        }
        diag[i] = z[i * n + i];
        z[i * n + i] = 1.0;
        for (size_t j = 0; j < l; ++j) z[j * n + i] = z[i * n + j] = 0.0;
    }
}

static double pythag(double a, double b) {
    double aa = std::abs(a), ab = std::abs(b);
    if (aa > ab) return aa * std::sqrt(1.0 + sqr(ab / aa));
    return (ab == 0.0) ? 0.0 : ab * std::sqrt(1.0 + sqr(aa / ab));
}

// Implicit QL with shifts on the tridiagonal; rotations applied to z columns.
static void ql_implicit(std::vector<double>& diag, std::vector<double>& off,
                        std::vector<double>& z, size_t n) {
    for (size_t i = 1; i < n; ++i) off[i - 1] = off[i];
    off[n - 1] = 0.0;
    for (size_t l = 0; l < n; ++l) {
        int iter = 0;
        size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                double dd = std::abs(diag[m]) + std::abs(diag[m + 1]);
                if (std::abs(off[m]) <= 1e-300 + 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 50) throw ComputeError("dense_symmetric_eig: QL failed to converge");
                double g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
                double r = pythag(g, 1.0);
                g = diag[m] - diag[l] + off[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                for (size_t i = m; i-- > l;) {
                    double f = s * off[i], b = c * off[i];
                    r = pythag(f, g);
                    off[i + 1] = r;
                    if (r == 0.0) {
                        diag[i + 1] -= p;
                        off[m] = 0.0;
                        break;
                    }
                    s = f / r; c = g / r;
                    g = diag[i + 1] - p;
                    r = (diag[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    diag[i + 1] = g + p;
                    g = c * r - b;
                    for (size_t k = 0; k < n; ++k) {
                        f = z[k * n + i + 1];
                        z[k * n + i + 1] = s * z[k * n + i] + c * f;
                        z[k * n + i] = c * z[k * n + i] - s * f;
                    }
                }
                if (r == 0.0 && m > l + 1) continue;
                diag[l] -= p;
                off[l] = g;
                off[m] = 0.0;
            }
        } while (m != l);
    }
}

DenseEig dense_symmetric_eig(const std::vector<double>& a, size_t n) {
    if (a.size() != n * n) throw InputError("dense_symmetric_eig: size mismatch");
    DenseEig out;
    if (n == 0) return out;
    std::vector<double> z = a;
    std::vector<double> diag, off;
    if (n == 1) {
        out.values = {a[0]};
        out.vectors = {1.0};
        return out;
    }
    tridiagonalize(z, n, diag, off);
    ql_implicit(diag, off, z, n);
    // sort ascending, vectors are columns of z -> store row-wise per eigenpair
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t i, size_t j) { return diag[i] < diag[j]; });
    out.values.resize(n);
    out.vectors.assign(n * n, 0.0);
    for (size_t k = 0; k < n; ++k) {
        out.values[k] = diag[idx[k]];
        for (size_t i = 0; i < n; ++i) out.vectors[k * n + i] = z[i * n + idx[k]];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Banded
// ---------------------------------------------------------------------------

void BandedSym::apply(const double* x, double* y) const {
    for (size_t i = 0; i < n; ++i) y[i] = 0.0;
    for (size_t j = 0; j < n; ++j) {
        const double* col = &d[j * (hb + 1)];
        y[j] += col[0] * x[j];
        const size_t kmax = std::min(hb, n - 1 - j);
        for (size_t k = 1; k <= kmax; ++k) {
            y[j + k] += col[k] * x[j];
            y[j] += col[k] * x[j + k];
        }
    }
}

std::vector<double> BandedSym::apply(const std::vector<double>& x) const {
    std::vector<double> y(n);
    apply(x.data(), y.data());
    return y;
}

double BandedSym::max_abs() const {
    double m = 0.0;
    for (double v : d) m = std::max(m, std::abs(v));
    return m;
}

BandedLDLT::BandedLDLT(const BandedSym& a) : n(a.n), hb(a.hb) {
    l.assign(a.d.begin(), a.d.end());
    diag.assign(n, 0.0);
    const size_t w = hb + 1;
    for (size_t j = 0; j < n; ++j) {
        double dj = l[j * w];
        const size_t pmin = (j >= hb) ? j - hb : 0;
        for (size_t p = pmin; p < j; ++p) {
            const double lj = l[p * w + (j - p)];
            dj -= lj * lj * diag[p];
        }
        if (dj == 0.0 || !finite(dj))
            throw ComputeError("banded LDL^T: zero pivot at column " + std::to_string(j));
        diag[j] = dj;
        const size_t imax = std::min(n - 1, j + hb);
        for (size_t i = j + 1; i <= imax; ++i) {
            double s = l[j * w + (i - j)];
            const size_t qmin = (i >= hb) ? i - hb : 0;
            for (size_t p = std::max(pmin, qmin); p < j; ++p)
                s -= l[p * w + (i - p)] * l[p * w + (j - p)] * diag[p];
            l[j * w + (i - j)] = s / dj;
        }
    }
}

void BandedLDLT::solve_in_place(std::vector<double>& x) const {
    const size_t w = hb + 1;
    for (size_t j = 0; j < n; ++j) {
        const double xj = x[j];
        const size_t imax = std::min(n - 1, j + hb);
        for (size_t i = j + 1; i <= imax; ++i) x[i] -= l[j * w + (i - j)] * xj;
    }
    for (size_t j = 0; j < n; ++j) x[j] /= diag[j];
    for (size_t j = n; j-- > 0;) {
        double s = x[j];
        const size_t imax = std::min(n - 1, j + hb);
        for (size_t i = j + 1; i <= imax; ++i) s -= l[j * w + (i - j)] * x[i];
        x[j] = s;
    }
}

std::vector<double> BandedLDLT::solve(const std::vector<double>& b) const {
    std::vector<double> x = b;
    solve_in_place(x);
    return x;
}

void BandedLU::factor() {
    const size_t ld = 2 * kl + ku + 1;
    piv.assign(n, 0);
    for (size_t j = 0; j < n; ++j) {
        // pivot search in column j, rows j..j+kl
        const size_t imax = std::min(n - 1, j + kl);
        size_t p = j;
        double best = std::abs(ab[j * ld + (kl + ku)]);
        for (size_t i = j + 1; i <= imax; ++i) {
            const double v = std::abs(ab[j * ld + (kl + ku + i - j)]);
            if (v > best) { best = v; p = i; }
        }
        if (best == 0.0) throw ComputeError("banded LU: singular at column " + std::to_string(j));
        piv[j] = p;
        const size_t jmax = std::min(n - 1, j + kl + ku);
        if (p != j) {
            for (size_t c = j; c <= jmax; ++c)
                std::swap(ab[c * ld + (kl + ku + j - c)], ab[c * ld + (kl + ku + p - c)]);
        }
        const double pivot = ab[j * ld + (kl + ku)];
        for (size_t i = j + 1; i <= imax; ++i) {
            double& lij = ab[j * ld + (kl + ku + i - j)];
            lij /= pivot;
            for (size_t c = j + 1; c <= jmax; ++c)
                ab[c * ld + (kl + ku + i - c)] -= lij * ab[c * ld + (kl + ku + j - c)];
        }
    }
    factored = true;
}

void BandedLU::solve_in_place(std::vector<double>& x) const {
    if (!factored) throw ComputeError("banded LU: solve before factor");
    const size_t ld = 2 * kl + ku + 1;
    for (size_t j = 0; j < n; ++j) {
        if (piv[j] != j) std::swap(x[j], x[piv[j]]);
        const size_t imax = std::min(n - 1, j + kl);
        for (size_t i = j + 1; i <= imax; ++i) x[i] -= ab[j * ld + (kl + ku + i - j)] * x[j];
    }
    // back substitution (upper fill extends kl+ku above the diagonal)
    for (size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        const size_t jmax = std::min(n - 1, ii + kl + ku);
        for (size_t j = ii + 1; j <= jmax; ++j) s -= ab[j * ld + (kl + ku + ii - j)] * x[j];
        x[ii] = s / ab[ii * ld + (kl + ku)];
    }
}

} // namespace alef
