#pragma once

#include "alef/background.hpp"
#include "alef/common.hpp"
#include "alef/grid.hpp"
#include "alef/linalg.hpp"

#include <random>

namespace alef {

/// Layout of the independent components of an invariant symmetric 2-tensor.
/// Round-sphere reduction: (h_rr, h_tt) with multiplicities (1, n-1).
/// Bianchi IX: (h_00, h_11, h_22, h_33) and optionally the radial cross
/// term h_03 with multiplicity 2.
struct ComponentLayout {
    int n = 0;
    bool bianchi = false;
    bool cross = false;

    int count() const { return bianchi ? (cross ? 5 : 4) : 2; }
    double multiplicity(int c) const {
        if (!bianchi) return c == 0 ? 1.0 : double(n - 1);
        return c == 4 ? 2.0 : 1.0;
    }
    /// parity of component c at a smooth center (even) or collapsing bolt
    bool odd_at_center(int c) const { return bianchi && c == 4; }

    static ComponentLayout of(const BackgroundMetric& bg, bool cross = false) {
        ComponentLayout l;
        l.n = bg.n;
        l.bianchi = bg.bianchi;
        l.cross = bg.bianchi && cross;
        return l;
    }
};

/// A symmetric-2-tensor field in the g0-orthonormal invariant frame,
/// stored as independent components per node.
struct TensorField {
    ComponentLayout layout;
    size_t nnodes = 0;
    std::vector<double> data; // data[c * nnodes + i]

    TensorField() = default;
    TensorField(const ComponentLayout& l, size_t N)
        : layout(l), nnodes(N), data(size_t(l.count()) * N, 0.0) {}

    double* comp(int c) { return data.data() + size_t(c) * nnodes; }
    const double* comp(int c) const { return data.data() + size_t(c) * nnodes; }
    double& at(int c, size_t i) { return data[size_t(c) * nnodes + i]; }
    double at(int c, size_t i) const { return data[size_t(c) * nnodes + i]; }

    /// frame matrix at a node
    Mat matrix(size_t i) const {
        Mat m(layout.n);
        if (!layout.bianchi) {
            m(0, 0) = at(0, i);
            for (int k = 1; k < layout.n; ++k) m(k, k) = at(1, i);
        } else {
            for (int k = 0; k < 4; ++k) m(k, k) = at(k, i);
            if (layout.cross) m(0, 3) = m(3, 0) = at(4, i);
        }
        return m;
    }
    /// project a frame matrix back onto the stored components
    void set_from_matrix(size_t i, const Mat& m) {
        if (!layout.bianchi) {
            at(0, i) = m(0, 0);
            double b = 0.0;
            for (int k = 1; k < layout.n; ++k) b += m(k, k);
            at(1, i) = b / double(layout.n - 1);
        } else {
            for (int k = 0; k < 4; ++k) at(k, i) = m(k, k);
            if (layout.cross) at(4, i) = m(0, 3);
        }
    }

    /// pointwise Frobenius norm squared with multiplicities
    double norm2_at(size_t i) const {
        double s = 0.0;
        for (int c = 0; c < layout.count(); ++c) s += layout.multiplicity(c) * sqr(at(c, i));
        return s;
    }

    bool all_finite() const {
        for (double v : data)
            if (!finite(v)) return false;
        return true;
    }

    TensorField& axpy(double a, const TensorField& h) {
        for (size_t k = 0; k < data.size(); ++k) data[k] += a * h.data[k];
        return *this;
    }
    TensorField& scale(double a) {
        for (double& v : data) v *= a;
        return *this;
    }
};

inline TensorField operator+(TensorField a, const TensorField& b) { return a.axpy(1.0, b); }
inline TensorField operator-(TensorField a, const TensorField& b) { return a.axpy(-1.0, b); }
inline TensorField operator*(double c, TensorField a) { return a.scale(c); }

/// Invariant vector field (frame components per node).
struct VectorField {
    int n = 0;
    size_t nnodes = 0;
    std::vector<double> data; // data[c * nnodes + i], c = 0..n-1

    VectorField() = default;
    VectorField(int dim, size_t N) : n(dim), nnodes(N), data(size_t(dim) * N, 0.0) {}
    double& at(int c, size_t i) { return data[size_t(c) * nnodes + i]; }
    double at(int c, size_t i) const { return data[size_t(c) * nnodes + i]; }
};

/// Scalar field on the grid.
struct ScalarField {
    std::vector<double> data;
    explicit ScalarField(size_t N = 0) : data(N, 0.0) {}
    double& operator[](size_t i) { return data[i]; }
    double operator[](size_t i) const { return data[i]; }
    size_t size() const { return data.size(); }
};

} // namespace alef
