#pragma once

#include <cmath>

namespace alef {

/// Second-order jet (value, first and second derivative) with forward-mode
/// arithmetic. Background frame coefficients are written once as jet
/// functions, which gives machine-exact analytic derivatives without
/// hand-differentiated formulas.
struct Jet2 {
    double v = 0.0;  // value
    double d = 0.0;  // d/dx
    double dd = 0.0; // d^2/dx^2

    Jet2() = default;
    Jet2(double value) : v(value) {}
    Jet2(double value, double d1, double d2) : v(value), d(d1), dd(d2) {}

    static Jet2 var(double x) { return Jet2(x, 1.0, 0.0); }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
inline Jet2 operator-(const Jet2& a, const Jet2& b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
inline Jet2 operator-(const Jet2& a) { return {-a.v, -a.d, -a.dd}; }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) {
    const double w = a.v / b.v;
    const double wd = (a.d - w * b.d) / b.v;
    const double wdd = (a.dd - w * b.dd - 2.0 * wd * b.d) / b.v;
    return {w, wd, wdd};
}

inline Jet2 operator+(double c, const Jet2& a) { return Jet2(c) + a; }
inline Jet2 operator+(const Jet2& a, double c) { return a + Jet2(c); }
inline Jet2 operator-(double c, const Jet2& a) { return Jet2(c) - a; }
inline Jet2 operator-(const Jet2& a, double c) { return a - Jet2(c); }
inline Jet2 operator*(double c, const Jet2& a) { return {c * a.v, c * a.d, c * a.dd}; }
inline Jet2 operator*(const Jet2& a, double c) { return c * a; }
inline Jet2 operator/(const Jet2& a, double c) { return {a.v / c, a.d / c, a.dd / c}; }
inline Jet2 operator/(double c, const Jet2& a) { return Jet2(c) / a; }

inline Jet2 sqrt(const Jet2& a) {
    const double s = std::sqrt(a.v);
    const double sd = 0.5 * a.d / s;
    return {s, sd, 0.5 * a.dd / s - sd * sd / s};
}

inline Jet2 pow_int(const Jet2& a, int k) {
    Jet2 r(1.0);
    for (int i = 0; i < k; ++i) r = r * a;
    return r;
}

} // namespace alef
