#include "alef/fits.hpp"

#include <algorithm>

namespace alef {

namespace {

DecayFit fit_window(const std::vector<double>& ts, const std::vector<double>& vals, double t_lo,
                    double t_hi, double decades_needed, size_t min_samples) {
    DecayFit out;
    std::vector<double> lx, ly;
    for (size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < t_lo || ts[i] > t_hi) continue;
        if (!(vals[i] > 0.0) || !(ts[i] > 0.0)) continue;
        lx.push_back(std::log(ts[i]));
        ly.push_back(std::log(vals[i]));
    }
    if (lx.size() < min_samples) {
        out.note = "insufficient samples in window (" + std::to_string(lx.size()) + ")";
        return out;
    }
    const double span = (lx.back() - lx.front()) / std::log(10.0);
    if (span < decades_needed) {
        out.note = "insufficient dynamic range (" + std::to_string(span) + " decades)";
        return out;
    }
    LineFit f = fit_line(lx, ly);
    out.exponent = f.slope;
    out.constant = std::exp(f.intercept);
    out.residual = f.residual;
    out.valid = true;
    return out;
}

} // namespace

DecayFit decay_fit(const std::vector<DiagRow>& diag, double t_lo, double t_hi,
                   bool whole_manifold) {
    std::vector<double> ts, vals;
    for (const DiagRow& r : diag) {
        ts.push_back(r.t);
        vals.push_back(whole_manifold ? r.h_linf : r.h_linf_outside);
    }
    return fit_window(ts, vals, t_lo, t_hi, 2.0, 10);
}

DecayFit smoothing_fit(const std::vector<DiagRow>& diag, double t_lo, double t_hi) {
    std::vector<double> ts, vals;
    for (const DiagRow& r : diag) {
        ts.push_back(r.t);
        vals.push_back(r.grad_h_linf);
    }
    return fit_window(ts, vals, t_lo, t_hi, 1.5, 8);
}

std::vector<MeanValueRow> meanvalue_check(const GeometryCache& geo,
                                          const std::vector<Snapshot>& snaps, double t,
                                          const std::vector<double>& radii) {
    std::vector<MeanValueRow> out;
    const int n = geo.dim();
    for (double r : radii) {
        MeanValueRow row;
        row.t = t;
        row.r = r;
        if (!(r > 0.0) || r * r >= t) {
            row.skipped = true; // hypothesis radius < sqrt(t) fails
            out.push_back(row);
            continue;
        }
        // LHS: sup over (M minus B(r/2)) x (t - (r/2)^2, t] of |h|^2
        // RHS: integral over (M minus B(r)) x (t - r^2, t] of |h|^2
        double lhs = 0.0;
        double integral = 0.0;
        double prev_space = 0.0, prev_t = 0.0;
        bool have_prev = false;
        for (const Snapshot& s : snaps) {
            if (s.t > t + 1e-12) break;
            const bool in_half = s.t > t - 0.25 * r * r - 1e-12;
            const bool in_full = s.t > t - r * r - 1e-12;
            if (in_half) {
                for (size_t i = 0; i < geo.nnodes(); ++i)
                    if (geo.s_dist(i) >= 0.5 * r) lhs = std::max(lhs, sqr(s.habs[i]));
            }
            if (in_full) {
                double space = 0.0;
                for (size_t i = 0; i < geo.nnodes(); ++i)
                    if (geo.s_dist(i) >= r) space += geo.weight(i) * sqr(s.habs[i]);
                if (have_prev) integral += 0.5 * (space + prev_space) * (s.t - prev_t);
                prev_space = space;
                prev_t = s.t;
                have_prev = true;
            }
        }
        row.lhs = lhs;
        row.rhs_int = integral;
        row.implied_c =
            (integral > 0.0) ? lhs * std::pow(r, double(n + 2)) / integral : 0.0;
        out.push_back(row);
    }
    return out;
}

MonotonicityReport monotonicity_report(const std::vector<DiagRow>& diag, double t_start,
                                       double tol_mono, bool tracked_kernel, double leak_scale) {
    MonotonicityReport rep;
    rep.partial = !tracked_kernel;
    // (a) largest positive slope of ||h - h0||^2 after the transient
    double worst = -std::numeric_limits<double>::max();
    for (size_t i = 1; i < diag.size(); ++i) {
        if (diag[i].t < t_start) continue;
        const double dt = diag[i].t - diag[i - 1].t;
        if (dt <= 0.0) continue;
        const double slope = (sqr(diag[i].hmh0_l2) - sqr(diag[i - 1].hmh0_l2)) / dt;
        worst = std::max(worst, slope);
    }
    rep.max_energy_slope = (worst == -std::numeric_limits<double>::max()) ? 0.0 : worst;
    rep.violation_flagged = rep.max_energy_slope > tol_mono;

    // (b) modulation speed against the squared gradient (quadratic bound).
    // The frozen-kernel projection carries a linear leakage term
    // ~ leak_scale * ||h - h0||; once the true quadratic signal decays
    // below it the ratio is no longer a measurement of the bound.
    if (tracked_kernel) {
        std::vector<double> ratios;
        double dmax = 0.0;
        for (const DiagRow& r : diag) dmax = std::max(dmax, r.dth0_l2);
        for (const DiagRow& r : diag) {
            if (r.t < t_start) continue;
            const double den = sqr(r.grad_hmh0_l2);
            if (den <= 0.0 || r.dth0_l2 <= 1e-6 * dmax) continue;
            if (leak_scale > 0.0 && r.dth0_l2 <= 10.0 * leak_scale * r.hmh0_l2) continue;
            ratios.push_back(r.dth0_l2 / den);
        }
        if (!ratios.empty()) {
            std::sort(ratios.begin(), ratios.end());
            rep.lemma_ratio_max = ratios.back();
            rep.lemma_ratio_median = ratios[ratios.size() / 2];
        }
    }

    // (c) smallest C >= 0 with ||h(t)|| <= e^{Ct} ||h(0)||
    double c = 0.0;
    if (!diag.empty() && diag.front().h_l2 > 0.0) {
        for (const DiagRow& r : diag) {
            if (r.t <= 0.0) continue;
            c = std::max(c, std::log(r.h_l2 / diag.front().h_l2) / r.t);
        }
    }
    rep.growth_constant = std::max(0.0, c);
    return rep;
}

} // namespace alef
