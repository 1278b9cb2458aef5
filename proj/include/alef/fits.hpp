#pragma once

#include "alef/flow.hpp"

namespace alef {

struct DecayFit {
    double exponent = 0.0;
    double constant = 0.0;
    double residual = 0.0;
    bool valid = false;
    std::string note;
};

/// Least-squares slope of log(norm) against log(t) over [t_lo, t_hi].
/// Requires >= 10 samples spanning >= 2 decades, else flagged invalid.
/// whole_manifold selects the plain sup norm column instead of the
/// outside-sqrt(t) column.
DecayFit decay_fit(const std::vector<DiagRow>& diag, double t_lo, double t_hi,
                   bool whole_manifold);

/// Slope of log ||grad h||_inf against log t over an early-time window
/// (needs >= 1.5 decades).
DecayFit smoothing_fit(const std::vector<DiagRow>& diag, double t_lo, double t_hi);

/// One row of the parabolic mean-value sweep.
struct MeanValueRow {
    double t = 0;
    double r = 0;
    double lhs = 0;       // sup over P(t, r/2) of |h|^2
    double rhs_int = 0;   // space-time integral over P(t, r) of |h|^2
    double implied_c = 0; // lhs r^{n+2} / integral
    bool skipped = false; // r >= sqrt(t)
};

/// Evaluate sup / integral pairs over exterior parabolic regions
/// P(t, r) = (M minus B(r)) x (t - r^2, t] from stored snapshots.
std::vector<MeanValueRow> meanvalue_check(const GeometryCache& geo,
                                          const std::vector<Snapshot>& snaps, double t,
                                          const std::vector<double>& radii);

struct MonotonicityReport {
    double max_energy_slope = 0.0;       // largest d/dt ||h-h0||^2 for t >= t_start
    double lemma_ratio_max = 0.0;        // max ||dt h0|| / ||grad(h-h0)||^2
    double lemma_ratio_median = 0.0;
    double growth_constant = 0.0;        // fitted C >= 0 with ||h(t)|| <= e^{Ct} ||h(0)||
    bool partial = false;                // h0 tracking missing
    bool violation_flagged = false;      // positive excursion beyond tolerance
};

/// leak_scale: measured linear-leakage coefficient of the frozen-kernel
/// projection (||P0 L (h-h0)|| / ||h-h0||). Ratio samples where the
/// modulation velocity does not exceed this floor are excluded: below it
/// the quadratic law is not measurable.
MonotonicityReport monotonicity_report(const std::vector<DiagRow>& diag, double t_start,
                                       double tol_mono, bool tracked_kernel,
                                       double leak_scale = 0.0);

} // namespace alef
