#pragma once

#include "alef/field.hpp"
#include "alef/geometry_cache.hpp"

namespace alef {

enum class Outcome { converged, exited_ball, reached_t_max, blew_up };
std::string outcome_name(Outcome o);

struct FlowParams {
    double t_max = 10.0;
    double delta_ball = 0.1;
    double tol_conv = 1e-5;
    double tol_mono = 1e-8;
    double safety = 0.4;
    double diag_t0 = 0.01;
    double diag_factor = 1.3;
    bool track_kernel = true;
    // space-time snapshots of |h| for the mean-value sweep
    bool snapshots = false;
    double snap_t0 = 0.0;
    double snap_dt = 1.0;
};

/// One diagnostics sample; the column order is the CSV schema.
struct DiagRow {
    double t = 0;
    double h_l2 = 0;
    double h_linf = 0;
    double h_linf_outside = 0; // sup over M minus the sqrt(t)-ball
    double grad_h_l2 = 0;
    double grad_h_linf = 0;
    double hmh0_l2 = 0;
    double grad_hmh0_l2 = 0;
    double energy = 0; // (-L (h - h0), h - h0)
    double dth0_l2 = 0;
    double ric_inf = 0;
    double v_inf = 0;
};

struct Snapshot {
    double t = 0;
    std::vector<double> habs; // |h| per node
};

struct FlowState {
    double t = 0.0;
    TensorField h;
    TensorField h0; // kernel projection of h (modulation reference)
    double dt_last = 0.0;
    size_t step_count = 0;
};

struct RunResult {
    Outcome outcome = Outcome::reached_t_max;
    FlowState state;
    std::vector<DiagRow> diag;
    std::vector<Snapshot> snapshots;
    std::string exit_note;
    double exit_threshold = 0.0;
    double exit_value = 0.0;
    // gauge diagnostics at the final state
    double final_ric_inf = 0.0;
    double final_v_inf = 0.0;
};

/// Stable explicit step size: safety * min_i (F0 dx)_i^2 / (2 max g^{ab}),
/// with an additional cap from the zero-order coupling of the linearization.
double cfl_dt(const GeometryCache& geo, const TensorField& h, double safety);

/// geometry-only part of the coupling cap (reused across steps)
double coupling_cap(const GeometryCache& geo, const ComponentLayout& lay);
double cfl_dt_with_cap(const GeometryCache& geo, const TensorField& h, double safety, double kmax);

/// One RK2 (Heun) step of the Ricci-DeTurck flow; boundary conditions are
/// re-applied after each stage. Throws ComputeError on positivity loss.
void flow_step(const GeometryCache& geo, TensorField& h, double dt);

/// apply the boundary conditions of the evolution (outer Dirichlet, center
/// parity / inner Dirichlet)
void apply_bcs(const GeometryCache& geo, TensorField& h);

/// Projection onto the span of an orthonormal kernel basis:
/// h0 = sum <h, e_i> e_i, h = h0 + h_perp.
std::pair<TensorField, TensorField> project_kernel(const GeometryCache& geo, const TensorField& h,
                                                   const std::vector<TensorField>& basis);

/// Evolve until t_max / convergence / ball exit / blow-up.
RunResult run_flow(const GeometryCache& geo, const TensorField& initial,
                   const std::vector<TensorField>& kernel_basis, const FlowParams& p);

} // namespace alef
