#include "alef/flow.hpp"

#include "alef/norms.hpp"
#include "alef/operators.hpp"

#include <algorithm>

namespace alef {

std::string outcome_name(Outcome o) {
    switch (o) {
        case Outcome::converged: return "converged";
        case Outcome::exited_ball: return "exited_ball";
        case Outcome::reached_t_max: return "reached_t_max";
        case Outcome::blew_up: return "blew_up";
    }
    return "?";
}

void apply_bcs(const GeometryCache& geo, TensorField& h) {
    const size_t N = geo.nnodes();
    for (int c = 0; c < h.layout.count(); ++c) h.at(c, N - 1) = 0.0;
    if (geo.inner() == InnerBoundary::center) {
        fill_center(geo, h);
    } else {
        for (int c = 0; c < h.layout.count(); ++c) h.at(c, 0) = 0.0;
    }
}

double coupling_cap(const GeometryCache& geo, const ComponentLayout& lay) {
    double kmax = 0.0;
    const size_t N = geo.nnodes();
    const int nc = lay.count();
    for (size_t i = 1; i + 1 < N; ++i) {
        const Mat K = algebraic_coupling(geo, lay, i, true);
        double row = 0.0;
        for (int a = 0; a < nc; ++a) {
            double s = 0.0;
            for (int b = 0; b < nc; ++b) s += std::abs(K(a, b));
            row = std::max(row, s);
        }
        kmax = std::max(kmax, row);
    }
    return kmax;
}

double cfl_dt(const GeometryCache& geo, const TensorField& h, double safety) {
    require(safety > 0.0 && safety <= 1.0, "cfl_dt: safety in (0, 1] required");
    const size_t N = geo.nnodes();
    double dmin = std::numeric_limits<double>::max();
    for (size_t i = 0; i + 1 < N; ++i) {
        const double ds = 0.5 * (geo.f0(i) + geo.f0(i + 1)) * (geo.x(i + 1) - geo.x(i));
        dmin = std::min(dmin, ds * ds);
    }
    const double sym = max_inverse_metric_eigen(geo, h);
    const double dt = safety * dmin / (2.0 * sym);
    if (!(dt > 0.0)) throw ComputeError("cfl_dt: degenerate step size");
    return dt;
}

double cfl_dt_with_cap(const GeometryCache& geo, const TensorField& h, double safety,
                       double kmax) {
    double dt = cfl_dt(geo, h, safety);
    // zero-order coupling cap; the RK2 stability interval on the negative
    // real axis is |z| <= 2
    if (kmax > 0.0) dt = std::min(dt, safety * 2.0 / kmax);
    return dt;
}

void flow_step(const GeometryCache& geo, TensorField& h, double dt) {
    TensorField k1 = ricci_deturck_rhs(geo, h);
    TensorField mid = h;
    mid.axpy(dt, k1);
    apply_bcs(geo, mid);
    TensorField k2 = ricci_deturck_rhs(geo, mid);
    h.axpy(0.5 * dt, k1);
    h.axpy(0.5 * dt, k2);
    apply_bcs(geo, h);
    if (!h.all_finite()) throw ComputeError("flow_step: non-finite state");
}

std::pair<TensorField, TensorField> project_kernel(const GeometryCache& geo, const TensorField& h,
                                                   const std::vector<TensorField>& basis) {
    TensorField h0(h.layout, h.nnodes);
    for (const TensorField& e : basis) {
        const double c = inner_l2(geo, h, e);
        h0.axpy(c, e);
    }
    TensorField hp = h;
    hp.axpy(-1.0, h0);
    return {h0, hp};
}

RunResult run_flow(const GeometryCache& geo, const TensorField& initial,
                   const std::vector<TensorField>& kernel_basis, const FlowParams& p) {
    RunResult out;
    out.state.h = initial;
    apply_bcs(geo, out.state.h);
    out.state.t = 0.0;

    const bool have_kernel = p.track_kernel && !kernel_basis.empty();
    std::vector<double> prev_coeff(kernel_basis.size(), 0.0);
    double prev_diag_t = 0.0;

    auto kernel_coeffs = [&](const TensorField& h) {
        std::vector<double> c(kernel_basis.size(), 0.0);
        for (size_t k = 0; k < kernel_basis.size(); ++k) c[k] = inner_l2(geo, h, kernel_basis[k]);
        return c;
    };

    auto record_diag = [&](double dth0) {
        const TensorField& h = out.state.h;
        DiagRow row;
        row.t = out.state.t;
        row.h_l2 = norm_l2(geo, h);
        row.h_linf = norm_inf(h);
        row.h_linf_outside = norm_inf_outside(geo, h, std::sqrt(std::max(0.0, out.state.t)));
        try {
            row.grad_h_l2 = grad_norm_l2(geo, h);
            row.grad_h_linf = grad_norm_inf(geo, h);
        } catch (const ComputeError&) {
            row.grad_h_l2 = row.grad_h_linf = std::numeric_limits<double>::quiet_NaN();
        }
        TensorField hm = h;
        if (have_kernel) hm.axpy(-1.0, out.state.h0);
        row.hmh0_l2 = norm_l2(geo, hm);
        try {
            row.grad_hmh0_l2 = grad_norm_l2(geo, hm);
            TensorField lh = lichnerowicz(geo, hm);
            row.energy = -inner_l2(geo, lh, hm);
        } catch (const ComputeError&) {
            row.grad_hmh0_l2 = row.energy = std::numeric_limits<double>::quiet_NaN();
        }
        row.dth0_l2 = dth0;
        try {
            TensorField ric = ricci(geo, h);
            row.ric_inf = norm_inf(ric);
            VectorField v = deturck_vector(geo, h);
            double vm = 0.0;
            for (size_t i = 0; i < geo.nnodes(); ++i) {
                double s = 0.0;
                for (int c = 0; c < geo.dim(); ++c) s += sqr(v.at(c, i));
                vm = std::max(vm, std::sqrt(s));
            }
            row.v_inf = vm;
        } catch (const ComputeError&) {
            row.ric_inf = row.v_inf = std::numeric_limits<double>::quiet_NaN();
        }
        out.diag.push_back(row);
    };

    auto record_snapshot = [&]() {
        Snapshot s;
        s.t = out.state.t;
        s.habs.resize(geo.nnodes());
        for (size_t i = 0; i < geo.nnodes(); ++i) s.habs[i] = std::sqrt(out.state.h.norm2_at(i));
        out.snapshots.push_back(std::move(s));
    };

    // a state that is not a metric is classified, never evolved
    try {
        max_inverse_metric_eigen(geo, out.state.h);
    } catch (const ComputeError& e) {
        out.outcome = Outcome::blew_up;
        out.exit_note = e.what();
        if (have_kernel) out.state.h0 = TensorField(initial.layout, geo.nnodes());
        record_diag(0.0);
        return out;
    }

    // trivial initial data converges immediately
    {
        const double h0n = norm_inf(out.state.h);
        if (h0n == 0.0) {
            out.outcome = Outcome::converged;
            out.exit_note = "initial data identically zero";
            if (have_kernel) out.state.h0 = TensorField(initial.layout, geo.nnodes());
            record_diag(0.0);
            return out;
        }
        if (h0n >= p.delta_ball) {
            out.outcome = Outcome::exited_ball;
            out.exit_threshold = p.delta_ball;
            out.exit_value = h0n;
            out.exit_note = "initial data already outside the ball";
            if (have_kernel) {
                auto pr = project_kernel(geo, out.state.h, kernel_basis);
                out.state.h0 = pr.first;
            }
            record_diag(0.0);
            return out;
        }
    }

    if (have_kernel) {
        auto pr = project_kernel(geo, out.state.h, kernel_basis);
        out.state.h0 = pr.first;
        prev_coeff = kernel_coeffs(out.state.h);
    } else {
        out.state.h0 = TensorField(initial.layout, geo.nnodes());
    }

    double next_diag = p.diag_t0;
    double next_snap = p.snap_t0;
    record_diag(0.0);
    const double kcap = coupling_cap(geo, initial.layout);

    while (out.state.t < p.t_max) {
        double dt;
        try {
            dt = cfl_dt_with_cap(geo, out.state.h, p.safety, kcap);
        } catch (const ComputeError& e) {
            out.outcome = Outcome::blew_up;
            out.exit_note = e.what();
            return out;
        }
        dt = std::min(dt, p.t_max - out.state.t);
        // land exactly on pending sample times to keep schedules clean
        if (p.snapshots && out.state.t + dt > next_snap && out.state.t < next_snap)
            dt = next_snap - out.state.t;

        try {
            flow_step(geo, out.state.h, dt);
        } catch (const ComputeError& e) {
            out.outcome = Outcome::blew_up;
            out.exit_note = e.what();
            return out; // state preserved for post-mortem
        }
        out.state.t += dt;
        out.state.dt_last = dt;
        out.state.step_count += 1;

        const double hinf = norm_inf(out.state.h);
        if (hinf >= p.delta_ball) {
            out.outcome = Outcome::exited_ball;
            out.exit_threshold = p.delta_ball;
            out.exit_value = hinf;
            out.exit_note = "sup norm crossed delta_ball at t = " + std::to_string(out.state.t);
            if (have_kernel) out.state.h0 = project_kernel(geo, out.state.h, kernel_basis).first;
            record_diag(out.diag.empty() ? 0.0 : out.diag.back().dth0_l2);
            return out;
        }

        if (p.snapshots && out.state.t >= next_snap - 1e-12) {
            record_snapshot();
            next_snap += p.snap_dt;
        }

        if (out.state.t >= next_diag || out.state.t >= p.t_max) {
            double dth0 = 0.0;
            if (have_kernel) {
                auto coeff = kernel_coeffs(out.state.h);
                double s = 0.0;
                const double dtw = out.state.t - prev_diag_t;
                for (size_t k = 0; k < coeff.size(); ++k) s += sqr(coeff[k] - prev_coeff[k]);
                dth0 = (dtw > 0.0) ? std::sqrt(s) / dtw : 0.0;
                prev_coeff = coeff;
                out.state.h0 = project_kernel(geo, out.state.h, kernel_basis).first;
            }
            prev_diag_t = out.state.t;
            record_diag(dth0);
            while (next_diag <= out.state.t) next_diag *= p.diag_factor;

            // convergence: small velocity and small Ricci
            TensorField rhs = ricci_deturck_rhs(geo, out.state.h);
            const double vnorm = norm_l2(geo, rhs);
            const double ric_inf = out.diag.back().ric_inf;
            if (vnorm <= p.tol_conv && ric_inf <= p.tol_conv) {
                out.outcome = Outcome::converged;
                out.exit_note = "velocity and Ricci below tol_conv at t = " +
                                std::to_string(out.state.t);
                break;
            }
        }
    }
    if (out.outcome != Outcome::converged) out.outcome = Outcome::reached_t_max;

    // gauge split at the end: Ricci and DeTurck field measured individually
    try {
        TensorField ric = ricci(geo, out.state.h);
        out.final_ric_inf = norm_inf(ric);
        VectorField v = deturck_vector(geo, out.state.h);
        double vm = 0.0;
        for (size_t i = 0; i < geo.nnodes(); ++i) {
            double s = 0.0;
            for (int c = 0; c < geo.dim(); ++c) s += sqr(v.at(c, i));
            vm = std::max(vm, std::sqrt(s));
        }
        out.final_v_inf = vm;
    } catch (const ComputeError&) {
        out.final_ric_inf = out.final_v_inf = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

} // namespace alef
