#include "alef/scenario.hpp"

#include "alef/data_families.hpp"
#include "alef/fits.hpp"
#include "alef/flow.hpp"
#include "alef/norms.hpp"
#include "alef/operators.hpp"
#include "alef/spectral.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace alef {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

BackgroundMetric make_background(const RunConfig& c) {
    if (c.background == "euclidean") return background_euclidean(c.n);
    if (c.background == "cone") return background_cone(c.n, c.gamma_order);
    return background_eguchi_hanson(c.a);
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw ComputeError("cannot write " + tmp);
        f << content;
    }
    std::filesystem::rename(tmp, path);
}

} // namespace

void Report::set(const std::string& k, const std::string& v) {
    for (auto& kv : keys)
        if (kv.first == k) {
            kv.second = v;
            return;
        }
    keys.emplace_back(k, v);
}

void Report::set(const std::string& k, double v) { set(k, fmt(v)); }

const std::string* Report::find(const std::string& k) const {
    for (const auto& kv : keys)
        if (kv.first == k) return &kv.second;
    return nullptr;
}

std::vector<std::string> list_scenarios() {
    return {"flat-decay-n3", "flat-decay-n4", "cone-orbifold", "eh-stability",
            "eh-flow",       "smoothing-kink", "meanvalue-sweep"};
}

RunConfig scenario_config(const std::string& name) {
    RunConfig c;
    c.scenario = name;
    if (name == "flat-decay-n4" || name == "flat-decay-n3") {
        c.background = "euclidean";
        c.n = (name == "flat-decay-n4") ? 4 : 3;
        c.r_min = 0.0;
        c.r_max = 130.0;
        c.grid_n = 256;
        c.stretch = 1.0;
        c.family = "power_tail";
        c.amplitude = 1e-3;
        c.width = 2.0;
        c.t_max = 1.05e3;
        c.delta_ball = 0.3;
        c.diag_t0 = 0.5;
        c.diag_factor = 1.25;
        c.safety = 0.45;
        c.tol_conv = 1e-14; // run the full window, no early stop
    } else if (name == "cone-orbifold") {
        c.background = "cone";
        c.n = 4;
        c.gamma_order = 2;
        c.r_min = 0.5;
        c.r_max = 80.0;
        c.grid_n = 320;
        c.stretch = 1.012;
        c.family = "gaussian";
        c.amplitude = 1e-2;
        c.width = 2.0;
        c.center = 6.0;
        c.t_max = 20.0;
    } else if (name == "eh-stability") {
        c.background = "eguchi_hanson";
        c.n = 4;
        c.a = 1.0;
        c.r_min = 1.0;
        c.r_max = 33.0;
        c.grid_n = 768;
        c.stretch = 1.004;
        c.family = "gaussian";
        c.amplitude = 0.0; // spectral preflight only; the flow is trivial
        c.t_max = 0.1;
        c.spectral_m = 8;
    } else if (name == "eh-flow") {
        c.background = "eguchi_hanson";
        c.n = 4;
        c.a = 1.0;
        c.r_min = 1.0;
        c.r_max = 17.0;
        c.grid_n = 192;
        c.stretch = 1.027;
        c.family = "tt_bump";
        c.amplitude = 1e-2;
        c.width = 1.5;
        c.center = 2.5;
        c.t_max = 120.0;
        c.tol_conv = 1e-6;
        c.delta_ball = 0.2;
        c.safety = 0.45;
        c.diag_t0 = 0.05;
        c.spectral_m = 5;
        c.snapshots = true;
        c.snap_t0 = 10.0;
        c.snap_dt = 0.5;
        c.mv_time = 40.0;
        c.mv_radii = {1.5, 3.0};
    } else if (name == "smoothing-kink") {
        c.background = "euclidean";
        c.n = 4;
        c.r_min = 0.0;
        c.r_max = 8.0;
        c.grid_n = 1024;
        c.stretch = 1.0;
        c.family = "kink";
        c.amplitude = 1e-2;
        c.width = 0.012; // cliff at the grid scale: gradients start unresolved
        c.center = 2.0;
        c.t_max = 1.2e-2;
        c.safety = 0.45;
        c.diag_t0 = 5e-5;
        c.diag_factor = 1.22;
        c.tol_conv = 1e-16;
    } else if (name == "meanvalue-sweep") {
        c.background = "euclidean";
        c.n = 4;
        c.r_min = 0.0;
        c.r_max = 90.0;
        c.grid_n = 320;
        c.stretch = 1.0;
        c.family = "power_tail";
        c.amplitude = 1e-3;
        c.width = 2.0;
        c.t_max = 101.0;
        c.safety = 0.45;
        c.snapshots = true;
        c.snap_t0 = 8.0;
        c.snap_dt = 0.5;
        c.mv_time = 100.0;
        c.mv_radii = {2.0, 4.0, 8.0};
        c.tol_conv = 1e-14;
        c.diag_t0 = 0.5;
    } else {
        throw InputError("unknown scenario: " + name + " (see list-scenarios)");
    }
    c.validate();
    return c;
}

Report run_scenario(const RunConfig& c) {
    c.validate();
    Report rep;
    rep.set("version", std::string(kVersion));
    rep.set("config_hash", config_hash(c));
    rep.set("scenario", c.scenario.empty() ? std::string("custom") : c.scenario);

    BackgroundMetric bg = make_background(c);
    RadialGrid grid = build_grid(c.n, c.r_min, c.r_max, c.grid_n, c.stretch);
    GeometryCache geo(bg, grid);
    ComponentLayout lay = ComponentLayout::of(bg, c.cross_term);

    // ---- spectral preflight: stability and kernel before flowing ----
    OperatorMatrix negL = assemble_operator(geo, lay, OperatorKind::neg_lichnerowicz);
    EigenSolveOpts eopts;
    eopts.m = c.spectral_m;
    eopts.seed = c.seed;
    SpectralResult spec = lowest_eigenpairs(negL, eopts);
    {
        std::vector<double> mags;
        for (double v : spec.values) mags.push_back(std::abs(v));
        std::sort(mags.begin(), mags.end());
        const double tol_kern = 0.1 * mags[mags.size() / 2];
        kernel_analyze(negL, spec, tol_kern);
    }
    rep.set("lambda_min", spec.values.front());
    for (size_t i = 0; i < spec.values.size(); ++i)
        rep.set("lambda_" + std::to_string(i), spec.values[i]);
    rep.set("kernel_dim", double(spec.kernel_dim));
    rep.set("kernel_ambiguous", spec.kernel_ambiguous ? "true" : "false");
    if (spec.kernel_dim > 0) {
        rep.set("kernel_decay_slope", spec.decay_slope[0]);
        rep.set("kernel_trace_residual", spec.trace_residual[0]);
        rep.set("kernel_div_residual", spec.div_residual[0]);
    }

    OperatorMatrix negD = assemble_operator(geo, lay, OperatorKind::neg_rough_laplacian);
    std::vector<std::vector<double>> kernel_hat(spec.hat_vectors.begin(),
                                                spec.hat_vectors.begin() + spec.kernel_dim);
    AlphaResult alpha = strong_positivity_alpha(negL, negD, kernel_hat, c.seed + 1);
    rep.set("alpha", alpha.alpha);
    rep.set("alpha_residual", alpha.residual);

    AvrResult avr = avr_estimate(geo);
    rep.set("avr", avr.value);
    rep.set("avr_residual", avr.residual);

    try {
        HardyResult hardy = hardy_constant(geo, c.seed + 2);
        rep.set("hardy_c", hardy.constant);
        rep.set("hardy_residual", hardy.residual);
    } catch (const InputError& e) {
        rep.set("hardy_c", std::string("rejected: ") + e.what());
    }

    // ---- initial data ----
    std::vector<TensorField> kernel_fields;
    for (int k = 0; k < spec.kernel_dim; ++k) {
        TensorField f = spec.fields[k];
        const double nn = norm_l2(geo, f);
        if (nn > 0) f.scale(1.0 / nn);
        kernel_fields.push_back(std::move(f));
    }
    TensorField h0data(lay, geo.nnodes());
    DataParams dp;
    dp.amplitude = c.amplitude;
    dp.width = c.width;
    dp.center = c.center;
    dp.tail_exponent = c.tail_exponent;
    dp.family = parse_family(c.family);
    if (c.amplitude > 0.0) {
        if (dp.family == DataFamily::kernel) {
            require(!kernel_fields.empty(), "kernel initial data requested but kernel is empty");
            h0data = kernel_fields.front();
            h0data.scale(c.amplitude / std::max(1e-300, norm_inf(h0data)));
        } else {
            h0data = make_initial_data(geo, lay, dp);
        }
    }

    // ---- flow ----
    FlowParams fp;
    fp.t_max = c.t_max;
    fp.delta_ball = c.delta_ball;
    fp.tol_conv = c.tol_conv;
    fp.tol_mono = c.tol_mono;
    fp.safety = c.safety;
    fp.diag_t0 = c.diag_t0;
    fp.diag_factor = c.diag_factor;
    fp.snapshots = c.snapshots;
    fp.snap_t0 = c.snap_t0;
    fp.snap_dt = c.snap_dt;
    RunResult run = run_flow(geo, h0data, kernel_fields, fp);

    rep.set("outcome", outcome_name(run.outcome));
    rep.set("t_end", run.state.t);
    rep.set("steps", double(run.state.step_count));
    rep.set("exit_note", run.exit_note.empty() ? "-" : run.exit_note);
    rep.set("exit_threshold", run.exit_threshold);
    rep.set("exit_value", run.exit_value);
    rep.set("final_ric_inf", run.final_ric_inf);
    rep.set("final_v_inf", run.final_v_inf);
    rep.exit_code = (run.outcome == Outcome::blew_up) ? 1 : 0;

    // ---- fits ----
    const bool flat = (c.background != "eguchi_hanson");
    DecayFit whole = decay_fit(run.diag, 1.0, c.t_max, true);
    DecayFit outside = decay_fit(run.diag, 1.0, c.t_max, false);
    if (whole.valid) {
        rep.set("decay_exponent", whole.exponent);
        rep.set("decay_constant", whole.constant);
        rep.set("decay_residual", whole.residual);
    } else {
        rep.set("decay_exponent", "not fitted: " + whole.note);
    }
    if (outside.valid) rep.set("decay_exponent_outside", outside.exponent);
    rep.set("decay_norm_is_whole_manifold", flat ? "true" : "false");

    DecayFit smoothing = smoothing_fit(run.diag, 1e-4, 1e-2);
    if (smoothing.valid)
        rep.set("smoothing_slope_k1", smoothing.exponent);
    else
        rep.set("smoothing_slope_k1", "not fitted: " + smoothing.note);

    MonotonicityReport mono =
        monotonicity_report(run.diag, 1.0, c.tol_mono, !kernel_fields.empty());
    rep.set("energy_max_slope", mono.max_energy_slope);
    rep.set("lemma_ratio_max", mono.lemma_ratio_max);
    rep.set("lemma_ratio_median", mono.lemma_ratio_median);
    rep.set("growth_constant", mono.growth_constant);
    rep.set("monotonicity_flagged", mono.violation_flagged ? "true" : "false");

    std::vector<MeanValueRow> mv;
    if (c.snapshots && !run.snapshots.empty()) {
        mv = meanvalue_check(geo, run.snapshots, c.mv_time, c.mv_radii);
        double cmin = std::numeric_limits<double>::max(), cmax = 0.0;
        for (const auto& row : mv)
            if (!row.skipped && row.implied_c > 0.0) {
                cmin = std::min(cmin, row.implied_c);
                cmax = std::max(cmax, row.implied_c);
            }
        if (cmax > 0.0) {
            rep.set("meanvalue_c_min", cmin);
            rep.set("meanvalue_c_max", cmax);
            rep.set("meanvalue_c_ratio", cmax / cmin);
        }
    }

    // ---- CSV bodies (written by emit_report) ----
    {
        std::ostringstream d;
        d << "t,h_l2,h_linf,h_linf_outside,grad_h_l2,grad_h_linf,hmh0_l2,grad_hmh0_l2,energy,"
             "dth0_l2,ric_inf,v_inf\n";
        for (const DiagRow& r : run.diag) {
            d << fmt(r.t) << ',' << fmt(r.h_l2) << ',' << fmt(r.h_linf) << ','
              << fmt(r.h_linf_outside) << ',' << fmt(r.grad_h_l2) << ',' << fmt(r.grad_h_linf)
              << ',' << fmt(r.hmh0_l2) << ',' << fmt(r.grad_hmh0_l2) << ',' << fmt(r.energy) << ','
              << fmt(r.dth0_l2) << ',' << fmt(r.ric_inf) << ',' << fmt(r.v_inf) << "\n";
        }
        rep.set("__csv_diagnostics", d.str());
    }
    {
        std::ostringstream d;
        d << "index,eigenvalue,residual,trace_residual,div_residual,decay_slope\n";
        for (size_t i = 0; i < spec.values.size(); ++i) {
            d << i << ',' << fmt(spec.values[i]) << ',' << fmt(spec.residuals[i]) << ','
              << fmt(i < spec.trace_residual.size() ? spec.trace_residual[i] : 0.0) << ','
              << fmt(i < spec.div_residual.size() ? spec.div_residual[i] : 0.0) << ','
              << fmt(i < spec.decay_slope.size() ? spec.decay_slope[i] : 0.0) << "\n";
        }
        rep.set("__csv_spectrum", d.str());
    }
    if (!mv.empty()) {
        std::ostringstream d;
        d << "t,r,lhs,rhs_integral,implied_c,skipped\n";
        for (const auto& row : mv)
            d << fmt(row.t) << ',' << fmt(row.r) << ',' << fmt(row.lhs) << ',' << fmt(row.rhs_int)
              << ',' << fmt(row.implied_c) << ',' << (row.skipped ? 1 : 0) << "\n";
        rep.set("__csv_meanvalue", d.str());
    }
    return rep;
}

std::string emit_report(Report& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    // peel off CSV bodies
    std::vector<std::pair<std::string, std::string>> keep;
    r.csv_paths.clear();
    std::vector<std::pair<std::string, std::string>> csvs;
    for (auto& kv : r.keys) {
        if (kv.first.rfind("__csv_", 0) == 0)
            csvs.emplace_back(kv.first.substr(6) + ".csv", kv.second);
        else
            keep.push_back(kv);
    }
    r.keys = keep;
    for (auto& [name, body] : csvs) {
        const std::string path = dir + "/" + name;
        write_atomic(path, body);
        r.csv_paths.push_back(path);
    }
    std::ostringstream s;
    for (const auto& kv : r.keys) s << kv.first << " = " << kv.second << "\n";
    for (const auto& p : r.csv_paths) s << "csv = " << p << "\n";
    s << "exit_code = " << r.exit_code << "\n";
    const std::string path = dir + "/summary.txt";
    write_atomic(path, s.str());
    return path;
}

} // namespace alef
