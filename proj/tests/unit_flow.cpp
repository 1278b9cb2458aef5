#include <doctest.h>

#include "alef/data_families.hpp"
#include "alef/fits.hpp"
#include "alef/flow.hpp"
#include "alef/norms.hpp"
#include "alef/operators.hpp"

using namespace alef;

TEST_CASE("cfl step size follows the stability formula") {
    BackgroundMetric bg = background_euclidean(4);
    {
        RadialGrid grid = build_grid(4, 0.0, 10.0, 101, 1.0);
        GeometryCache geo(bg, grid);
        ComponentLayout lay = ComponentLayout::of(bg);
        TensorField h(lay, grid.size());
        const double dr = 0.1;
        CHECK(cfl_dt(geo, h, 0.5) == doctest::Approx(0.5 * dr * dr / 2.0).epsilon(1e-12));
        // halving the spacing quarters the step
        RadialGrid g2 = build_grid(4, 0.0, 10.0, 201, 1.0);
        GeometryCache geo2(bg, g2);
        TensorField h2(lay, g2.size());
        CHECK(cfl_dt(geo2, h2, 0.5) ==
              doctest::Approx(0.25 * cfl_dt(geo, h, 0.5)).epsilon(1e-10));
        // g^{rr} = 2 halves the step relative to h = 0
        TensorField h3(lay, grid.size());
        for (size_t i = 0; i < grid.size(); ++i) h3.at(0, i) = -0.5;
        CHECK(cfl_dt(geo, h3, 0.5) == doctest::Approx(0.5 * cfl_dt(geo, h, 0.5)).epsilon(1e-10));
    }
}

TEST_CASE("zero data is a bitwise fixed point of the step") {
    for (bool eh : {false, true}) {
        BackgroundMetric bg = eh ? background_eguchi_hanson(1.0) : background_euclidean(4);
        RadialGrid grid = eh ? build_grid(4, 1.0, 17.0, 128, 1.01)
                             : build_grid(4, 0.0, 16.0, 128, 1.0);
        GeometryCache geo(bg, grid);
        ComponentLayout lay = ComponentLayout::of(bg);
        TensorField h(lay, grid.size());
        for (int s = 0; s < 25; ++s) flow_step(geo, h, 1e-3);
        for (double v : h.data) CHECK(v == 0.0);
    }
}

TEST_CASE("one step matches the linear heat step for tiny conformal data") {
    BackgroundMetric bg = background_euclidean(4);
    RadialGrid grid = build_grid(4, 0.0, 20.0, 256, 1.0);
    GeometryCache geo(bg, grid);
    ComponentLayout lay = ComponentLayout::of(bg);
    TensorField h(lay, grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        const double v = 1e-6 * std::exp(-sqr(geo.s_dist(i) - 8.0) / 4.0);
        h.at(0, i) = h.at(1, i) = v;
    }
    apply_bcs(geo, h);
    TensorField h1 = h;
    const double dt = 1e-4;
    flow_step(geo, h1, dt);
    // linear oracle: RK2 applied to the Lichnerowicz operator
    TensorField k1 = lichnerowicz_machinery(geo, h);
    TensorField mid = h;
    mid.axpy(dt, k1);
    apply_bcs(geo, mid);
    TensorField k2 = lichnerowicz_machinery(geo, mid);
    TensorField lin = h;
    lin.axpy(0.5 * dt, k1);
    lin.axpy(0.5 * dt, k2);
    apply_bcs(geo, lin);
    double worst = 0.0;
    for (size_t i = 0; i < grid.size(); ++i)
        worst = std::max(worst, std::abs(h1.at(0, i) - lin.at(0, i)));
    CHECK(worst < 1e-10 * norm_inf(h));
}

TEST_CASE("RK2 local error is third order in the step size") {
    BackgroundMetric bg = background_euclidean(4);
    RadialGrid grid = build_grid(4, 0.0, 20.0, 192, 1.0);
    GeometryCache geo(bg, grid);
    ComponentLayout lay = ComponentLayout::of(bg);
    TensorField h0(lay, grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        const double v = 0.05 * std::exp(-sqr(geo.s_dist(i) - 8.0) / 6.0);
        h0.at(0, i) = v;
        h0.at(1, i) = 0.5 * v;
    }
    apply_bcs(geo, h0);
    auto err = [&](double dt) {
        TensorField a = h0;
        flow_step(geo, a, dt);
        TensorField b = h0;
        flow_step(geo, b, dt / 2);
        flow_step(geo, b, dt / 2);
        a.axpy(-1.0, b);
        return norm_l2(geo, a);
    };
    const double e1 = err(2e-3), e2 = err(1e-3);
    CHECK(e1 / e2 > 6.0);
    CHECK(e1 / e2 < 10.0);
}

TEST_CASE("kernel projection: trivial cases and Pythagoras") {
    BackgroundMetric bg = background_eguchi_hanson(1.0);
    RadialGrid grid = build_grid(4, 1.0, 17.0, 128, 1.01);
    GeometryCache geo(bg, grid);
    ComponentLayout lay = ComponentLayout::of(bg);
    TensorField h = random_smooth_field(geo, lay, 77u);
    {
        auto [h0, hp] = project_kernel(geo, h, {});
        CHECK(norm_inf(h0) == 0.0);
        CHECK(norm_inf(hp - h) == 0.0);
    }
    TensorField e1 = random_smooth_field(geo, lay, 78u);
    e1.scale(1.0 / norm_l2(geo, e1));
    {
        auto [h0, hp] = project_kernel(geo, e1, {e1});
        CHECK(norm_l2(geo, hp) < 1e-12);
        CHECK(inner_l2(geo, h0, e1) == doctest::Approx(1.0).epsilon(1e-12));
    }
    {
        auto [h0, hp] = project_kernel(geo, h, {e1});
        const double lhs = sqr(norm_l2(geo, h));
        const double rhs = sqr(norm_l2(geo, h0)) + sqr(norm_l2(geo, hp));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("run outcomes: trivial convergence, ball exit by growth, blow-up classification") {
    BackgroundMetric bg = background_euclidean(4);
    RadialGrid grid = build_grid(4, 0.0, 24.0, 192, 1.005);
    GeometryCache geo(bg, grid);
    ComponentLayout lay = ComponentLayout::of(bg);
    FlowParams p;
    p.t_max = 2.0;
    p.diag_t0 = 0.01;
    {
        TensorField z(lay, grid.size());
        RunResult r = run_flow(geo, z, {}, p);
        CHECK(r.outcome == Outcome::converged);
        CHECK(r.state.step_count == 0);
    }
    {
        // deep wide tangential well: the sup norm grows transiently and
        // crosses a ball radius placed above the initial value
        TensorField h(lay, grid.size());
        for (size_t i = 0; i < grid.size(); ++i) {
            const double s = geo.s_dist(i);
            h.at(1, i) = -0.88 * (std::exp(-sqr((s - 5.0) / 1.0)) + std::exp(-sqr((s + 5.0) / 1.0)));
        }
        apply_bcs(geo, h);
        FlowParams pe = p;
        pe.delta_ball = norm_inf(h) * 1.02;
        RunResult r = run_flow(geo, h, {}, pe);
        CHECK(r.outcome == Outcome::exited_ball);
        CHECK(r.exit_value >= pe.delta_ball);
        CHECK(r.state.t > 0.0);
    }
    {
        // non-positive-definite initial metric: classified, not crashed
        TensorField h(lay, grid.size());
        for (size_t i = 0; i < grid.size(); ++i) {
            const double s = geo.s_dist(i);
            h.at(0, i) = -1.02 * std::exp(-sqr((s - 5.0) / 1.5));
        }
        apply_bcs(geo, h);
        FlowParams pb = p;
        pb.delta_ball = 10.0;
        RunResult r = run_flow(geo, h, {}, pb);
        CHECK(r.outcome == Outcome::blew_up);
        CHECK(!r.exit_note.empty());
    }
    {
        // small data on a short horizon: reaches t_max
        DataParams dp;
        dp.family = DataFamily::gaussian;
        dp.amplitude = 1e-3;
        dp.width = 2.0;
        TensorField h = make_initial_data(geo, lay, dp);
        FlowParams pr = p;
        pr.t_max = 0.05;
        pr.tol_conv = 1e-14;
        RunResult r = run_flow(geo, h, {}, pr);
        CHECK(r.outcome == Outcome::reached_t_max);
        // gauge diagnostics are measured individually at the end
        CHECK(alef::finite(r.final_ric_inf));
        CHECK(alef::finite(r.final_v_inf));
    }
}

TEST_CASE("flat gaussian run decays monotonically in L2") {
    BackgroundMetric bg = background_euclidean(4);
    RadialGrid grid = build_grid(4, 0.0, 24.0, 192, 1.005);
    GeometryCache geo(bg, grid);
    ComponentLayout lay = ComponentLayout::of(bg);
    DataParams dp;
    dp.family = DataFamily::gaussian;
    dp.amplitude = 1e-2;
    dp.width = 2.0;
    TensorField h = make_initial_data(geo, lay, dp);
    FlowParams p;
    p.t_max = 1.0;
    p.diag_t0 = 0.02;
    p.tol_conv = 1e-14;
    RunResult r = run_flow(geo, h, {}, p);
    for (size_t i = 1; i < r.diag.size(); ++i) CHECK(r.diag[i].h_l2 <= r.diag[i - 1].h_l2 * (1 + 1e-12));
    // h0 is identically zero when no kernel is tracked
    for (const DiagRow& row : r.diag) CHECK(row.hmh0_l2 == doctest::Approx(row.h_l2).epsilon(1e-14));
}

TEST_CASE("parabolic rescaling covariance on the flat background") {
    // evolving (lambda^2 t, lambda r)-rescaled data on the rescaled grid
    // reproduces the rescaled fields; lambda = 2 keeps the arithmetic exact
    BackgroundMetric bg = background_euclidean(4);
    const double lam = 2.0;
    RadialGrid g1 = build_grid(4, 0.0, 16.0, 128, 1.0);
    RadialGrid g2 = build_grid(4, 0.0, 16.0 * lam, 128, 1.0);
    GeometryCache geo1(bg, g1), geo2(bg, g2);
    ComponentLayout lay = ComponentLayout::of(bg);
    TensorField h1(lay, g1.size()), h2(lay, g2.size());
    for (size_t i = 0; i < g1.size(); ++i) {
        const double v = 0.01 * std::exp(-sqr(g1.nodes[i] - 6.0) / 4.0);
        h1.at(0, i) = v;
        h1.at(1, i) = 0.5 * v;
        h2.at(0, i) = v; // same profile in the rescaled coordinate
        h2.at(1, i) = 0.5 * v;
    }
    apply_bcs(geo1, h1);
    apply_bcs(geo2, h2);
    const double dt = 1e-3;
    for (int s = 0; s < 50; ++s) flow_step(geo1, h1, dt);
    for (int s = 0; s < 50; ++s) flow_step(geo2, h2, dt * lam * lam);
    double worst = 0.0;
    for (size_t i = 0; i < g1.size(); ++i)
        for (int c = 0; c < lay.count(); ++c)
            worst = std::max(worst, std::abs(h1.at(c, i) - h2.at(c, i)));
    CHECK(worst < 1e-13);
}

TEST_CASE("doubling the truncation radius changes short-run diagnostics below one percent") {
    BackgroundMetric bg = background_euclidean(4);
    ComponentLayout lay = ComponentLayout::of(bg);
    double ref = 0.0;
    for (double rmax : {24.0, 48.0}) {
        RadialGrid grid = build_grid(4, 0.0, rmax, size_t(96 * rmax / 24.0), 1.0);
        GeometryCache geo(bg, grid);
        DataParams dp;
        dp.family = DataFamily::gaussian;
        dp.amplitude = 1e-2;
        dp.width = 2.0;
        TensorField h = make_initial_data(geo, lay, dp);
        FlowParams p;
        p.t_max = 2.0;
        p.diag_t0 = 2.0;
        p.tol_conv = 1e-14;
        RunResult r = run_flow(geo, h, {}, p);
        const double val = r.diag.back().h_l2;
        if (ref != 0.0) CHECK(val == doctest::Approx(ref).epsilon(0.01));
        ref = val;
    }
}

TEST_CASE("fit helpers recover exact synthetic laws") {
    std::vector<DiagRow> diag;
    for (int k = 0; k < 40; ++k) {
        DiagRow r;
        r.t = 0.5 * std::pow(1.35, k);
        r.h_linf = 3.0 * std::pow(r.t, -2.0);
        r.h_linf_outside = 1.7 * std::pow(r.t, -1.0);
        r.grad_h_linf = 0.8 * std::pow(r.t, -0.5);
        diag.push_back(r);
    }
    DecayFit whole = decay_fit(diag, 1.0, 1e4, true);
    REQUIRE(whole.valid);
    CHECK(whole.exponent == doctest::Approx(-2.0).epsilon(1e-10));
    DecayFit outside = decay_fit(diag, 1.0, 1e4, false);
    REQUIRE(outside.valid);
    CHECK(outside.exponent == doctest::Approx(-1.0).epsilon(1e-10));
    DecayFit sm = smoothing_fit(diag, 0.5, 1e4);
    REQUIRE(sm.valid);
    CHECK(sm.exponent == doctest::Approx(-0.5).epsilon(1e-10));
    // insufficient dynamic range is flagged, not fitted
    DecayFit bad = decay_fit(diag, 1.0, 2.0, true);
    CHECK(!bad.valid);
    CHECK(!bad.note.empty());
}

TEST_CASE("mean-value table: vacuous and skipped rows") {
    BackgroundMetric bg = background_euclidean(4);
    RadialGrid grid = build_grid(4, 0.0, 24.0, 64, 1.0);
    GeometryCache geo(bg, grid);
    std::vector<Snapshot> snaps;
    for (double t = 90.0; t <= 100.0; t += 1.0) {
        Snapshot s;
        s.t = t;
        s.habs.assign(grid.size(), 0.0);
        snaps.push_back(s);
    }
    auto rows = meanvalue_check(geo, snaps, 100.0, {2.0, 30.0});
    REQUIRE(rows.size() == 2);
    CHECK(!rows[0].skipped);
    CHECK(rows[0].lhs == 0.0);
    CHECK(rows[0].rhs_int == 0.0);
    CHECK(rows[0].implied_c == 0.0); // vacuous
    CHECK(rows[1].skipped);          // r >= sqrt(t)
}

TEST_CASE("monotonicity report flags a planted violation") {
    std::vector<DiagRow> diag;
    for (int k = 0; k < 30; ++k) {
        DiagRow r;
        r.t = 0.5 * std::pow(1.3, k);
        r.hmh0_l2 = std::exp(-0.05 * r.t);
        r.grad_hmh0_l2 = 0.3 * r.hmh0_l2;
        r.dth0_l2 = 0.1 * sqr(r.grad_hmh0_l2);
        diag.push_back(r);
    }
    MonotonicityReport ok = monotonicity_report(diag, 1.0, 1e-8, true);
    CHECK(!ok.violation_flagged);
    CHECK(ok.lemma_ratio_max > 0.0);
    CHECK(ok.lemma_ratio_max / ok.lemma_ratio_median < 10.0);
    // plant a bump upward in ||h - h0||
    diag[20].hmh0_l2 = diag[19].hmh0_l2 * 1.5;
    MonotonicityReport bad = monotonicity_report(diag, 1.0, 1e-8, true);
    CHECK(bad.violation_flagged);
    MonotonicityReport partial = monotonicity_report(diag, 1.0, 1e-8, false);
    CHECK(partial.partial);
}
