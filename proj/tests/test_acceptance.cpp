// Acceptance suite. Each test exercises one release criterion end to end at
// its stated tolerance and prints one PASS/FAIL line. Criteria 1 and 2 run
// with step-residual recording; criterion 10 audits those records.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>

#include "sxadmm/sxadmm.hpp"

using namespace sxadmm;

namespace {

using Clock = std::chrono::steady_clock;

struct Stopwatch {
    Clock::time_point t0 = Clock::now();
    double seconds() const { return std::chrono::duration<double>(Clock::now() - t0).count(); }
};

void report(const char* id, bool pass, const std::string& detail, double secs) {
    std::printf("[%s] %s  %s  (%.2fs)\n", id, pass ? "PASS" : "FAIL", detail.c_str(), secs);
    std::fflush(stdout);
}

// audited by criterion 10 over every solver run in criteria 1 and 2
struct StepAudit {
    double max_dyn = 0;
    double max_coupling = 0;
    double max_zeta_violation = 0;
    long runs = 0;
    long iterations = 0;

    void absorb(const Solution& sol) {
        ++runs;
        for (const auto& t : sol.trace) {
            ++iterations;
            if (std::isfinite(t.dyn_residual)) max_dyn = std::max(max_dyn, t.dyn_residual);
            if (std::isfinite(t.coupling_residual))
                max_coupling = std::max(max_coupling, t.coupling_residual);
            if (std::isfinite(t.zeta_violation))
                max_zeta_violation = std::max(max_zeta_violation, t.zeta_violation);
        }
    }
};

StepAudit g_audit;

PartitionedProblem stack(const MpcProblem& p, const Partition& part) {
    return build_stacked(p, part, decompose(p.system, part));
}

GeneratedSystem mixed_category_system(int k, std::uint64_t seed) {
    const Category cats[] = {Category::Full,   Category::Sparse,      Category::LowerTriangular,
                             Category::Banded, Category::LowerBanded, Category::Star};
    const Index dims[] = {5, 10};
    return gen_category(GenSpec{cats[k % 6], dims[(k / 6) % 2], seed});
}

}  // namespace

TEST(Acceptance, C01_ReductionToConventional) {
    Stopwatch sw;
    double worst = 0;
    for (int k = 0; k < 10; ++k) {
        auto gen = mixed_category_system(k, 7000 + k);
        auto p = make_tracking_problem(gen.sys, 7100 + k, WrapOptions{5, true, 2.0, 0.5, 0.1});
        auto pp = stack(p, Partition::trivial(p.system));

        AdmmConfig cfg = AdmmConfig::uniform(1, 1.0 + 0.2 * k);
        cfg.max_iters = 50;
        cfg.tol_primal = cfg.tol_dual = 0.0;  // run all 50 iterations
        cfg.record_step_residuals = true;
        cfg.beta = 1.0;
        auto conv = solve_conventional(pp, cfg);
        auto stru = solve_structured(pp, cfg);
        g_audit.absorb(conv);
        g_audit.absorb(stru);

        ASSERT_EQ(conv.trace.size(), stru.trace.size());
        for (std::size_t t = 0; t < conv.trace.size(); ++t) {
            const double sc = std::max(1.0, std::abs(conv.trace[t].objective));
            worst = std::max(worst,
                             std::abs(conv.trace[t].objective - stru.trace[t].objective) / sc);
            worst = std::max(worst, std::abs(conv.trace[t].r_zeta - stru.trace[t].r_zeta) /
                                        std::max(1.0, conv.trace[t].r_zeta));
        }
        const double ysc = std::max(1.0, conv.y.lpNorm<Eigen::Infinity>());
        worst = std::max(worst, (conv.y - stru.y).lpNorm<Eigen::Infinity>() / ysc);
        worst = std::max(worst,
                         (conv.state.zeta - stru.state.zeta).lpNorm<Eigen::Infinity>() / ysc);
        worst = std::max(
            worst,
            (conv.state.lambda_zeta - stru.state.lambda_zeta).lpNorm<Eigen::Infinity>() / ysc);
    }
    const double secs = sw.seconds();
    const bool pass = worst <= 1e-12 && secs < 10.0;
    report("C1", pass,
           "reduction: max iterate deviation " + std::to_string(worst) + " over 10 problems",
           secs);
    EXPECT_LE(worst, 1e-12);
    EXPECT_LT(secs, 10.0);
}

TEST(Acceptance, C02_OptimalityAgreement) {
    Stopwatch sw;
    bool all_reached = true;
    double worst_kkt = 0;
    int worst_iters = 0;
    for (int k = 0; k < 20; ++k) {
        auto gen = mixed_category_system(k, 8000 + k);
        auto p = make_tracking_problem(gen.sys, 8100 + k, WrapOptions{6, true, 2.0, 0.5, 0.1});
        auto pp_m1 = stack(p, Partition::trivial(p.system));
        auto rho_m1 = tune_penalties(pp_m1).rho_vector();
        auto ref = reference_solution(pp_m1, rho_m1);
        worst_kkt = std::max(worst_kkt, ref.kkt);

        AdmmConfig conv_cfg;
        conv_cfg.rho = rho_m1;
        conv_cfg.beta = 1.0;
        conv_cfg.max_iters = 50000;
        conv_cfg.tol_primal = conv_cfg.tol_dual = 0.0;
        conv_cfg.dist_target = 1e-6;
        conv_cfg.record_step_residuals = true;
        auto conv = solve_conventional(pp_m1, conv_cfg, nullptr, &ref.traj);
        g_audit.absorb(conv);

        auto pp = stack(p, gen.partition);
        AdmmConfig struct_cfg;
        struct_cfg.rho = tune_penalties(pp).rho_vector();
        struct_cfg.beta = 0.5;
        struct_cfg.max_iters = 50000;
        struct_cfg.tol_primal = struct_cfg.tol_dual = 0.0;
        struct_cfg.dist_target = 1e-6;
        struct_cfg.record_step_residuals = true;
        auto stru = solve_structured(pp, struct_cfg, nullptr, &ref.traj);
        g_audit.absorb(stru);

        all_reached = all_reached && conv.status == SolveStatus::DistTargetReached &&
                      stru.status == SolveStatus::DistTargetReached;
        worst_iters = std::max({worst_iters, conv.iters, stru.iters});
    }
    const double secs = sw.seconds();
    const bool pass = all_reached && worst_kkt <= 1e-7 && secs < 120.0;
    report("C2", pass,
           "agreement: 20 problems to dist<=1e-6, max iters " + std::to_string(worst_iters) +
               ", oracle KKT " + std::to_string(worst_kkt),
           secs);
    EXPECT_TRUE(all_reached);
    EXPECT_LE(worst_kkt, 1e-7);
    EXPECT_LT(secs, 120.0);
}

TEST(Acceptance, C03_ExampleOneExactness) {
    Stopwatch sw;
    auto ex = example_unstructured();
    auto [flow, usage] = link_usage(ex.sys);
    Matrix expected(2, 3);
    const double s2 = std::sqrt(2.0);
    expected << 0.5, 0.5, s2, 0.5, 0.5, s2;
    const double gamma_err = (usage.gamma - expected).cwiseAbs().maxCoeff();
    const double s = separation_tendency(usage, ex.partition).s;
    const double secs = sw.seconds();
    const bool pass = gamma_err <= 1e-12 && std::abs(s - 0.5) <= 1e-12 && secs < 1.0;
    report("C3", pass,
           "worked example: gamma error " + std::to_string(gamma_err) + ", s = " +
               std::to_string(s),
           secs);
    EXPECT_LE(gamma_err, 1e-12);
    EXPECT_NEAR(s, 0.5, 1e-12);
    EXPECT_LT(secs, 1.0);
}

TEST(Acceptance, C04_BoundaryValues) {
    Stopwatch sw;
    // block-diagonal system
    Matrix A = Matrix::Zero(4, 4);
    A.block(0, 0, 2, 2) << 0.4, 0.1, 0.0, 0.3;
    A.block(2, 2, 2, 2) << 0.2, 0.0, 0.1, 0.5;
    Matrix B = Matrix::Zero(4, 2);
    B.col(0).head(2) << 1.0, 0.5;
    B.col(1).tail(2) << 0.7, 1.0;
    auto diag_report = analyze_structure(LtiSystem{A, B}, Partition{{2, 2}, {1, 1}});

    // block-hollow, controllable and semi-convergent
    Matrix Ah(2, 2), Bh(2, 2);
    Ah << 0.0, 0.5, 0.5, 0.0;
    Bh << 0.0, 1.0, 1.0, 0.0;
    auto hollow_report = analyze_structure(LtiSystem{Ah, Bh}, Partition{{1, 1}, {1, 1}});

    const double secs = sw.seconds();
    const bool pass = diag_report.exists && std::abs(diag_report.s - 1.0) <= 1e-10 &&
                      hollow_report.exists && std::abs(hollow_report.s) <= 1e-10 && secs < 1.0;
    report("C4", pass,
           "boundaries: block-diagonal s = " + std::to_string(diag_report.s) +
               ", block-hollow s = " + std::to_string(hollow_report.s),
           secs);
    ASSERT_TRUE(diag_report.exists);
    ASSERT_TRUE(hollow_report.exists);
    EXPECT_NEAR(diag_report.s, 1.0, 1e-10);
    EXPECT_NEAR(hollow_report.s, 0.0, 1e-10);
    EXPECT_LT(secs, 1.0);
}

TEST(Acceptance, C05_DiagonalInvariance) {
    Stopwatch sw;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> mag(0.2, 5.0);
    std::bernoulli_distribution flip(0.5);
    double worst = 0;
    for (int sys_k = 0; sys_k < 10; ++sys_k) {
        GeneratedSystem gen = (sys_k < 4) ? gen_cascade(4, 3, 1, 1, 900 + sys_k)
                                          : mixed_category_system(sys_k, 900 + sys_k);
        const double s0 = analyze_structure(gen.sys, gen.partition).s;
        for (int t = 0; t < 100; ++t) {
            Vector T(gen.sys.state_dim() + gen.sys.input_dim());
            for (Index j = 0; j < T.size(); ++j) T[j] = (flip(rng) ? -1.0 : 1.0) * mag(rng);
            auto transformed = diagonal_transform(gen.sys, T);
            const Vector weights = T.tail(gen.sys.input_dim()).cwiseInverse();
            const double s1 =
                analyze_structure(transformed, gen.partition, 10000, 1e-12, weights).s;
            worst = std::max(worst, std::abs(s0 - s1));
        }
    }
    const double secs = sw.seconds();
    const bool pass = worst <= 1e-10;
    report("C5", pass, "diagonal invariance: max |ds| " + std::to_string(worst), secs);
    EXPECT_LE(worst, 1e-10);
}

TEST(Acceptance, C06_OptimalRhoSweep) {
    Stopwatch sw;
    int checked = 0, misplaced = 0;
    std::uint64_t seed = 600;
    while (checked < 20) {
        auto gen = (checked % 2 == 0) ? gen_cascade(4, 3, 1, 1, seed++)
                                      : mixed_category_system(checked, seed++);
        auto p = make_tracking_problem(gen.sys, seed++, WrapOptions{4, true, 2.0, 0.5, 0.1});
        auto pp = stack(p, gen.partition);
        for (Index i = 0; i < pp.M && checked < 20; ++i) {
            const auto& sub = pp.subsystems[i];
            auto nb = null_space_basis(sub.C_dense());
            const Matrix Qcal = sub.Qcal_dense();
            double rho_star;
            try {
                rho_star = optimal_rho(Qcal, nb.Z);
            } catch (const NotPositiveDefinite&) {
                continue;
            }
            const int grid = 50;
            int best = 0, nearest = 0;
            double best_val = kInf, nearest_gap = kInf;
            for (int g = 0; g < grid; ++g) {
                const double rho = rho_star * std::pow(100.0, -1.0 + 2.0 * g / (grid - 1.0));
                const double val = contraction_norm(rho, Qcal, nb.Z);
                if (val < best_val) {
                    best_val = val;
                    best = g;
                }
                const double gap = std::abs(std::log(rho / rho_star));
                if (gap < nearest_gap) {
                    nearest_gap = gap;
                    nearest = g;
                }
            }
            if (std::abs(best - nearest) > 1) ++misplaced;
            ++checked;
        }
    }
    const double secs = sw.seconds();
    const bool pass = misplaced == 0 && secs < 30.0;
    report("C6", pass,
           "optimal rho: sweep minimum adjacent to rho* on " + std::to_string(checked) +
               " subsystems, misplaced " + std::to_string(misplaced),
           secs);
    EXPECT_EQ(misplaced, 0);
    EXPECT_LT(secs, 30.0);
}

TEST(Acceptance, C07_CascadeCostRatios) {
    Stopwatch sw;
    auto gen = gen_cascade(20, 6, 1, 1, 1);
    auto p = make_tracking_problem(gen.sys, 2, WrapOptions{5, true, 2.0, 0.5, 0.1});
    auto pp = stack(p, gen.partition);
    auto pp_m1 = stack(p, Partition::trivial(gen.sys));
    const auto report_ = make_cost_report(pp_m1, pp, 0.5);
    const double secs = sw.seconds();
    const bool pass = report_.ratio_single >= 0.10 && report_.ratio_single <= 0.25 &&
                      report_.ratio_longest >= 0.005 && report_.ratio_longest <= 0.025 &&
                      secs < 60.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "cascade cost: single-thread ratio %.4f in [0.10,0.25], longest-thread %.5f "
                  "in [0.005,0.025]",
                  report_.ratio_single, report_.ratio_longest);
    report("C7", pass, buf, secs);
    EXPECT_GE(report_.ratio_single, 0.10);
    EXPECT_LE(report_.ratio_single, 0.25);
    EXPECT_GE(report_.ratio_longest, 0.005);
    EXPECT_LE(report_.ratio_longest, 0.025);
    EXPECT_LT(secs, 60.0);
}

TEST(Acceptance, C08_CascadeConvergenceCurves) {
    Stopwatch sw;
    CascadeBenchConfig cfg;
    cfg.scenarios = 50;
    cfg.iters = 1000;
    cfg.budget_from = 10;
    auto result = run_cascade_bench(cfg);

    int struct_viol = 0, par_viol = 0;
    for (std::size_t k = 0; k < result.curve.budgets.size(); ++k) {
        if (result.curve.struct_median[k] > result.curve.conv_median[k]) ++struct_viol;
        if (result.curve.par_median[k] >
            std::min(result.curve.struct_median[k], result.curve.conv_median[k]) + 1e-15)
            ++par_viol;
    }
    const double secs = sw.seconds();
    const bool pass = result.scenarios_run >= 50 && struct_viol == 0 && par_viol == 0 &&
                      secs < 600.0;
    report("C8", pass,
           "cascade convergence: " + std::to_string(result.scenarios_run) + " scenarios, " +
               std::to_string(result.curve.budgets.size()) +
               " budgets, violations struct/par " + std::to_string(struct_viol) + "/" +
               std::to_string(par_viol),
           secs);
    EXPECT_GE(result.scenarios_run, 50);
    EXPECT_EQ(struct_viol, 0);
    EXPECT_EQ(par_viol, 0);
    EXPECT_LT(secs, 600.0);
}

TEST(Acceptance, C09_SeparationTendencyStudy) {
    Stopwatch sw;
    StudyConfig cfg;  // default scale: 6 categories x {5,10} x 5 seeds, 5 ICs
    auto result = run_study(cfg);
    const double secs = sw.seconds();
    const bool pass = result.rows.size() == 60 && result.skipped == 0 &&
                      result.spearman_s_vs_increase <= -0.5 && secs < 900.0;
    report("C9", pass,
           "study: spearman(s, increase) = " + std::to_string(result.spearman_s_vs_increase) +
               " over " + std::to_string(result.rows.size()) + " systems, skipped " +
               std::to_string(result.skipped),
           secs);
    EXPECT_EQ(result.rows.size(), 60u);
    EXPECT_EQ(result.skipped, 0);
    EXPECT_LE(result.spearman_s_vs_increase, -0.5);
    EXPECT_LT(secs, 900.0);
}

TEST(Acceptance, C10_PerIterationInvariants) {
    Stopwatch sw;
    const bool pass = g_audit.runs >= 50 && g_audit.max_dyn <= 1e-9 &&
                      g_audit.max_coupling <= 1e-9 && g_audit.max_zeta_violation == 0.0;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "step invariants over %ld runs / %ld iterations: dyn %.2e, coupling %.2e, "
                  "zeta violation %.2e",
                  g_audit.runs, g_audit.iterations, g_audit.max_dyn, g_audit.max_coupling,
                  g_audit.max_zeta_violation);
    report("C10", pass, buf, sw.seconds());
    ASSERT_GE(g_audit.runs, 50);  // criteria 1-2 must have run first
    EXPECT_LE(g_audit.max_dyn, 1e-9);
    EXPECT_LE(g_audit.max_coupling, 1e-9);
    EXPECT_EQ(g_audit.max_zeta_violation, 0.0);
}

TEST(Acceptance, C11_CostModelConsistency) {
    Stopwatch sw;
    // Unit-constant complexity rows order conventional above structured
    // single-thread above the parallel row from M = 3 on.
    bool row_order = true;
    for (Index M = 3; M <= 15; ++M) {
        std::vector<Index> xdims(M, 2), wdims(M - 1, 1);
        wdims.push_back(2);
        auto rows = complexity_table(xdims, wdims, 10);
        row_order = row_order && rows.conventional > rows.structured_out1_1 &&
                    rows.structured_out1_1 > rows.structured_out1_par;
    }

    // Measured counts grow no faster than the rows: the measured/row ratio,
    // normalized at M = 1, stays within a factor of 3. Measured ordering is
    // checked at the large-M end of the family.
    double conv_unit = 0, s1_unit = 0, par_unit = 0;
    double worst_ratio = 0;
    bool measured_order = true;
    for (Index M = 1; M <= 15; ++M) {
        auto chain = gen_fig4_chain(M);
        auto p = make_tracking_problem(chain.sys, 1100 + M, WrapOptions{10, true, 2.0, 0.5, 0.1});
        auto pp = stack(p, chain.partition);
        auto pp_m1 = stack(p, Partition::trivial(chain.sys));
        auto rows = complexity_table(chain.partition.xdims, pp.dec.wdims, 10);
        const auto report_ = make_cost_report(pp_m1, pp, 0.5);

        const double conv_ratio = report_.conventional / rows.conventional;
        const double s1_ratio = report_.structured_single / rows.structured_out1_1;
        const double par_ratio = report_.structured_longest / rows.structured_out1_par;
        if (M == 1) {
            conv_unit = conv_ratio;
            s1_unit = s1_ratio;
            par_unit = par_ratio;
            continue;
        }
        worst_ratio = std::max({worst_ratio, conv_ratio / (3.0 * conv_unit),
                                s1_ratio / (3.0 * s1_unit), par_ratio / (3.0 * par_unit)});
        if (M >= 10)
            measured_order = measured_order &&
                             report_.conventional > report_.structured_single &&
                             report_.structured_single > report_.structured_longest;
    }
    const double secs = sw.seconds();
    const bool pass = row_order && measured_order && worst_ratio <= 1.0;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "cost model: row ordering (M>=3) %s, measured ordering (M>=10) %s, growth "
                  "bound fraction %.3f <= 1",
                  row_order ? "ok" : "violated", measured_order ? "ok" : "violated",
                  worst_ratio);
    report("C11", pass, buf, secs);
    EXPECT_TRUE(row_order);
    EXPECT_TRUE(measured_order);
    EXPECT_LE(worst_ratio, 1.0);
}
