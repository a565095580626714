#ifndef SXADMM_BENCH_HPP_
#define SXADMM_BENCH_HPP_

#include <algorithm>
#include <cmath>

#include "sxadmm/admm.hpp"
#include "sxadmm/cost_model.hpp"
#include "sxadmm/generators.hpp"
#include "sxadmm/tuning.hpp"

namespace sxadmm {

/// High-accuracy internal reference: conventional ADMM driven to 1e-10
/// residuals and validated against the KKT conditions. The artifact carries
/// its own oracle instead of an external solver.
struct ReferenceSolution {
    Trajectory traj;
    double kkt = 0;
    int iters = 0;
};

inline ReferenceSolution reference_solution(const PartitionedProblem& pp_m1, const Vector& rho,
                                            double kkt_tol = 1e-7) {
    AdmmConfig cfg;
    cfg.rho = rho;
    cfg.beta = 1.0;
    cfg.max_iters = 200000;
    cfg.tol_primal = 1e-10;
    cfg.tol_dual = 1e-10;
    cfg.trace_stride = 1 << 30;

    auto sol = solve_conventional(pp_m1, cfg);
    if (!sol.converged())
        throw OracleNotConverged("reference solve did not reach 1e-10 residuals");
    ReferenceSolution ref{sol.traj, kkt_residual(pp_m1, sol.traj), sol.iters};
    if (ref.kkt > kkt_tol)
        throw OracleNotConverged("reference solve failed KKT validation");
    return ref;
}

inline ReferenceSolution reference_solution(const MpcProblem& problem, double kkt_tol = 1e-7) {
    auto part = Partition::trivial(problem.system);
    auto pp = build_stacked(problem, part, decompose(problem.system, part));
    return reference_solution(pp, tune_penalties(pp).rho_vector(), kkt_tol);
}

/// Spearman rank correlation with average ranks on ties.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw DimensionMismatch("spearman: need two equally sized samples");
    auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * (i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(xs), ry = ranks(ys);
    const std::size_t n = xs.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0 || dy == 0) throw DimensionMismatch("spearman: degenerate ranks");
    return num / std::sqrt(dx * dy);
}

// ---------------------------------------------------------------------------
// Cascade benchmark
// ---------------------------------------------------------------------------

struct CascadeBenchConfig {
    Index stages = 20;
    Index block_states = 6;
    Index block_inputs = 1;
    Index horizon = 5;
    int scenarios = 60;
    std::uint64_t system_seed = 1;
    std::uint64_t scenario_seed = 1000;
    double beta = 0.5;
    double penalty_scale = 90.0;
    int iters = 1200;       // fixed per-scenario iteration budget
    int budget_from = 10;   // first reported budget, in structured iterations
};

struct ConvergenceCurve {
    std::vector<double> budgets;      // sequential scalar operations
    std::vector<double> conv_median, conv_geomean, conv_p10, conv_p90;
    std::vector<double> struct_median, struct_geomean, struct_p10, struct_p90;
    std::vector<double> par_median, par_geomean, par_p10, par_p90;
};

struct CascadeBenchResult {
    CostReport cost;
    double separation_tendency = 0;
    ConvergenceCurve curve;
    int scenarios_run = 0;
    std::vector<std::uint64_t> scenario_seeds;
};

namespace benchdetail {

struct Percentiles {
    double median, geomean, p10, p90;
};

inline Percentiles percentiles(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    auto at = [&](double q) {
        const double pos = q * (v.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - lo) * (v[hi] - v[lo]);
    };
    double lg = 0;
    for (double x : v) lg += std::log(std::max(x, 1e-300));
    return {at(0.5), std::exp(lg / v.size()), at(0.1), at(0.9)};
}

inline double dist_at_iteration(const std::vector<IterTrace>& trace, long long iter) {
    if (iter <= 0) return 1.0;  // zero initialization against a nonzero reference
    const std::size_t k = std::min<std::size_t>(trace.size(), static_cast<std::size_t>(iter));
    return trace[k - 1].dist;
}

}  // namespace benchdetail

/// Reproduces the cascade comparison: cost-per-iteration ratios plus
/// dist-versus-sequential-ops statistics over feasible scenarios.
inline CascadeBenchResult run_cascade_bench(const CascadeBenchConfig& cfg) {
    auto gen = gen_cascade(cfg.stages, cfg.block_states, cfg.block_inputs, 1, cfg.system_seed);
    auto dec = decompose(gen.sys, gen.partition);
    auto part_m1 = Partition::trivial(gen.sys);
    auto dec_m1 = decompose(gen.sys, part_m1);

    CascadeBenchResult result;
    result.separation_tendency = analyze_structure(gen.sys, gen.partition).s;

    std::vector<std::vector<IterTrace>> conv_traces, struct_traces;
    long long conv_cost = 0, struct_cost = 0, par_cost = 0;
    Vector rho_m1, rho_struct;  // penalties depend on the system, not the scenario

    for (int sc = 0; sc < cfg.scenarios; ++sc) {
        const std::uint64_t seed = cfg.scenario_seed + static_cast<std::uint64_t>(sc);
        auto problem = make_tracking_problem(gen.sys, seed,
                                             WrapOptions{cfg.horizon, true, 2.0, 0.5, 0.1});
        auto pp = build_stacked(problem, gen.partition, dec);
        auto pp_m1 = build_stacked(problem, part_m1, dec_m1);
        if (sc == 0) {
            result.cost = make_cost_report(pp_m1, pp, cfg.beta);
            conv_cost = result.cost.conventional;
            struct_cost = result.cost.structured_single;
            par_cost = result.cost.structured_longest;
            rho_m1 = tune_penalties(pp_m1).rho_vector();
            rho_struct = tune_penalties(pp).rho_vector();
        }

        auto ref = reference_solution(pp_m1, rho_m1);

        AdmmConfig conv_cfg;
        conv_cfg.rho = rho_m1;
        conv_cfg.beta = 1.0;
        conv_cfg.penalty_scale = cfg.penalty_scale;
        conv_cfg.max_iters =
            static_cast<int>(cfg.iters * struct_cost / std::max<long long>(conv_cost, 1)) + 2;
        conv_cfg.tol_primal = conv_cfg.tol_dual = 0.0;
        conv_cfg.trace_stride = 1;
        auto conv = solve_conventional(pp_m1, conv_cfg, nullptr, &ref.traj);

        AdmmConfig struct_cfg;
        struct_cfg.rho = rho_struct;
        struct_cfg.beta = cfg.beta;
        struct_cfg.penalty_scale = cfg.penalty_scale;
        struct_cfg.max_iters = cfg.iters;
        struct_cfg.tol_primal = struct_cfg.tol_dual = 0.0;
        struct_cfg.trace_stride = 1;
        auto stru = solve_structured(pp, struct_cfg, nullptr, &ref.traj);

        conv_traces.push_back(std::move(conv.trace));
        struct_traces.push_back(std::move(stru.trace));
        result.scenario_seeds.push_back(seed);
        ++result.scenarios_run;
    }

    // budgets in sequential scalar ops, stepped by structured iterations
    for (int k = cfg.budget_from; k <= cfg.iters; k += 5) {
        const double budget = static_cast<double>(k) * struct_cost;
        std::vector<double> cv, sv, pv;
        for (int sc = 0; sc < result.scenarios_run; ++sc) {
            cv.push_back(benchdetail::dist_at_iteration(
                conv_traces[sc], static_cast<long long>(budget / conv_cost)));
            sv.push_back(benchdetail::dist_at_iteration(struct_traces[sc], k));
            pv.push_back(benchdetail::dist_at_iteration(
                struct_traces[sc], static_cast<long long>(budget / par_cost)));
        }
        const auto cp = benchdetail::percentiles(cv);
        const auto sp = benchdetail::percentiles(sv);
        const auto pp_ = benchdetail::percentiles(pv);
        result.curve.budgets.push_back(budget);
        result.curve.conv_median.push_back(cp.median);
        result.curve.conv_geomean.push_back(cp.geomean);
        result.curve.conv_p10.push_back(cp.p10);
        result.curve.conv_p90.push_back(cp.p90);
        result.curve.struct_median.push_back(sp.median);
        result.curve.struct_geomean.push_back(sp.geomean);
        result.curve.struct_p10.push_back(sp.p10);
        result.curve.struct_p90.push_back(sp.p90);
        result.curve.par_median.push_back(pp_.median);
        result.curve.par_geomean.push_back(pp_.geomean);
        result.curve.par_p10.push_back(pp_.p10);
        result.curve.par_p90.push_back(pp_.p90);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Separation-tendency study
// ---------------------------------------------------------------------------

struct StudyConfig {
    std::vector<Category> categories = {Category::Full,        Category::Sparse,
                                        Category::LowerTriangular, Category::Banded,
                                        Category::LowerBanded, Category::Star};
    std::vector<Index> dims = {5, 10};
    int seeds_per_cell = 5;
    int initial_conditions = 5;
    Index horizon = 8;
    double dist_target = 1e-4;
    double rho = 1.0;  // the study fixes rho = rho_i = 1
    double beta = 0.5;
    int max_iters = 100000;
    std::uint64_t base_seed = 10000;
};

struct StudyRow {
    Category category;
    Index x = 0;
    std::uint64_t seed = 0;
    double s = 0;
    double iters_conventional = 0;  // geometric mean over initial conditions
    double iters_structured = 0;
    double increase = 0;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    double spearman_s_vs_increase = 0;
    int skipped = 0;  // systems whose s was undefined or whose runs failed
};

inline StudyResult run_study(const StudyConfig& cfg) {
    if (!(cfg.dist_target > 0 && cfg.dist_target < 1))
        throw DimensionMismatch("study: dist_target must lie in (0,1)");
    StudyResult result;
    std::uint64_t seed = cfg.base_seed;

    for (Category cat : cfg.categories) {
        for (Index x : cfg.dims) {
            for (int rep = 0; rep < cfg.seeds_per_cell; ++rep) {
                const std::uint64_t sys_seed = seed++;
                auto gen = gen_category(GenSpec{cat, x, sys_seed});
                auto report = analyze_structure(gen.sys, gen.partition);
                if (!report.exists) {
                    ++result.skipped;
                    continue;
                }

                auto dec = decompose(gen.sys, gen.partition);
                auto part_m1 = Partition::trivial(gen.sys);
                auto dec_m1 = decompose(gen.sys, part_m1);

                double log_conv = 0, log_struct = 0;
                int runs = 0;
                Vector rho_oracle;
                for (int ic = 0; ic < cfg.initial_conditions; ++ic) {
                    const std::uint64_t ic_seed = seed++;
                    auto problem = make_tracking_problem(
                        gen.sys, ic_seed, WrapOptions{cfg.horizon, false, 2.0, 0.5, 0.1});
                    auto pp_m1 = build_stacked(problem, part_m1, dec_m1);
                    auto pp = build_stacked(problem, gen.partition, dec);
                    if (ic == 0) rho_oracle = tune_penalties(pp_m1).rho_vector();
                    auto ref = reference_solution(pp_m1, rho_oracle);

                    AdmmConfig conv_cfg = AdmmConfig::uniform(1, cfg.rho);
                    conv_cfg.beta = 1.0;
                    conv_cfg.max_iters = cfg.max_iters;
                    conv_cfg.tol_primal = conv_cfg.tol_dual = 0.0;
                    conv_cfg.dist_target = cfg.dist_target;
                    conv_cfg.trace_stride = 1 << 30;
                    auto conv = solve_conventional(pp_m1, conv_cfg, nullptr, &ref.traj);

                    AdmmConfig struct_cfg = AdmmConfig::uniform(pp.M, cfg.rho);
                    struct_cfg.beta = cfg.beta;
                    struct_cfg.max_iters = cfg.max_iters;
                    struct_cfg.tol_primal = struct_cfg.tol_dual = 0.0;
                    struct_cfg.dist_target = cfg.dist_target;
                    struct_cfg.trace_stride = 1 << 30;
                    auto stru = solve_structured(pp, struct_cfg, nullptr, &ref.traj);

                    if (conv.status != SolveStatus::DistTargetReached ||
                        stru.status != SolveStatus::DistTargetReached)
                        throw OracleNotConverged("study run missed the dist target");
                    log_conv += std::log(static_cast<double>(conv.iters));
                    log_struct += std::log(static_cast<double>(stru.iters));
                    ++runs;
                }

                StudyRow row;
                row.category = cat;
                row.x = x;
                row.seed = sys_seed;
                row.s = report.s;
                row.iters_conventional = std::exp(log_conv / runs);
                row.iters_structured = std::exp(log_struct / runs);
                row.increase = row.iters_structured / row.iters_conventional;
                result.rows.push_back(row);
            }
        }
    }

    std::vector<double> ss, inc;
    for (const auto& r : result.rows) {
        ss.push_back(r.s);
        inc.push_back(r.increase);
    }
    result.spearman_s_vs_increase = spearman(ss, inc);
    return result;
}

}  // namespace sxadmm

#endif  // SXADMM_BENCH_HPP_
