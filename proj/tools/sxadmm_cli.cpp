// Command-line front end: generate systems and problems, solve them with
// either ADMM variant, tune penalties, analyze structure, and run the
// cascade benchmark and the separation-tendency study.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "sxadmm/sxadmm.hpp"

namespace fs = std::filesystem;
using namespace sxadmm;

namespace {

struct GenArgs {
    std::string category = "cascade";
    Index x = 10;
    Index stages = 20, block_states = 6, block_inputs = 1, coupling_rank = 1;
    Index chain_m = 5;
    Index horizon = 5;
    std::uint64_t seed = 1;
    bool unconstrained = false;
    std::string out = "problem.json";
};

Category parse_category(const std::string& name) {
    const std::pair<const char*, Category> table[] = {
        {"cascade", Category::Cascade},
        {"full", Category::Full},
        {"sparse", Category::Sparse},
        {"lower_triangular", Category::LowerTriangular},
        {"banded", Category::Banded},
        {"lower_banded", Category::LowerBanded},
        {"star", Category::Star},
        {"example_unstructured", Category::ExampleUnstructured},
        {"fig4_chain", Category::Fig4Chain},
    };
    for (const auto& [n, c] : table)
        if (name == n) return c;
    throw CLI::ValidationError("--category", "unknown category " + name);
}

int run_gen(const GenArgs& args) {
    const Category cat = parse_category(args.category);
    LtiSystem sys;
    Partition partition;
    Json meta;
    meta["category"] = args.category;
    meta["seed"] = args.seed;
    switch (cat) {
        case Category::Cascade: {
            auto gen = gen_cascade(args.stages, args.block_states, args.block_inputs,
                                   args.coupling_rank, args.seed);
            sys = gen.sys;
            partition = gen.partition;
            meta["stages"] = args.stages;
            meta["coupling_rank"] = args.coupling_rank;
            break;
        }
        case Category::ExampleUnstructured: {
            auto gen = example_unstructured();
            sys = gen.sys;
            partition = gen.partition;
            break;
        }
        case Category::Fig4Chain: {
            auto gen = gen_fig4_chain(args.chain_m, args.seed);
            sys = gen.sys;
            partition = gen.partition;
            meta["chain_m"] = args.chain_m;
            break;
        }
        default: {
            auto gen = gen_category(GenSpec{cat, args.x, args.seed});
            sys = gen.sys;
            partition = gen.partition;
            meta["x"] = args.x;
            break;
        }
    }
    auto problem = make_tracking_problem(
        sys, args.seed + 1, WrapOptions{args.horizon, !args.unconstrained, 2.0, 0.5, 0.1});
    meta["horizon"] = args.horizon;
    meta["constrained"] = !args.unconstrained;
    save_problem(args.out, problem, partition, meta);
    std::cout << "wrote " << args.out << " (x=" << sys.state_dim() << ", u=" << sys.input_dim()
              << ", M=" << partition.blocks() << ", N=" << args.horizon << ")\n";
    return 0;
}

struct SolveArgs {
    std::string file;
    std::string algo = "structured";
    double beta = 0.5;
    std::string rho = "optimal";
    std::string threads_model = "1";
    int max_iters = 50000;
    double tol = 1e-9;
    std::string out = ".";
};

Vector resolve_rho(const std::string& policy, const PartitionedProblem& pp) {
    if (policy == "unit") return Vector::Ones(pp.M);
    auto report = tune_penalties(pp);
    Vector rho = report.rho_vector();
    for (const auto& e : report.entries)
        if (!e.positive_definite)
            std::cerr << "note: subsystem " << e.subsystem
                      << " projected Hessian not positive definite, using rho = "
                      << report.fallback_rho << "\n";
    if (policy == "optimal") return rho;
    if (policy.rfind("scale=", 0) == 0) {
        const double scale = std::stod(policy.substr(6));
        if (!(scale > 0)) throw CLI::ValidationError("--rho", "scale must be positive");
        return rho * scale;
    }
    throw CLI::ValidationError("--rho", "expected unit, optimal, or scale=<r>");
}

int run_solve(const SolveArgs& args) {
    auto file = load_problem(args.file);
    const bool conventional = args.algo == "conventional";
    if (!conventional && args.algo != "structured")
        throw CLI::ValidationError("--algo", "expected conventional or structured");

    const Partition partition =
        conventional ? Partition::trivial(file.problem.system) : file.partition;
    auto pp = build_stacked(file.problem, partition,
                            decompose(file.problem.system, partition));

    AdmmConfig cfg;
    cfg.rho = resolve_rho(args.rho, pp);
    cfg.beta = args.beta;
    cfg.max_iters = args.max_iters;
    cfg.tol_primal = cfg.tol_dual = args.tol;
    cfg.trace_stride = 1;

    const auto cost =
        count_iteration(pp, conventional ? CostMode::Conventional : CostMode::Structured,
                        args.beta);
    if (args.threads_model == "2MN") {
        const UseCase uc = pp.dec.out1 ? UseCase::Out1 : UseCase::Box;
        cfg.ops_per_iter = static_cast<double>(
            thread_partition(cost, pp, uc, 2 * pp.M * pp.N).longest);
    } else {
        cfg.ops_per_iter = static_cast<double>(cost.total.total());
    }

    auto sol = conventional ? solve_conventional(pp, cfg) : solve_structured(pp, cfg);
    for (const auto& w : sol.warnings) std::cerr << "warning: " << w << "\n";

    fs::create_directories(args.out);
    const auto sol_path = fs::path(args.out) / "solution.json";
    const auto trace_path = fs::path(args.out) / "trace.csv";
    save_solution(sol_path.string(), sol.traj,
                  Json{{"algo", args.algo}, {"iters", sol.iters}});
    write_trace_csv(trace_path.string(), sol.trace,
                    {{"algo", args.algo},
                     {"beta", std::to_string(args.beta)},
                     {"rho_policy", args.rho},
                     {"threads_model", args.threads_model},
                     {"ops_convention", kCountingConvention}});
    std::cout << (sol.converged() ? "converged" : "max-iterations") << " after " << sol.iters
              << " iterations; wrote " << sol_path.string() << " and " << trace_path.string()
              << "\n";
    return sol.converged() ? 0 : 2;
}

int run_tune(const std::string& file_path, const std::string& out) {
    auto file = load_problem(file_path);
    auto pp = build_stacked(file.problem, file.partition,
                            decompose(file.problem.system, file.partition));
    auto report = tune_penalties(pp);
    std::cout << "subsystem,eig_min,eig_max,rho_star,positive_definite\n";
    for (const auto& e : report.entries)
        std::cout << e.subsystem << "," << e.eig_min << "," << e.eig_max << "," << e.rho_star
                  << "," << (e.positive_definite ? 1 : 0) << "\n";
    if (!out.empty()) {
        CsvWriter csv(out, {"subsystem", "eig_min", "eig_max", "rho_star", "positive_definite"},
                      {{"source", file_path}});
        for (const auto& e : report.entries)
            csv.row(e.subsystem, e.eig_min, e.eig_max, e.rho_star,
                    e.positive_definite ? 1 : 0);
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

int run_analyze(const std::string& file_path, bool print_gamma, const std::string& out) {
    auto file = load_problem(file_path);
    const auto& sys = file.problem.system;
    auto [flow, usage] = link_usage(sys);
    auto report = separation_tendency(usage, file.partition);
    report.semiconvergent = check_semiconvergent(sys.A);
    report.controllable = check_controllable(sys.A, sys.B);

    std::cout << "semiconvergent=" << report.semiconvergent
              << " controllable=" << report.controllable << " converged=" << flow.converged
              << " exists=" << report.exists << "\n";
    if (print_gamma) std::cout << "gamma =\n" << usage.gamma << "\n";
    if (report.exists) {
        std::cout << "s_rows =";
        for (Index r = 0; r < report.s_rows.size(); ++r) std::cout << " " << report.s_rows[r];
        std::cout << "\ns = " << report.s
                  << (report.structured ? "  (structured, s >= 0.75)" : "") << "\n";
    } else {
        std::cout << "separation tendency undefined for this system\n";
    }
    if (!out.empty()) {
        CsvWriter csv(out, {"row", "s_row"},
                      {{"source", file_path},
                       {"s", report.exists ? std::to_string(report.s) : "nan"},
                       {"semiconvergent", std::to_string(report.semiconvergent)},
                       {"controllable", std::to_string(report.controllable)}});
        for (Index r = 0; r < report.s_rows.size(); ++r) csv.row(r, report.s_rows[r]);
        std::cout << "wrote " << out << "\n";
    }
    return report.exists ? 0 : 3;
}

int run_reference(const std::string& file_path, const std::string& out) {
    auto file = load_problem(file_path);
    auto ref = reference_solution(file.problem);
    save_solution(out, ref.traj,
                  Json{{"kkt_residual", ref.kkt}, {"oracle_iters", ref.iters}});
    std::cout << "reference solution after " << ref.iters << " iterations, KKT residual "
              << ref.kkt << "; wrote " << out << "\n";
    return 0;
}

struct BenchArgs {
    bool cost_only = false;
    bool growth = false;
    int scenarios = 60;
    int iters = 1200;
    std::uint64_t seed = 1;
    std::string out = ".";
};

int run_bench(const BenchArgs& args) {
    fs::create_directories(args.out);
    if (args.growth) {
        const auto path = fs::path(args.out) / "growth.csv";
        CsvWriter csv(path.string(),
                      {"M", "conv_measured", "struct_measured", "par_measured", "row1_conv",
                       "row4_struct_out1", "row5_par_out1"},
                      {{"N", "10"}, {"ops_convention", kCountingConvention}});
        for (Index M = 1; M <= 15; ++M) {
            auto chain = gen_fig4_chain(M, args.seed + static_cast<std::uint64_t>(M));
            auto problem = make_tracking_problem(chain.sys, args.seed + 100 + M,
                                                 WrapOptions{10, true, 2.0, 0.5, 0.1});
            auto pp = build_stacked(problem, chain.partition,
                                    decompose(chain.sys, chain.partition));
            auto part_m1 = Partition::trivial(chain.sys);
            auto pp_m1 = build_stacked(problem, part_m1, decompose(chain.sys, part_m1));
            const auto report = make_cost_report(pp_m1, pp, 0.5);
            const auto rows = complexity_table(chain.partition.xdims, pp.dec.wdims, 10);
            csv.row(M, report.conventional, report.structured_single,
                    report.structured_longest, rows.conventional, rows.structured_out1_1,
                    rows.structured_out1_par);
        }
        std::cout << "wrote " << (fs::path(args.out) / "growth.csv").string() << "\n";
        return 0;
    }

    CascadeBenchConfig cfg;
    cfg.scenarios = args.cost_only ? 1 : args.scenarios;
    cfg.iters = args.cost_only ? 1 : args.iters;
    cfg.system_seed = args.seed;
    cfg.scenario_seed = args.seed * 1000;
    auto result = run_cascade_bench(cfg);

    const auto cost_path = fs::path(args.out) / "cascade_cost.csv";
    CsvWriter cost_csv(cost_path.string(),
                       {"config", "threads", "cost_per_iteration", "ratio_vs_conventional"},
                       {{"s", std::to_string(result.separation_tendency)},
                        {"ops_convention", kCountingConvention}});
    cost_csv.row("conventional", 1, result.cost.conventional, 1.0);
    cost_csv.row("structured", 1, result.cost.structured_single, result.cost.ratio_single);
    cost_csv.row("structured", "2MN", result.cost.structured_longest,
                 result.cost.ratio_longest);
    std::cout << "cost per iteration: conventional=" << result.cost.conventional
              << " structured=" << result.cost.structured_single << " ("
              << 100 * result.cost.ratio_single << "%) longest-thread="
              << result.cost.structured_longest << " (" << 100 * result.cost.ratio_longest
              << "%)\n";
    std::cout << "separation tendency s = " << result.separation_tendency << "\n";
    std::cout << "wrote " << cost_path.string() << "\n";
    if (args.cost_only) return 0;

    const auto curve_path = fs::path(args.out) / "cascade_convergence.csv";
    CsvWriter csv(curve_path.string(),
                  {"budget_ops", "conv_median", "conv_geomean", "conv_p10", "conv_p90",
                   "struct_median", "struct_geomean", "struct_p10", "struct_p90", "par_median",
                   "par_geomean", "par_p10", "par_p90"},
                  {{"scenarios", std::to_string(result.scenarios_run)},
                   {"ops_convention", kCountingConvention}});
    for (std::size_t k = 0; k < result.curve.budgets.size(); ++k)
        csv.row(result.curve.budgets[k], result.curve.conv_median[k],
                result.curve.conv_geomean[k], result.curve.conv_p10[k],
                result.curve.conv_p90[k], result.curve.struct_median[k],
                result.curve.struct_geomean[k], result.curve.struct_p10[k],
                result.curve.struct_p90[k], result.curve.par_median[k],
                result.curve.par_geomean[k], result.curve.par_p10[k],
                result.curve.par_p90[k]);
    std::cout << "wrote " << curve_path.string() << " over " << result.scenarios_run
              << " scenarios\n";
    return 0;
}

struct StudyArgs {
    int seeds = 5;
    int ics = 5;
    double dist_target = 1e-4;
    std::uint64_t seed = 10000;
    std::string out = ".";
};

int run_study_cmd(const StudyArgs& args) {
    StudyConfig cfg;
    cfg.seeds_per_cell = args.seeds;
    cfg.initial_conditions = args.ics;
    cfg.dist_target = args.dist_target;
    cfg.base_seed = args.seed;
    auto result = run_study(cfg);

    fs::create_directories(args.out);
    const auto path = fs::path(args.out) / "study.csv";
    CsvWriter csv(path.string(),
                  {"category", "x", "seed", "s", "iters_conventional", "iters_structured",
                   "increase"},
                  {{"dist_target", std::to_string(cfg.dist_target)},
                   {"spearman", std::to_string(result.spearman_s_vs_increase)},
                   {"skipped", std::to_string(result.skipped)}});
    for (const auto& r : result.rows)
        csv.row(category_name(r.category), r.x, r.seed, r.s, r.iters_conventional,
                r.iters_structured, r.increase);
    std::cout << "study over " << result.rows.size()
              << " systems: spearman(s, increase) = " << result.spearman_s_vs_increase
              << " (skipped " << result.skipped << ")\n";
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"structure-exploiting ADMM for MPC problems"};
    app.require_subcommand(1);

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen", "generate a system and tracking problem");
    gen->add_option("--category", gen_args.category,
                    "cascade|full|sparse|lower_triangular|banded|lower_banded|star|"
                    "example_unstructured|fig4_chain");
    gen->add_option("--x", gen_args.x, "state dimension for random categories");
    gen->add_option("--stages", gen_args.stages, "cascade stages");
    gen->add_option("--block-states", gen_args.block_states, "states per cascade stage");
    gen->add_option("--block-inputs", gen_args.block_inputs, "inputs per cascade stage");
    gen->add_option("--coupling-rank", gen_args.coupling_rank, "cascade coupling rank");
    gen->add_option("--chain-m", gen_args.chain_m, "chain length for fig4_chain");
    gen->add_option("--horizon", gen_args.horizon, "prediction horizon N");
    gen->add_option("--seed", gen_args.seed, "generator seed");
    gen->add_flag("--unconstrained", gen_args.unconstrained, "omit box constraints");
    gen->add_option("--out", gen_args.out, "output problem file");

    SolveArgs solve_args;
    auto* solve = app.add_subcommand("solve", "solve a problem file with ADMM");
    solve->add_option("file", solve_args.file, "problem file")->required();
    solve->add_option("--algo", solve_args.algo, "conventional|structured");
    solve->add_option("--beta", solve_args.beta, "balance parameter in (0,1]");
    solve->add_option("--rho", solve_args.rho, "unit|optimal|scale=<r>");
    solve->add_option("--threads-model", solve_args.threads_model,
                      "1|2MN (op accounting for the trace)");
    solve->add_option("--max-iters", solve_args.max_iters, "iteration cap");
    solve->add_option("--tol", solve_args.tol, "primal/dual residual tolerance");
    solve->add_option("--out", solve_args.out, "output directory");

    std::string tune_file, tune_out;
    auto* tune = app.add_subcommand("tune", "per-subsystem optimal penalty report");
    tune->add_option("file", tune_file, "problem file")->required();
    tune->add_option("--out", tune_out, "CSV output path");

    std::string ref_file, ref_out = "reference.json";
    auto* reference = app.add_subcommand("reference", "high-accuracy oracle solution");
    reference->add_option("file", ref_file, "problem file")->required();
    reference->add_option("--out", ref_out, "output solution file");

    std::string analyze_file, analyze_out;
    bool analyze_gamma = false;
    auto* analyze = app.add_subcommand("analyze", "link usage and separation tendency");
    analyze->add_option("file", analyze_file, "problem file")->required();
    analyze->add_flag("--gamma", analyze_gamma, "print the link usage matrix");
    analyze->add_option("--out", analyze_out, "CSV output path");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "cascade benchmark and growth curves");
    bench->add_flag("--cost", bench_args.cost_only, "cost table only");
    bench->add_flag("--growth", bench_args.growth, "chain-family growth curves");
    bench->add_option("--scenarios", bench_args.scenarios, "number of control scenarios");
    bench->add_option("--iters", bench_args.iters, "iteration budget per scenario");
    bench->add_option("--seed", bench_args.seed, "system seed");
    bench->add_option("--out", bench_args.out, "output directory");

    StudyArgs study_args;
    auto* study = app.add_subcommand("study", "separation tendency vs iteration increase");
    study->add_option("--seeds", study_args.seeds, "seeds per (category, dim) cell");
    study->add_option("--ics", study_args.ics, "initial conditions per system");
    study->add_option("--dist-target", study_args.dist_target, "convergence target");
    study->add_option("--seed", study_args.seed, "base seed");
    study->add_option("--out", study_args.out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_gen(gen_args);
        if (solve->parsed()) return run_solve(solve_args);
        if (reference->parsed()) return run_reference(ref_file, ref_out);
        if (tune->parsed()) return run_tune(tune_file, tune_out);
        if (analyze->parsed()) return run_analyze(analyze_file, analyze_gamma, analyze_out);
        if (bench->parsed()) return run_bench(bench_args);
        if (study->parsed()) return run_study_cmd(study_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
