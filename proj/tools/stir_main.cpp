// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "stir/experiment.hpp"
#include "stir/fetch.hpp"

namespace {

using namespace stir;

int cmd_gen(const std::string& kind, std::size_t n, std::uint64_t seed, double cond, bool sym,
            const std::string& out) {
    std::string spec = kind + ":" + std::to_string(n);
    if (kind == "uniform") spec += ":" + std::to_string(seed);
    if (kind == "conditioned") {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", cond);
        spec += ":" + std::string(buf) + (sym ? ":sym" : "");
    }
    const AnyMatrix a = materialize_matrix(spec, seed);
    if (std::holds_alternative<DenseMatrix>(a))
        write_matrix_market(std::get<DenseMatrix>(a), out);
    else
        write_matrix_market(std::get<SparseCsr>(a), out);
    std::cout << "wrote " << matrix_rows(a) << "x" << matrix_cols(a) << " matrix to " << out
              << "\n";
    return 0;
}

int cmd_solve(const std::string& matrix_path, const std::string& config_path,
              const std::string& out, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = read_run_config(config_path);
    std::string override_text;
    for (const std::string& kv : overrides) override_text += kv + "\n";
    if (!override_text.empty()) {
        // re-parse base config text plus overrides so validation runs once
        std::string base = config_path.empty() ? "" : read_file(config_path);
        cfg = parse_run_config_text(base + "\n" + override_text);
    }
    const AnyMatrix a = materialize_matrix(matrix_path, cfg.refine.seed);
    const SolveOutcome outcome = run_single(a, cfg);
    if (!out.empty()) write_trace_csv(outcome.result.trace, out);
    const IterTrace& t = outcome.result.trace;
    std::cout << "variant=" << variant_name(cfg.refine.variant)
              << " method=" << method_name(cfg.refine.basic.method)
              << " backend=" << cfg.backend.str() << "\n";
    std::cout << "outer iterations: " << (t.records.empty() ? 0 : t.records.back().m) << "\n";
    std::cout << "final relres: " << t.final_relres() << "\n";
    std::cout << "converged=" << t.converged << " stagnated=" << t.stagnated
              << " diverged=" << t.diverged << "\n";
    if (!t.warning.empty()) std::cout << "warning: " << t.warning << "\n";
    return outcome.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stable iterative refinement laboratory"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a matrix and write it as MatrixMarket");
    std::string gen_kind, gen_out = "matrix.mtx";
    std::size_t gen_n = 200;
    std::uint64_t gen_seed = 0;
    double gen_cond = 1e6;
    bool gen_sym = false;
    gen->add_option("kind", gen_kind, "decay-spd | uniform | conditioned")->required();
    gen->add_option("--n", gen_n, "matrix size");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--cond", gen_cond, "target condition number (conditioned)");
    gen->add_flag("--symmetric", gen_sym, "symmetric conditioned matrix");
    gen->add_option("--out", gen_out, "output path");

    // solve
    auto* solve = app.add_subcommand("solve", "run one refinement and write a trace CSV");
    std::string solve_matrix, solve_config, solve_out;
    std::string solve_backend, solve_method, solve_variant, solve_rhs;
    std::uint64_t solve_seed = 0;
    bool solve_seed_set = false, full_scale = false;
    std::size_t solve_k = 0;
    solve->add_option("--matrix", solve_matrix, "matrix file or generator spec")->required();
    solve->add_option("--config", solve_config, "run-config file");
    solve->add_option("--out", solve_out, "trace CSV path");
    solve->add_option("--backend", solve_backend, "exact | rounded:FMT | noisy:SIGMA");
    solve->add_option("--method", solve_method, "basic method");
    solve->add_option("--variant", solve_variant, "classic | stable | multidir | stochastic");
    solve->add_option("--k", solve_k, "direction window size");
    solve->add_option("--rhs", solve_rhs, "ones | random");
    solve->add_option("--seed", solve_seed, "run seed")->each([&](const std::string&) {
        solve_seed_set = true;
    });

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a plan file over a (method x variant) grid");
    std::string plan_path;
    exp->add_option("plan", plan_path, "experiment plan file")->required();
    exp->add_flag("--full-scale", full_scale,
                  "run generator specs at the published size (n=2000) instead of desk scale");

    // fetch
    auto* fetch = app.add_subcommand("fetch", "download a SuiteSparse matrix");
    std::string fetch_name, fetch_dest = ".", fetch_fixture;
    fetch->add_option("name", fetch_name, "matrix name")->required();
    fetch->add_option("--dest", fetch_dest, "destination directory");
    fetch->add_option("--fixture", fetch_fixture, "use a local MatrixMarket file, no network");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_kind, gen_n, gen_seed, gen_cond, gen_sym, gen_out);
        if (solve->parsed()) {
            std::vector<std::string> overrides;
            if (!solve_backend.empty()) overrides.push_back("backend = " + solve_backend);
            if (!solve_method.empty()) overrides.push_back("method = " + solve_method);
            if (!solve_variant.empty()) overrides.push_back("variant = " + solve_variant);
            if (solve_k > 0) overrides.push_back("k = " + std::to_string(solve_k));
            if (!solve_rhs.empty()) overrides.push_back("rhs = " + solve_rhs);
            if (solve_seed_set) overrides.push_back("seed = " + std::to_string(solve_seed));
            return cmd_solve(solve_matrix, solve_config, solve_out, overrides);
        }
        if (exp->parsed()) {
            ExperimentPlan plan = read_plan(plan_path);
            if (full_scale) {
                // generator specs keep their explicit n; the flag only
                // upgrades the desk-scale shorthand "decay-spd"/"uniform"
                if (plan.matrix == "decay-spd") plan.matrix = "decay-spd:2000";
                if (plan.matrix == "uniform") plan.matrix = "uniform:2000";
            } else {
                if (plan.matrix == "decay-spd") plan.matrix = "decay-spd:200";
                if (plan.matrix == "uniform") plan.matrix = "uniform:200";
            }
            const int failures = run_experiment(plan, std::cout);
            return failures == 0 ? 0 : 1;
        }
        if (fetch->parsed()) {
            if (!fetch_fixture.empty()) {
                const AnyMatrix parsed = read_matrix_market(fetch_fixture);
                std::filesystem::create_directories(fetch_dest);
                const std::string out =
                    (std::filesystem::path(fetch_dest) / (fetch_name + ".mtx")).string();
                write_file_atomic(out, read_file(fetch_fixture));
                std::cout << "copied fixture (" << matrix_rows(parsed) << "x"
                          << matrix_cols(parsed) << ") to " << out << "\n";
                return 0;
            }
#ifdef STIR_HAVE_FETCHER
            const std::string path = fetch_suitesparse(fetch_name, fetch_dest);
            std::cout << "fetched " << path << "\n";
            return 0;
#else
            std::cerr << "error: fetcher was disabled at build time\n";
            return 1;
#endif
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
