// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the command-line binary plus the experiment-layer
// helpers it is built on. The binary is spawned through std::system.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "stir/experiment.hpp"
#include "test_support.hpp"

using namespace stir;

namespace {

namespace fs = std::filesystem;

const std::string kCli = STIR_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("stir_cli_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("gen writes byte-identical output for the same seed") {
    TempDir dir;
    const std::string a = dir.file("a.mtx"), b = dir.file("b.mtx"), c = dir.file("c.mtx");
    REQUIRE(run("gen uniform --n 40 --seed 7 --out " + a) == 0);
    REQUIRE(run("gen uniform --n 40 --seed 7 --out " + b) == 0);
    REQUIRE(run("gen uniform --n 40 --seed 8 --out " + c) == 0);
    CHECK(read_file(a) == read_file(b));
    CHECK(read_file(a) != read_file(c));

    REQUIRE(run("gen decay-spd --n 10 --out " + dir.file("d.mtx")) == 0);
    const AnyMatrix d = read_matrix_market(dir.file("d.mtx"));
    CHECK(matrix_rows(d) == 10);

    REQUIRE(run("gen conditioned --n 12 --cond 1e4 --symmetric --out " + dir.file("e.mtx")) == 0);
    CHECK(matrix_rows(read_matrix_market(dir.file("e.mtx"))) == 12);

    CHECK(run("gen bogus --out " + dir.file("f.mtx")) == 1);
}

TEST_CASE("solve exit codes and trace output") {
    TempDir dir;
    const std::string trace = dir.file("trace.csv");
    // easy exact solve: converges, exit 0
    CHECK(run("solve --matrix decay-spd:30 --backend exact --method gmres --out " + trace) == 0);
    const IterTrace t = read_trace_csv(trace);
    CHECK(t.records.size() >= 2);
    CHECK(t.records.back().res_norm <= 1e-10 * t.records.front().res_norm);

    // zero inner progress: stagnation, exit 2
    const std::string cfg = dir.file("stall.cfg");
    write_file_atomic(cfg,
                      "variant = stable\nmethod = gmres\nmax_inner_iters = 1\n"
                      "inner_tol = 0.99\nbackend = noisy:5.0\nmax_outer_iters = 30\n"
                      "stagnation_window = 5\n");
    const int stall_code = run("solve --matrix decay-spd:30 --config " + cfg);
    CHECK(stall_code == 2);

    // unreadable matrix: exit 1
    CHECK(run("solve --matrix " + dir.file("missing.mtx")) == 1);
    // bad config key: exit 1
    const std::string bad = dir.file("bad.cfg");
    write_file_atomic(bad, "variant = warp\n");
    CHECK(run("solve --matrix decay-spd:10 --config " + bad) == 1);
}

TEST_CASE("solve flags override config-file values") {
    TempDir dir;
    const std::string cfg = dir.file("base.cfg");
    write_file_atomic(cfg, "variant = classic\nmethod = gmres\n");
    const std::string trace = dir.file("t.csv");
    CHECK(run("solve --matrix decay-spd:20 --config " + cfg +
              " --variant stable --method minres --out " + trace) == 0);
    CHECK(read_trace_csv(trace).records.size() >= 2);
}

TEST_CASE("experiment runs the grid and writes a summary") {
    TempDir dir;
    const std::string plan = dir.file("plan.txt");
    write_file_atomic(plan, "matrix = decay-spd:25\n"
                            "methods = gmres,minres\n"
                            "variants = classic,stable,multidir:3\n"
                            "repeats = 2\n"
                            "seed = 11\n"
                            "backend = noisy:0.01\n"
                            "output_dir = " + dir.file("runs") + "\n");
    REQUIRE(run("experiment " + plan) == 0);
    CHECK(fs::exists(dir.file("runs") + "/summary.md"));
    // 2 methods x 3 variants x 2 repeats
    std::size_t csvs = 0;
    for (const auto& e : fs::directory_iterator(dir.file("runs")))
        if (e.path().extension() == ".csv") ++csvs;
    CHECK(csvs == 12);
    CHECK(fs::exists(dir.file("runs") + "/gmres_multidir3_1.csv"));

    // identical plans give identical traces
    const std::string plan2 = dir.file("plan2.txt");
    write_file_atomic(plan2, read_file(plan));
    // rewrite output_dir
    std::string text = read_file(plan);
    const auto pos = text.find(dir.file("runs"));
    text.replace(pos, dir.file("runs").size(), dir.file("runs2"));
    write_file_atomic(plan2, text);
    REQUIRE(run("experiment " + plan2) == 0);
    CHECK(read_file(dir.file("runs") + "/gmres_stable_0.csv") ==
          read_file(dir.file("runs2") + "/gmres_stable_0.csv"));
}

TEST_CASE("empty variant list is a config error") {
    TempDir dir;
    const std::string plan = dir.file("plan.txt");
    write_file_atomic(plan, "matrix = decay-spd:10\nmethods = gmres\nvariants =\n");
    CHECK(run("experiment " + plan) == 1);
    CHECK_THROWS_AS(parse_plan_text("matrix = m\nmethods = gmres\nvariants =\n"), ConfigError);
}

TEST_CASE("fetch --fixture copies a local matrix without network") {
    TempDir dir;
    const std::string fx = std::string(STIR_FIXTURES_DIR) + "/diag2.mtx";
    CHECK(run("fetch rdb1250l --fixture " + fx + " --dest " + dir.file("data")) == 0);
    CHECK(fs::exists(dir.file("data") + "/rdb1250l.mtx"));
    CHECK(run("fetch rdb1250l --fixture " + dir.file("nope.mtx")) == 1);
}

TEST_CASE("exit_code_for maps trace flags to the documented contract") {
    IterTrace t;
    IterRecord r;
    r.res_norm = 1.0;
    t.records.push_back(r);
    t.converged = true;
    CHECK(exit_code_for(t) == 0);
    t.converged = false;
    t.stagnated = true;
    CHECK(exit_code_for(t) == 2);
    t.stagnated = false;
    CHECK(exit_code_for(t) == 2); // budget exhausted, not converged
    t.diverged = true;
    CHECK(exit_code_for(t) == 3);
}

TEST_CASE("plan parsing details") {
    const ExperimentPlan p = parse_plan_text("matrix = uniform:50\n"
                                             "methods = gmres, lu\n"
                                             "variants = stable, stochastic:4\n"
                                             "repeats = 3\n"
                                             "seed = 9\n"
                                             "inner_tol = 1e-5\n");
    CHECK(p.matrix == "uniform:50");
    REQUIRE(p.methods.size() == 2);
    CHECK(p.methods[1] == Method::LU_LOWPREC);
    REQUIRE(p.variants.size() == 2);
    CHECK(p.variants[0].label() == "stable");
    CHECK(p.variants[1].variant == Variant::StochasticMultiDir);
    CHECK(p.variants[1].k == 4);
    CHECK(p.variants[1].label() == "stochastic4");
    CHECK(p.repeats == 3);
    CHECK(p.base.refine.basic.inner_tol == 1e-5);
    CHECK_THROWS_AS(parse_plan_text("methods = gmres\n"), ConfigError); // matrix required
}

TEST_CASE("median helper") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK(median({5.0}) == 5.0);
}
