// SPDX-License-Identifier: Apache-2.0

#include "stir/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "stir/rng.hpp"

namespace stir {

namespace {

constexpr std::uint64_t kStreamRhs = 0x726873ull; // "rhs"

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, sep)) parts.push_back(item);
    return parts;
}

} // namespace

AnyMatrix materialize_matrix(const std::string& spec, std::uint64_t default_seed) {
    const std::vector<std::string> parts = split(spec, ':');
    const std::string& kind = parts[0];
    auto arg = [&](std::size_t i) -> const std::string& {
        if (i >= parts.size()) throw ConfigError("matrix: missing argument in '" + spec + "'");
        return parts[i];
    };
    if (kind == "decay-spd") return gen_decay_spd(std::stoull(arg(1)));
    if (kind == "uniform") {
        const std::uint64_t seed = parts.size() > 2 ? std::stoull(parts[2]) : default_seed;
        return gen_uniform_random(std::stoull(arg(1)), seed);
    }
    if (kind == "conditioned") {
        const bool sym = parts.size() > 3 && parts[3] == "sym";
        return gen_conditioned(std::stoull(arg(1)), std::stod(arg(2)), default_seed, sym);
    }
    return read_matrix_market(spec);
}

Vector make_rhs(const AnyMatrix& a, const std::string& kind, std::uint64_t seed) {
    const std::size_t n = matrix_cols(a);
    if (kind == "ones") {
        const Vector ones = Vector::ones(n);
        return std::holds_alternative<DenseMatrix>(a) ? matvec(std::get<DenseMatrix>(a), ones)
                                                      : matvec(std::get<SparseCsr>(a), ones);
    }
    if (kind == "random") return Vector(normal_vector(seed, kStreamRhs, 0, n));
    throw ConfigError("rhs: must be 'ones' or 'random'");
}

int exit_code_for(const IterTrace& trace) {
    if (trace.diverged) return 3;
    if (trace.converged) return 0;
    return 2;
}

SolveOutcome run_single(const AnyMatrix& a, const RunConfig& cfg, const Vector* x_ref) {
    const std::uint64_t seed = cfg.refine.seed;
    LinearOperator op =
        std::holds_alternative<DenseMatrix>(a)
            ? cfg.backend.wrap(std::make_shared<DenseMatrix>(std::get<DenseMatrix>(a)), seed)
            : cfg.backend.wrap(std::make_shared<SparseCsr>(std::get<SparseCsr>(a)), seed);
    const Vector b = make_rhs(a, cfg.rhs, seed);
    const Vector x0 = Vector::zeros(matrix_cols(a));
    Vector ones = Vector::ones(matrix_cols(a));
    const Vector* ref = x_ref;
    if (!ref && cfg.rhs == "ones") ref = &ones;
    SolveOutcome out{run_refinement(op, b, x0, cfg.refine, ref), 0};
    out.exit_code = exit_code_for(out.result.trace);
    return out;
}

std::string VariantSpec::label() const {
    std::string s = variant_name(variant);
    if (variant == Variant::MultiDir || variant == Variant::StochasticMultiDir)
        s += std::to_string(k);
    return s;
}

ExperimentPlan parse_plan_text(const std::string& text) {
    ExperimentPlan plan;
    std::string leftover;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("plan line " + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "matrix") {
            plan.matrix = val;
        } else if (key == "methods") {
            for (const std::string& m : split(val, ','))
                if (!trim(m).empty()) plan.methods.push_back(method_from_name(trim(m)));
        } else if (key == "variants") {
            for (const std::string& raw : split(val, ',')) {
                const std::string v = trim(raw);
                if (v.empty()) continue;
                VariantSpec vs;
                const std::vector<std::string> vk = split(v, ':');
                vs.variant = variant_from_name(vk[0]);
                if (vk.size() > 1) vs.k = std::stoull(vk[1]);
                plan.variants.push_back(vs);
            }
        } else if (key == "repeats") {
            plan.repeats = std::stoull(val);
        } else if (key == "output_dir") {
            plan.output_dir = val;
        } else if (key == "seed") {
            plan.seed = std::stoull(val);
        } else {
            leftover += key + " = " + val + "\n";
        }
    }
    plan.base = parse_run_config_text(leftover);
    plan.base.refine.seed = plan.seed;
    plan.backend = plan.base.backend;
    if (plan.matrix.empty()) throw ConfigError("plan: 'matrix' is required");
    if (plan.methods.empty()) throw ConfigError("plan: 'methods' must be non-empty");
    if (plan.variants.empty()) throw ConfigError("plan: 'variants' must be non-empty");
    if (plan.repeats < 1) throw ConfigError("plan: 'repeats' must be >= 1");
    return plan;
}

ExperimentPlan read_plan(const std::string& path) { return parse_plan_text(read_file(path)); }

double median(std::vector<double> values) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

int run_experiment(const ExperimentPlan& plan, std::ostream& log) {
    namespace fs = std::filesystem;
    fs::create_directories(plan.output_dir);
    const AnyMatrix a = materialize_matrix(plan.matrix, plan.seed);

    struct Cell {
        std::vector<double> final_relres;
        std::size_t diverged = 0;
        std::size_t failed = 0;
    };
    std::vector<std::string> cell_names;
    std::vector<Cell> cells;
    int failures = 0;

    for (const Method method : plan.methods) {
        for (const VariantSpec& vs : plan.variants) {
            Cell cell;
            const std::string cell_name = method_name(method) + "_" + vs.label();
            for (std::size_t rep = 0; rep < plan.repeats; ++rep) {
                RunConfig cfg = plan.base;
                cfg.refine.variant = vs.variant;
                cfg.refine.k = vs.k;
                cfg.refine.basic.method = method;
                cfg.refine.seed = mix64(plan.seed ^ mix64(rep + 1));
                const std::string out_path =
                    (fs::path(plan.output_dir) / (cell_name + "_" + std::to_string(rep) + ".csv"))
                        .string();
                try {
                    const SolveOutcome outcome = run_single(a, cfg);
                    write_trace_csv(outcome.result.trace, out_path);
                    cell.final_relres.push_back(outcome.result.trace.final_relres());
                    if (outcome.result.trace.diverged) ++cell.diverged;
                } catch (const std::exception& e) {
                    ++cell.failed;
                    ++failures;
                    log << "run " << cell_name << "#" << rep << " failed: " << e.what() << "\n";
                }
            }
            cell_names.push_back(cell_name);
            cells.push_back(std::move(cell));
        }
    }

    std::ostringstream summary;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[64];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    summary << "# Experiment summary\n\n";
    summary << "- matrix: " << plan.matrix << "\n";
    summary << "- backend: " << plan.backend.str() << "\n";
    summary << "- repeats: " << plan.repeats << ", base seed: " << plan.seed << "\n";
    summary << "- generated: " << stamp << "\n\n";
    summary << "| run | median final relres | diverged | failed |\n";
    summary << "|-----|--------------------:|---------:|-------:|\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6g", median(cells[i].final_relres));
        summary << "| " << cell_names[i] << " | " << buf << " | " << cells[i].diverged << " | "
                << cells[i].failed << " |\n";
    }
    write_file_atomic((fs::path(plan.output_dir) / "summary.md").string(), summary.str());
    log << summary.str();
    return failures;
}

} // namespace stir
