// SPDX-License-Identifier: Apache-2.0

#ifndef STIR_EXPERIMENT_HPP_
#define STIR_EXPERIMENT_HPP_

#include <iosfwd>

#include "stir/io.hpp"

namespace stir {

/// "decay-spd:N", "uniform:N[:seed]", "conditioned:N:COND[:sym]", or a
/// MatrixMarket file path.
AnyMatrix materialize_matrix(const std::string& spec, std::uint64_t default_seed);

/// Right-hand side for a run: "ones" gives b = A*1 (known solution of all
/// ones), "random" draws a seeded standard-normal vector.
Vector make_rhs(const AnyMatrix& a, const std::string& kind, std::uint64_t seed);

/// 0 converged, 2 stagnated (or iteration budget exhausted), 3 diverged.
int exit_code_for(const IterTrace& trace);

struct SolveOutcome {
    RefineResult result;
    int exit_code = 0;
};

/// One refinement run: wraps the matrix in the configured backend and
/// dispatches on the variant. x_ref (when available) fills the trace's
/// error column.
SolveOutcome run_single(const AnyMatrix& a, const RunConfig& cfg, const Vector* x_ref = nullptr);

struct VariantSpec {
    Variant variant = Variant::Stable;
    std::size_t k = 1;
    std::string label() const;
};

struct ExperimentPlan {
    std::string matrix;
    BackendSpec backend;
    std::vector<Method> methods;
    std::vector<VariantSpec> variants;
    std::size_t repeats = 1;
    std::uint64_t seed = 0;
    std::string output_dir = "runs";
    RunConfig base; // shared solver / outer-loop parameters
};

ExperimentPlan parse_plan_text(const std::string& text);
ExperimentPlan read_plan(const std::string& path);

/// Runs the full grid, one CSV per (method, variant, repeat), plus a
/// summary.md with per-cell medians. Per-run failures are recorded and the
/// grid continues. Returns the number of failed runs.
int run_experiment(const ExperimentPlan& plan, std::ostream& log);

double median(std::vector<double> values);

} // namespace stir

#endif // STIR_EXPERIMENT_HPP_
