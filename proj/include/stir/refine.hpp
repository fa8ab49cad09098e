// SPDX-License-Identifier: Apache-2.0

#ifndef STIR_REFINE_HPP_
#define STIR_REFINE_HPP_

#include <functional>
#include <optional>
#include <string>

#include "stir/krylov.hpp"

namespace stir {

enum class Variant { Classic, Stable, MultiDir, StochasticMultiDir };

Variant variant_from_name(const std::string& name);
std::string variant_name(Variant v);

struct RefineConfig {
    Variant variant = Variant::Stable;
    std::size_t k = 1; // direction window / stochastic solve count
    BasicSolverSpec basic;
    double outer_tol = 1e-10;
    std::size_t max_outer_iters = 50;
    std::size_t stagnation_window = 10;
    std::uint64_t seed = 0;
    FpFormat residual_precision = FpFormat::binary64();
    std::size_t true_residual_every = 0; // 0 = never record the from-scratch residual
};

struct IterRecord {
    std::size_t m = 0;
    double res_norm = 0.0;
    std::optional<double> err_norm;      // ||x_m - x*|| when x* is known
    double alpha_or_cnorm = 0.0;         // alpha_m (k = 1) or ||c_m||
    std::size_t inner_iterations = 0;
    double inner_relres = 0.0;
    std::size_t inner_matvecs = 0;
    bool inner_breakdown = false;
    double residual_check = 0.0;         // residual-expansion identity defect
    std::optional<double> true_res_norm; // from-scratch residual, when sampled
};

struct IterTrace {
    std::vector<IterRecord> records;
    bool converged = false;
    bool diverged = false;
    bool stagnated = false;
    std::string warning; // e.g. deterministic backend under the stochastic variant
    double final_relres() const {
        return records.empty() ? 1.0 : records.back().res_norm / records.front().res_norm;
    }
};

struct RefineResult {
    Vector x;
    IterTrace trace;
};

struct DiagnosticsBound {
    double cond_a = 1.0;
    double norm_f = 0.0;
    double threshold = 0.0; // 1/(2+cond_a)
    double factor = 0.0;    // (1+cond_a)*norm_f/(1-norm_f)
};

/// Inner solver hook: given the backend operator, the residual, and the
/// matvec counter, produce a correction and stats. Defaults to BasicSolver;
/// tests inject adversarial solvers here.
using BasicMethod =
    std::function<std::pair<Vector, InnerSolveStats>(const LinearOperator&, const Vector&,
                                                     MatvecContext&)>;

/// Least-squares step size minimizing ||r - alpha*w||; 0 when w = 0.
double line_search_alpha(const Vector& r, const Vector& w);

/// Defect of ||r - w||^2 = ||r||^2 + ||w||^2 - 2 r.w, evaluated directly.
double residual_expansion_check(const Vector& r, const Vector& w);

/// Contraction-factor diagnostics from the condition number and the inner
/// error-operator norm. Throws std::domain_error when norm_f >= 1.
DiagnosticsBound contraction_factor(double cond_a, double norm_f);

/// Forward, normwise backward, and componentwise backward error.
struct ErrorMetrics {
    double ferr = 0.0;
    double nbe = 0.0;
    double cbe = 0.0;
};
ErrorMetrics error_metrics(const Vector& x_m, const Vector& x_ref, const DenseMatrix& a,
                           const Vector& b);
ErrorMetrics error_metrics(const Vector& x_m, const Vector& x_ref, const SparseCsr& a,
                           const Vector& b);

/// One multi-direction update: solves the k x k normal equations
/// W^T W c = W^T r (W = A D column-for-column) and applies x += D c,
/// r -= W c. Exposed for direct testing of constructed windows.
struct MultiDirUpdate {
    Vector c;
    Vector x_next;
    Vector r_next;
};
MultiDirUpdate multidir_update(const std::vector<Vector>& dirs, const std::vector<Vector>& w_dirs,
                               const Vector& x, const Vector& r, const FpFormat& prec);

/// Algorithm entry points. The operator's backend drives the basic method;
/// outer-loop arithmetic is binary64 (optionally rounded to
/// cfg.residual_precision). `x_ref` enables the error-norm trace column.
RefineResult ir_classic(const LinearOperator& op, const Vector& b, const Vector& x0,
                        const RefineConfig& cfg, const Vector* x_ref = nullptr,
                        const BasicMethod& basic = nullptr);
RefineResult stable_ir(const LinearOperator& op, const Vector& b, const Vector& x0,
                       const RefineConfig& cfg, const Vector* x_ref = nullptr,
                       const BasicMethod& basic = nullptr);
RefineResult stable_ir_multidir(const LinearOperator& op, const Vector& b, const Vector& x0,
                                const RefineConfig& cfg, const Vector* x_ref = nullptr,
                                const BasicMethod& basic = nullptr);
RefineResult stable_ir_stochastic(const LinearOperator& op, const Vector& b, const Vector& x0,
                                  const RefineConfig& cfg, const Vector* x_ref = nullptr,
                                  const BasicMethod& basic = nullptr);

/// Dispatch on cfg.variant.
RefineResult run_refinement(const LinearOperator& op, const Vector& b, const Vector& x0,
                            const RefineConfig& cfg, const Vector* x_ref = nullptr,
                            const BasicMethod& basic = nullptr);

} // namespace stir

#endif // STIR_REFINE_HPP_
