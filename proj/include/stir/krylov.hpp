// SPDX-License-Identifier: Apache-2.0

#ifndef STIR_KRYLOV_HPP_
#define STIR_KRYLOV_HPP_

#include <functional>
#include <optional>
#include <utility>

#include "stir/backend.hpp"
#include "stir/linalg.hpp"

namespace stir {

enum class Method { GMRES, FGMRES, MINRES, CGS, BICGSTAB, LU_LOWPREC };

Method method_from_name(const std::string& name);
std::string method_name(Method m);

struct BasicSolverSpec {
    Method method = Method::GMRES;
    double inner_tol = 1e-6;
    std::size_t max_inner_iters = 100;
    std::size_t restart = 30; // GMRES / FGMRES only
    FpFormat lu_format = FpFormat::binary32();
};

struct InnerSolveStats {
    std::size_t iterations_used = 0;
    double final_inner_relres = 0.0;
    std::size_t matvec_count = 0;
    bool breakdown_flag = false;
};

/// Inner solver for A d = r with zero initial guess. All matvecs route
/// through the operator backend. Krylov breakdowns return the best iterate
/// seen so far with breakdown_flag set; the outer loop is never aborted.
/// Caches low-precision LU factors across calls for Method::LU_LOWPREC.
class BasicSolver {
  public:
    explicit BasicSolver(BasicSolverSpec spec) : spec_(std::move(spec)) {}

    /// Optional flexible-preconditioner hook used by FGMRES (identity by default).
    using Preconditioner = std::function<Vector(const Vector&)>;
    void set_preconditioner(Preconditioner p) { precond_ = std::move(p); }

    const BasicSolverSpec& spec() const { return spec_; }

    std::pair<Vector, InnerSolveStats> solve(const LinearOperator& op, const Vector& r,
                                             MatvecContext& ctx);

  private:
    BasicSolverSpec spec_;
    Preconditioner precond_;
    std::optional<LuFactors> lu_cache_;
};

/// One-shot convenience wrapper around BasicSolver.
std::pair<Vector, InnerSolveStats> solve_basic(const BasicSolverSpec& spec,
                                               const LinearOperator& op, const Vector& r,
                                               MatvecContext& ctx);

/// Arnoldi process with modified Gram-Schmidt and a single
/// reorthogonalization pass when the projection mass exceeds 0.7 of the
/// incoming vector norm. Returns `steps+1` basis vectors and the
/// (steps+1) x steps Hessenberg matrix; stops early on happy breakdown.
struct ArnoldiResult {
    std::vector<Vector> basis;
    DenseMatrix h;
    std::size_t steps = 0;
};
ArnoldiResult arnoldi(const LinearOperator& op, const Vector& r0, std::size_t steps,
                      MatvecContext& ctx);

/// Lanczos three-term recurrence for symmetric operators.
struct LanczosResult {
    std::vector<double> alpha; // diagonal
    std::vector<double> beta;  // subdiagonal, beta[j] couples v_j and v_{j+1}
    std::vector<Vector> basis;
    std::size_t steps = 0;
};
LanczosResult lanczos(const LinearOperator& op, const Vector& r0, std::size_t steps,
                      MatvecContext& ctx);

} // namespace stir

#endif // STIR_KRYLOV_HPP_
