// SPDX-License-Identifier: Apache-2.0

#include "stir/krylov.hpp"

#include <algorithm>
#include <cmath>

namespace stir {

namespace {

constexpr double kBreakdownEps = 1e-300;

bool finite(const Vector& v) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i])) return false;
    return true;
}

// Track the iterate with the smallest perceived residual so breakdowns and
// divergent inner iterations still return something usable.
struct BestIterate {
    Vector x;
    double relres;

    explicit BestIterate(std::size_t n) : x(Vector::zeros(n)), relres(1.0) {}

    void offer(const Vector& cand, double rel) {
        if (std::isfinite(rel) && rel < relres && finite(cand)) {
            x = cand;
            relres = rel;
        }
    }
};

} // namespace

Method method_from_name(const std::string& name) {
    if (name == "gmres") return Method::GMRES;
    if (name == "fgmres") return Method::FGMRES;
    if (name == "minres") return Method::MINRES;
    if (name == "cgs") return Method::CGS;
    if (name == "bicgstab") return Method::BICGSTAB;
    if (name == "lu") return Method::LU_LOWPREC;
    throw std::invalid_argument("unknown basic method: " + name);
}

std::string method_name(Method m) {
    switch (m) {
    case Method::GMRES: return "gmres";
    case Method::FGMRES: return "fgmres";
    case Method::MINRES: return "minres";
    case Method::CGS: return "cgs";
    case Method::BICGSTAB: return "bicgstab";
    case Method::LU_LOWPREC: return "lu";
    }
    return "?";
}

ArnoldiResult arnoldi(const LinearOperator& op, const Vector& r0, std::size_t steps,
                      MatvecContext& ctx) {
    ArnoldiResult res;
    const double beta = norm2(r0);
    if (beta < kBreakdownEps) return res;
    res.h = DenseMatrix(steps + 1, steps);
    res.basis.push_back(scaled(r0, 1.0 / beta));
    for (std::size_t j = 0; j < steps; ++j) {
        Vector w = op.apply(res.basis[j], ctx);
        const double wnorm_in = norm2(w);
        double proj_mass = 0.0;
        for (std::size_t i = 0; i <= j; ++i) {
            const double hij = dot(w, res.basis[i]);
            res.h(i, j) += hij;
            axpy(-hij, res.basis[i], w);
            proj_mass += hij * hij;
        }
        if (std::sqrt(proj_mass) > 0.7 * wnorm_in) {
            // loss-of-orthogonality test fired: one more pass
            for (std::size_t i = 0; i <= j; ++i) {
                const double hij = dot(w, res.basis[i]);
                res.h(i, j) += hij;
                axpy(-hij, res.basis[i], w);
            }
        }
        const double hnext = norm2(w);
        res.h(j + 1, j) = hnext;
        res.steps = j + 1;
        if (hnext < kBreakdownEps) break; // happy breakdown
        res.basis.push_back(scaled(w, 1.0 / hnext));
    }
    return res;
}

LanczosResult lanczos(const LinearOperator& op, const Vector& r0, std::size_t steps,
                      MatvecContext& ctx) {
    LanczosResult res;
    const double beta0 = norm2(r0);
    if (beta0 < kBreakdownEps) return res;
    res.basis.push_back(scaled(r0, 1.0 / beta0));
    Vector v_prev = Vector::zeros(r0.size());
    double beta = 0.0;
    for (std::size_t j = 0; j < steps; ++j) {
        Vector w = op.apply(res.basis[j], ctx);
        if (j > 0) axpy(-beta, v_prev, w);
        const double alpha = dot(w, res.basis[j]);
        axpy(-alpha, res.basis[j], w);
        res.alpha.push_back(alpha);
        beta = norm2(w);
        res.steps = j + 1;
        if (beta < kBreakdownEps) break;
        res.beta.push_back(beta);
        v_prev = res.basis[j];
        res.basis.push_back(scaled(w, 1.0 / beta));
    }
    return res;
}

namespace {

// Restarted GMRES / FGMRES on op*d = r with zero initial guess. FGMRES
// stores the preconditioned vectors and updates the solution from them.
std::pair<Vector, InnerSolveStats> gmres_like(const LinearOperator& op, const Vector& r,
                                              const BasicSolverSpec& spec, bool flexible,
                                              const BasicSolver::Preconditioner& precond,
                                              MatvecContext& ctx) {
    const std::size_t n = r.size();
    InnerSolveStats stats;
    stats.final_inner_relres = 1.0;
    BestIterate best(n);
    const double bnorm = norm2(r);
    if (bnorm < kBreakdownEps) return {Vector::zeros(n), stats};

    Vector x = Vector::zeros(n);
    bool first_cycle = true;
    while (stats.iterations_used < spec.max_inner_iters) {
        Vector rcur = r;
        if (!first_cycle) {
            Vector ax = op.apply(x, ctx);
            ++stats.matvec_count;
            rcur = vsub(r, ax);
        }
        first_cycle = false;
        const double beta = norm2(rcur);
        if (!std::isfinite(beta) || beta < kBreakdownEps) break;

        const std::size_t m = std::min(spec.restart,
                                       spec.max_inner_iters - stats.iterations_used);
        std::vector<Vector> v{scaled(rcur, 1.0 / beta)};
        std::vector<Vector> z; // FGMRES preconditioned vectors
        DenseMatrix h(m + 1, m);
        std::vector<double> cs(m), sn(m), g(m + 1, 0.0);
        g[0] = beta;
        std::size_t j = 0;
        bool happy = false;
        for (; j < m; ++j) {
            Vector zj = v[j];
            if (flexible && precond) zj = precond(v[j]);
            if (flexible) z.push_back(zj);
            Vector w = op.apply(zj, ctx);
            ++stats.matvec_count;
            ++stats.iterations_used;
            if (!finite(w)) {
                stats.breakdown_flag = true;
                break;
            }
            const double wnorm_in = norm2(w);
            double proj_mass = 0.0;
            for (std::size_t i = 0; i <= j; ++i) {
                const double hij = dot(w, v[i]);
                h(i, j) += hij;
                axpy(-hij, v[i], w);
                proj_mass += hij * hij;
            }
            if (std::sqrt(proj_mass) > 0.7 * wnorm_in) {
                for (std::size_t i = 0; i <= j; ++i) {
                    const double hij = dot(w, v[i]);
                    h(i, j) += hij;
                    axpy(-hij, v[i], w);
                }
            }
            h(j + 1, j) = norm2(w);
            // previous Givens rotations
            for (std::size_t i = 0; i < j; ++i) {
                const double t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
                h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
                h(i, j) = t;
            }
            const double denom = std::hypot(h(j, j), h(j + 1, j));
            if (denom < kBreakdownEps) {
                stats.breakdown_flag = true;
                break;
            }
            cs[j] = h(j, j) / denom;
            sn[j] = h(j + 1, j) / denom;
            h(j, j) = denom;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            if (h(j + 1, j) < kBreakdownEps) {
                happy = true;
                ++j;
                break;
            }
            v.push_back(scaled(w, 1.0 / h(j + 1, j)));
            if (std::abs(g[j + 1]) / bnorm <= spec.inner_tol) {
                ++j;
                break;
            }
        }
        if (j == 0) break;
        // back substitution on the j x j triangular system
        std::vector<double> y(j, 0.0);
        bool solved = true;
        for (std::size_t ii = j; ii-- > 0;) {
            double acc = g[ii];
            for (std::size_t k = ii + 1; k < j; ++k) acc -= h(ii, k) * y[k];
            if (std::abs(h(ii, ii)) < kBreakdownEps) {
                stats.breakdown_flag = true;
                solved = false;
                break;
            }
            y[ii] = acc / h(ii, ii);
        }
        if (!solved) break;
        for (std::size_t k = 0; k < j; ++k) axpy(y[k], flexible ? z[k] : v[k], x);
        const double relres = std::abs(g[j]) / bnorm;
        stats.final_inner_relres = relres;
        best.offer(x, relres);
        if (happy || relres <= spec.inner_tol || stats.breakdown_flag) break;
    }
    if (!finite(x) || best.relres < stats.final_inner_relres) {
        x = best.x;
        stats.final_inner_relres = best.relres;
    }
    if (!std::isfinite(stats.final_inner_relres)) stats.final_inner_relres = 1.0;
    return {x, stats};
}

std::pair<Vector, InnerSolveStats> minres_solve(const LinearOperator& op, const Vector& r,
                                                const BasicSolverSpec& spec, MatvecContext& ctx) {
    const std::size_t n = r.size();
    InnerSolveStats stats;
    stats.final_inner_relres = 1.0;
    BestIterate best(n);
    const double beta1 = norm2(r);
    if (beta1 < kBreakdownEps) return {Vector::zeros(n), stats};

    Vector x = Vector::zeros(n);
    Vector v = scaled(r, 1.0 / beta1);
    Vector v_prev = Vector::zeros(n);
    Vector w = Vector::zeros(n), w_prev = Vector::zeros(n);
    double beta = 0.0, eta = beta1;
    double c_old = 1.0, c_cur = 1.0, s_old = 0.0, s_cur = 0.0;
    for (std::size_t it = 0; it < spec.max_inner_iters; ++it) {
        Vector av = op.apply(v, ctx);
        ++stats.matvec_count;
        ++stats.iterations_used;
        if (!finite(av)) {
            stats.breakdown_flag = true;
            break;
        }
        const double alpha = dot(v, av);
        axpy(-alpha, v, av);
        if (it > 0) axpy(-beta, v_prev, av);
        const double beta_next = norm2(av);

        const double delta = c_cur * alpha - c_old * s_cur * beta;
        const double rho1 = std::hypot(delta, beta_next);
        const double rho2 = s_cur * alpha + c_old * c_cur * beta;
        const double rho3 = s_old * beta;
        if (rho1 < kBreakdownEps) {
            stats.breakdown_flag = true;
            break;
        }
        c_old = c_cur;
        s_old = s_cur;
        c_cur = delta / rho1;
        s_cur = beta_next / rho1;

        Vector w_new = v;
        axpy(-rho3, w_prev, w_new);
        axpy(-rho2, w, w_new);
        for (std::size_t i = 0; i < n; ++i) w_new[i] /= rho1;
        axpy(c_cur * eta, w_new, x);
        eta = -s_cur * eta;
        w_prev = w;
        w = w_new;

        const double relres = std::abs(eta) / beta1;
        stats.final_inner_relres = relres;
        best.offer(x, relres);
        if (relres <= spec.inner_tol) break;
        if (beta_next < kBreakdownEps) break; // invariant subspace
        v_prev = v;
        v = scaled(av, 1.0 / beta_next);
        beta = beta_next;
    }
    if (!finite(x) || best.relres < stats.final_inner_relres) {
        x = best.x;
        stats.final_inner_relres = best.relres;
    }
    if (!std::isfinite(stats.final_inner_relres)) stats.final_inner_relres = 1.0;
    return {x, stats};
}

std::pair<Vector, InnerSolveStats> cgs_solve(const LinearOperator& op, const Vector& b,
                                             const BasicSolverSpec& spec, MatvecContext& ctx) {
    const std::size_t n = b.size();
    InnerSolveStats stats;
    stats.final_inner_relres = 1.0;
    BestIterate best(n);
    const double bnorm = norm2(b);
    if (bnorm < kBreakdownEps) return {Vector::zeros(n), stats};

    Vector x = Vector::zeros(n);
    Vector r = b;
    const Vector rtld = b; // shadow residual
    Vector u = r, p = r;
    double rho = dot(rtld, r);
    for (std::size_t it = 0; it < spec.max_inner_iters; ++it) {
        if (std::abs(rho) < kBreakdownEps) {
            stats.breakdown_flag = true;
            break;
        }
        Vector vv = op.apply(p, ctx);
        ++stats.matvec_count;
        const double sigma = dot(rtld, vv);
        if (std::abs(sigma) < kBreakdownEps) {
            stats.breakdown_flag = true;
            break;
        }
        const double alpha = rho / sigma;
        Vector q = u;
        axpy(-alpha, vv, q);
        Vector uq = vadd(u, q);
        Vector auq = op.apply(uq, ctx);
        ++stats.matvec_count;
        ++stats.iterations_used;
        axpy(alpha, uq, x);
        axpy(-alpha, auq, r);
        if (!finite(r) || !finite(x)) {
            stats.breakdown_flag = true;
            break;
        }
        const double relres = norm2(r) / bnorm;
        stats.final_inner_relres = relres;
        best.offer(x, relres);
        if (relres <= spec.inner_tol) break;
        const double rho_new = dot(rtld, r);
        const double beta = rho_new / rho;
        rho = rho_new;
        u = r;
        axpy(beta, q, u);
        Vector t = q;
        axpy(beta, p, t);
        p = u;
        axpy(beta, t, p);
    }
    if (!finite(x) || best.relres < stats.final_inner_relres) {
        x = best.x;
        stats.final_inner_relres = best.relres;
    }
    if (!std::isfinite(stats.final_inner_relres)) stats.final_inner_relres = 1.0;
    return {x, stats};
}

std::pair<Vector, InnerSolveStats> bicgstab_solve(const LinearOperator& op, const Vector& b,
                                                  const BasicSolverSpec& spec,
                                                  MatvecContext& ctx) {
    const std::size_t n = b.size();
    InnerSolveStats stats;
    stats.final_inner_relres = 1.0;
    BestIterate best(n);
    const double bnorm = norm2(b);
    if (bnorm < kBreakdownEps) return {Vector::zeros(n), stats};

    Vector x = Vector::zeros(n);
    Vector r = b;
    const Vector rtld = b;
    Vector p = Vector::zeros(n), v = Vector::zeros(n);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (std::size_t it = 0; it < spec.max_inner_iters; ++it) {
        const double rho_new = dot(rtld, r);
        if (std::abs(rho_new) < kBreakdownEps || std::abs(omega) < kBreakdownEps ||
            std::abs(rho) < kBreakdownEps) {
            stats.breakdown_flag = true;
            break;
        }
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        // p = r + beta*(p - omega*v)
        axpy(-omega, v, p);
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        v = op.apply(p, ctx);
        ++stats.matvec_count;
        const double sigma = dot(rtld, v);
        if (std::abs(sigma) < kBreakdownEps) {
            stats.breakdown_flag = true;
            break;
        }
        alpha = rho / sigma;
        Vector s = r;
        axpy(-alpha, v, s);
        const double snorm = norm2(s);
        if (snorm / bnorm <= spec.inner_tol) {
            axpy(alpha, p, x);
            ++stats.iterations_used;
            stats.final_inner_relres = snorm / bnorm;
            best.offer(x, stats.final_inner_relres);
            break;
        }
        Vector t = op.apply(s, ctx);
        ++stats.matvec_count;
        ++stats.iterations_used;
        const double tt = dot(t, t);
        if (tt < kBreakdownEps) {
            stats.breakdown_flag = true;
            axpy(alpha, p, x);
            best.offer(x, snorm / bnorm);
            break;
        }
        omega = dot(t, s) / tt;
        axpy(alpha, p, x);
        axpy(omega, s, x);
        r = s;
        axpy(-omega, t, r);
        if (!finite(r) || !finite(x)) {
            stats.breakdown_flag = true;
            break;
        }
        const double relres = norm2(r) / bnorm;
        stats.final_inner_relres = relres;
        best.offer(x, relres);
        if (relres <= spec.inner_tol) break;
    }
    if (!finite(x) || best.relres < stats.final_inner_relres) {
        x = best.x;
        stats.final_inner_relres = best.relres;
    }
    if (!std::isfinite(stats.final_inner_relres)) stats.final_inner_relres = 1.0;
    return {x, stats};
}

} // namespace

std::pair<Vector, InnerSolveStats> BasicSolver::solve(const LinearOperator& op, const Vector& r,
                                                      MatvecContext& ctx) {
    if (op.rows() != op.cols()) throw DimensionMismatch("solve_basic: operator must be square");
    if (r.size() != op.rows()) throw DimensionMismatch("solve_basic: rhs length mismatch");
    switch (spec_.method) {
    case Method::GMRES:
        return gmres_like(op, r, spec_, false, nullptr, ctx);
    case Method::FGMRES:
        return gmres_like(op, r, spec_, true, precond_, ctx);
    case Method::MINRES:
        return minres_solve(op, r, spec_, ctx);
    case Method::CGS:
        return cgs_solve(op, r, spec_, ctx);
    case Method::BICGSTAB:
        return bicgstab_solve(op, r, spec_, ctx);
    case Method::LU_LOWPREC: {
        if (!lu_cache_) {
            const DenseMatrix a = op.dense() ? *op.dense() : op.sparse()->to_dense();
            lu_cache_ = lu_factor_lowprec(a, spec_.lu_format);
        }
        InnerSolveStats stats;
        stats.iterations_used = 1;
        Vector d = lu_solve(*lu_cache_, round_to(r, spec_.lu_format), spec_.lu_format);
        if (!finite(d)) {
            stats.breakdown_flag = true;
            d = Vector::zeros(r.size());
        }
        const double rn = norm2(r);
        if (rn > 0.0) {
            Vector ad = op.exact_apply(d);
            stats.final_inner_relres = norm2(vsub(r, ad)) / rn;
        }
        return {d, stats};
    }
    }
    throw std::logic_error("unreachable");
}

std::pair<Vector, InnerSolveStats> solve_basic(const BasicSolverSpec& spec,
                                               const LinearOperator& op, const Vector& r,
                                               MatvecContext& ctx) {
    BasicSolver solver(spec);
    return solver.solve(op, r, ctx);
}

} // namespace stir
