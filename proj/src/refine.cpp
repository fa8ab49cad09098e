// SPDX-License-Identifier: Apache-2.0

#include "stir/refine.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <memory>

namespace stir {

namespace {

constexpr double kDivergenceGuard = 1e8;
constexpr double kStagnationEps = 1e-12;

Vector round_vec(const Vector& v, const FpFormat& f) { return round_to(v, f); }

struct StagnationMonitor {
    double best = std::numeric_limits<double>::infinity();
    std::size_t last_improve = 0;

    // returns true when no relative improvement > kStagnationEps was seen
    // over the trailing window
    bool stalled(double relres, std::size_t m, std::size_t window) {
        if (relres < best * (1.0 - kStagnationEps)) {
            best = relres;
            last_improve = m;
        }
        return window > 0 && m >= last_improve + window;
    }
};

void push_record(IterTrace& trace, std::size_t m, const Vector& r, const Vector& x,
                 const Vector* x_ref) {
    IterRecord rec;
    rec.m = m;
    rec.res_norm = norm2(r);
    if (x_ref) rec.err_norm = norm2(vsub(x, *x_ref));
    trace.records.push_back(std::move(rec));
}

BasicMethod wrap_basic(const RefineConfig& cfg, const BasicMethod& custom,
                       std::shared_ptr<BasicSolver>& holder) {
    if (custom) return custom;
    holder = std::make_shared<BasicSolver>(cfg.basic);
    return [holder](const LinearOperator& op, const Vector& r, MatvecContext& ctx) {
        return holder->solve(op, r, ctx);
    };
}

} // namespace

Variant variant_from_name(const std::string& name) {
    if (name == "classic") return Variant::Classic;
    if (name == "stable") return Variant::Stable;
    if (name == "multidir") return Variant::MultiDir;
    if (name == "stochastic") return Variant::StochasticMultiDir;
    throw std::invalid_argument("unknown variant: " + name);
}

std::string variant_name(Variant v) {
    switch (v) {
    case Variant::Classic: return "classic";
    case Variant::Stable: return "stable";
    case Variant::MultiDir: return "multidir";
    case Variant::StochasticMultiDir: return "stochastic";
    }
    return "?";
}

double line_search_alpha(const Vector& r, const Vector& w) {
    if (r.size() != w.size()) throw DimensionMismatch("line_search_alpha: length mismatch");
    const double ww = dot(w, w);
    if (ww < 1e-300) return 0.0;
    return dot(r, w) / ww;
}

double residual_expansion_check(const Vector& r, const Vector& w) {
    const double lhs = dot(vsub(r, w), vsub(r, w));
    const double rhs = dot(r, r) + dot(w, w) - 2.0 * dot(r, w);
    return lhs - rhs;
}

DiagnosticsBound contraction_factor(double cond_a, double norm_f) {
    if (cond_a < 1.0) throw std::domain_error("contraction_factor: cond_a must be >= 1");
    if (norm_f < 0.0 || norm_f >= 1.0)
        throw std::domain_error("contraction_factor: norm_f must be in [0, 1)");
    DiagnosticsBound d;
    d.cond_a = cond_a;
    d.norm_f = norm_f;
    d.threshold = 1.0 / (2.0 + cond_a);
    d.factor = (1.0 + cond_a) * norm_f / (1.0 - norm_f);
    return d;
}

namespace {

Vector abs_matvec(const DenseMatrix& a, const Vector& x);
Vector abs_matvec(const SparseCsr& a, const Vector& x);

template <class Matrix>
ErrorMetrics error_metrics_impl(const Vector& x_m, const Vector& x_ref, const Matrix& a,
                                const Vector& b) {
    ErrorMetrics em;
    const double xref_inf = norm_inf(x_ref);
    em.ferr = xref_inf > 0.0 ? norm_inf(vsub(x_m, x_ref)) / xref_inf : norm_inf(vsub(x_m, x_ref));
    const Vector res = vsub(b, matvec(a, x_m));
    const double denom = norm_inf(a) * norm_inf(x_m) + norm_inf(b);
    em.nbe = denom > 0.0 ? norm_inf(res) / denom : 0.0;
    // componentwise: |A| |x| + |b|
    Vector absx = x_m;
    for (std::size_t i = 0; i < absx.size(); ++i) absx[i] = std::abs(absx[i]);
    Vector scale = abs_matvec(a, absx);
    double cbe = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
        const double s = scale[i] + std::abs(b[i]);
        const double num = std::abs(res[i]);
        if (s > 0.0)
            cbe = std::max(cbe, num / s);
        else if (num > 0.0)
            cbe = std::max(cbe, std::numeric_limits<double>::infinity());
        // 0/0 contributes 0
    }
    em.cbe = cbe;
    return em;
}

Vector abs_matvec(const DenseMatrix& a, const Vector& x) {
    Vector y = Vector::zeros(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) acc += std::abs(a(i, j)) * x[j];
        y[i] = acc;
    }
    return y;
}

Vector abs_matvec(const SparseCsr& a, const Vector& x) {
    Vector y = Vector::zeros(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p)
            acc += std::abs(a.vals()[p]) * x[a.col_idx()[p]];
        y[i] = acc;
    }
    return y;
}

} // namespace

ErrorMetrics error_metrics(const Vector& x_m, const Vector& x_ref, const DenseMatrix& a,
                           const Vector& b) {
    return error_metrics_impl(x_m, x_ref, a, b);
}

ErrorMetrics error_metrics(const Vector& x_m, const Vector& x_ref, const SparseCsr& a,
                           const Vector& b) {
    return error_metrics_impl(x_m, x_ref, a, b);
}

MultiDirUpdate multidir_update(const std::vector<Vector>& dirs, const std::vector<Vector>& w_dirs,
                               const Vector& x, const Vector& r, const FpFormat& prec) {
    if (dirs.empty() || dirs.size() != w_dirs.size())
        throw DimensionMismatch("multidir_update: empty or mismatched window");
    const std::size_t k = dirs.size();
    MultiDirUpdate upd;
    if (k == 1) {
        // scalar path, bit-identical to the single-direction line search
        const double alpha = line_search_alpha(r, w_dirs[0]);
        upd.c = Vector::zeros(1);
        upd.c[0] = alpha;
        upd.x_next = x;
        axpy(alpha, dirs[0], upd.x_next);
        upd.r_next = r;
        axpy(-alpha, w_dirs[0], upd.r_next);
        upd.r_next = round_vec(upd.r_next, prec);
        return upd;
    }
    DenseMatrix gram(k, k);
    Vector rhs = Vector::zeros(k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double g = dot(w_dirs[i], w_dirs[j]);
            gram(i, j) = g;
            gram(j, i) = g;
        }
        rhs[i] = dot(w_dirs[i], r);
    }
    Vector c = spd_solve_small(gram, rhs);
    auto apply_c = [&](const Vector& coef) {
        Vector xn = x, rn = r;
        for (std::size_t i = 0; i < k; ++i) {
            axpy(coef[i], dirs[i], xn);
            axpy(-coef[i], w_dirs[i], rn);
        }
        return std::make_pair(xn, round_vec(rn, prec));
    };
    auto [xn, rn] = apply_c(c);
    const double rnorm = norm2(r);
    if (norm2(rn) > rnorm) {
        // numerically rank-deficient window: retreat to a 1-D line search
        // along the combined direction, then to a no-op
        Vector u = Vector::zeros(x.size());
        Vector wu = Vector::zeros(x.size());
        for (std::size_t i = 0; i < k; ++i) {
            axpy(c[i], dirs[i], u);
            axpy(c[i], w_dirs[i], wu);
        }
        const double alpha = line_search_alpha(r, wu);
        Vector xn2 = x, rn2 = r;
        axpy(alpha, u, xn2);
        axpy(-alpha, wu, rn2);
        rn2 = round_vec(rn2, prec);
        if (norm2(rn2) <= rnorm) {
            for (std::size_t i = 0; i < k; ++i) c[i] *= alpha;
            xn = std::move(xn2);
            rn = std::move(rn2);
        } else {
            c = Vector::zeros(k);
            xn = x;
            rn = r;
        }
    }
    upd.c = std::move(c);
    upd.x_next = std::move(xn);
    upd.r_next = std::move(rn);
    return upd;
}

namespace {

void fill_inner(IterRecord& rec, const InnerSolveStats& stats) {
    rec.inner_iterations += stats.iterations_used;
    rec.inner_relres = stats.final_inner_relres;
    rec.inner_matvecs += stats.matvec_count;
    rec.inner_breakdown = rec.inner_breakdown || stats.breakdown_flag;
}

} // namespace

RefineResult ir_classic(const LinearOperator& op, const Vector& b, const Vector& x0,
                        const RefineConfig& cfg, const Vector* x_ref, const BasicMethod& basic) {
    if (op.rows() != op.cols() || b.size() != op.rows() || x0.size() != op.cols())
        throw DimensionMismatch("ir_classic: dimension mismatch");
    std::shared_ptr<BasicSolver> holder;
    const BasicMethod inner = wrap_basic(cfg, basic, holder);
    const FpFormat& prec = cfg.residual_precision;
    MatvecContext ctx;

    RefineResult out{x0, {}};
    Vector r = round_vec(vsub(b, op.apply(out.x, ctx)), prec);
    push_record(out.trace, 0, r, out.x, x_ref);
    const double r0norm = norm2(r);
    if (r0norm == 0.0) {
        out.trace.converged = true;
        return out;
    }
    StagnationMonitor stag;
    for (std::size_t m = 0; m < cfg.max_outer_iters; ++m) {
        const double rel = norm2(r) / r0norm;
        if (rel <= cfg.outer_tol) {
            out.trace.converged = true;
            break;
        }
        if (norm2(r) > kDivergenceGuard * r0norm) {
            out.trace.diverged = true;
            break;
        }
        if (stag.stalled(rel, m, cfg.stagnation_window)) {
            out.trace.stagnated = true;
            break;
        }
        auto [d, stats] = inner(op, r, ctx);
        const Vector w = op.apply(d, ctx);
        const double check = residual_expansion_check(r, w);
        axpy(1.0, d, out.x);
        r = round_vec(vsub(b, op.apply(out.x, ctx)), prec);
        push_record(out.trace, m + 1, r, out.x, x_ref);
        IterRecord& rec = out.trace.records.back();
        rec.alpha_or_cnorm = 1.0;
        rec.residual_check = check;
        fill_inner(rec, stats);
        if (cfg.true_residual_every > 0 && (m + 1) % cfg.true_residual_every == 0)
            rec.true_res_norm = norm2(vsub(b, op.exact_apply(out.x)));
    }
    const double final_rel = norm2(r) / r0norm;
    if (final_rel <= cfg.outer_tol) out.trace.converged = true;
    if (norm2(r) > kDivergenceGuard * r0norm) out.trace.diverged = true;
    return out;
}

namespace {

RefineResult stable_engine(const LinearOperator& op, const Vector& b, const Vector& x0,
                           const RefineConfig& cfg, const Vector* x_ref, const BasicMethod& basic,
                           Variant variant) {
    if (op.rows() != op.cols() || b.size() != op.rows() || x0.size() != op.cols())
        throw DimensionMismatch("stable_ir: dimension mismatch");
    const std::size_t k = (variant == Variant::Stable) ? 1 : std::max<std::size_t>(1, cfg.k);
    std::shared_ptr<BasicSolver> holder;
    const BasicMethod inner = wrap_basic(cfg, basic, holder);
    const FpFormat& prec = cfg.residual_precision;
    MatvecContext ctx;

    RefineResult out{x0, {}};
    Vector r = round_vec(vsub(b, op.apply(out.x, ctx)), prec);
    push_record(out.trace, 0, r, out.x, x_ref);
    const double r0norm = norm2(r);
    if (r0norm == 0.0) {
        out.trace.converged = true;
        return out;
    }
    if (variant == Variant::StochasticMultiDir && k > 1 &&
        (op.mode() != LinearOperator::Mode::Noisy || op.noise().sigma == 0.0) && !basic) {
        out.trace.warning = "deterministic basic method: stochastic window collapses to rank 1";
    }

    std::deque<Vector> dirs, w_dirs; // newest first
    StagnationMonitor stag;
    for (std::size_t m = 0; m < cfg.max_outer_iters; ++m) {
        const double rel = norm2(r) / r0norm;
        if (rel <= cfg.outer_tol) {
            out.trace.converged = true;
            break;
        }
        if (stag.stalled(rel, m, cfg.stagnation_window)) {
            out.trace.stagnated = true;
            break;
        }

        IterRecord pending;
        if (variant == Variant::StochasticMultiDir) {
            dirs.clear();
            w_dirs.clear();
            for (std::size_t j = 0; j < k; ++j) {
                auto [d, stats] = inner(op, r, ctx);
                fill_inner(pending, stats);
                w_dirs.push_front(round_vec(op.apply(d, ctx), prec));
                dirs.push_front(std::move(d));
            }
        } else {
            auto [d, stats] = inner(op, r, ctx);
            fill_inner(pending, stats);
            w_dirs.push_front(round_vec(op.apply(d, ctx), prec));
            dirs.push_front(std::move(d));
            while (dirs.size() > k) {
                dirs.pop_back();
                w_dirs.pop_back();
            }
        }

        const std::vector<Vector> dvec(dirs.begin(), dirs.end());
        const std::vector<Vector> wvec(w_dirs.begin(), w_dirs.end());
        const Vector r_old = r;
        MultiDirUpdate upd = multidir_update(dvec, wvec, out.x, r, prec);
        out.x = std::move(upd.x_next);
        r = std::move(upd.r_next);

        Vector w_combined = Vector::zeros(r.size());
        for (std::size_t i = 0; i < dvec.size(); ++i) axpy(upd.c[i], wvec[i], w_combined);

        push_record(out.trace, m + 1, r, out.x, x_ref);
        IterRecord& rec = out.trace.records.back();
        rec.alpha_or_cnorm = (dvec.size() == 1) ? upd.c[0] : norm2(upd.c);
        rec.residual_check = residual_expansion_check(r_old, w_combined);
        rec.inner_iterations = pending.inner_iterations;
        rec.inner_relres = pending.inner_relres;
        rec.inner_matvecs = pending.inner_matvecs;
        rec.inner_breakdown = pending.inner_breakdown;
        if (cfg.true_residual_every > 0 && (m + 1) % cfg.true_residual_every == 0)
            rec.true_res_norm = norm2(vsub(b, op.exact_apply(out.x)));
    }
    if (norm2(r) / r0norm <= cfg.outer_tol) out.trace.converged = true;
    return out;
}

} // namespace

RefineResult stable_ir(const LinearOperator& op, const Vector& b, const Vector& x0,
                       const RefineConfig& cfg, const Vector* x_ref, const BasicMethod& basic) {
    return stable_engine(op, b, x0, cfg, x_ref, basic, Variant::Stable);
}

RefineResult stable_ir_multidir(const LinearOperator& op, const Vector& b, const Vector& x0,
                                const RefineConfig& cfg, const Vector* x_ref,
                                const BasicMethod& basic) {
    return stable_engine(op, b, x0, cfg, x_ref, basic, Variant::MultiDir);
}

RefineResult stable_ir_stochastic(const LinearOperator& op, const Vector& b, const Vector& x0,
                                  const RefineConfig& cfg, const Vector* x_ref,
                                  const BasicMethod& basic) {
    return stable_engine(op, b, x0, cfg, x_ref, basic, Variant::StochasticMultiDir);
}

RefineResult run_refinement(const LinearOperator& op, const Vector& b, const Vector& x0,
                            const RefineConfig& cfg, const Vector* x_ref,
                            const BasicMethod& basic) {
    switch (cfg.variant) {
    case Variant::Classic: return ir_classic(op, b, x0, cfg, x_ref, basic);
    case Variant::Stable: return stable_ir(op, b, x0, cfg, x_ref, basic);
    case Variant::MultiDir: return stable_ir_multidir(op, b, x0, cfg, x_ref, basic);
    case Variant::StochasticMultiDir: return stable_ir_stochastic(op, b, x0, cfg, x_ref, basic);
    }
    throw std::logic_error("unreachable");
}

} // namespace stir
