// SPDX-License-Identifier: Apache-2.0

#include "stir/backend.hpp"

#include <cmath>

#include "stir/rng.hpp"

namespace stir {

FpFormat FpFormat::from_name(const std::string& name) {
    if (name == "binary64") return binary64();
    if (name == "binary32") return binary32();
    if (name == "binary16") return binary16();
    throw std::invalid_argument("unknown floating-point format: " + name);
}

double round_to(double x, const FpFormat& f) {
    if (f.is_binary64()) return x;
    if (x == 0.0) return x;
    const int p = f.mantissa_bits;
    const int emax = (1 << (f.exponent_bits - 1)) - 1;
    const int emin = 1 - emax;
    int e;
    (void)std::frexp(x, &e); // x = m * 2^e, |m| in [0.5, 1)
    const int lead = e - 1;  // exponent of the leading bit
    const int quantum_exp = (lead >= emin ? lead : emin) - (p - 1);
    const double quantum = std::ldexp(1.0, quantum_exp);
    // division by a power of two is exact; nearbyint is ties-to-even
    double y = std::nearbyint(x / quantum) * quantum;
    const double max_finite = std::ldexp(2.0 - std::ldexp(1.0, 1 - p), emax);
    if (std::abs(y) > max_finite) y = std::copysign(max_finite, y);
    return y;
}

Vector round_to(const Vector& x, const FpFormat& f) {
    if (f.is_binary64()) return x;
    Vector y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = round_to(y[i], f);
    return y;
}

LinearOperator LinearOperator::exact(std::shared_ptr<const DenseMatrix> a) {
    LinearOperator op;
    op.rows_ = a->rows();
    op.cols_ = a->cols();
    op.dense_ = std::move(a);
    return op;
}

LinearOperator LinearOperator::exact(std::shared_ptr<const SparseCsr> a) {
    LinearOperator op;
    op.rows_ = a->rows();
    op.cols_ = a->cols();
    op.sparse_ = std::move(a);
    return op;
}

LinearOperator LinearOperator::rounded(std::shared_ptr<const DenseMatrix> a, FpFormat f) {
    LinearOperator op = exact(std::move(a));
    op.mode_ = Mode::Rounded;
    op.format_ = std::move(f);
    return op;
}

LinearOperator LinearOperator::rounded(std::shared_ptr<const SparseCsr> a, FpFormat f) {
    LinearOperator op = exact(std::move(a));
    op.mode_ = Mode::Rounded;
    op.format_ = std::move(f);
    return op;
}

LinearOperator LinearOperator::noisy(std::shared_ptr<const DenseMatrix> a, NoiseModel noise) {
    LinearOperator op = exact(std::move(a));
    op.mode_ = Mode::Noisy;
    op.noise_ = noise;
    return op;
}

LinearOperator LinearOperator::noisy(std::shared_ptr<const SparseCsr> a, NoiseModel noise) {
    LinearOperator op = exact(std::move(a));
    op.mode_ = Mode::Noisy;
    op.noise_ = noise;
    return op;
}

Vector LinearOperator::exact_apply(const Vector& x) const {
    return dense_ ? matvec(*dense_, x) : matvec(*sparse_, x);
}

double LinearOperator::matrix_norm_inf() const {
    return dense_ ? norm_inf(*dense_) : norm_inf(*sparse_);
}

namespace {

Vector rounded_dense_matvec(const DenseMatrix& a, const Vector& x, const FpFormat& f) {
    Vector y = Vector::zeros(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j)
            acc = round_to(acc + round_to(a(i, j) * x[j], f), f);
        y[i] = acc;
    }
    return y;
}

Vector rounded_csr_matvec(const SparseCsr& a, const Vector& x, const FpFormat& f) {
    Vector y = Vector::zeros(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p)
            acc = round_to(acc + round_to(a.vals()[p] * x[a.col_idx()[p]], f), f);
        y[i] = acc;
    }
    return y;
}

} // namespace

Vector LinearOperator::apply(const Vector& x, MatvecContext& ctx) const {
    if (cols_ != x.size()) throw DimensionMismatch("LinearOperator::apply: dimension mismatch");
    const std::uint64_t call = ctx.calls++;
    switch (mode_) {
    case Mode::Exact:
        return exact_apply(x);
    case Mode::Rounded:
        if (format_.is_binary64()) return exact_apply(x);
        return dense_ ? rounded_dense_matvec(*dense_, x, format_)
                      : rounded_csr_matvec(*sparse_, x, format_);
    case Mode::Noisy: {
        Vector y = exact_apply(x);
        if (noise_.sigma == 0.0) return y;
        const double scale =
            noise_.sigma * norm2(y) / std::sqrt(static_cast<double>(rows_));
        const std::vector<double> g = normal_vector(noise_.seed, noise_.stream, call, rows_);
        for (std::size_t i = 0; i < rows_; ++i) y[i] += scale * g[i];
        return y;
    }
    }
    throw std::logic_error("unreachable");
}

LuFactors lu_factor_lowprec(const DenseMatrix& a, const FpFormat& f) {
    if (a.rows() != a.cols()) throw DimensionMismatch("lu_factor_lowprec: matrix must be square");
    const std::size_t n = a.rows();
    LuFactors fac;
    fac.format = f;
    fac.lu = a;
    fac.piv.resize(n);
    for (std::size_t i = 0; i < n; ++i) fac.piv[i] = i;
    DenseMatrix& lu = fac.lu;
    for (double& v : lu.data()) v = round_to(v, f);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
        if (lu(p, k) == 0.0) throw SingularMatrix("lu_factor_lowprec: pivot rounds to zero");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(p, j), lu(k, j));
            std::swap(fac.piv[p], fac.piv[k]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            lu(i, k) = round_to(lu(i, k) / lu(k, k), f);
            const double lik = lu(i, k);
            for (std::size_t j = k + 1; j < n; ++j)
                lu(i, j) = round_to(lu(i, j) - round_to(lik * lu(k, j), f), f);
        }
    }
    return fac;
}

Vector lu_solve(const LuFactors& fac, const Vector& r, const FpFormat& f) {
    const std::size_t n = fac.lu.rows();
    if (r.size() != n) throw DimensionMismatch("lu_solve: length mismatch");
    Vector x = Vector::zeros(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = round_to(r[fac.piv[i]], f);
    for (std::size_t i = 1; i < n; ++i) {
        double acc = x[i];
        for (std::size_t j = 0; j < i; ++j)
            acc = round_to(acc - round_to(fac.lu(i, j) * x[j], f), f);
        x[i] = acc;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double acc = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j)
            acc = round_to(acc - round_to(fac.lu(ii, j) * x[j], f), f);
        x[ii] = round_to(acc / fac.lu(ii, ii), f);
    }
    return x;
}

} // namespace stir
