// SPDX-License-Identifier: Apache-2.0

#ifndef STIR_BACKEND_HPP_
#define STIR_BACKEND_HPP_

#include <cstdint>
#include <memory>
#include <string>

#include "stir/linalg.hpp"

namespace stir {

/// Binary floating-point format, round-to-nearest-even, saturating overflow.
struct FpFormat {
    std::string name;
    int mantissa_bits; // significand bits including the implicit leading 1
    int exponent_bits;

    static FpFormat binary64() { return {"binary64", 53, 11}; }
    static FpFormat binary32() { return {"binary32", 24, 8}; }
    static FpFormat binary16() { return {"binary16", 11, 5}; }
    static FpFormat from_name(const std::string& name);

    bool is_binary64() const { return mantissa_bits == 53 && exponent_bits == 11; }
};

/// Round a binary64 value into format f, returned as the binary64 value
/// exactly representable in f. Overflow saturates to the largest finite
/// value; underflow goes through subnormals down to zero.
double round_to(double x, const FpFormat& f);
Vector round_to(const Vector& x, const FpFormat& f);

/// Scaled additive Gaussian perturbation of a matvec: sigma is the relative
/// noise level, draws come from the Philox stream (seed, stream, call).
struct NoiseModel {
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

/// Per-run matvec counter; Noisy operators consume one call index per apply.
struct MatvecContext {
    std::uint64_t calls = 0;
};

/// A matrix wrapped with an execution substrate. All solvers speak to this.
class LinearOperator {
  public:
    enum class Mode { Exact, Rounded, Noisy };

    static LinearOperator exact(std::shared_ptr<const DenseMatrix> a);
    static LinearOperator exact(std::shared_ptr<const SparseCsr> a);
    static LinearOperator rounded(std::shared_ptr<const DenseMatrix> a, FpFormat f);
    static LinearOperator rounded(std::shared_ptr<const SparseCsr> a, FpFormat f);
    static LinearOperator noisy(std::shared_ptr<const DenseMatrix> a, NoiseModel noise);
    static LinearOperator noisy(std::shared_ptr<const SparseCsr> a, NoiseModel noise);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Mode mode() const { return mode_; }
    const FpFormat& format() const { return format_; }
    const NoiseModel& noise() const { return noise_; }

    /// Backend matvec. Consumes ctx.calls as the noise call index and
    /// increments it (all modes increment, so matvec counts line up).
    Vector apply(const Vector& x, MatvecContext& ctx) const;

    /// Plain binary64 matvec on the backing matrix, regardless of mode.
    Vector exact_apply(const Vector& x) const;

    const DenseMatrix* dense() const { return dense_.get(); }
    const SparseCsr* sparse() const { return sparse_.get(); }
    double matrix_norm_inf() const;

  private:
    LinearOperator() = default;
    std::size_t rows_ = 0, cols_ = 0;
    Mode mode_ = Mode::Exact;
    FpFormat format_ = FpFormat::binary64();
    NoiseModel noise_;
    std::shared_ptr<const DenseMatrix> dense_;
    std::shared_ptr<const SparseCsr> sparse_;
};

/// Partially pivoted LU with every arithmetic result rounded to f.
struct LuFactors {
    DenseMatrix lu; // packed unit-lower L and U, entries representable in f
    std::vector<std::size_t> piv;
    FpFormat format = FpFormat::binary64();
};

LuFactors lu_factor_lowprec(const DenseMatrix& a, const FpFormat& f);

/// Forward/back substitution with every arithmetic result rounded to f.
Vector lu_solve(const LuFactors& fac, const Vector& r, const FpFormat& f);

} // namespace stir

#endif // STIR_BACKEND_HPP_
