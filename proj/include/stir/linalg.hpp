// SPDX-License-Identifier: Apache-2.0

#ifndef STIR_LINALG_HPP_
#define STIR_LINALG_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace stir {

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense real vector, binary64 entries. Entries must be finite.
class Vector {
  public:
    Vector() = default;
    explicit Vector(std::vector<double> data);
    static Vector zeros(std::size_t n);
    static Vector ones(std::size_t n);

    std::size_t size() const { return data_.size(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

  private:
    std::vector<double> data_;
};

/// Row-major dense real matrix.
class DenseMatrix {
  public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    DenseMatrix transposed() const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Compressed sparse row matrix. Column indices strictly increasing per row.
class SparseCsr {
  public:
    SparseCsr() = default;
    SparseCsr(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
              std::vector<std::size_t> col_idx, std::vector<double> vals);

    /// Build from (i, j, v) triplets; duplicates are summed.
    static SparseCsr from_triplets(std::size_t rows, std::size_t cols,
                                   const std::vector<std::size_t>& is,
                                   const std::vector<std::size_t>& js,
                                   const std::vector<double>& vs);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return vals_.size(); }
    const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
    const std::vector<std::size_t>& col_idx() const { return col_idx_; }
    const std::vector<double>& vals() const { return vals_; }

    DenseMatrix to_dense() const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_idx_;
    std::vector<double> vals_;
};

Vector matvec(const DenseMatrix& a, const Vector& x);
Vector matvec(const SparseCsr& a, const Vector& x);
Vector matvec_transpose(const DenseMatrix& a, const Vector& x);

double dot(const Vector& x, const Vector& y);
double norm2(const Vector& x);
double norm_inf(const Vector& x);

/// y += alpha * x
void axpy(double alpha, const Vector& x, Vector& y);
Vector scaled(const Vector& x, double alpha);
Vector vadd(const Vector& x, const Vector& y);
Vector vsub(const Vector& x, const Vector& y);

/// Infinity norm of a matrix (max absolute row sum).
double norm_inf(const DenseMatrix& a);
double norm_inf(const SparseCsr& a);

/// Solve Ax=b by partially pivoted LU in binary64. Throws SingularMatrix
/// when a pivot magnitude drops below 1e-300.
Vector dense_solve(const DenseMatrix& a, const Vector& b);

/// LU factorization used by dense_solve, exposed for reuse (repeated solves).
struct DenseLu {
    DenseMatrix lu;               // packed L (unit diag) and U
    std::vector<std::size_t> piv; // row permutation
};
DenseLu dense_lu(const DenseMatrix& a);
Vector lu_apply(const DenseLu& fac, const Vector& b);

/// Small SPD solve (k <= 64): Cholesky, with a symmetric-eigendecomposition
/// pseudoinverse fallback when the factorization breaks down. Eigenvalues
/// below 1e-12 * lambda_max are treated as zero.
Vector spd_solve_small(const DenseMatrix& g, const Vector& rhs);

/// Symmetric eigendecomposition by cyclic Jacobi. Returns eigenvalues
/// (ascending) and the orthogonal matrix of eigenvectors as columns.
void symmetric_eig(const DenseMatrix& a, std::vector<double>& eigvals, DenseMatrix& eigvecs);

/// 2-norm condition number estimate, sigma_max / sigma_min, accurate to a
/// factor of 2. Power iteration on A^T A and inverse iteration through LU.
double cond_estimate(const DenseMatrix& a);

/// Largest singular value estimate by power iteration on A^T A.
double sigma_max_estimate(const DenseMatrix& a);

} // namespace stir

#endif // STIR_LINALG_HPP_
