// SPDX-License-Identifier: Apache-2.0

#ifndef STIR_IO_HPP_
#define STIR_IO_HPP_

#include <string>
#include <variant>

#include "stir/refine.hpp"

namespace stir {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedField : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IndexOutOfBounds : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ZeroMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using AnyMatrix = std::variant<DenseMatrix, SparseCsr>;

DenseMatrix to_dense(const AnyMatrix& m);
std::size_t matrix_rows(const AnyMatrix& m);
std::size_t matrix_cols(const AnyMatrix& m);

/// Symmetric matrix with 1+sqrt(i) on the diagonal and 1/|i-j| off it
/// (1-based indices). Positive definite for the tested sizes.
DenseMatrix gen_decay_spd(std::size_t n);

/// Entries i.i.d. uniform on [0, 1), deterministic per seed.
DenseMatrix gen_uniform_random(std::size_t n, std::uint64_t seed);

/// Normal-equations reduction A = H^T H, b = H^T y. Throws RankDeficient
/// when H is (numerically) rank deficient.
std::pair<DenseMatrix, Vector> gen_normal_equations(const DenseMatrix& h, const Vector& y);

/// A = U diag(sigma) V^T with log-spaced singular values from 1 down to
/// 1/target_cond; symmetric=true uses V = U.
DenseMatrix gen_conditioned(std::size_t n, double target_cond, std::uint64_t seed,
                            bool symmetric = false);

/// MatrixMarket reader: coordinate and array formats; real/integer/pattern
/// fields; general/symmetric/skew-symmetric storage. Complex files are
/// rejected with UnsupportedField. Coordinate files load as SparseCsr,
/// array files as DenseMatrix.
AnyMatrix read_matrix_market(const std::string& path);
AnyMatrix read_matrix_market_string(const std::string& text, const std::string& origin = "<string>");

void write_matrix_market(const DenseMatrix& a, const std::string& path);
void write_matrix_market(const SparseCsr& a, const std::string& path);
std::string matrix_market_string(const DenseMatrix& a);
std::string matrix_market_string(const SparseCsr& a);

/// Uniform scaling of the matrix so its largest absolute entry becomes
/// target_max. Returns the scale gamma applied; solving (gamma A) xh = b
/// gives x = gamma * xh.
std::pair<DenseMatrix, double> normalize_dynamic_range(const DenseMatrix& a, double target_max);
std::pair<SparseCsr, double> normalize_dynamic_range(const SparseCsr& a, double target_max);

/// Trace CSV: iter,res_norm,err_norm,alpha_or_cnorm,inner_iters,
/// inner_relres,diverged_flag. UTF-8, LF, 17 significant digits;
/// byte-identical for identical runs.
std::string trace_csv_string(const IterTrace& trace);
void write_trace_csv(const IterTrace& trace, const std::string& path);
IterTrace read_trace_csv(const std::string& path);

/// Backend selection: "exact", "rounded:binary32", "noisy:0.02".
struct BackendSpec {
    LinearOperator::Mode mode = LinearOperator::Mode::Exact;
    FpFormat format = FpFormat::binary64();
    double sigma = 0.02;

    static BackendSpec parse(const std::string& text);
    std::string str() const;
    LinearOperator wrap(std::shared_ptr<const DenseMatrix> a, std::uint64_t seed,
                        std::uint64_t stream = 0) const;
    LinearOperator wrap(std::shared_ptr<const SparseCsr> a, std::uint64_t seed,
                        std::uint64_t stream = 0) const;
};

/// Flat key-value run configuration (see README for the grammar).
struct RunConfig {
    RefineConfig refine;
    BackendSpec backend;
    std::string rhs = "ones"; // ones | random
};

RunConfig parse_run_config_text(const std::string& text);
RunConfig read_run_config(const std::string& path);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace stir

#endif // STIR_IO_HPP_
