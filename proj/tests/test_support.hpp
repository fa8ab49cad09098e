// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the test suites. The least-squares oracle here is
// Householder-QR based and independent of the library's Cholesky path.

#ifndef STIR_TEST_SUPPORT_HPP_
#define STIR_TEST_SUPPORT_HPP_

#include <cmath>

#include "stir/linalg.hpp"
#include "stir/rng.hpp"

namespace stir::testing {

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                 std::uint64_t stream = 1) {
    DenseMatrix a(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto row = normal_vector(seed, stream, i, cols);
        for (std::size_t j = 0; j < cols; ++j) a(i, j) = row[j];
    }
    return a;
}

inline Vector random_vector(std::size_t n, std::uint64_t seed, std::uint64_t stream = 2) {
    return Vector(normal_vector(seed, stream, 0, n));
}

/// Well-conditioned SPD matrix: A = B^T B + n I.
inline DenseMatrix random_spd(std::size_t n, std::uint64_t seed) {
    const DenseMatrix b = random_matrix(n, n, seed, 3);
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = (i == j) ? static_cast<double>(n) : 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += b(k, i) * b(k, j);
            a(i, j) = acc;
        }
    return a;
}

/// Minimum-residual solution of min ||M c - rhs|| by Householder QR.
inline Vector qr_least_squares(const DenseMatrix& m, const Vector& rhs) {
    const std::size_t rows = m.rows(), cols = m.cols();
    DenseMatrix r = m;
    Vector q_rhs = rhs;
    for (std::size_t k = 0; k < cols && k < rows; ++k) {
        double nrm = 0.0;
        for (std::size_t i = k; i < rows; ++i) nrm += r(i, k) * r(i, k);
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) continue;
        const double alpha = r(k, k) >= 0 ? -nrm : nrm;
        std::vector<double> v(rows, 0.0);
        v[k] = r(k, k) - alpha;
        for (std::size_t i = k + 1; i < rows; ++i) v[i] = r(i, k);
        double vtv = 0.0;
        for (std::size_t i = k; i < rows; ++i) vtv += v[i] * v[i];
        if (vtv == 0.0) continue;
        for (std::size_t j = k; j < cols; ++j) {
            double proj = 0.0;
            for (std::size_t i = k; i < rows; ++i) proj += v[i] * r(i, j);
            const double f = 2.0 * proj / vtv;
            for (std::size_t i = k; i < rows; ++i) r(i, j) -= f * v[i];
        }
        double proj = 0.0;
        for (std::size_t i = k; i < rows; ++i) proj += v[i] * q_rhs[i];
        const double f = 2.0 * proj / vtv;
        for (std::size_t i = k; i < rows; ++i) q_rhs[i] -= f * v[i];
    }
    Vector c = Vector::zeros(cols);
    for (std::size_t ii = cols; ii-- > 0;) {
        double acc = q_rhs[ii];
        for (std::size_t j = ii + 1; j < cols; ++j) acc -= r(ii, j) * c[j];
        c[ii] = std::abs(r(ii, ii)) > 1e-300 ? acc / r(ii, ii) : 0.0;
    }
    return c;
}

inline double rel_err(const Vector& got, const Vector& want) {
    const double nw = norm2(want);
    return nw > 0 ? norm2(vsub(got, want)) / nw : norm2(got);
}

} // namespace stir::testing

#endif // STIR_TEST_SUPPORT_HPP_
