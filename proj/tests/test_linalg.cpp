// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stir/linalg.hpp"
#include "test_support.hpp"

using namespace stir;
using namespace stir::testing;

namespace {

SparseCsr dense_to_csr(const DenseMatrix& a) {
    std::vector<std::size_t> is, js;
    std::vector<double> vs;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (a(i, j) != 0.0) {
                is.push_back(i);
                js.push_back(j);
                vs.push_back(a(i, j));
            }
    return SparseCsr::from_triplets(a.rows(), a.cols(), is, js, vs);
}

} // namespace

TEST_CASE("matvec identity and hand cases") {
    DenseMatrix eye(3, 3);
    for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
    const Vector x({1, 2, 3});
    const Vector y = matvec(eye, x);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 2.0);
    CHECK(y[2] == 3.0);

    const DenseMatrix a(2, 2, {2, 1, 1, 3});
    const Vector z = matvec(a, Vector({1, 1}));
    CHECK(z[0] == 3.0);
    CHECK(z[1] == 4.0);

    CHECK_THROWS_AS(matvec(a, x), DimensionMismatch);
}

TEST_CASE("dense and CSR matvec agree on random matrices") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        DenseMatrix a = random_matrix(8, 8, seed);
        // random sparsity pattern
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j)
                if (uniform01(seed, 99, i, j) < 0.4) a(i, j) = 0.0;
        const SparseCsr s = dense_to_csr(a);
        const Vector x = random_vector(8, seed);
        const Vector yd = matvec(a, x);
        const Vector ys = matvec(s, x);
        CHECK(rel_err(ys, yd) <= 1e-14);
    }
}

TEST_CASE("matvec linearity") {
    const DenseMatrix a = random_matrix(10, 10, 7);
    const Vector x = random_vector(10, 1), y = random_vector(10, 2);
    const double al = 1.7, be = -0.3;
    Vector lhs_arg = scaled(x, al);
    axpy(be, y, lhs_arg);
    const Vector lhs = matvec(a, lhs_arg);
    Vector rhs = scaled(matvec(a, x), al);
    axpy(be, matvec(a, y), rhs);
    CHECK(rel_err(lhs, rhs) <= 1e-12);
}

TEST_CASE("norm2 and dot") {
    CHECK(norm2(Vector({3, 4})) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(dot(Vector({1, 0}), Vector({0, 1})) == 0.0);
    const Vector x = random_vector(50, 11);
    CHECK(dot(x, x) == doctest::Approx(norm2(x) * norm2(x)).epsilon(1e-14));
    CHECK_THROWS_AS(dot(Vector({1}), Vector({1, 2})), DimensionMismatch);
}

TEST_CASE("vector invariants") {
    CHECK_THROWS(Vector({1.0, std::nan("")}));
    CHECK_THROWS(Vector(std::vector<double>{}));
}

TEST_CASE("dense_solve") {
    DenseMatrix eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    Vector x = dense_solve(eye, Vector({5, 6}));
    CHECK(x[0] == 5.0);
    CHECK(x[1] == 6.0);

    const DenseMatrix d(2, 2, {2, 0, 0, 4});
    x = dense_solve(d, Vector({2, 8}));
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(2.0));

    // residual contract on a random well-conditioned system
    const DenseMatrix a = random_spd(10, 3);
    const Vector b = random_vector(10, 4);
    const Vector sol = dense_solve(a, b);
    CHECK(norm2(vsub(matvec(a, sol), b)) / norm2(b) <= 1e-10);

    const DenseMatrix sing(2, 2, {1, 1, 1, 1});
    CHECK_THROWS_AS(dense_solve(sing, Vector({1, 2})), SingularMatrix);
}

TEST_CASE("spd_solve_small") {
    DenseMatrix eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    Vector c = spd_solve_small(eye, Vector({1, 2}));
    CHECK(c[0] == doctest::Approx(1.0));
    CHECK(c[1] == doctest::Approx(2.0));

    const DenseMatrix g(2, 2, {4, 0, 0, 9});
    c = spd_solve_small(g, Vector({8, 9}));
    CHECK(c[0] == doctest::Approx(2.0));
    CHECK(c[1] == doctest::Approx(1.0));

    // rank deficient: minimum-norm solution via the eigendecomposition fallback
    const DenseMatrix r(2, 2, {1, 1, 1, 1});
    c = spd_solve_small(r, Vector({2, 2}));
    CHECK(c[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(c[1] == doctest::Approx(1.0).epsilon(1e-10));

    // residual contract on random SPD
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const DenseMatrix gg = random_spd(12, seed + 20);
        const Vector rhs = random_vector(12, seed + 30);
        const Vector sol = spd_solve_small(gg, rhs);
        CHECK(norm2(vsub(matvec(gg, sol), rhs)) / norm2(rhs) <= 1e-8);
    }
}

TEST_CASE("symmetric_eig orthonormality and reconstruction") {
    const DenseMatrix a = random_spd(8, 42);
    std::vector<double> ev;
    DenseMatrix v;
    symmetric_eig(a, ev, v);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) {
            double g = 0.0, rec = 0.0;
            for (std::size_t k = 0; k < 8; ++k) {
                g += v(k, i) * v(k, j);
                rec += v(i, k) * ev[k] * v(j, k);
            }
            CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) <= 1e-10);
            CHECK(std::abs(rec - a(i, j)) <= 1e-8 * norm_inf(a));
        }
}

TEST_CASE("cond_estimate") {
    DenseMatrix eye(4, 4);
    for (int i = 0; i < 4; ++i) eye(i, i) = 1.0;
    CHECK(cond_estimate(eye) == doctest::Approx(1.0).epsilon(1e-6));

    DenseMatrix d(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 10.0;
    CHECK(cond_estimate(d) == doctest::Approx(10.0).epsilon(1e-4));

    // constructed singular values 1..1e3 via two rotations-free factors:
    // use a diagonal stretched by random orthogonal similarity from Jacobi
    // eigenvectors of a random SPD matrix
    const DenseMatrix spd = random_spd(20, 5);
    std::vector<double> ev;
    DenseMatrix q;
    symmetric_eig(spd, ev, q);
    std::vector<double> sv(20);
    for (std::size_t i = 0; i < 20; ++i)
        sv[i] = std::pow(10.0, 3.0 * static_cast<double>(i) / 19.0); // 1 .. 1e3
    DenseMatrix a(20, 20);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 20; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 20; ++k) acc += q(i, k) * sv[k] * q(j, k);
            a(i, j) = acc;
        }
    const double est = cond_estimate(a);
    CHECK(est >= 0.5e3);
    CHECK(est <= 2e3);
}
