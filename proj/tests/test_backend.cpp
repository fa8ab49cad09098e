// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stir/backend.hpp"
#include "stir/rng.hpp"
#include "test_support.hpp"

using namespace stir;
using namespace stir::testing;

TEST_CASE("philox matches the published test vectors") {
    auto r = philox4x32({0, 0, 0, 0}, 0);
    CHECK(r[0] == 0x6627e8d5u);
    CHECK(r[1] == 0xe169c58du);
    CHECK(r[2] == 0xbc57ac4cu);
    CHECK(r[3] == 0x9b00dbd8u);

    r = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, 0xffffffffffffffffull);
    CHECK(r[0] == 0x408f276du);
    CHECK(r[1] == 0x41c83b0eu);
    CHECK(r[2] == 0xa20bc7c6u);
    CHECK(r[3] == 0x6d5451fdu);

    r = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, 0x299f31d0a4093822ull);
    CHECK(r[0] == 0xd16cfe09u);
    CHECK(r[1] == 0x94fdccebu);
    CHECK(r[2] == 0x5001e420u);
    CHECK(r[3] == 0x24126ea1u);
}

TEST_CASE("uniform and normal streams are deterministic and sane") {
    const auto a = uniform_vector(1, 2, 3, 1000);
    const auto b = uniform_vector(1, 2, 3, 1000);
    CHECK(a == b);
    for (double u : a) {
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    const auto c = uniform_vector(1, 2, 4, 1000);
    CHECK(a != c);
    double mean = 0.0;
    for (double g : normal_vector(7, 0, 0, 100000)) mean += g;
    mean /= 100000.0;
    CHECK(std::abs(mean) < 0.02);
}

TEST_CASE("round_to") {
    const FpFormat b32 = FpFormat::binary32();
    CHECK(round_to(1.0 + std::ldexp(1.0, -30), b32) == 1.0);
    // nearest binary32 to 0.1, frozen from the bit-level oracle
    CHECK(round_to(0.1, b32) == static_cast<double>(0.1f));
    CHECK(round_to(0.1, b32) == doctest::Approx(0.100000001490116).epsilon(1e-12));
    CHECK(round_to(0.1, FpFormat::binary64()) == 0.1);
    CHECK(round_to(-0.3, b32) == static_cast<double>(-0.3f));

    // agreement with hardware float rounding across magnitudes, incl. subnormals
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const double x = (uniform01(5, 0, 0, i) - 0.5) *
                         std::ldexp(1.0, static_cast<int>(i % 320) - 170);
        const float hw = static_cast<float>(x);
        if (std::isinf(hw)) continue; // saturation path differs deliberately
        CHECK(round_to(x, b32) == static_cast<double>(hw));
    }

    // overflow saturates to max finite
    const double max32 = std::ldexp(2.0 - std::ldexp(1.0, -23), 127);
    CHECK(round_to(1e300, b32) == max32);
    CHECK(round_to(-1e300, b32) == -max32);

    const FpFormat b16 = FpFormat::binary16();
    CHECK(round_to(1.0, b16) == 1.0);
    CHECK(round_to(1.0 + std::ldexp(1.0, -12), b16) == 1.0);           // below half ulp
    CHECK(round_to(1.0 + std::ldexp(1.0, -10), b16) == 1.0 + std::ldexp(1.0, -10));
    CHECK(round_to(65504.0, b16) == 65504.0);
    CHECK(round_to(1e6, b16) == 65504.0); // saturation
    CHECK(round_to(std::ldexp(1.0, -24), b16) == std::ldexp(1.0, -24)); // smallest subnormal
    CHECK(round_to(std::ldexp(1.0, -25), b16) == 0.0); // half of smallest, ties to even
}

TEST_CASE("operator modes") {
    auto a = std::make_shared<DenseMatrix>(random_matrix(6, 6, 1));
    const Vector x = random_vector(6, 2);
    MatvecContext ctx;

    const LinearOperator ex = LinearOperator::exact(a);
    const Vector y = ex.apply(x, ctx);
    CHECK(rel_err(y, matvec(*a, x)) == 0.0);

    // Rounded(binary64) is bit-exact with Exact
    const LinearOperator r64 = LinearOperator::rounded(a, FpFormat::binary64());
    CHECK(r64.apply(x, ctx).data() == y.data());

    // sigma = 0 noise is bit-exact with Exact
    const LinearOperator n0 = LinearOperator::noisy(a, NoiseModel{0.0, 123, 0});
    CHECK(n0.apply(x, ctx).data() == y.data());

    // Rounded(binary32) entries are representable in binary32
    const LinearOperator r32 = LinearOperator::rounded(a, FpFormat::binary32());
    const Vector yr = r32.apply(x, ctx);
    for (std::size_t i = 0; i < yr.size(); ++i)
        CHECK(yr[i] == static_cast<double>(static_cast<float>(yr[i])));

    CHECK_THROWS_AS(ex.apply(random_vector(5, 3), ctx), DimensionMismatch);
}

TEST_CASE("noisy apply determinism per (seed, call sequence)") {
    auto a = std::make_shared<DenseMatrix>(random_matrix(8, 8, 9));
    const Vector x = random_vector(8, 10);
    const LinearOperator op = LinearOperator::noisy(a, NoiseModel{0.1, 77, 0});
    MatvecContext c1, c2;
    const Vector y1 = op.apply(x, c1);
    const Vector y1b = op.apply(x, c1); // second call, different draws
    const Vector y2 = op.apply(x, c2);
    CHECK(y1.data() == y2.data());
    CHECK(y1.data() != y1b.data());
}

TEST_CASE("noise magnitude matches sigma (Monte Carlo)") {
    const std::size_t n = 100;
    DenseMatrix eye(n, n);
    for (std::size_t i = 0; i < n; ++i) eye(i, i) = 1.0;
    auto a = std::make_shared<DenseMatrix>(eye);
    const LinearOperator op = LinearOperator::noisy(a, NoiseModel{0.1, 2024, 0});
    Vector x = Vector::ones(n);
    const double xnorm = norm2(x);
    MatvecContext ctx;
    double mean_rel = 0.0;
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        const Vector y = op.apply(x, ctx);
        mean_rel += norm2(vsub(y, x)) / xnorm;
    }
    mean_rel /= draws;
    CHECK(mean_rel >= 0.095);
    CHECK(mean_rel <= 0.105);
}

TEST_CASE("noise is unbiased componentwise") {
    const std::size_t n = 4;
    DenseMatrix eye(n, n);
    for (std::size_t i = 0; i < n; ++i) eye(i, i) = 1.0;
    auto a = std::make_shared<DenseMatrix>(eye);
    const double sigma = 0.5;
    const LinearOperator op = LinearOperator::noisy(a, NoiseModel{sigma, 31337, 0});
    const Vector x = Vector::ones(n);
    MatvecContext ctx;
    const int draws = 100000;
    std::vector<double> mean(n, 0.0);
    for (int d = 0; d < draws; ++d) {
        const Vector y = op.apply(x, ctx);
        for (std::size_t i = 0; i < n; ++i) mean[i] += y[i] - x[i];
    }
    // per-draw std of each component is sigma*||x||/sqrt(n) = 0.5
    const double se = 0.5 / std::sqrt(static_cast<double>(draws));
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(mean[i] / draws) <= 4.0 * se);
}

TEST_CASE("lu_factor_lowprec hand cases") {
    DenseMatrix eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    const LuFactors fi = lu_factor_lowprec(eye, FpFormat::binary64());
    CHECK(fi.lu(0, 0) == 1.0);
    CHECK(fi.lu(1, 1) == 1.0);
    CHECK(fi.piv[0] == 0);

    const DenseMatrix a(2, 2, {2, 1, 4, 1});
    const LuFactors f = lu_factor_lowprec(a, FpFormat::binary64());
    CHECK(f.piv[0] == 1); // row 2 pivots first
    CHECK(f.lu(0, 0) == 4.0);
    CHECK(f.lu(0, 1) == 1.0);
    CHECK(f.lu(1, 0) == 0.5);
    CHECK(f.lu(1, 1) == 0.5);

    const Vector d = lu_solve(f, Vector({5, 3}), FpFormat::binary64());
    // P applied to r=(3,5) when solving A d = r: feed r in original order
    const Vector d2 = lu_solve(f, Vector({3, 5}), FpFormat::binary64());
    CHECK(d2[0] == doctest::Approx(1.0));
    CHECK(d2[1] == doctest::Approx(1.0));
    (void)d;

    DenseMatrix sing(2, 2);
    sing(0, 1) = 1.0; // column of zeros
    CHECK_THROWS_AS(lu_factor_lowprec(sing, FpFormat::binary32()), SingularMatrix);
}

TEST_CASE("lu_factor_lowprec binary64 matches the reference LU") {
    const DenseMatrix a = random_spd(20, 8);
    const LuFactors f = lu_factor_lowprec(a, FpFormat::binary64());
    const DenseLu ref = dense_lu(a);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(f.piv[i] == ref.piv[i]);
        for (std::size_t j = 0; j < 20; ++j)
            CHECK(f.lu(i, j) == doctest::Approx(ref.lu(i, j)).epsilon(1e-14));
    }
}

TEST_CASE("binary32 LU backward error") {
    const std::size_t n = 50;
    const DenseMatrix a = random_spd(n, 77);
    const LuFactors f = lu_factor_lowprec(a, FpFormat::binary32());
    // reconstruct P A - L U in binary64
    DenseMatrix pa(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) pa(i, j) = a(f.piv[i], j);
    double err = 0.0, anorm = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            const std::size_t kmax = std::min(i, j);
            for (std::size_t k = 0; k <= kmax; ++k) {
                const double lik = (k == i) ? 1.0 : f.lu(i, k);
                if (k <= j) acc += lik * f.lu(k, j);
            }
            err = std::max(err, std::abs(pa(i, j) - acc));
            anorm = std::max(anorm, std::abs(a(i, j)));
        }
    CHECK(err / anorm <= 50.0 * std::ldexp(1.0, -24) * 10.0);

    // end-to-end binary32 solve residual
    const Vector r = random_vector(n, 5);
    const Vector d = lu_solve(f, round_to(r, FpFormat::binary32()), FpFormat::binary32());
    const double relres = norm2(vsub(r, matvec(a, d))) / (norm_inf(a) * norm2(d));
    CHECK(relres <= 1e-5);
}
