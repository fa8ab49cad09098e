// SPDX-License-Identifier: Apache-2.0

#include "stir/rng.hpp"

#include <cmath>

namespace stir {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        std::uint64_t key) {
    std::array<std::uint32_t, 4> c = counter;
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, c[0], hi0, lo0);
        mulhilo(kPhiloxM1, c[2], hi1, lo1);
        const std::array<std::uint32_t, 4> next = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
        c = next;
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return c;
}

namespace {

inline std::array<std::uint32_t, 4> block(std::uint64_t seed, std::uint64_t stream,
                                          std::uint64_t call, std::uint64_t blk) {
    // 128-bit counter = (stream, call ^ blk<<? ) -- keep fields disjoint:
    // low 64 bits carry the block index, high 64 bits mix stream and call.
    const std::uint64_t hi = mix64(stream * 0x9E3779B97F4A7C15ull + call);
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(blk), static_cast<std::uint32_t>(blk >> 32),
        static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32)};
    return philox4x32(ctr, seed);
}

inline double to_unit(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t x = (static_cast<std::uint64_t>(a) << 32) | b;
    return static_cast<double>(x >> 11) * 0x1.0p-53; // [0, 1)
}

} // namespace

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t call,
                 std::uint64_t index) {
    const auto r = block(seed, stream, call, index / 2);
    return (index % 2 == 0) ? to_unit(r[0], r[1]) : to_unit(r[2], r[3]);
}

double standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t call,
                       std::uint64_t index) {
    const auto r = block(seed, stream, call, index / 2);
    const double u1 = 1.0 - to_unit(r[0], r[1]); // (0, 1]
    const double u2 = to_unit(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    return (index % 2 == 0) ? rad * std::cos(ang) : rad * std::sin(ang);
}

std::vector<double> normal_vector(std::uint64_t seed, std::uint64_t stream, std::uint64_t call,
                                  std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = standard_normal(seed, stream, call, i);
    return v;
}

std::vector<double> uniform_vector(std::uint64_t seed, std::uint64_t stream, std::uint64_t call,
                                   std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = uniform01(seed, stream, call, i);
    return v;
}

} // namespace stir
