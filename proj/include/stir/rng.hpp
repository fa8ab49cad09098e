// SPDX-License-Identifier: Apache-2.0
//
// Counter-based Philox4x32-10 generator. Every random quantity in the
// project is addressed by (seed, stream, call, block) so traces are
// bit-reproducible across runs and platforms. See README for the stream
// derivation rules.

#ifndef STIR_RNG_HPP_
#define STIR_RNG_HPP_

#include <array>
#include <cstdint>
#include <vector>

namespace stir {

/// One Philox4x32-10 block: 128-bit counter, 64-bit key, 4x32-bit output.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        std::uint64_t key);

/// Uniform doubles in [0, 1). Block b of stream (seed, stream, call) yields
/// two doubles from one Philox evaluation; index i reads block i/2.
double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t call, std::uint64_t index);

/// Standard normal draws via Box-Muller on uniform01 pairs. Deterministic
/// per (seed, stream, call, index).
double standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t call,
                       std::uint64_t index);

std::vector<double> normal_vector(std::uint64_t seed, std::uint64_t stream, std::uint64_t call,
                                  std::size_t n);

std::vector<double> uniform_vector(std::uint64_t seed, std::uint64_t stream, std::uint64_t call,
                                   std::size_t n);

/// Stable 64-bit mix for deriving sub-seeds (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

} // namespace stir

#endif // STIR_RNG_HPP_
