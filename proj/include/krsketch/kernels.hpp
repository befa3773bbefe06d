#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation and (on x86-64) an AVX2 variant selected at runtime.
//
// Bit-exactness contract: philox_blocks, gaussian_pairs, hadamard_accumulate
// and axpy produce identical bits on every tier. dot reassociates the sum and
// agrees with the scalar reference only to rounding.

#include <cstdint>
#include <span>
#include <string_view>

namespace krs::simd {

enum class KernelTier { Scalar, Avx2 };

std::string_view tier_name(KernelTier tier);

// Philox4x32-10 output for blocks first_block, first_block+1, ...
// Block b is written to out[4*(b-first_block) .. +3]; out.size() % 4 == 0.
// Key words are (key lo, key hi); counter words are
// (block lo, block hi, stream lo, stream hi).
using PhiloxFn = void (*)(std::uint64_t key, std::uint64_t stream,
                          std::uint64_t first_block, std::span<std::uint32_t> out);

// Standard normals by Box-Muller, one pair per Philox block.
// out.size() % 2 == 0.
using GaussianPairsFn = void (*)(std::uint64_t key, std::uint64_t stream,
                                 std::uint64_t first_block, std::span<double> out);

// out[i] += alpha * (a[i] * b[i])
using HadamardAccumulateFn = void (*)(double alpha, std::span<const double> a,
                                      std::span<const double> b, std::span<double> out);

// y[i] += alpha * x[i]
using AxpyFn = void (*)(double alpha, std::span<const double> x, std::span<double> y);

using DotFn = double (*)(std::span<const double> a, std::span<const double> b);

struct KernelTable {
  KernelTier tier;
  PhiloxFn philox_blocks;
  GaussianPairsFn gaussian_pairs;
  HadamardAccumulateFn hadamard_accumulate;
  AxpyFn axpy;
  DotFn dot;
};

bool tier_supported(KernelTier tier);

// Table for a specific tier; throws std::runtime_error if unsupported.
const KernelTable& kernels_for(KernelTier tier);

// Active table. On first use the best supported tier is chosen unless the
// KRSKETCH_SIMD environment variable is "scalar" or "avx2".
const KernelTable& kernels();

KernelTier active_tier();
void set_active_tier(KernelTier tier);

// Scoped override, mainly for equivalence tests.
class ScopedTier {
 public:
  explicit ScopedTier(KernelTier tier) : previous_(active_tier()) { set_active_tier(tier); }
  ~ScopedTier() { set_active_tier(previous_); }
  ScopedTier(const ScopedTier&) = delete;
  ScopedTier& operator=(const ScopedTier&) = delete;

 private:
  KernelTier previous_;
};

}  // namespace krs::simd
