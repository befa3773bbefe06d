#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

#include "kernels_internal.hpp"

namespace krs::simd {

namespace {

constexpr KernelTable kScalarTable{
    KernelTier::Scalar,          detail::philox_blocks_scalar, detail::gaussian_pairs_scalar,
    detail::hadamard_accumulate_scalar, detail::axpy_scalar,    detail::dot_scalar,
};

#if defined(KRSKETCH_HAVE_AVX2_TU)
constexpr KernelTable kAvx2Table{
    KernelTier::Avx2,          detail::philox_blocks_avx2, detail::gaussian_pairs_avx2,
    detail::hadamard_accumulate_avx2, detail::axpy_avx2,    detail::dot_avx2,
};
#endif

bool cpu_has_avx2() {
#if defined(KRSKETCH_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

KernelTier initial_tier() {
  if (const char* env = std::getenv("KRSKETCH_SIMD")) {
    const std::string_view want(env);
    if (want == "scalar") return KernelTier::Scalar;
    if (want == "avx2" && cpu_has_avx2()) return KernelTier::Avx2;
  }
  return cpu_has_avx2() ? KernelTier::Avx2 : KernelTier::Scalar;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&kernels_for(initial_tier())};
  return slot;
}

}  // namespace

std::string_view tier_name(KernelTier tier) {
  switch (tier) {
    case KernelTier::Scalar:
      return "scalar";
    case KernelTier::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool tier_supported(KernelTier tier) {
  return tier == KernelTier::Scalar || (tier == KernelTier::Avx2 && cpu_has_avx2());
}

const KernelTable& kernels_for(KernelTier tier) {
  if (!tier_supported(tier)) {
    throw std::runtime_error("kernel tier not supported on this CPU: " + std::string(tier_name(tier)));
  }
#if defined(KRSKETCH_HAVE_AVX2_TU)
  if (tier == KernelTier::Avx2) return kAvx2Table;
#endif
  return kScalarTable;
}

const KernelTable& kernels() { return *active_slot().load(std::memory_order_acquire); }

KernelTier active_tier() { return kernels().tier; }

void set_active_tier(KernelTier tier) {
  active_slot().store(&kernels_for(tier), std::memory_order_release);
}

}  // namespace krs::simd
