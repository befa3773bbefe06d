// Compiled with -mavx2 (no -mfma): every multiply-add below rounds twice,
// exactly like the scalar reference.

#include <immintrin.h>

#include <cstdint>
#include <span>

#include "kernels_internal.hpp"

namespace krs::simd::detail {

namespace {

struct PhiloxLanes {
  __m256i x0, x1, x2, x3;  // word w of 8 consecutive blocks
};

inline void mulhilo(__m256i a, __m256i m, __m256i& hi, __m256i& lo) {
  const __m256i even = _mm256_mul_epu32(a, m);
  const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), m);
  lo = _mm256_blend_epi32(even, _mm256_slli_epi64(odd, 32), 0b10101010);
  hi = _mm256_blend_epi32(_mm256_srli_epi64(even, 32), odd, 0b10101010);
}

inline PhiloxLanes philox8(std::uint64_t key, std::uint64_t stream, std::uint64_t block) {
  alignas(32) std::uint32_t lo[8];
  alignas(32) std::uint32_t hi[8];
  for (int i = 0; i < 8; ++i) {
    const std::uint64_t b = block + static_cast<std::uint64_t>(i);
    lo[i] = static_cast<std::uint32_t>(b);
    hi[i] = static_cast<std::uint32_t>(b >> 32);
  }
  __m256i c0 = _mm256_load_si256(reinterpret_cast<const __m256i*>(lo));
  __m256i c1 = _mm256_load_si256(reinterpret_cast<const __m256i*>(hi));
  __m256i c2 = _mm256_set1_epi32(static_cast<int>(static_cast<std::uint32_t>(stream)));
  __m256i c3 = _mm256_set1_epi32(static_cast<int>(static_cast<std::uint32_t>(stream >> 32)));

  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  const __m256i m0 = _mm256_set1_epi32(static_cast<int>(kPhiloxM0));
  const __m256i m1 = _mm256_set1_epi32(static_cast<int>(kPhiloxM1));

  for (int r = 0; r < kPhiloxRounds; ++r) {
    __m256i hi0, lo0, hi1, lo1;
    mulhilo(c0, m0, hi0, lo0);
    mulhilo(c2, m1, hi1, lo1);
    const __m256i vk0 = _mm256_set1_epi32(static_cast<int>(k0));
    const __m256i vk1 = _mm256_set1_epi32(static_cast<int>(k1));
    c0 = _mm256_xor_si256(_mm256_xor_si256(hi1, c1), vk0);
    c1 = lo1;
    c2 = _mm256_xor_si256(_mm256_xor_si256(hi0, c3), vk1);
    c3 = lo0;
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return {c0, c1, c2, c3};
}

// 64-bit words (lo | hi << 32) for four blocks, taken from half `upper`.
inline __m256i join64(__m256i lo, __m256i hi, bool upper) {
  const __m128i l = upper ? _mm256_extracti128_si256(lo, 1) : _mm256_castsi256_si128(lo);
  const __m128i h = upper ? _mm256_extracti128_si256(hi, 1) : _mm256_castsi256_si128(hi);
  return _mm256_or_si256(_mm256_cvtepu32_epi64(l), _mm256_slli_epi64(_mm256_cvtepu32_epi64(h), 32));
}

inline __m256d log_unit4(__m256d u) {
  const __m256i bits = _mm256_castpd_si256(u);
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000ll);
  const __m256d two52 = _mm256_set1_pd(4503599627370496.0);
  __m256d e = _mm256_sub_pd(
      _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(_mm256_srli_epi64(bits, 52), magic)), two52),
      _mm256_set1_pd(1023.0));
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll)),
                      _mm256_set1_epi64x(static_cast<long long>(kOneBits))));
  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_blendv_pd(e, _mm256_add_pd(e, _mm256_set1_pd(1.0)), big);

  const __m256d f = _mm256_sub_pd(m, _mm256_set1_pd(1.0));
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(_mm256_set1_pd(2.0), f));
  const __m256d z = _mm256_mul_pd(s, s);
  const __m256d w = _mm256_mul_pd(z, z);
  auto mul = [](__m256d a, __m256d b) { return _mm256_mul_pd(a, b); };
  auto add = [](__m256d a, __m256d b) { return _mm256_add_pd(a, b); };
  auto c = [](double v) { return _mm256_set1_pd(v); };
  const __m256d t1 = mul(w, add(c(kLg2), mul(w, add(c(kLg4), mul(w, c(kLg6))))));
  const __m256d t2 =
      mul(z, add(c(kLg1), mul(w, add(c(kLg3), mul(w, add(c(kLg5), mul(w, c(kLg7))))))));
  const __m256d r = add(t2, t1);
  const __m256d hfsq = mul(mul(c(0.5), f), f);
  const __m256d inner = add(mul(s, add(hfsq, r)), mul(e, c(kLn2Lo)));
  return _mm256_sub_pd(mul(e, c(kLn2Hi)), _mm256_sub_pd(_mm256_sub_pd(hfsq, inner), f));
}

inline void sincos_turns4(__m256d v, __m256d& s_out, __m256d& c_out) {
  auto mul = [](__m256d a, __m256d b) { return _mm256_mul_pd(a, b); };
  auto add = [](__m256d a, __m256d b) { return _mm256_add_pd(a, b); };
  auto c = [](double x) { return _mm256_set1_pd(x); };

  const __m256d q = _mm256_floor_pd(add(mul(v, c(4.0)), c(0.5)));
  const __m256d t = _mm256_sub_pd(v, mul(q, c(0.25)));
  const __m256d x = mul(t, c(kTwoPi));
  const __m256d z = mul(x, x);

  const __m256d v3 = mul(z, x);
  const __m256d rs = add(c(kS2), mul(z, add(c(kS3), mul(z, add(c(kS4), mul(z, add(c(kS5), mul(z, c(kS6)))))))));
  const __m256d s = add(x, mul(v3, add(c(kS1), mul(z, rs))));

  const __m256d rc = mul(
      z, add(c(kC1),
             mul(z, add(c(kC2), mul(z, add(c(kC3), mul(z, add(c(kC4), mul(z, add(c(kC5), mul(z, c(kC6))))))))))));
  const __m256d hz = mul(c(0.5), z);
  const __m256d w = _mm256_sub_pd(c(1.0), hz);
  const __m256d cs = add(w, add(_mm256_sub_pd(_mm256_sub_pd(c(1.0), w), hz), mul(z, rc)));

  const __m256i qi = _mm256_cvtepi32_epi64(_mm256_cvttpd_epi32(q));
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i two = _mm256_set1_epi64x(2);
  const __m256d swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(qi, one), one));
  const __m256d neg_s = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(qi, two), two));
  const __m256d neg_c = _mm256_castsi256_pd(
      _mm256_cmpeq_epi64(_mm256_and_si256(_mm256_add_epi64(qi, one), two), two));
  const __m256d sign = _mm256_set1_pd(-0.0);

  __m256d sn = _mm256_blendv_pd(s, cs, swap);
  __m256d cn = _mm256_blendv_pd(cs, s, swap);
  sn = _mm256_xor_pd(sn, _mm256_and_pd(neg_s, sign));
  cn = _mm256_xor_pd(cn, _mm256_and_pd(neg_c, sign));
  s_out = sn;
  c_out = cn;
}

// Four blocks of words in 64-bit form -> z0, z1 for each block.
inline void box_muller4(__m256i w0, __m256i w1, __m256d& z0, __m256d& z1) {
  const __m256i one_bits = _mm256_set1_epi64x(static_cast<long long>(kOneBits));
  const __m256d d0 = _mm256_castsi256_pd(_mm256_or_si256(_mm256_srli_epi64(w0, 12), one_bits));
  const __m256d d1 = _mm256_castsi256_pd(_mm256_or_si256(_mm256_srli_epi64(w1, 12), one_bits));
  const __m256d u = _mm256_sub_pd(_mm256_set1_pd(2.0), d0);
  const __m256d v = _mm256_sub_pd(d1, _mm256_set1_pd(1.0));
  const __m256d radius = _mm256_sqrt_pd(_mm256_mul_pd(_mm256_set1_pd(-2.0), log_unit4(u)));
  __m256d s, c;
  sincos_turns4(v, s, c);
  z0 = _mm256_mul_pd(radius, c);
  z1 = _mm256_mul_pd(radius, s);
}

inline void store_pairs(double* out, __m256d z0, __m256d z1) {
  const __m256d lo = _mm256_unpacklo_pd(z0, z1);
  const __m256d hi = _mm256_unpackhi_pd(z0, z1);
  _mm256_storeu_pd(out, _mm256_permute2f128_pd(lo, hi, 0x20));
  _mm256_storeu_pd(out + 4, _mm256_permute2f128_pd(lo, hi, 0x31));
}

}  // namespace

void philox_blocks_avx2(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block,
                        std::span<std::uint32_t> out) {
  const std::size_t n_blocks = out.size() / 4;
  std::size_t b = 0;
  alignas(32) std::uint32_t w[4][8];
  for (; b + 8 <= n_blocks; b += 8) {
    const PhiloxLanes lanes = philox8(key, stream, first_block + b);
    _mm256_store_si256(reinterpret_cast<__m256i*>(w[0]), lanes.x0);
    _mm256_store_si256(reinterpret_cast<__m256i*>(w[1]), lanes.x1);
    _mm256_store_si256(reinterpret_cast<__m256i*>(w[2]), lanes.x2);
    _mm256_store_si256(reinterpret_cast<__m256i*>(w[3]), lanes.x3);
    std::uint32_t* dst = out.data() + 4 * b;
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 4; ++j) dst[4 * i + j] = w[j][i];
    }
  }
  if (b < n_blocks) {
    philox_blocks_scalar(key, stream, first_block + b, out.subspan(4 * b));
  }
}

void gaussian_pairs_avx2(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block,
                         std::span<double> out) {
  const std::size_t n_blocks = out.size() / 2;
  std::size_t b = 0;
  for (; b + 8 <= n_blocks; b += 8) {
    const PhiloxLanes lanes = philox8(key, stream, first_block + b);
    for (int half = 0; half < 2; ++half) {
      const bool upper = half == 1;
      const __m256i w0 = join64(lanes.x0, lanes.x1, upper);
      const __m256i w1 = join64(lanes.x2, lanes.x3, upper);
      __m256d z0, z1;
      box_muller4(w0, w1, z0, z1);
      store_pairs(out.data() + 2 * (b + 4 * half), z0, z1);
    }
  }
  if (b < n_blocks) {
    gaussian_pairs_scalar(key, stream, first_block + b, out.subspan(2 * b));
  }
}

void hadamard_accumulate_avx2(double alpha, std::span<const double> a, std::span<const double> b,
                              std::span<double> out) {
  const std::size_t n = out.size();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]));
    _mm256_storeu_pd(&out[i], _mm256_add_pd(_mm256_loadu_pd(&out[i]), _mm256_mul_pd(va, prod)));
  }
  for (; i < n; ++i) out[i] = out[i] + alpha * (a[i] * b[i]);
}

void axpy_avx2(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = y.size();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(&y[i], _mm256_add_pd(_mm256_loadu_pd(&y[i]), _mm256_mul_pd(va, _mm256_loadu_pd(&x[i]))));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

double dot_avx2(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i])));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(&a[i + 4]), _mm256_loadu_pd(&b[i + 4])));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace krs::simd::detail
