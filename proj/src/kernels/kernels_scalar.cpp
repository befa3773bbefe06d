#include <bit>
#include <cmath>
#include <cstdint>
#include <span>

#include "kernels_internal.hpp"

namespace krs::simd::detail {

namespace {

inline void philox_round(std::uint32_t ctr[4], const std::uint32_t key[2]) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  const std::uint32_t c1 = ctr[1];
  const std::uint32_t c3 = ctr[3];
  ctr[0] = hi1 ^ c1 ^ key[0];
  ctr[1] = lo1;
  ctr[2] = hi0 ^ c3 ^ key[1];
  ctr[3] = lo0;
}

inline void philox_one(std::uint64_t key, std::uint64_t stream, std::uint64_t block,
                       std::uint32_t out[4]) {
  std::uint32_t k[2] = {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  out[0] = static_cast<std::uint32_t>(block);
  out[1] = static_cast<std::uint32_t>(block >> 32);
  out[2] = static_cast<std::uint32_t>(stream);
  out[3] = static_cast<std::uint32_t>(stream >> 32);
  for (int r = 0; r < kPhiloxRounds; ++r) {
    philox_round(out, k);
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
}

}  // namespace

double log_unit(double u) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(u);
  double e = static_cast<double>(static_cast<int>(bits >> 52) - 1023);
  double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) | kOneBits);
  if (m > kSqrt2) {
    m = m * 0.5;
    e = e + 1.0;
  }
  const double f = m - 1.0;
  const double s = f / (2.0 + f);
  const double z = s * s;
  const double w = z * z;
  const double t1 = w * (kLg2 + w * (kLg4 + w * kLg6));
  const double t2 = z * (kLg1 + w * (kLg3 + w * (kLg5 + w * kLg7)));
  const double r = t2 + t1;
  const double hfsq = (0.5 * f) * f;
  return e * kLn2Hi - ((hfsq - (s * (hfsq + r) + e * kLn2Lo)) - f);
}

void sincos_turns(double v, double* s_out, double* c_out) {
  const double q = std::floor(v * 4.0 + 0.5);
  const double t = v - q * 0.25;
  const double x = t * kTwoPi;
  const double z = x * x;

  const double v3 = z * x;
  const double rs = kS2 + z * (kS3 + z * (kS4 + z * (kS5 + z * kS6)));
  const double s = x + v3 * (kS1 + z * rs);

  const double rc = z * (kC1 + z * (kC2 + z * (kC3 + z * (kC4 + z * (kC5 + z * kC6)))));
  const double hz = 0.5 * z;
  const double w = 1.0 - hz;
  const double c = w + (((1.0 - w) - hz) + z * rc);

  const int quadrant = static_cast<int>(q);
  double sn = (quadrant & 1) ? c : s;
  double cs = (quadrant & 1) ? s : c;
  if (quadrant & 2) sn = -sn;
  if ((quadrant + 1) & 2) cs = -cs;
  *s_out = sn;
  *c_out = cs;
}

void box_muller_block(const std::uint32_t words[4], double* z0, double* z1) {
  const std::uint64_t w0 = static_cast<std::uint64_t>(words[0]) |
                           (static_cast<std::uint64_t>(words[1]) << 32);
  const std::uint64_t w1 = static_cast<std::uint64_t>(words[2]) |
                           (static_cast<std::uint64_t>(words[3]) << 32);
  const double d0 = std::bit_cast<double>((w0 >> 12) | kOneBits);
  const double d1 = std::bit_cast<double>((w1 >> 12) | kOneBits);
  const double u = 2.0 - d0;  // (0, 1]
  const double v = d1 - 1.0;  // [0, 1)
  const double radius = std::sqrt(-2.0 * log_unit(u));
  double s = 0.0;
  double c = 0.0;
  sincos_turns(v, &s, &c);
  *z0 = radius * c;
  *z1 = radius * s;
}

void philox_blocks_scalar(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block,
                          std::span<std::uint32_t> out) {
  const std::size_t n_blocks = out.size() / 4;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    philox_one(key, stream, first_block + b, out.data() + 4 * b);
  }
}

void gaussian_pairs_scalar(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block,
                           std::span<double> out) {
  const std::size_t n_blocks = out.size() / 2;
  std::uint32_t words[4];
  for (std::size_t b = 0; b < n_blocks; ++b) {
    philox_one(key, stream, first_block + b, words);
    box_muller_block(words, &out[2 * b], &out[2 * b + 1]);
  }
}

void hadamard_accumulate_scalar(double alpha, std::span<const double> a,
                                std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = out[i] + alpha * (a[i] * b[i]);
  }
}

void axpy_scalar(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = y[i] + alpha * x[i];
  }
}

double dot_scalar(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace krs::simd::detail
