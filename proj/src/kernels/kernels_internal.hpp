#pragma once

#include <cstdint>
#include <span>

#include "krsketch/kernels.hpp"

namespace krs::simd::detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;
inline constexpr int kPhiloxRounds = 10;

// fdlibm log kernel coefficients.
inline constexpr double kLg1 = 6.666666666666735130e-01;
inline constexpr double kLg2 = 3.999999999940941908e-01;
inline constexpr double kLg3 = 2.857142874366239149e-01;
inline constexpr double kLg4 = 2.222219843214978396e-01;
inline constexpr double kLg5 = 1.818357216161805012e-01;
inline constexpr double kLg6 = 1.531383769920937332e-01;
inline constexpr double kLg7 = 1.479819860511658591e-01;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kSqrt2 = 1.41421356237309514547e+00;

// fdlibm sin/cos kernels on [-pi/4, pi/4].
inline constexpr double kS1 = -1.66666666666666324348e-01;
inline constexpr double kS2 = 8.33333333332248946124e-03;
inline constexpr double kS3 = -1.98412698298579493134e-04;
inline constexpr double kS4 = 2.75573137070700676789e-06;
inline constexpr double kS5 = -2.50507602534068634195e-08;
inline constexpr double kS6 = 1.58969099521155010221e-10;
inline constexpr double kC1 = 4.16666666666666019037e-02;
inline constexpr double kC2 = -1.38888888888741095749e-03;
inline constexpr double kC3 = 2.48015872894767294178e-05;
inline constexpr double kC4 = -2.75573143513906633035e-07;
inline constexpr double kC5 = 2.08757232129817482790e-09;
inline constexpr double kC6 = -1.13596475577881948265e-11;
inline constexpr double kTwoPi = 6.28318530717958647692e+00;

inline constexpr std::uint64_t kOneBits = 0x3FF0000000000000ull;

void philox_blocks_scalar(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block,
                          std::span<std::uint32_t> out);
void gaussian_pairs_scalar(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block,
                           std::span<double> out);
void hadamard_accumulate_scalar(double alpha, std::span<const double> a,
                                std::span<const double> b, std::span<double> out);
void axpy_scalar(double alpha, std::span<const double> x, std::span<double> y);
double dot_scalar(std::span<const double> a, std::span<const double> b);

// Box-Muller pair from one Philox block; exposed for the AVX2 tail loop.
void box_muller_block(const std::uint32_t words[4], double* z0, double* z1);

// Scalar log on (0, 1] and sincos(2*pi*v) on [0, 1), the reference the AVX2
// path reproduces bit for bit.
double log_unit(double u);
void sincos_turns(double v, double* s, double* c);

#if defined(KRSKETCH_HAVE_AVX2_TU)
void philox_blocks_avx2(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block,
                        std::span<std::uint32_t> out);
void gaussian_pairs_avx2(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block,
                         std::span<double> out);
void hadamard_accumulate_avx2(double alpha, std::span<const double> a, std::span<const double> b,
                              std::span<double> out);
void axpy_avx2(double alpha, std::span<const double> x, std::span<double> y);
double dot_avx2(std::span<const double> a, std::span<const double> b);
#endif

}  // namespace krs::simd::detail
