#pragma once

// Embedding diagnostics: how far a sketch distorts squared norms on a
// subspace, theory-driven row counts, and Monte Carlo checks of the bilinear
// Gaussian statistic zeta = xi^T Sigma eta.

#include <cstdint>
#include <vector>

#include "krsketch/sketch.hpp"
#include "krsketch/tensor.hpp"

namespace krs {

// Orthonormal bases of Range(F) and Range(G). Their Kronecker product spans
// Range(F kron G), which contains Range(F * G).
struct RangeBasis {
  DenseMatrix uf;  // n1 x pf
  DenseMatrix ug;  // n2 x pg

  // Left singular vectors of F and G (numerical rank at rcond).
  static RangeBasis from_factors(const DenseMatrix& f, const DenseMatrix& g, double rcond = 1e-12);

  Index dim() const { return uf.cols() * ug.cols(); }
  // uf kron ug as an n1*n2 x pf*pg Khatri-Rao operator; column a*pg + b is
  // uf[:, a] kron ug[:, b].
  KhatriRaoOperator as_operator() const;
};

// |‖S y‖^2 - ‖y‖^2| / ‖y‖^2.
double distortion(const Sketch& s, const DenseVector& y);

// Max distortion over n_samples uniform directions x on the unit sphere of
// R^dim, y = (uf kron ug) x. Sample k depends only on (seed, k), so a larger
// n_samples never lowers the result.
double sup_distortion_sampled(const Sketch& s, const RangeBasis& basis, Index n_samples,
                              std::uint64_t seed);

// Exact sup over the range: max |eig(M^T M) - 1|, M = S (uf kron ug).
double sup_distortion_exact(const Sketch& s, const RangeBasis& basis);

// Exact sup over Range(a) for a dense a (orthonormalized internally).
double sup_distortion_exact(const Sketch& s, const DenseMatrix& a, double rcond = 1e-12);

struct GaussianDim {
  Index r = 0;
};
struct Case1Dim {
  Index r1 = 0;
  Index r2 = 0;
};
struct Case2Dim {
  Index r = 0;
  bool supported_by_theory = true;  // false when p < 6
};

// ceil(C / eps^2 * (|ln delta| + p)).
GaussianDim embed_dim_gaussian(double eps, double delta, Index p, double c);
// r1 = r2 = ceil(C / eps^2 * (|ln delta| + p)).
Case1Dim embed_dim_case1(double eps, double delta, Index p, double c);
// ceil(C * max{(|ln delta| + p^2)^3 / eps, eps^(-5/2)}).
Case2Dim embed_dim_case2(double eps, double delta, Index p, double c);

// Nonincreasing, nonnegative, sum of squares 1.
class SigmaSpectrum {
 public:
  // Sorted and normalized; throws on negative entries or an all-zero input.
  explicit SigmaSpectrum(std::vector<double> values);
  static SigmaSpectrum unit(Index p);     // e_1
  static SigmaSpectrum uniform(Index p);  // sigma_i^2 = 1/p
  static SigmaSpectrum random(Index p, std::uint64_t seed);

  const std::vector<double>& values() const { return sigma_; }
  Index p() const { return static_cast<Index>(sigma_.size()); }

 private:
  std::vector<double> sigma_;
};

struct TailCount {
  double t = 0.0;
  std::uint64_t exceed = 0;  // draws with |zeta| > t
};

struct ZetaStats {
  std::uint64_t n = 0;
  double m2 = 0.0;      // mean zeta^2
  double m4 = 0.0;      // mean zeta^4
  double var_sq = 0.0;  // mean (zeta^2 - 1)^2
  double m8 = 0.0;      // mean zeta^8, for the spread of m4
  double var_sq_4 = 0.0;  // mean (zeta^2 - 1)^4, for the spread of var_sq
  std::vector<TailCount> tails;
};

ZetaStats zeta_sample(const SigmaSpectrum& sigma, std::uint64_t n_draws, std::uint64_t seed,
                      const std::vector<double>& thresholds = {});

// Upper bound on P(|zeta| > t). Only defined for t >= sqrt(p); returns 1
// below that.
double zeta_tail_bound(double t, Index p);

struct SampleTailBound {
  double bound = 1.0;      // 5 r exp(3/4 sqrt(p)) exp(-r^(1/3) t^(1/3) / 2)
  bool regime_ok = false;  // r >= 8 * 3^(3/2) * max{t^(-5/2), p^(3/2) / t}
  bool nonvacuous = false; // bound < 1
};

// Bound on P(|mean(zeta_i^2 - 1)| > t) for r i.i.d. copies, t in (0, 1].
SampleTailBound zeta_sample_tail_bound(Index r, double t, Index p);

struct NormDistributionCheck {
  std::vector<double> sketch_norms;  // ‖S y‖^2 over independent Case 2 sketches
  std::vector<double> zeta_means;    // (1/r) sum zeta_i^2
  double ks = 0.0;
  double sketch_mean = 0.0;
  double zeta_mean = 0.0;
};

// Compares the law of ‖S y‖^2 for a Case 2 sketch, with y a unit vector whose
// matricization has singular values sigma, against direct simulation of
// (1/r) sum zeta_i^2.
NormDistributionCheck case2_norm_distribution_check(const SigmaSpectrum& sigma, Index r,
                                                    Index n_draws, std::uint64_t seed);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

}  // namespace krs
