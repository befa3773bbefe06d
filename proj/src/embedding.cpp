#include "krsketch/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "krsketch/error.hpp"
#include "krsketch/random.hpp"

namespace krs {

namespace {

constexpr std::uint64_t kZetaChunk = 4096;

void check_eps_delta(double eps, double delta, double c) {
  // Closed at 1/2 so the boundary cases eps = delta = 1/2 are accepted.
  if (!(eps > 0.0 && eps <= 0.5)) throw DomainError("eps must lie in (0, 1/2]");
  if (!(delta > 0.0 && delta <= 0.5)) throw DomainError("delta must lie in (0, 1/2]");
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("constant C must be > 0");
}

Index checked_ceil(double v) {
  if (!std::isfinite(v) || v > 9.0e18) throw DomainError("embedding dimension overflows");
  return static_cast<Index>(std::ceil(v));
}

DenseMatrix left_basis(const DenseMatrix& m, double rcond) {
  Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU);
  const DenseVector& s = svd.singularValues();
  Index rank = 0;
  while (rank < s.size() && s[rank] > rcond * s[0]) ++rank;
  if (rank == 0) throw NumericalError("range basis: matrix is numerically zero");
  return svd.matrixU().leftCols(rank);
}

double max_gram_deviation(const DenseMatrix& m) {
  const DenseMatrix gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(gram, Eigen::EigenvaluesOnly);
  const DenseVector& ev = eig.eigenvalues();
  return std::max(std::abs(ev.minCoeff() - 1.0), std::abs(ev.maxCoeff() - 1.0));
}

}  // namespace

RangeBasis RangeBasis::from_factors(const DenseMatrix& f, const DenseMatrix& g, double rcond) {
  return {left_basis(f, rcond), left_basis(g, rcond)};
}

KhatriRaoOperator RangeBasis::as_operator() const {
  const Index pf = uf.cols();
  const Index pg = ug.cols();
  DenseMatrix forward(uf.rows(), pf * pg);
  DenseMatrix adjoint(ug.rows(), pf * pg);
  for (Index a = 0; a < pf; ++a) {
    for (Index b = 0; b < pg; ++b) {
      forward.col(a * pg + b) = uf.col(a);
      adjoint.col(a * pg + b) = ug.col(b);
    }
  }
  return KhatriRaoOperator(std::move(forward), std::move(adjoint));
}

double distortion(const Sketch& s, const DenseVector& y) {
  const double ny = y.squaredNorm();
  if (!(ny > 0.0)) throw DomainError("distortion: y must be nonzero");
  return std::abs(apply_to_dense_vec(s, y).squaredNorm() - ny) / ny;
}

double sup_distortion_sampled(const Sketch& s, const RangeBasis& basis, Index n_samples,
                              std::uint64_t seed) {
  if (n_samples < 1) throw DomainError("sup_distortion_sampled: n_samples must be >= 1");
  const DenseMatrix m = apply_to_operator(s, basis.as_operator());
  const Index d = basis.dim();
  double worst = 0.0;
  DenseVector x(d);
  for (Index k = 0; k < n_samples; ++k) {
    GaussianStream(seed, StreamTag::SphereSample, static_cast<std::uint64_t>(k))
        .fill(0, {x.data(), static_cast<std::size_t>(d)});
    const double nx = x.squaredNorm();
    if (!(nx > 0.0)) continue;
    worst = std::max(worst, std::abs((m * x).squaredNorm() / nx - 1.0));
  }
  return worst;
}

double sup_distortion_exact(const Sketch& s, const RangeBasis& basis) {
  return max_gram_deviation(apply_to_operator(s, basis.as_operator()));
}

double sup_distortion_exact(const Sketch& s, const DenseMatrix& a, double rcond) {
  return max_gram_deviation(apply_to_dense_matrix(s, left_basis(a, rcond)));
}

GaussianDim embed_dim_gaussian(double eps, double delta, Index p, double c) {
  check_eps_delta(eps, delta, c);
  if (p < 1) throw DomainError("p must be >= 1");
  return {checked_ceil(c / (eps * eps) * (std::abs(std::log(delta)) + static_cast<double>(p)))};
}

Case1Dim embed_dim_case1(double eps, double delta, Index p, double c) {
  const Index r = embed_dim_gaussian(eps, delta, p, c).r;
  return {r, r};
}

Case2Dim embed_dim_case2(double eps, double delta, Index p, double c) {
  check_eps_delta(eps, delta, c);
  if (p < 1) throw DomainError("p must be >= 1");
  const double pp = static_cast<double>(p);
  const double base = std::abs(std::log(delta)) + pp * pp;
  const double first = base * base * base / eps;
  const double second = std::pow(eps, -2.5);
  return {checked_ceil(c * std::max(first, second)), p >= 6};
}

SigmaSpectrum::SigmaSpectrum(std::vector<double> values) : sigma_(std::move(values)) {
  if (sigma_.empty()) throw DomainError("SigmaSpectrum: empty");
  double ss = 0.0;
  for (double v : sigma_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("SigmaSpectrum: entries must be finite and >= 0");
    ss += v * v;
  }
  if (!(ss > 0.0)) throw DomainError("SigmaSpectrum: all entries are zero");
  const double inv = 1.0 / std::sqrt(ss);
  for (double& v : sigma_) v *= inv;
  std::sort(sigma_.begin(), sigma_.end(), std::greater<>());
}

SigmaSpectrum SigmaSpectrum::unit(Index p) {
  if (p < 1) throw DomainError("SigmaSpectrum: p must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(p), 0.0);
  v[0] = 1.0;
  return SigmaSpectrum(std::move(v));
}

SigmaSpectrum SigmaSpectrum::uniform(Index p) {
  if (p < 1) throw DomainError("SigmaSpectrum: p must be >= 1");
  return SigmaSpectrum(std::vector<double>(static_cast<std::size_t>(p), 1.0));
}

SigmaSpectrum SigmaSpectrum::random(Index p, std::uint64_t seed) {
  if (p < 1) throw DomainError("SigmaSpectrum: p must be >= 1");
  std::vector<double> v = GaussianStream(seed, StreamTag::TestVector, 1).take(0, static_cast<std::size_t>(p));
  for (double& x : v) x = std::abs(x);
  return SigmaSpectrum(std::move(v));
}

ZetaStats zeta_sample(const SigmaSpectrum& sigma, std::uint64_t n_draws, std::uint64_t seed,
                      const std::vector<double>& thresholds) {
  if (n_draws < 1) throw DomainError("zeta_sample: n_draws must be >= 1");
  const auto p = static_cast<std::size_t>(sigma.p());
  const auto& sg = sigma.values();
  const GaussianStream xi_stream(seed, StreamTag::ZetaXi);
  const GaussianStream eta_stream(seed, StreamTag::ZetaEta);
  std::vector<double> xi(kZetaChunk * p);
  std::vector<double> eta(kZetaChunk * p);

  ZetaStats st;
  st.n = n_draws;
  for (double t : thresholds) st.tails.push_back({t, 0});
  double s2 = 0.0;
  double s4 = 0.0;
  double sv = 0.0;
  double s8 = 0.0;
  double sv4 = 0.0;
  for (std::uint64_t first = 0; first < n_draws; first += kZetaChunk) {
    const std::uint64_t count = std::min<std::uint64_t>(kZetaChunk, n_draws - first);
    const std::size_t len = static_cast<std::size_t>(count) * p;
    xi_stream.fill(first * p, {xi.data(), len});
    eta_stream.fill(first * p, {eta.data(), len});
    for (std::uint64_t k = 0; k < count; ++k) {
      double z = 0.0;
      for (std::size_t i = 0; i < p; ++i) z += xi[k * p + i] * sg[i] * eta[k * p + i];
      const double z2 = z * z;
      s2 += z2;
      s4 += z2 * z2;
      const double d2 = (z2 - 1.0) * (z2 - 1.0);
      sv += d2;
      s8 += z2 * z2 * z2 * z2;
      sv4 += d2 * d2;
      for (auto& tc : st.tails) {
        if (std::abs(z) > tc.t) ++tc.exceed;
      }
    }
  }
  const auto n = static_cast<double>(n_draws);
  st.m2 = s2 / n;
  st.m4 = s4 / n;
  st.var_sq = sv / n;
  st.m8 = s8 / n;
  st.var_sq_4 = sv4 / n;
  return st;
}

double zeta_tail_bound(double t, Index p) {
  if (p < 1) throw DomainError("zeta_tail_bound: p must be >= 1");
  const double sp = std::sqrt(static_cast<double>(p));
  double b = 1.0;
  if (t >= 2.0 * sp) {
    b = 2.0 * std::exp(-(2.0 * t - 3.0 * sp) / 4.0);
  } else if (t >= sp) {
    b = 2.0 * std::exp(-(t - sp) * (t - sp) / (4.0 * sp));
  }
  return std::min(b, 1.0);
}

SampleTailBound zeta_sample_tail_bound(Index r, double t, Index p) {
  if (r < 1 || p < 1) throw DomainError("zeta_sample_tail_bound: r and p must be >= 1");
  if (!(t > 0.0 && t <= 1.0)) throw DomainError("zeta_sample_tail_bound: t must lie in (0, 1]");
  const double rr = static_cast<double>(r);
  const double pp = static_cast<double>(p);
  SampleTailBound out;
  out.bound = 5.0 * rr * std::exp(0.75 * std::sqrt(pp)) * std::exp(-0.5 * std::cbrt(rr * t));
  out.regime_ok = rr >= 8.0 * std::pow(3.0, 1.5) * std::max(std::pow(t, -2.5), std::pow(pp, 1.5) / t);
  out.nonvacuous = out.bound < 1.0;
  return out;
}

NormDistributionCheck case2_norm_distribution_check(const SigmaSpectrum& sigma, Index r,
                                                    Index n_draws, std::uint64_t seed) {
  if (r < 1 || n_draws < 1) throw DomainError("case2_norm_distribution_check: r and n_draws must be >= 1");
  const Index p = sigma.p();
  // Mat(y) = U diag(sigma) V^T with random orthogonal U (n2 x p), V (n1 x p).
  const DenseMatrix gu = GaussianStream(seed, StreamTag::TestVector, 2).matrix_row_major_index(p, p);
  const DenseMatrix gv = GaussianStream(seed, StreamTag::TestVector, 3).matrix_row_major_index(p, p);
  const DenseMatrix u = Eigen::HouseholderQR<DenseMatrix>(gu).householderQ();
  const DenseMatrix v = Eigen::HouseholderQR<DenseMatrix>(gv).householderQ();
  const DenseVector sv = Eigen::Map<const DenseVector>(sigma.values().data(), p);
  const DenseVector y = vectorize(u * sv.asDiagonal() * v.transpose());

  NormDistributionCheck out;
  out.sketch_norms.resize(static_cast<std::size_t>(n_draws));
  out.zeta_means.resize(static_cast<std::size_t>(n_draws));
  const auto& sg = sigma.values();
  std::vector<double> xi(static_cast<std::size_t>(r * p));
  std::vector<double> eta(static_cast<std::size_t>(r * p));
  for (Index d = 0; d < n_draws; ++d) {
    const auto ud = static_cast<std::uint64_t>(d);
    const Sketch s = Case2Sketch::generate(r, p, p, trial_seed(seed, ud));
    out.sketch_norms[ud] = apply_to_dense_vec(s, y).squaredNorm();

    GaussianStream(seed, StreamTag::ZetaXi, ud + 1).fill(0, xi);
    GaussianStream(seed, StreamTag::ZetaEta, ud + 1).fill(0, eta);
    double acc = 0.0;
    for (Index i = 0; i < r; ++i) {
      double z = 0.0;
      for (Index k = 0; k < p; ++k) {
        const auto idx = static_cast<std::size_t>(i * p + k);
        z += xi[idx] * sg[static_cast<std::size_t>(k)] * eta[idx];
      }
      acc += z * z;
    }
    out.zeta_means[ud] = acc / static_cast<double>(r);
  }
  const auto mean = [](const std::vector<double>& a) {
    return std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  };
  out.sketch_mean = mean(out.sketch_norms);
  out.zeta_mean = mean(out.zeta_means);
  out.ks = ks_statistic(out.sketch_norms, out.zeta_means);
  return out;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace krs
