#pragma once

// Synthetic Khatri-Rao least-squares problems and the r / n / p sweeps.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "krsketch/lsq.hpp"
#include "krsketch/sketch.hpp"
#include "krsketch/tensor.hpp"

namespace krs {

inline constexpr double kDefaultNoise = 1e-6;

struct SynthProblem {
  KhatriRaoOperator op;  // F * G, L = 1
  DenseVector x_ref;
  DenseVector b;
  DenseVector sigma_f;  // singular values of F
  DenseVector sigma_g;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
};

// F = U_F diag(sigma_F) V_F^T, G likewise, with U, V the Q factors of
// Gaussian matrices, sigma ~ N(1, 0.2^2), x_ref ~ N(1, 0.5^2),
// b = A x_ref + noise_level * xi.
SynthProblem gen_problem(Index n1, Index n2, Index p, std::uint64_t seed,
                         double noise_level = kDefaultNoise);

// Full least-squares solution of a problem, computed once and shared by
// every trial.
struct Baseline {
  LsSolution solution;
  double f_xstar = 0.0;
  double b_norm_sq = 0.0;
};

// f(x*) below this fraction of ||b||^2 is rounding noise, i.e. a consistent
// (noiseless) system whose relative error is undefined.
inline constexpr double kDegenerateResidual = 1e-24;

Baseline solve_baseline(const KhatriRaoOperator& op, const DenseVector& b, double rcond = kDefaultRcond);

// relative_error against a baseline. NumericalError when the baseline is degenerate.
RelativeError trial_relative_error(double f_xs, const Baseline& base);

struct SweepRecord {
  std::string strategy;
  Index r = 0;
  Index r1 = 0;  // 0 when not a Case 1 sketch
  Index r2 = 0;
  Index n1 = 0;
  Index n2 = 0;
  Index p = 0;
  std::uint64_t trial = 0;
  double rel_error = 0.0;
  double rel_error_raw = 0.0;
  std::optional<double> wall_time_ms;  // only when timing is requested
};

// Sketch-and-solve with an already built sketch (also the identity test hook).
SweepRecord run_trial_with_sketch(const KhatriRaoOperator& op, const DenseVector& b,
                                  const Baseline& base, const Sketch& s, double rcond = kDefaultRcond);

SweepRecord run_trial(const SynthProblem& problem, const Baseline& base, Strategy strategy,
                      const SketchSize& size, std::uint64_t trial_seed, double rcond = kDefaultRcond);

struct SweepConfig {
  std::vector<Strategy> strategies{Strategy::Case1, Strategy::Case2, Strategy::DenseGaussian};
  std::vector<Index> r_grid{256, 1024, 4096, 16384, 65536};
  std::vector<Index> n_grid{50, 100, 150, 200, 250};
  std::vector<Index> p_grid{3, 6, 9, 12, 15};
  Index n = 100;   // n1 = n2 for sweep_r and sweep_p
  Index p = 10;    // for sweep_r and sweep_n
  Index r_n = 2209;  // fixed r of sweep_n
  Index r_p = 4096;  // fixed r of sweep_p
  Index trials = 10;
  std::uint64_t seed = 0;
  double rcond = kDefaultRcond;
  double noise = kDefaultNoise;
  unsigned jobs = 0;  // 0: hardware concurrency
  bool timing = false;
  // Optional per-grid-point progress line.
  std::function<void(const std::string&)> log;
};

std::vector<SweepRecord> sweep_r(const SweepConfig& cfg);
std::vector<SweepRecord> sweep_n(const SweepConfig& cfg);
std::vector<SweepRecord> sweep_p(const SweepConfig& cfg);

// Runs task(i) for i in [0, count) on up to jobs threads. Exceptions are
// rethrown (lowest index first) after all workers finish.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task);

double median(std::vector<double> v);

struct MedianRow {
  std::string strategy;
  Index r = 0;
  Index n1 = 0;
  Index n2 = 0;
  Index p = 0;
  double median_rel_error = 0.0;
  std::size_t trials = 0;
};

// Median rel_error per (strategy, r, n1, n2, p), in first-appearance order.
std::vector<MedianRow> summarize(const std::vector<SweepRecord>& records);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
double linear_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace krs
