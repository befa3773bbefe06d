#include "krsketch/synthbench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "krsketch/error.hpp"
#include "krsketch/random.hpp"

namespace krs {

namespace {

constexpr double kSigmaMean = 1.0;
constexpr double kSigmaSd = 0.2;
constexpr double kRefMean = 1.0;
constexpr double kRefSd = 0.5;

DenseMatrix orthonormal_factor(std::uint64_t seed, StreamTag tag, Index rows, Index cols) {
  const DenseMatrix g = GaussianStream(seed, tag).matrix_row_major_index(rows, cols);
  Eigen::HouseholderQR<DenseMatrix> qr(g);
  return qr.householderQ() * DenseMatrix::Identity(rows, cols);
}

DenseVector shifted_normals(std::uint64_t seed, StreamTag tag, Index count, double mean, double sd) {
  DenseVector v(count);
  GaussianStream(seed, tag).fill(0, {v.data(), static_cast<std::size_t>(count)});
  return (v.array() * sd + mean).matrix();
}

SweepRecord base_record(const Sketch& s, const KhatriRaoOperator& op) {
  SweepRecord rec;
  rec.r = sketch_rows(s);
  if (const auto* c1 = std::get_if<Case1Sketch>(&s)) {
    rec.strategy = std::string(strategy_name(Strategy::Case1));
    rec.r1 = c1->r1();
    rec.r2 = c1->r2();
  } else if (std::holds_alternative<Case2Sketch>(s)) {
    rec.strategy = std::string(strategy_name(Strategy::Case2));
  } else if (std::holds_alternative<DenseGaussianSketch>(s)) {
    rec.strategy = std::string(strategy_name(Strategy::DenseGaussian));
  } else {
    rec.strategy = "explicit";
  }
  rec.n1 = op.n1();
  rec.n2 = op.n2();
  rec.p = op.p();
  return rec;
}

struct GridPoint {
  Index n;
  Index p;
  Index r;
};

std::vector<SweepRecord> run_grid(const SweepConfig& cfg, const std::vector<GridPoint>& grid) {
  if (cfg.trials < 1) throw DomainError("trials must be >= 1");
  if (cfg.strategies.empty()) throw DomainError("at least one strategy is required");
  if (grid.empty()) throw DomainError("grid must be nonempty");

  // One problem (and baseline) per distinct (n, p), all with the master seed.
  std::map<std::pair<Index, Index>, std::size_t> problem_index;
  std::vector<std::pair<Index, Index>> shapes;
  for (const auto& g : grid) {
    if (problem_index.emplace(std::make_pair(g.n, g.p), shapes.size()).second) shapes.emplace_back(g.n, g.p);
  }
  std::vector<std::optional<SynthProblem>> problems(shapes.size());
  std::vector<Baseline> baselines(shapes.size());
  parallel_for(shapes.size(), cfg.jobs, [&](std::size_t i) {
    problems[i] = gen_problem(shapes[i].first, shapes[i].first, shapes[i].second, cfg.seed, cfg.noise);
    baselines[i] = solve_baseline(problems[i]->op, problems[i]->b, cfg.rcond);
  });

  // Records ordered by (strategy, grid point, trial).
  const auto trials = static_cast<std::size_t>(cfg.trials);
  const std::size_t per_strategy = grid.size() * trials;
  std::vector<SweepRecord> out(cfg.strategies.size() * per_strategy);
  std::atomic<std::size_t> done_points{0};
  std::mutex log_mutex;
  std::vector<std::atomic<std::size_t>> remaining(cfg.strategies.size() * grid.size());
  for (auto& a : remaining) a = trials;

  parallel_for(out.size(), cfg.jobs, [&](std::size_t task) {
    const std::size_t si = task / per_strategy;
    const std::size_t gi = (task % per_strategy) / trials;
    const std::size_t t = task % trials;
    const auto& g = grid[gi];
    const std::size_t pi = problem_index.at({g.n, g.p});
    SweepRecord rec = run_trial(*problems[pi], baselines[pi], cfg.strategies[si], SketchSize{g.r, 0, 0},
                                trial_seed(cfg.seed, t), cfg.rcond);
    rec.trial = t;
    if (!cfg.timing) rec.wall_time_ms.reset();
    out[task] = std::move(rec);
    if (cfg.log && --remaining[si * grid.size() + gi] == 0) {
      const std::size_t k = ++done_points;
      std::lock_guard lock(log_mutex);
      cfg.log(std::string(strategy_name(cfg.strategies[si])) + " r=" + std::to_string(g.r) +
              " n1=n2=" + std::to_string(g.n) + " p=" + std::to_string(g.p) + " done (" +
              std::to_string(k) + "/" + std::to_string(remaining.size()) + ")");
    }
  });
  return out;
}

}  // namespace

SynthProblem gen_problem(Index n1, Index n2, Index p, std::uint64_t seed, double noise_level) {
  if (n1 < 1 || n2 < 1 || p < 1) throw DomainError("gen_problem: dimensions must be >= 1");
  if (p > std::min(n1, n2)) throw DomainError("gen_problem: p must not exceed min(n1, n2)");
  if (!(noise_level >= 0.0)) throw DomainError("gen_problem: noise level must be >= 0");

  const DenseMatrix uf = orthonormal_factor(seed, StreamTag::ProblemFactorF, n1, p);
  const DenseMatrix ug = orthonormal_factor(seed, StreamTag::ProblemFactorG, n2, p);
  const DenseMatrix vf = orthonormal_factor(seed, StreamTag::ProblemRightF, p, p);
  const DenseMatrix vg = orthonormal_factor(seed, StreamTag::ProblemRightG, p, p);
  DenseVector sf = shifted_normals(seed, StreamTag::ProblemSingularF, p, kSigmaMean, kSigmaSd);
  DenseVector sg = shifted_normals(seed, StreamTag::ProblemSingularG, p, kSigmaMean, kSigmaSd);

  DenseMatrix f = uf * sf.asDiagonal() * vf.transpose();
  DenseMatrix g = ug * sg.asDiagonal() * vg.transpose();
  KhatriRaoOperator op(std::move(f), std::move(g));

  DenseVector x_ref = shifted_normals(seed, StreamTag::ProblemReference, p, kRefMean, kRefSd);
  DenseVector b = kr_apply(op, x_ref);
  if (noise_level > 0.0) {
    DenseVector xi(b.size());
    GaussianStream(seed, StreamTag::ProblemNoise).fill(0, {xi.data(), static_cast<std::size_t>(xi.size())});
    b += noise_level * xi;
  }
  return SynthProblem{std::move(op), std::move(x_ref), std::move(b), std::move(sf), std::move(sg),
                      noise_level, seed};
}

Baseline solve_baseline(const KhatriRaoOperator& op, const DenseVector& b, double rcond) {
  if (b.size() != op.rows()) throw DimensionError("solve_baseline: b length != n1*n2");
  const DenseMatrix a = kr_materialize(op, std::numeric_limits<std::size_t>::max());
  Baseline base;
  base.solution = solve_ls(a, b, rcond);
  // Same residual routine as the sketched trials, so f(x_s) and f(x*) compare like for like.
  base.f_xstar = residual_sq_full(op, base.solution.x, b);
  base.b_norm_sq = b.squaredNorm();
  return base;
}

RelativeError trial_relative_error(double f_xs, const Baseline& base) {
  if (base.f_xstar <= kDegenerateResidual * base.b_norm_sq) {
    throw NumericalError("relative error undefined: baseline residual is at rounding level (noiseless instance)");
  }
  return relative_error(f_xs, base.f_xstar);
}

SweepRecord run_trial_with_sketch(const KhatriRaoOperator& op, const DenseVector& b,
                                  const Baseline& base, const Sketch& s, double rcond) {
  const auto t0 = std::chrono::steady_clock::now();
  const SketchedSystem sys = sketch_system(s, op, b, std::numeric_limits<std::size_t>::max() / 2);
  const LsSolution sol = solve_ls(sys.sa, sys.sb, rcond);
  const double f_xs = residual_sq_full(op, sol.x, b);
  const RelativeError err = trial_relative_error(f_xs, base);
  const auto t1 = std::chrono::steady_clock::now();

  SweepRecord rec = base_record(s, op);
  rec.rel_error = err.value;
  rec.rel_error_raw = err.raw;
  rec.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return rec;
}

SweepRecord run_trial(const SynthProblem& problem, const Baseline& base, Strategy strategy,
                      const SketchSize& size, std::uint64_t seed, double rcond) {
  const Sketch s = make_sketch(strategy, size, problem.op.n1(), problem.op.n2(), seed);
  if (sketch_rows(s) < problem.op.p()) throw DomainError("run_trial: r must be >= p");
  return run_trial_with_sketch(problem.op, problem.b, base, s, rcond);
}

std::vector<SweepRecord> sweep_r(const SweepConfig& cfg) {
  std::vector<GridPoint> grid;
  for (Index r : cfg.r_grid) grid.push_back({cfg.n, cfg.p, r});
  return run_grid(cfg, grid);
}

std::vector<SweepRecord> sweep_n(const SweepConfig& cfg) {
  std::vector<GridPoint> grid;
  for (Index n : cfg.n_grid) grid.push_back({n, cfg.p, cfg.r_n});
  return run_grid(cfg, grid);
}

std::vector<SweepRecord> sweep_p(const SweepConfig& cfg) {
  std::vector<GridPoint> grid;
  for (Index p : cfg.p_grid) grid.push_back({cfg.n, p, cfg.r_p});
  return run_grid(cfg, grid);
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task) {
  if (count == 0) return;
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<MedianRow> summarize(const std::vector<SweepRecord>& records) {
  using Key = std::tuple<std::string, Index, Index, Index, Index>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> groups;
  for (const auto& rec : records) {
    Key k{rec.strategy, rec.r, rec.n1, rec.n2, rec.p};
    auto [it, fresh] = groups.try_emplace(k);
    if (fresh) order.push_back(k);
    it->second.push_back(rec.rel_error);
  }
  std::vector<MedianRow> out;
  out.reserve(order.size());
  for (const auto& k : order) {
    const auto& v = groups.at(k);
    out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), std::get<4>(k), median(v),
                   v.size()});
  }
  return out;
}

double linear_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope needs >= 2 paired points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw DomainError("slope: x values are all equal");
  return sxy / sxx;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size());
  std::vector<double> ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw DomainError("loglog_slope: x must be positive");
    lx[i] = std::log(x[i]);
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) throw DomainError("loglog_slope: y must be positive");
    ly[i] = std::log(y[i]);
  }
  return linear_slope(lx, ly);
}

}  // namespace krs
