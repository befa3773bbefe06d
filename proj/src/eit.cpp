#include "krsketch/eit.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "krsketch/error.hpp"
#include "krsketch/random.hpp"

namespace krs {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

constexpr double kInset = 0.1;
constexpr double kSide = 0.2;

// Local corner offsets in the element order (0,0), (1,0), (1,1), (0,1).
constexpr int kCornerI[4] = {0, 1, 1, 0};
constexpr int kCornerJ[4] = {0, 0, 1, 1};

struct DirichletSystem {
  std::vector<Index> interior;        // node ids
  std::vector<Index> interior_slot;   // node id -> interior position or -1
  std::vector<Index> boundary_slot;   // node id -> boundary position or -1
  SparseMatrix k_ii;
  SparseMatrix k_ib;
};

DirichletSystem build_dirichlet(const Mesh2D& mesh, double sigma_star) {
  if (!(sigma_star > 0.0) || !std::isfinite(sigma_star)) throw DomainError("sigma_star must be > 0");
  DirichletSystem d;
  const Index nn = mesh.num_nodes();
  d.interior_slot.assign(static_cast<std::size_t>(nn), -1);
  d.boundary_slot.assign(static_cast<std::size_t>(nn), -1);
  for (std::size_t b = 0; b < mesh.boundary.size(); ++b) {
    d.boundary_slot[static_cast<std::size_t>(mesh.boundary[b])] = static_cast<Index>(b);
  }
  for (Index v = 0; v < nn; ++v) {
    if (d.boundary_slot[static_cast<std::size_t>(v)] < 0) {
      d.interior_slot[static_cast<std::size_t>(v)] = static_cast<Index>(d.interior.size());
      d.interior.push_back(v);
    }
  }
  const Eigen::Matrix4d ke = sigma_star * q1_element_stiffness();
  std::vector<Eigen::Triplet<double>> tii;
  std::vector<Eigen::Triplet<double>> tib;
  for (Index cj = 0; cj < mesh.nx; ++cj) {
    for (Index ci = 0; ci < mesh.nx; ++ci) {
      Index ids[4];
      for (int a = 0; a < 4; ++a) ids[a] = mesh.node(ci + kCornerI[a], cj + kCornerJ[a]);
      for (int a = 0; a < 4; ++a) {
        const Index ra = d.interior_slot[static_cast<std::size_t>(ids[a])];
        if (ra < 0) continue;
        for (int c = 0; c < 4; ++c) {
          const auto col = static_cast<std::size_t>(ids[c]);
          if (d.interior_slot[col] >= 0) {
            tii.emplace_back(ra, d.interior_slot[col], ke(a, c));
          } else {
            tib.emplace_back(ra, d.boundary_slot[col], ke(a, c));
          }
        }
      }
    }
  }
  const auto ni = static_cast<Index>(d.interior.size());
  d.k_ii.resize(ni, ni);
  d.k_ii.setFromTriplets(tii.begin(), tii.end());
  d.k_ib.resize(ni, static_cast<Index>(mesh.boundary.size()));
  d.k_ib.setFromTriplets(tib.begin(), tib.end());
  return d;
}

void corner_values(const Mesh2D& mesh, const DenseMatrix& bank, Index ci, Index cj, Index src, double v[4]) {
  for (int a = 0; a < 4; ++a) v[a] = bank(mesh.node(ci + kCornerI[a], cj + kCornerJ[a]), src);
}

bool is_corner(const Mesh2D& mesh, Index node) {
  const Index i = node % (mesh.nx + 1);
  const Index j = node / (mesh.nx + 1);
  return (i == 0 || i == mesh.nx) && (j == 0 || j == mesh.nx);
}

}  // namespace

bool Mesh2D::on_boundary(Index v) const {
  const Index i = v % (nx + 1);
  const Index j = v / (nx + 1);
  return i == 0 || j == 0 || i == nx || j == nx;
}

double Mesh2D::perimeter_position(Index v) const {
  if (!on_boundary(v)) throw DomainError("perimeter_position: interior node");
  const double px = x(v);
  const double py = y(v);
  const Index i = v % (nx + 1);
  const Index j = v / (nx + 1);
  if (j == 0 && i < nx) return px;
  if (i == nx && j < nx) return 1.0 + py;
  if (j == nx && i > 0) return 2.0 + (1.0 - px);
  return 3.0 + (1.0 - py);
}

Mesh2D build_mesh(Index nx) {
  if (nx < 2) throw DomainError("build_mesh: nx must be >= 2");
  Mesh2D m;
  m.nx = nx;
  m.h = 1.0 / static_cast<double>(nx);
  m.boundary.reserve(static_cast<std::size_t>(4 * nx));
  for (Index i = 0; i < nx; ++i) m.boundary.push_back(m.node(i, 0));
  for (Index j = 0; j < nx; ++j) m.boundary.push_back(m.node(nx, j));
  for (Index i = nx; i > 0; --i) m.boundary.push_back(m.node(i, nx));
  for (Index j = nx; j > 0; --j) m.boundary.push_back(m.node(0, j));
  return m;
}

Eigen::Matrix4d q1_element_stiffness() {
  Eigen::Matrix4d k;
  k << 4, -1, -2, -1,
      -1, 4, -1, -2,
      -2, -1, 4, -1,
      -1, -2, -1, 4;
  return k / 6.0;
}

DenseMatrix forward_bank(const Mesh2D& mesh, double sigma_star, const DenseMatrix& boundary_data) {
  if (boundary_data.rows() != static_cast<Index>(mesh.boundary.size())) {
    throw DimensionError("forward_bank: boundary data needs one row per boundary node");
  }
  if (boundary_data.cols() < 1) throw DomainError("forward_bank: no sources");
  const DirichletSystem d = build_dirichlet(mesh, sigma_star);
  Eigen::SimplicialLLT<SparseMatrix> chol(d.k_ii);
  if (chol.info() != Eigen::Success) throw NumericalError("forward_bank: stiffness factorization failed");
  const DenseMatrix rhs = -(d.k_ib * boundary_data);
  const DenseMatrix ui = chol.solve(rhs);
  if (chol.info() != Eigen::Success) throw NumericalError("forward_bank: solve failed");

  DenseMatrix bank(mesh.num_nodes(), boundary_data.cols());
  for (std::size_t s = 0; s < d.interior.size(); ++s) bank.row(d.interior[s]) = ui.row(static_cast<Index>(s));
  for (std::size_t b = 0; b < mesh.boundary.size(); ++b) {
    bank.row(mesh.boundary[b]) = boundary_data.row(static_cast<Index>(b));
  }
  return bank;
}

DenseVector solve_background(const Mesh2D& mesh, double sigma_star, const DenseVector& boundary_values) {
  return forward_bank(mesh, sigma_star, DenseMatrix(boundary_values)).col(0);
}

DenseMatrix delta_sources(const Mesh2D& mesh, const std::vector<Index>& positions, double scale) {
  if (positions.empty()) throw DomainError("delta_sources: no sources");
  const auto nb = static_cast<Index>(mesh.boundary.size());
  DenseMatrix g = DenseMatrix::Zero(nb, static_cast<Index>(positions.size()));
  for (std::size_t s = 0; s < positions.size(); ++s) {
    if (positions[s] < 0 || positions[s] >= nb) throw DomainError("delta_sources: position out of range");
    g(positions[s], static_cast<Index>(s)) = scale;
  }
  return g;
}

DenseMatrix forward_bank(const Mesh2D& mesh, double sigma_star, const std::vector<Index>& positions) {
  return forward_bank(mesh, sigma_star, delta_sources(mesh, positions));
}

DenseMatrix perimeter_hat_sources(const Mesh2D& mesh, Index count) {
  if (count < 1) throw DomainError("perimeter_hat_sources: count must be >= 1");
  const auto nb = static_cast<Index>(mesh.boundary.size());
  DenseMatrix g = DenseMatrix::Zero(nb, count);
  for (Index s = 0; s < count; ++s) {
    const double centre = 4.0 * static_cast<double>(s) / static_cast<double>(count);
    for (Index b = 0; b < nb; ++b) {
      double dist = std::abs(mesh.perimeter_position(mesh.boundary[static_cast<std::size_t>(b)]) - centre);
      dist = std::min(dist, 4.0 - dist);
      g(b, s) = std::max(0.0, 1.0 - dist / mesh.h);
    }
  }
  return g;
}

std::string_view quadrature_name(Quadrature q) {
  return q == Quadrature::OnePoint ? "one_point" : "four_point";
}

Quadrature parse_quadrature(std::string_view name) {
  if (name == "one_point" || name == "one-point") return Quadrature::OnePoint;
  if (name == "four_point" || name == "four-point") return Quadrature::FourPoint;
  throw DomainError("unknown quadrature '" + std::string(name) + "' (expected one_point, four_point)");
}

KhatriRaoOperator assemble_system(const Mesh2D& mesh, const DenseMatrix& bank, Quadrature q) {
  if (bank.rows() != mesh.num_nodes()) throw DimensionError("assemble_system: bank rows != mesh nodes");
  if (bank.cols() < 1) throw DomainError("assemble_system: empty bank");
  const Index ns = bank.cols();
  const Index nc = mesh.num_cells();
  const double h = mesh.h;

  // Quadrature points in local coordinates and the per-factor weight
  // sqrt(w) so that D_l E_l^T carries the full weight w.
  std::vector<std::pair<double, double>> points;
  double factor = 0.0;
  if (q == Quadrature::OnePoint) {
    points = {{0.5, 0.5}};
    factor = h;
  } else {
    const double g0 = 0.5 - 0.5 / std::sqrt(3.0);
    const double g1 = 0.5 + 0.5 / std::sqrt(3.0);
    points = {{g0, g0}, {g1, g0}, {g0, g1}, {g1, g1}};
    factor = 0.5 * h;
  }
  std::vector<FactorPair> terms;
  terms.reserve(2 * points.size());
  for (std::size_t g = 0; g < 2 * points.size(); ++g) {
    terms.push_back({DenseMatrix(ns, nc), DenseMatrix()});
  }
  double v[4];
  for (Index cj = 0; cj < mesh.nx; ++cj) {
    for (Index ci = 0; ci < mesh.nx; ++ci) {
      const Index k = mesh.cell(ci, cj);
      for (Index s = 0; s < ns; ++s) {
        corner_values(mesh, bank, ci, cj, s, v);
        for (std::size_t g = 0; g < points.size(); ++g) {
          const auto [xi, eta] = points[g];
          const double dx = ((v[1] - v[0]) * (1.0 - eta) + (v[2] - v[3]) * eta) / h;
          const double dy = ((v[3] - v[0]) * (1.0 - xi) + (v[2] - v[1]) * xi) / h;
          terms[2 * g].forward(s, k) = factor * dx;
          terms[2 * g + 1].forward(s, k) = factor * dy;
        }
      }
    }
  }
  // Forward and adjoint banks coincide for a self-adjoint background.
  for (auto& t : terms) t.adjoint = t.forward;
  return KhatriRaoOperator(std::move(terms));
}

std::vector<Inclusion> default_inclusions() {
  return {{kInset, 1.0 - kInset - kSide, kSide, 1.0}, {1.0 - kInset - kSide, kInset, kSide, 1.0}};
}

DenseVector inclusion_field(const Mesh2D& mesh, const std::vector<Inclusion>& inclusions) {
  DenseVector f = DenseVector::Zero(mesh.num_cells());
  for (const auto& inc : inclusions) {
    if (!(inc.side > 0.0) || inc.x0 < 0.0 || inc.y0 < 0.0 || inc.x0 + inc.side > 1.0 + 1e-12 ||
        inc.y0 + inc.side > 1.0 + 1e-12 || !std::isfinite(inc.amplitude)) {
      throw DomainError("inclusion square must have positive side and lie inside [0,1]^2");
    }
    for (Index cj = 0; cj < mesh.nx; ++cj) {
      for (Index ci = 0; ci < mesh.nx; ++ci) {
        const double cx = (static_cast<double>(ci) + 0.5) * mesh.h;
        const double cy = (static_cast<double>(cj) + 0.5) * mesh.h;
        if (cx > inc.x0 && cx < inc.x0 + inc.side && cy > inc.y0 && cy < inc.y0 + inc.side) {
          f[mesh.cell(ci, cj)] += inc.amplitude;
        }
      }
    }
  }
  return f;
}

EitSystem make_eit_problem(const EitConfig& cfg) {
  if (!(cfg.noise_sd >= 0.0)) throw DomainError("noise_sd must be >= 0");
  Mesh2D mesh = build_mesh(cfg.nx);
  DenseVector sigma_true = inclusion_field(mesh, cfg.inclusions);

  DenseMatrix sources;
  if (cfg.sources.hat_count > 0) {
    sources = perimeter_hat_sources(mesh, cfg.sources.hat_count);
  } else {
    std::vector<Index> positions;
    for (std::size_t b = 0; b < mesh.boundary.size(); ++b) {
      if (cfg.sources.exclude_corners && is_corner(mesh, mesh.boundary[b])) continue;
      positions.push_back(static_cast<Index>(b));
    }
    sources = delta_sources(mesh, positions, cfg.sources.delta_scale);
  }
  DenseMatrix bank = forward_bank(mesh, cfg.sigma_star, sources);
  KhatriRaoOperator op = assemble_system(mesh, bank, cfg.quadrature);
  DenseVector data = kr_apply(op, sigma_true);
  if (cfg.noise_sd > 0.0) {
    DenseVector xi(data.size());
    GaussianStream(cfg.seed, StreamTag::EitNoise).fill(0, {xi.data(), static_cast<std::size_t>(xi.size())});
    data += cfg.noise_sd * xi;
  }
  return EitSystem{std::move(mesh), cfg.sigma_star, std::move(bank), std::move(op),
                   std::move(sigma_true), std::move(data), cfg.noise_sd};
}

Reconstruction reconstruct_with_sketch(const EitSystem& sys, const Baseline& base, const Sketch& s,
                                       double rcond) {
  const auto t0 = std::chrono::steady_clock::now();
  const SketchedSystem ss = sketch_system(s, sys.op, sys.data, std::numeric_limits<std::size_t>::max() / 2);
  const LsSolution sol = solve_ls(ss.sa, ss.sb, rcond);
  const double f_xs = residual_sq_full(sys.op, sol.x, sys.data);
  const RelativeError err = trial_relative_error(f_xs, base);
  const auto t1 = std::chrono::steady_clock::now();

  Reconstruction out;
  out.sigma_hat = sol.x;
  auto& rec = out.record;
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
  rec.n1 = sys.op.n1();
  rec.n2 = sys.op.n2();
  rec.p = sys.op.p();
  rec.rel_error = err.value;
  rec.rel_error_raw = err.raw;
  rec.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return out;
}

Reconstruction reconstruct(const EitSystem& sys, const Baseline& base, Strategy strategy,
                           const SketchSize& size, std::uint64_t seed, double rcond) {
  const Sketch s = make_sketch(strategy, size, sys.op.n1(), sys.op.n2(), seed);
  if (sketch_rows(s) < sys.op.p()) throw DomainError("reconstruct: r must be >= p");
  return reconstruct_with_sketch(sys, base, s, rcond);
}

EitSweepResult eit_sweep(const EitSweepConfig& cfg) {
  if (cfg.trials < 1) throw DomainError("trials must be >= 1");
  if (cfg.strategies.empty()) throw DomainError("at least one strategy is required");
  if (cfg.r_grid.empty()) throw DomainError("r grid must be nonempty");
  EitConfig pc = cfg.problem;
  pc.seed = cfg.seed;
  const EitSystem sys = make_eit_problem(pc);

  EitSweepResult out;
  out.nx = sys.mesh.nx;
  out.sigma_true = sys.sigma_true;
  out.baseline = solve_baseline(sys.op, sys.data, cfg.rcond);

  const auto trials = static_cast<std::size_t>(cfg.trials);
  const std::size_t per_strategy = cfg.r_grid.size() * trials;
  out.records.resize(cfg.strategies.size() * per_strategy);
  out.final_reconstructions.resize(cfg.strategies.size());
  std::mutex log_mutex;
  std::vector<std::atomic<std::size_t>> remaining(cfg.strategies.size() * cfg.r_grid.size());
  for (auto& a : remaining) a = trials;

  parallel_for(out.records.size(), cfg.jobs, [&](std::size_t task) {
    const std::size_t si = task / per_strategy;
    const std::size_t gi = (task % per_strategy) / trials;
    const std::size_t t = task % trials;
    Reconstruction rec = reconstruct(sys, out.baseline, cfg.strategies[si], SketchSize{cfg.r_grid[gi], 0, 0},
                                     trial_seed(cfg.seed, t), cfg.rcond);
    rec.record.trial = t;
    if (!cfg.timing) rec.record.wall_time_ms.reset();
    if (gi + 1 == cfg.r_grid.size() && t == 0) out.final_reconstructions[si] = std::move(rec.sigma_hat);
    out.records[task] = std::move(rec.record);
    if (cfg.log && --remaining[si * cfg.r_grid.size() + gi] == 0) {
      std::lock_guard lock(log_mutex);
      cfg.log(std::string(strategy_name(cfg.strategies[si])) + " r=" + std::to_string(cfg.r_grid[gi]) + " done");
    }
  });
  return out;
}

}  // namespace krs
