#include "krsketch/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "krsketch/error.hpp"
#include "krsketch/kernels.hpp"
#include "krsketch/random.hpp"

namespace krs {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Rows of the dense Gaussian sketch generated per GEMM block.
constexpr std::size_t kDenseBlockDoubles = std::size_t{1} << 20;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(Index v, const char* what) {
  if (v < 1) throw DomainError(std::string(what) + " must be >= 1");
}

void require_ambient(const Sketch& s, Index n, const char* where) {
  if (sketch_ambient(s) != n) {
    throw DimensionError(std::string(where) + ": sketch ambient dimension " +
                         std::to_string(sketch_ambient(s)) + " != " + std::to_string(n));
  }
}

std::span<const double> cspan(const DenseMatrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

Index dense_block_rows(Index r, Index n) {
  const auto fit = static_cast<Index>(kDenseBlockDoubles / static_cast<std::size_t>(std::max<Index>(n, 1)));
  return std::clamp<Index>(fit, 8, 256) > r ? r : std::clamp<Index>(fit, 8, 256);
}

DenseMatrix dense_gaussian_times(const DenseGaussianSketch& s, const DenseMatrix& m) {
  const Index r = s.rows();
  const Index n = s.ambient();
  DenseMatrix out(r, m.cols());
  const Index block = dense_block_rows(r, n);
  RowMajorMatrix buf(block, n);
  for (Index first = 0; first < r; first += block) {
    const Index count = std::min(block, r - first);
    s.fill_rows(first, count, std::span<double>(buf.data(), static_cast<std::size_t>(count * n)));
    out.middleRows(first, count).noalias() = buf.topRows(count) * m;
  }
  return out;
}

// Columns [j0, j0 + count) of op, materialized.
DenseMatrix operator_columns(const KhatriRaoOperator& op, Index j0, Index count) {
  std::vector<FactorPair> sub;
  sub.reserve(op.num_terms());
  for (const auto& t : op.terms()) {
    sub.push_back({t.forward.middleCols(j0, count), t.adjoint.middleCols(j0, count)});
  }
  return kr_materialize(KhatriRaoOperator(std::move(sub)), static_cast<std::size_t>(-1));
}

DenseMatrix dense_gaussian_operator(const DenseGaussianSketch& s, const KhatriRaoOperator& op,
                                    std::size_t cap) {
  const auto n = static_cast<std::size_t>(op.rows());
  const auto p = static_cast<std::size_t>(op.p());
  if (n * p <= cap) return dense_gaussian_times(s, kr_materialize(op, cap));
  // Too tall to hold every column: expand column chunks and regenerate the
  // sketch rows for each chunk.
  const Index chunk = static_cast<Index>(std::max<std::size_t>(1, cap / n));
  DenseMatrix out(s.rows(), op.p());
  for (Index j0 = 0; j0 < op.p(); j0 += chunk) {
    const Index count = std::min(chunk, op.p() - j0);
    out.middleCols(j0, count) = dense_gaussian_times(s, operator_columns(op, j0, count));
  }
  return out;
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Case1:
      return "case1";
    case Strategy::Case2:
      return "case2";
    case Strategy::DenseGaussian:
      return "gaussian";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "case1") return Strategy::Case1;
  if (name == "case2") return Strategy::Case2;
  if (name == "gaussian" || name == "dense-gaussian") return Strategy::DenseGaussian;
  throw DomainError("unknown strategy '" + std::string(name) + "' (expected case1, case2, gaussian)");
}

Case1Sketch Case1Sketch::generate(Index r1, Index r2, Index n1, Index n2, std::uint64_t seed) {
  require_positive(r1, "r1");
  require_positive(r2, "r2");
  require_positive(n1, "n1");
  require_positive(n2, "n2");
  DenseMatrix p = GaussianStream(seed, StreamTag::Case1P)
                      .matrix_row_major_index(r1, n1, 1.0 / std::sqrt(static_cast<double>(r1)));
  DenseMatrix q = GaussianStream(seed, StreamTag::Case1Q)
                      .matrix_row_major_index(r2, n2, 1.0 / std::sqrt(static_cast<double>(r2)));
  return Case1Sketch(std::move(p), std::move(q), seed);
}

Case1Sketch Case1Sketch::from_factors(DenseMatrix p, DenseMatrix q) {
  require_positive(p.rows(), "r1");
  require_positive(q.rows(), "r2");
  require_positive(p.cols(), "n1");
  require_positive(q.cols(), "n2");
  return Case1Sketch(std::move(p), std::move(q), 0);
}

Case2Sketch::Case2Sketch(DenseMatrix p, DenseMatrix q, std::uint64_t seed)
    : p_(std::move(p)), q_(std::move(q)), seed_(seed) {
  require_positive(p_.rows(), "r");
  require_positive(p_.cols(), "n1");
  require_positive(q_.cols(), "n2");
  if (p_.rows() != q_.rows()) throw DimensionError("Case2Sketch: p and q row counts differ");
  scale_ = 1.0 / std::sqrt(static_cast<double>(p_.rows()));
}

Case2Sketch Case2Sketch::generate(Index r, Index n1, Index n2, std::uint64_t seed) {
  require_positive(r, "r");
  require_positive(n1, "n1");
  require_positive(n2, "n2");
  return Case2Sketch(GaussianStream(seed, StreamTag::Case2P).matrix_row_major_index(r, n1),
                     GaussianStream(seed, StreamTag::Case2Q).matrix_row_major_index(r, n2), seed);
}

Case2Sketch Case2Sketch::from_vectors(DenseMatrix p, DenseMatrix q) {
  return Case2Sketch(std::move(p), std::move(q), 0);
}

DenseGaussianSketch::DenseGaussianSketch(Index r, Index n, std::uint64_t seed)
    : r_(r), n_(n), scale_(0.0), seed_(seed) {
  require_positive(r, "r");
  require_positive(n, "n");
  scale_ = 1.0 / std::sqrt(static_cast<double>(r));
}

void DenseGaussianSketch::fill_rows(Index first, Index count, std::span<double> out) const {
  if (first < 0 || count < 0 || first + count > r_) throw DimensionError("fill_rows: row range");
  const auto n = static_cast<std::size_t>(n_);
  if (out.size() < static_cast<std::size_t>(count) * n) throw DimensionError("fill_rows: buffer");
  for (Index i = 0; i < count; ++i) {
    auto row = out.subspan(static_cast<std::size_t>(i) * n, n);
    GaussianStream(seed_, StreamTag::DenseRow, static_cast<std::uint64_t>(first + i)).fill(0, row);
    for (double& v : row) v *= scale_;
  }
}

std::pair<Index, Index> balanced_split(Index r) {
  require_positive(r, "r");
  const auto root = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(r))));
  Index best1 = 1;
  Index best2 = r;
  Index best_prod = -1;
  Index best_gap = 0;
  for (Index r1 = std::max<Index>(1, root - 2); r1 <= root + 2; ++r1) {
    const Index r2 = r / r1;
    if (r2 < 1) continue;
    const Index prod = r1 * r2;
    const Index gap = r1 > r2 ? r1 - r2 : r2 - r1;
    if (prod > best_prod || (prod == best_prod && gap < best_gap)) {
      best1 = std::min(r1, r2);
      best2 = std::max(r1, r2);
      best_prod = prod;
      best_gap = gap;
    }
  }
  return {best1, best2};
}

Sketch make_sketch(Strategy strategy, const SketchSize& size, Index n1, Index n2,
                   std::uint64_t seed) {
  switch (strategy) {
    case Strategy::Case1: {
      Index r1 = size.r1;
      Index r2 = size.r2;
      if (r1 < 1 || r2 < 1) std::tie(r1, r2) = balanced_split(size.r);
      return Case1Sketch::generate(r1, r2, n1, n2, seed);
    }
    case Strategy::Case2:
      return Case2Sketch::generate(size.r, n1, n2, seed);
    case Strategy::DenseGaussian:
      return DenseGaussianSketch(size.r, n1 * n2, seed);
  }
  throw DomainError("make_sketch: unknown strategy");
}

Index sketch_rows(const Sketch& s) {
  return std::visit([](const auto& v) { return v.rows(); }, s);
}

Index sketch_ambient(const Sketch& s) {
  return std::visit(Overloaded{
                        [](const Case1Sketch& v) { return v.n1() * v.n2(); },
                        [](const Case2Sketch& v) { return v.n1() * v.n2(); },
                        [](const DenseGaussianSketch& v) { return v.ambient(); },
                        [](const ExplicitSketch& v) { return v.ambient(); },
                    },
                    s);
}

std::string sketch_label(const Sketch& s) {
  return std::visit(Overloaded{
                        [](const Case1Sketch& v) {
                          return "case1(r1=" + std::to_string(v.r1()) + ",r2=" + std::to_string(v.r2()) + ")";
                        },
                        [](const Case2Sketch& v) { return "case2(r=" + std::to_string(v.rows()) + ")"; },
                        [](const DenseGaussianSketch& v) {
                          return "gaussian(r=" + std::to_string(v.rows()) + ")";
                        },
                        [](const ExplicitSketch& v) { return "explicit(r=" + std::to_string(v.rows()) + ")"; },
                    },
                    s);
}

DenseMatrix apply_to_operator(const Sketch& s, const KhatriRaoOperator& op, std::size_t cap) {
  require_ambient(s, op.rows(), "apply_to_operator");
  return std::visit(
      Overloaded{
          [&](const Case1Sketch& c) {
            // Mixed product: (P kron Q)(d_j kron e_j) = (P d_j) kron (Q e_j).
            if (c.n1() != op.n1() || c.n2() != op.n2()) {
              throw DimensionError("apply_to_operator: Case 1 factors do not match (n1, n2)");
            }
            DenseMatrix out = DenseMatrix::Zero(c.rows(), op.p());
            const auto axpy = simd::kernels().axpy;
            const Index r2 = c.r2();
            for (const auto& t : op.terms()) {
              const DenseMatrix pd = c.p() * t.forward;
              const DenseMatrix qe = c.q() * t.adjoint;
              for (Index j = 0; j < op.p(); ++j) {
                double* col = out.col(j).data();
                for (Index a = 0; a < c.r1(); ++a) {
                  axpy(pd(a, j), {qe.col(j).data(), static_cast<std::size_t>(r2)},
                       {col + a * r2, static_cast<std::size_t>(r2)});
                }
              }
            }
            return out;
          },
          [&](const Case2Sketch& c) {
            // (SA)_{ij} = (p_i . d_j)(q_i . e_j) / sqrt(r), summed over terms.
            if (c.n1() != op.n1() || c.n2() != op.n2()) {
              throw DimensionError("apply_to_operator: Case 2 vectors do not match (n1, n2)");
            }
            DenseMatrix out = DenseMatrix::Zero(c.rows(), op.p());
            const auto hadamard = simd::kernels().hadamard_accumulate;
            for (const auto& t : op.terms()) {
              const DenseMatrix pd = c.p() * t.forward;
              const DenseMatrix qe = c.q() * t.adjoint;
              hadamard(c.scale(), cspan(pd), cspan(qe),
                       {out.data(), static_cast<std::size_t>(out.size())});
            }
            return out;
          },
          [&](const DenseGaussianSketch& g) { return dense_gaussian_operator(g, op, cap); },
          [&](const ExplicitSketch& e) -> DenseMatrix { return e.matrix() * kr_materialize(op, cap); },
      },
      s);
}

DenseVector apply_to_tensor_vec(const Sketch& s, const TensorVector& b) {
  require_ambient(s, b.size(), "apply_to_tensor_vec");
  return std::visit(
      Overloaded{
          [&](const Case1Sketch& c) -> DenseVector {
            if (c.n1() != b.f.size()) throw DimensionError("apply_to_tensor_vec: n1 mismatch");
            return kron_vec(c.p() * b.f, c.q() * b.g);
          },
          [&](const Case2Sketch& c) -> DenseVector {
            if (c.n1() != b.f.size()) throw DimensionError("apply_to_tensor_vec: n1 mismatch");
            const DenseVector pf = c.p() * b.f;
            const DenseVector qg = c.q() * b.g;
            DenseVector out = DenseVector::Zero(c.rows());
            simd::kernels().hadamard_accumulate(
                c.scale(), {pf.data(), static_cast<std::size_t>(pf.size())},
                {qg.data(), static_cast<std::size_t>(qg.size())},
                {out.data(), static_cast<std::size_t>(out.size())});
            return out;
          },
          [&](const auto&) -> DenseVector { return apply_to_dense_vec(s, b.expand()); },
      },
      s);
}

DenseVector apply_to_dense_vec(const Sketch& s, const DenseVector& y) {
  require_ambient(s, y.size(), "apply_to_dense_vec");
  return std::visit(
      Overloaded{
          [&](const Case1Sketch& c) -> DenseVector {
            const DenseMatrix ym = matricize(y, c.n1(), c.n2());
            return vectorize(c.q() * ym * c.p().transpose());
          },
          [&](const Case2Sketch& c) -> DenseVector {
            // Row i: q_i^T Mat(y) p_i.
            const DenseMatrix t = matricize(y, c.n1(), c.n2()) * c.p().transpose();  // n2 x r
            return c.scale() * c.q().transpose().cwiseProduct(t).colwise().sum().transpose();
          },
          [&](const DenseGaussianSketch& g) -> DenseVector { return dense_gaussian_times(g, y); },
          [&](const ExplicitSketch& e) -> DenseVector { return e.matrix() * y; },
      },
      s);
}

DenseMatrix apply_to_dense_matrix(const Sketch& s, const DenseMatrix& m) {
  require_ambient(s, m.rows(), "apply_to_dense_matrix");
  if (const auto* g = std::get_if<DenseGaussianSketch>(&s)) return dense_gaussian_times(*g, m);
  if (const auto* e = std::get_if<ExplicitSketch>(&s)) return e->matrix() * m;
  DenseMatrix out(sketch_rows(s), m.cols());
  for (Index j = 0; j < m.cols(); ++j) out.col(j) = apply_to_dense_vec(s, m.col(j));
  return out;
}

SketchedSystem sketch_system(const Sketch& s, const KhatriRaoOperator& op, const DenseVector& b,
                             std::size_t cap) {
  if (b.size() != op.rows()) throw DimensionError("sketch_system: b length != n1*n2");
  const auto* g = std::get_if<DenseGaussianSketch>(&s);
  const auto n = static_cast<std::size_t>(op.rows());
  if (g != nullptr && n * static_cast<std::size_t>(op.p() + 1) <= cap) {
    // One pass over the streamed rows for [A, b].
    require_ambient(s, op.rows(), "sketch_system");
    DenseMatrix ab(op.rows(), op.p() + 1);
    ab.leftCols(op.p()) = kr_materialize(op, cap);
    ab.col(op.p()) = b;
    const DenseMatrix sab = dense_gaussian_times(*g, ab);
    return {sab.leftCols(op.p()), sab.col(op.p())};
  }
  return {apply_to_operator(s, op, cap), apply_to_dense_vec(s, b)};
}

SketchedSystem sketch_system(const Sketch& s, const KhatriRaoOperator& op, const TensorVector& b,
                             std::size_t cap) {
  if (b.f.size() != op.n1() || b.g.size() != op.n2()) {
    throw DimensionError("sketch_system: tensor right-hand side does not match (n1, n2)");
  }
  if (std::holds_alternative<DenseGaussianSketch>(s)) return sketch_system(s, op, b.expand(), cap);
  return {apply_to_operator(s, op, cap), apply_to_tensor_vec(s, b)};
}

DenseMatrix materialize(const Sketch& s, std::size_t cap) {
  const auto entries =
      static_cast<std::size_t>(sketch_rows(s)) * static_cast<std::size_t>(sketch_ambient(s));
  if (entries > cap) {
    throw CapacityError("materialize: " + std::to_string(entries) +
                        " entries exceeds the materialization cap of " + std::to_string(cap));
  }
  return std::visit(
      Overloaded{
          [](const Case1Sketch& c) -> DenseMatrix { return kron(c.p(), c.q()); },
          [](const Case2Sketch& c) -> DenseMatrix {
            DenseMatrix out(c.rows(), c.n1() * c.n2());
            for (Index i = 0; i < c.rows(); ++i) {
              out.row(i) = c.scale() * kron_vec(c.p().row(i).transpose(), c.q().row(i).transpose()).transpose();
            }
            return out;
          },
          [](const DenseGaussianSketch& g) -> DenseMatrix {
            RowMajorMatrix buf(g.rows(), g.ambient());
            g.fill_rows(0, g.rows(), std::span<double>(buf.data(), static_cast<std::size_t>(buf.size())));
            return buf;
          },
          [](const ExplicitSketch& e) -> DenseMatrix { return e.matrix(); },
      },
      s);
}

}  // namespace krs
