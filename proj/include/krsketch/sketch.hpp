#pragma once

// Random sketching operators S (r x n1*n2) for Khatri-Rao structured
// least-squares problems, applied without forming S when avoidable.
//
//   Case1Sketch          S = P kron Q, P ~ N(0,1)/sqrt(r1), Q ~ N(0,1)/sqrt(r2)
//   Case2Sketch          row i of S = (p_i kron q_i)^T / sqrt(r)
//   DenseGaussianSketch  S = R / sqrt(r), rows regenerated on demand
//   ExplicitSketch       a caller-supplied dense S (identity, test injection)
//
// All scalings make E||S y||^2 = ||y||^2 for fixed y.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "krsketch/tensor.hpp"

namespace krs {

enum class Strategy { Case1, Case2, DenseGaussian };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

class Case1Sketch {
 public:
  static Case1Sketch generate(Index r1, Index r2, Index n1, Index n2, std::uint64_t seed);
  // p and q are used as given (already scaled).
  static Case1Sketch from_factors(DenseMatrix p, DenseMatrix q);

  const DenseMatrix& p() const { return p_; }  // r1 x n1
  const DenseMatrix& q() const { return q_; }  // r2 x n2
  Index r1() const { return p_.rows(); }
  Index r2() const { return q_.rows(); }
  Index rows() const { return r1() * r2(); }
  Index n1() const { return p_.cols(); }
  Index n2() const { return q_.cols(); }
  std::uint64_t seed() const { return seed_; }

 private:
  Case1Sketch(DenseMatrix p, DenseMatrix q, std::uint64_t seed)
      : p_(std::move(p)), q_(std::move(q)), seed_(seed) {}
  DenseMatrix p_;
  DenseMatrix q_;
  std::uint64_t seed_ = 0;
};

class Case2Sketch {
 public:
  static Case2Sketch generate(Index r, Index n1, Index n2, std::uint64_t seed);
  // Row i of p / q is p_i / q_i, unscaled; the 1/sqrt(r) factor is applied
  // by the operations.
  static Case2Sketch from_vectors(DenseMatrix p, DenseMatrix q);

  const DenseMatrix& p() const { return p_; }  // r x n1
  const DenseMatrix& q() const { return q_; }  // r x n2
  double scale() const { return scale_; }
  Index rows() const { return p_.rows(); }
  Index n1() const { return p_.cols(); }
  Index n2() const { return q_.cols(); }
  std::uint64_t seed() const { return seed_; }

 private:
  Case2Sketch(DenseMatrix p, DenseMatrix q, std::uint64_t seed);
  DenseMatrix p_;
  DenseMatrix q_;
  double scale_ = 1.0;
  std::uint64_t seed_ = 0;
};

// Never stored: row i is normals 0..n-1 of stream (seed, DenseRow, i).
class DenseGaussianSketch {
 public:
  DenseGaussianSketch(Index r, Index n, std::uint64_t seed);

  Index rows() const { return r_; }
  Index ambient() const { return n_; }
  double scale() const { return scale_; }
  std::uint64_t seed() const { return seed_; }

  // Rows [first, first + count) into a row-major count x n buffer, scaled.
  void fill_rows(Index first, Index count, std::span<double> out) const;

 private:
  Index r_;
  Index n_;
  double scale_;
  std::uint64_t seed_;
};

class ExplicitSketch {
 public:
  explicit ExplicitSketch(DenseMatrix s) : s_(std::move(s)) {}
  static ExplicitSketch identity(Index n) { return ExplicitSketch(DenseMatrix::Identity(n, n)); }
  const DenseMatrix& matrix() const { return s_; }
  Index rows() const { return s_.rows(); }
  Index ambient() const { return s_.cols(); }

 private:
  DenseMatrix s_;
};

using Sketch = std::variant<Case1Sketch, Case2Sketch, DenseGaussianSketch, ExplicitSketch>;

// Requested sketch size. Case 1 uses (r1, r2); the others use r.
struct SketchSize {
  Index r = 0;
  Index r1 = 0;
  Index r2 = 0;
};

// r1 * r2 <= r as close to r as achievable with r1, r2 near sqrt(r);
// ties go to the most balanced split.
std::pair<Index, Index> balanced_split(Index r);

Sketch make_sketch(Strategy strategy, const SketchSize& size, Index n1, Index n2,
                   std::uint64_t seed);

Index sketch_rows(const Sketch& s);
Index sketch_ambient(const Sketch& s);
std::string sketch_label(const Sketch& s);

struct SketchedSystem {
  DenseMatrix sa;  // r x p
  DenseVector sb;  // r
  bool fewer_rows_than_columns() const { return sa.rows() < sa.cols(); }
};

DenseMatrix apply_to_operator(const Sketch& s, const KhatriRaoOperator& op,
                              std::size_t cap = kDefaultMaterializeCap);
DenseVector apply_to_tensor_vec(const Sketch& s, const TensorVector& b);
DenseVector apply_to_dense_vec(const Sketch& s, const DenseVector& y);
// Column-by-column S * M for an n x k matrix M.
DenseMatrix apply_to_dense_matrix(const Sketch& s, const DenseMatrix& m);

SketchedSystem sketch_system(const Sketch& s, const KhatriRaoOperator& op, const DenseVector& b,
                             std::size_t cap = kDefaultMaterializeCap);
SketchedSystem sketch_system(const Sketch& s, const KhatriRaoOperator& op, const TensorVector& b,
                             std::size_t cap = kDefaultMaterializeCap);

// Dense S. Oracle only; CapacityError beyond cap entries.
DenseMatrix materialize(const Sketch& s, std::size_t cap = kDefaultMaterializeCap);

}  // namespace krs
