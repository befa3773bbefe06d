#pragma once

// Kronecker / Khatri-Rao algebra on order-2 tensor structure.
//
// Layout conventions (used by every module, never re-derived elsewhere):
//  * Matrices are Eigen column-major.
//  * kron_vec(u, v)[i * n2 + k] = u[i] * v[k]   (0-based, u has length n1).
//  * matricize(x, n1, n2) is the n2 x n1 matrix M with M(k, i) = x[i * n2 + k],
//    i.e. consecutive length-n2 blocks of x become columns. With this layout
//        dot(kron_vec(p, q), x) = q^T * matricize(x) * p
//        (P kron Q) x          = vectorize(Q * matricize(x) * P^T).
//  * kron(A, B) is the block matrix [A(i, j) * B].

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace krs {

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr std::size_t kDefaultMaterializeCap = 10'000'000;

// One Khatri-Rao term: column j contributes forward[:, j] kron adjoint[:, j].
struct FactorPair {
  DenseMatrix forward;  // n1 x p
  DenseMatrix adjoint;  // n2 x p
};

// Implicit n1*n2 x p matrix whose column j is
//     sum_l terms[l].forward[:, j] kron terms[l].adjoint[:, j].
// With a single term this is the column-wise Khatri-Rao product F * G.
class KhatriRaoOperator {
 public:
  explicit KhatriRaoOperator(std::vector<FactorPair> terms);
  KhatriRaoOperator(DenseMatrix forward, DenseMatrix adjoint);

  Index n1() const { return n1_; }
  Index n2() const { return n2_; }
  Index p() const { return p_; }
  Index rows() const { return n1_ * n2_; }
  std::size_t num_terms() const { return terms_.size(); }
  const std::vector<FactorPair>& terms() const { return terms_; }

  // Same operator with every column scaled by alpha (applied to the
  // forward factors).
  KhatriRaoOperator scaled(double alpha) const;

 private:
  std::vector<FactorPair> terms_;
  Index n1_ = 0;
  Index n2_ = 0;
  Index p_ = 0;
};

// b = f kron g, kept factored.
struct TensorVector {
  DenseVector f;
  DenseVector g;

  Index size() const { return f.size() * g.size(); }
  DenseVector expand() const;
};

DenseVector kron_vec(const DenseVector& u, const DenseVector& v);

DenseMatrix matricize(const DenseVector& x, Index n1, Index n2);

// Inverse of matricize: stacks the columns of an n2 x n1 matrix.
DenseVector vectorize(const DenseMatrix& m);

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);

// Dense n1*n2 x p matrix. Test oracle only; throws CapacityError when the
// result would exceed cap entries.
DenseMatrix kr_materialize(const KhatriRaoOperator& op,
                           std::size_t cap = kDefaultMaterializeCap);

// op * x without materializing op: matricize(op x) = sum_l E_l diag(x) D_l^T.
DenseVector kr_apply(const KhatriRaoOperator& op, const DenseVector& x);

// max |(A kron B)(C kron D) - (AC) kron (BD)| on materialized matrices.
double mixed_product_check(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& c,
                           const DenseMatrix& d);

// max |(B kron A) vec(X) - vec(A X B^T)| with vec stacking columns.
double vec_identity_check(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& x);

}  // namespace krs
