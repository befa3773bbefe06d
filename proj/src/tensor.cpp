#include "krsketch/tensor.hpp"

#include <span>
#include <string>

#include "krsketch/error.hpp"
#include "krsketch/kernels.hpp"

namespace krs {

namespace {

std::span<const double> cspan(const DenseVector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

KhatriRaoOperator::KhatriRaoOperator(std::vector<FactorPair> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw DomainError("KhatriRaoOperator needs at least one term");
  n1_ = terms_.front().forward.rows();
  n2_ = terms_.front().adjoint.rows();
  p_ = terms_.front().forward.cols();
  if (n1_ < 1 || n2_ < 1 || p_ < 1) throw DomainError("KhatriRaoOperator dimensions must be >= 1");
  for (const auto& t : terms_) {
    if (t.forward.rows() != n1_ || t.adjoint.rows() != n2_ || t.forward.cols() != p_ ||
        t.adjoint.cols() != p_) {
      throw DimensionError("KhatriRaoOperator terms must share (n1, n2, p)");
    }
  }
}

KhatriRaoOperator::KhatriRaoOperator(DenseMatrix forward, DenseMatrix adjoint)
    : KhatriRaoOperator(std::vector<FactorPair>{{std::move(forward), std::move(adjoint)}}) {}

KhatriRaoOperator KhatriRaoOperator::scaled(double alpha) const {
  std::vector<FactorPair> t = terms_;
  for (auto& pair : t) pair.forward *= alpha;
  return KhatriRaoOperator(std::move(t));
}

DenseVector TensorVector::expand() const { return kron_vec(f, g); }

DenseVector kron_vec(const DenseVector& u, const DenseVector& v) {
  if (u.size() == 0 || v.size() == 0) throw DimensionError("kron_vec: empty operand");
  const Index n2 = v.size();
  DenseVector out = DenseVector::Zero(u.size() * n2);
  const auto axpy = simd::kernels().axpy;
  for (Index i = 0; i < u.size(); ++i) {
    axpy(u[i], cspan(v), std::span<double>(out.data() + i * n2, static_cast<std::size_t>(n2)));
  }
  return out;
}

DenseMatrix matricize(const DenseVector& x, Index n1, Index n2) {
  if (n1 < 1 || n2 < 1 || x.size() != n1 * n2) {
    throw DimensionError("matricize: length " + std::to_string(x.size()) + " != n1*n2 = " +
                         std::to_string(n1 * n2));
  }
  return Eigen::Map<const DenseMatrix>(x.data(), n2, n1);
}

DenseVector vectorize(const DenseMatrix& m) {
  return Eigen::Map<const DenseVector>(m.data(), m.size());
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

DenseMatrix kr_materialize(const KhatriRaoOperator& op, std::size_t cap) {
  const auto entries = static_cast<std::size_t>(op.rows()) * static_cast<std::size_t>(op.p());
  if (entries > cap) {
    throw CapacityError("kr_materialize: " + std::to_string(entries) +
                        " entries exceeds the materialization cap of " + std::to_string(cap));
  }
  DenseMatrix a = DenseMatrix::Zero(op.rows(), op.p());
  const auto axpy = simd::kernels().axpy;
  const Index n2 = op.n2();
  for (const auto& t : op.terms()) {
    for (Index j = 0; j < op.p(); ++j) {
      double* col = a.col(j).data();
      for (Index i = 0; i < op.n1(); ++i) {
        axpy(t.forward(i, j), {t.adjoint.col(j).data(), static_cast<std::size_t>(n2)},
             {col + i * n2, static_cast<std::size_t>(n2)});
      }
    }
  }
  return a;
}

DenseVector kr_apply(const KhatriRaoOperator& op, const DenseVector& x) {
  if (x.size() != op.p()) {
    throw DimensionError("kr_apply: x has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(op.p()));
  }
  DenseMatrix y = DenseMatrix::Zero(op.n2(), op.n1());
  for (const auto& t : op.terms()) {
    y.noalias() += (t.adjoint * x.asDiagonal()) * t.forward.transpose();
  }
  return vectorize(y);
}

double mixed_product_check(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& c,
                           const DenseMatrix& d) {
  if (a.cols() != c.rows() || b.cols() != d.rows()) {
    throw DimensionError("mixed_product_check: shapes not composable");
  }
  const DenseMatrix lhs = kron(a, b) * kron(c, d);
  const DenseMatrix rhs = kron(a * c, b * d);
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

double vec_identity_check(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& x) {
  if (a.cols() != x.rows() || b.cols() != x.cols()) {
    throw DimensionError("vec_identity_check: shapes not composable");
  }
  const DenseVector lhs = kron(b, a) * vectorize(x);
  const DenseVector rhs = vectorize(a * x * b.transpose());
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

}  // namespace krs
