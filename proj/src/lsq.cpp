#include "krsketch/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "krsketch/error.hpp"

namespace krs {

namespace {

constexpr double kNegativeClamp = -1e-12;

LsSolution solve_svd(const DenseMatrix& m, const DenseVector& rhs, double rcond) {
  Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const DenseVector& s = svd.singularValues();
  const double cut = s.size() > 0 ? rcond * s[0] : 0.0;
  Index rank = 0;
  while (rank < s.size() && s[rank] > cut) ++rank;
  LsSolution out;
  out.method = LsMethod::TruncatedSvd;
  out.rank_used = rank;
  if (rank == 0) {
    out.x = DenseVector::Zero(m.cols());
    return out;
  }
  const DenseVector coeff = (svd.matrixU().leftCols(rank).transpose() * rhs).cwiseQuotient(s.head(rank));
  out.x = svd.matrixV().leftCols(rank) * coeff;
  return out;
}

}  // namespace

std::string_view ls_method_name(LsMethod m) {
  return m == LsMethod::Qr ? "qr" : "truncated_svd";
}

LsSolution solve_ls(const DenseMatrix& m, const DenseVector& rhs, double rcond) {
  if (m.rows() < 1 || m.cols() < 1) throw DimensionError("solve_ls: empty matrix");
  if (rhs.size() != m.rows()) {
    throw DimensionError("solve_ls: rhs length " + std::to_string(rhs.size()) + " != rows " +
                         std::to_string(m.rows()));
  }
  if (!(rcond >= 0.0 && rcond < 1.0)) throw DomainError("solve_ls: rcond must lie in [0, 1)");
  if (!m.allFinite() || !rhs.allFinite()) throw NumericalError("solve_ls: non-finite input");

  const bool under = m.rows() < m.cols();
  LsSolution out;
  bool use_svd = under;
  if (!use_svd) {
    Eigen::ColPivHouseholderQR<DenseMatrix> qr(m);
    const auto diag = qr.matrixR().diagonal().cwiseAbs();
    const double rmax = diag.maxCoeff();
    const double rmin = diag.minCoeff();
    use_svd = !(rmax > 0.0) || rmin <= rcond * rmax;
    if (!use_svd) {
      out.x = qr.solve(rhs);
      out.method = LsMethod::Qr;
      out.rank_used = m.cols();
    }
  }
  if (use_svd) out = solve_svd(m, rhs, rcond);
  out.underdetermined = under;
  out.residual_sq = (m * out.x - rhs).squaredNorm();
  return out;
}

double residual_sq_full(const KhatriRaoOperator& op, const DenseVector& x, const DenseVector& b) {
  if (b.size() != op.rows()) throw DimensionError("residual_sq_full: b length != n1*n2");
  return (kr_apply(op, x) - b).squaredNorm();
}

double residual_sq_full(const KhatriRaoOperator& op, const DenseVector& x, const TensorVector& b) {
  if (b.f.size() != op.n1() || b.g.size() != op.n2()) {
    throw DimensionError("residual_sq_full: tensor right-hand side does not match (n1, n2)");
  }
  // Mat(Ax - f kron g) = sum_l E_l diag(x) D_l^T - g f^T.
  if (x.size() != op.p()) throw DimensionError("residual_sq_full: x length != p");
  DenseMatrix y = -b.g * b.f.transpose();
  for (const auto& t : op.terms()) y.noalias() += (t.adjoint * x.asDiagonal()) * t.forward.transpose();
  return y.squaredNorm();
}

RelativeError relative_error(double f_xs, double f_xstar) {
  if (!(f_xstar > 0.0) || !std::isfinite(f_xstar)) {
    throw NumericalError("relative_error: baseline residual must be positive (degenerate noiseless instance)");
  }
  if (!std::isfinite(f_xs)) throw NumericalError("relative_error: non-finite sketched residual");
  RelativeError e;
  e.raw = (f_xs - f_xstar) / f_xstar;
  e.value = std::max(e.raw, kNegativeClamp);
  return e;
}

}  // namespace krs
