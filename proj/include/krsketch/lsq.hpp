#pragma once

// Dense least squares for full and sketched systems, and the residual-based
// relative error used by every experiment.

#include <string_view>

#include "krsketch/tensor.hpp"

namespace krs {

inline constexpr double kDefaultRcond = 1e-10;

enum class LsMethod { Qr, TruncatedSvd };

std::string_view ls_method_name(LsMethod m);

struct LsSolution {
  DenseVector x;
  double residual_sq = 0.0;  // ||M x - rhs||^2, recomputed after the solve
  Index rank_used = 0;
  LsMethod method = LsMethod::Qr;
  bool underdetermined = false;  // m < p
};

// Column-pivoted QR when M is numerically full rank at relative threshold
// rcond; otherwise the minimum-norm solution from an SVD truncated at
// rcond * sigma_max. rcond in [0, 1).
LsSolution solve_ls(const DenseMatrix& m, const DenseVector& rhs, double rcond = kDefaultRcond);

// ||op x - b||^2 without materializing op.
double residual_sq_full(const KhatriRaoOperator& op, const DenseVector& x, const DenseVector& b);
double residual_sq_full(const KhatriRaoOperator& op, const DenseVector& x, const TensorVector& b);

struct RelativeError {
  double value = 0.0;  // clamped to >= -1e-12
  double raw = 0.0;
};

// (f_xs - f_xstar) / f_xstar. Throws NumericalError when f_xstar <= 0.
RelativeError relative_error(double f_xs, double f_xstar);

}  // namespace krs
