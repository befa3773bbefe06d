#pragma once

// Test-side helpers. Random inputs come from the standard library engines so
// oracles never share code with the library's own generator.

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace krs::test {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                     double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(gen);
  }
  return m;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  return random_matrix(n, 1, seed).col(0);
}

// Plain triple-loop Kronecker product, independent of the library's kron.
inline Eigen::MatrixXd kron_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index k = 0; k < b.rows(); ++k)
        for (Eigen::Index l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  if (scale == 0.0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace krs::test
