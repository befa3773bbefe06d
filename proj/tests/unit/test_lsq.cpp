#include <cmath>

#include <gtest/gtest.h>

#include "krsketch/embedding.hpp"
#include "krsketch/error.hpp"
#include "krsketch/lsq.hpp"
#include "krsketch/sketch.hpp"
#include "support.hpp"

using namespace krs;
using krs::test::random_matrix;
using krs::test::random_vector;
using krs::test::rel_diff;

TEST(SolveLs, IdentityRecoversRhs) {
  const DenseVector v = random_vector(5, 1);
  const auto sol = solve_ls(DenseMatrix::Identity(5, 5), v);
  EXPECT_LE(rel_diff(sol.x, v), 1e-15);
  EXPECT_LE(sol.residual_sq, 1e-30);
  EXPECT_EQ(sol.method, LsMethod::Qr);
  EXPECT_EQ(sol.rank_used, 5);
}

TEST(SolveLs, TwoByOneHandExample) {
  DenseMatrix m(2, 1);
  m << 1, 1;
  DenseVector rhs(2);
  rhs << 0, 2;
  const auto sol = solve_ls(m, rhs);
  EXPECT_NEAR(sol.x[0], 1.0, 1e-15);
  EXPECT_NEAR(sol.residual_sq, 2.0, 1e-14);
}

TEST(SolveLs, DuplicatedColumnGivesMinimumNorm) {
  DenseMatrix m = random_matrix(5, 3, 2);
  m.col(2) = m.col(1);
  const DenseVector rhs = random_vector(5, 3);
  const auto sol = solve_ls(m, rhs, 1e-12);
  EXPECT_EQ(sol.method, LsMethod::TruncatedSvd);
  EXPECT_EQ(sol.rank_used, 2);
  // Oracle: pseudoinverse by a full SVD with explicit truncation.
  Eigen::JacobiSVD<DenseMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  DenseVector x = DenseVector::Zero(3);
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > 1e-12 * s[0]) x += svd.matrixV().col(i) * (svd.matrixU().col(i).dot(rhs) / s[i]);
  EXPECT_LE(rel_diff(sol.x, x), 1e-12);
  EXPECT_NEAR(sol.x[1], sol.x[2], 1e-12);
  const auto sub = solve_ls(m.leftCols(2), rhs);
  EXPECT_NEAR(sol.residual_sq, sub.residual_sq, 1e-12 * rhs.squaredNorm());
}

TEST(SolveLs, ResidualRecomputed) {
  const DenseMatrix m = random_matrix(20, 4, 4);
  const DenseVector rhs = random_vector(20, 5);
  const auto sol = solve_ls(m, rhs);
  EXPECT_NEAR(sol.residual_sq, (m * sol.x - rhs).squaredNorm(), 1e-10 * sol.residual_sq);
}

TEST(SolveLs, QrOptimalityCondition) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const DenseMatrix m = random_matrix(30 + s, 1 + s % 6, 10 * s);
    const DenseVector rhs = random_vector(m.rows(), 10 * s + 1);
    const auto sol = solve_ls(m, rhs);
    ASSERT_EQ(sol.method, LsMethod::Qr);
    const DenseVector g = m.transpose() * (m * sol.x - rhs);
    const double norm_m = Eigen::JacobiSVD<DenseMatrix>(m).singularValues()[0];
    EXPECT_LE(g.norm(), 1e-8 * norm_m * rhs.norm());
  }
}

TEST(SolveLs, UnderdeterminedFlaggedAndMinimumNorm) {
  const DenseMatrix m = random_matrix(2, 4, 6);
  const DenseVector rhs = random_vector(2, 7);
  const auto sol = solve_ls(m, rhs);
  EXPECT_TRUE(sol.underdetermined);
  EXPECT_LE(sol.residual_sq, 1e-24);
  const DenseVector pinv = m.transpose() * (m * m.transpose()).ldlt().solve(rhs);
  EXPECT_LE(rel_diff(sol.x, pinv), 1e-10);
}

TEST(SolveLs, BadInputsRejected) {
  DenseMatrix m = random_matrix(3, 2, 1);
  EXPECT_THROW(solve_ls(m, DenseVector::Zero(4)), DimensionError);
  EXPECT_THROW(solve_ls(m, DenseVector::Zero(3), 1.0), DomainError);
  EXPECT_THROW(solve_ls(DenseMatrix(0, 0), DenseVector()), DimensionError);
  m(1, 1) = std::nan("");
  EXPECT_THROW(solve_ls(m, DenseVector::Zero(3)), NumericalError);
}

TEST(ResidualFull, Examples) {
  const KhatriRaoOperator op(std::vector<FactorPair>{{random_matrix(4, 3, 1), random_matrix(5, 3, 2)},
                              {random_matrix(4, 3, 3), random_matrix(5, 3, 4)}});
  const DenseMatrix a = kr_materialize(op);
  const DenseVector x = random_vector(3, 5);
  const DenseVector b = random_vector(20, 6);
  EXPECT_NEAR(residual_sq_full(op, x, b), (a * x - b).squaredNorm(), 1e-12 * b.squaredNorm());
  EXPECT_NEAR(residual_sq_full(op, DenseVector::Zero(3), b), b.squaredNorm(), 1e-14);
  const DenseVector consistent = a * x;
  EXPECT_LE(residual_sq_full(op, x, consistent), 1e-18 * consistent.squaredNorm() + 1e-28);

  const TensorVector tb{random_vector(4, 7), random_vector(5, 8)};
  EXPECT_NEAR(residual_sq_full(op, x, tb), (a * x - tb.expand()).squaredNorm(), 1e-12 * (a * x).squaredNorm());
}

TEST(RelativeErrorTest, Examples) {
  EXPECT_EQ(relative_error(3.0, 3.0).value, 0.0);
  EXPECT_EQ(relative_error(2.0, 1.0).value, 1.0);
  EXPECT_NEAR(relative_error(1.5e-12, 1.0e-12).value, 0.5, 1e-12);
  const auto neg = relative_error(1.0 - 1e-9, 1.0);
  EXPECT_EQ(neg.value, -1e-12);
  EXPECT_LT(neg.raw, -1e-12);
  EXPECT_THROW(relative_error(1.0, 0.0), NumericalError);
}

TEST(RelativeErrorTest, ScaleInvariance) {
  const DenseMatrix a = random_matrix(40, 3, 9);
  const DenseVector b = random_vector(40, 10);
  const DenseMatrix s = random_matrix(10, 40, 11);
  auto rel = [&](double alpha) {
    const auto full = solve_ls(alpha * a, alpha * b);
    const auto sk = solve_ls(s * (alpha * a), s * (alpha * b));
    return relative_error((alpha * a * sk.x - alpha * b).squaredNorm(), full.residual_sq).value;
  };
  const double base = rel(1.0);
  for (double alpha : {-1.0, 1e-3, 7.5, 1e4}) EXPECT_NEAR(rel(alpha), base, 1e-10 * std::abs(base));
}

// Residual bound under an exact embedding of the augmented range.
TEST(ResidualBound, HoldsWhenAugmentedRangeIsEmbedded) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Index n = 6, p = 2;
    const KhatriRaoOperator op(random_matrix(n, p, 3 * seed), random_matrix(n, p, 3 * seed + 1));
    const DenseMatrix a = kr_materialize(op);
    const DenseVector b = random_vector(n * n, 3 * seed + 2);
    DenseMatrix ab(n * n, p + 1);
    ab << a, b;
    SketchSize size;
    size.r = 30;
    const Sketch s = make_sketch(Strategy::DenseGaussian, size, n, n, seed);
    const double eps = sup_distortion_exact(s, ab);
    if (eps >= 0.5) continue;
    ++checked;
    const auto full = solve_ls(a, b);
    const auto sk = solve_ls(apply_to_dense_matrix(s, a), apply_to_dense_vec(s, b));
    EXPECT_LE(residual_sq_full(op, sk.x, b), (1 + 4 * eps) * full.residual_sq * (1 + 1e-12));
  }
  EXPECT_GT(checked, 5);
}
