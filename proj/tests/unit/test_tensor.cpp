#include <cmath>

#include <gtest/gtest.h>

#include "krsketch/error.hpp"
#include "krsketch/tensor.hpp"
#include "support.hpp"

using namespace krs;
using krs::test::kron_oracle;
using krs::test::random_matrix;
using krs::test::random_vector;
using krs::test::rel_diff;

namespace {

DenseVector vec(std::initializer_list<double> v) {
  DenseVector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Column j of the operator straight from its definition.
DenseMatrix operator_oracle(const std::vector<FactorPair>& terms) {
  const Index n1 = terms[0].forward.rows(), n2 = terms[0].adjoint.rows(), p = terms[0].forward.cols();
  DenseMatrix out = DenseMatrix::Zero(n1 * n2, p);
  for (const auto& t : terms)
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < n1; ++i)
        for (Index k = 0; k < n2; ++k) out(i * n2 + k, j) += t.forward(i, j) * t.adjoint(k, j);
  return out;
}

}  // namespace

TEST(KronVec, Examples) {
  EXPECT_EQ(kron_vec(vec({1, 0}), vec({0, 1})), vec({0, 1, 0, 0}));
  EXPECT_EQ(kron_vec(vec({1}), vec({3, 4})), vec({3, 4}));
  EXPECT_EQ(kron_vec(vec({2, 3}), vec({5, 7})), vec({10, 14, 15, 21}));
}

TEST(KronVec, EmptyOperandRejected) {
  EXPECT_THROW(kron_vec(DenseVector(), vec({1})), DimensionError);
}

TEST(Matricize, Examples) {
  DenseMatrix expect(2, 2);
  expect << 10, 15, 14, 21;
  EXPECT_EQ(matricize(vec({10, 14, 15, 21}), 2, 2), expect);
  const DenseMatrix col = matricize(vec({2.5, -1}), 1, 2);
  ASSERT_EQ(col.rows(), 2);
  ASSERT_EQ(col.cols(), 1);
  EXPECT_EQ(col(0, 0), 2.5);
  EXPECT_EQ(col(1, 0), -1);
}

TEST(Matricize, BilinearFormMatchesDot) {
  const DenseVector x = vec({10, 14, 15, 21});
  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseVector p = random_vector(2, 100 + s), q = random_vector(2, 200 + s);
    const double direct = kron_vec(p, q).dot(x);
    const double form = q.dot(matricize(x, 2, 2) * p);
    EXPECT_NEAR(form, direct, 1e-12 * std::abs(direct) + 1e-15);
  }
}

TEST(Matricize, RoundTripIsOuterProduct) {
  const DenseVector u = vec({1, -2, 0.5}), v = vec({3, 4});
  const DenseMatrix m = matricize(kron_vec(u, v), 3, 2);
  EXPECT_EQ(m, v * u.transpose());
  EXPECT_EQ(vectorize(m), kron_vec(u, v));
}

TEST(Matricize, LengthMismatchRejected) {
  EXPECT_THROW(matricize(vec({1, 2, 3}), 2, 2), DimensionError);
}

TEST(Kron, MatchesOracle) {
  const DenseMatrix a = random_matrix(3, 2, 1), b = random_matrix(2, 4, 2);
  EXPECT_EQ(kron(a, b), kron_oracle(a, b));
}

TEST(KrMaterialize, Examples) {
  DenseMatrix f(2, 1), g(2, 1);
  f << 1, 0;
  g << 2, 3;
  const DenseMatrix m = kr_materialize(KhatriRaoOperator(f, g));
  EXPECT_EQ(m.col(0), vec({2, 3, 0, 0}));

  const DenseMatrix f2 = random_matrix(3, 2, 5), g2 = random_matrix(4, 2, 6);
  const KhatriRaoOperator cancel(std::vector<FactorPair>{{f2, g2}, {-f2, g2}});
  EXPECT_EQ(kr_materialize(cancel), DenseMatrix::Zero(12, 2));

  const DenseMatrix dense = kr_materialize(KhatriRaoOperator(f2, g2));
  for (Index j = 0; j < 2; ++j) EXPECT_EQ(dense.col(j), kron_vec(f2.col(j), g2.col(j)));
}

TEST(KrMaterialize, CapNamedInError) {
  const KhatriRaoOperator op(random_matrix(10, 2, 1), random_matrix(10, 2, 2));
  try {
    kr_materialize(op, 100);
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("100"), std::string::npos);
  }
}

TEST(KrApply, Examples) {
  const KhatriRaoOperator op(std::vector<FactorPair>{{random_matrix(5, 3, 1), random_matrix(4, 3, 2)},
                              {random_matrix(5, 3, 3), random_matrix(4, 3, 4)}});
  EXPECT_EQ(kr_apply(op, DenseVector::Zero(3)), DenseVector::Zero(20));
  const DenseMatrix dense = kr_materialize(op);
  for (Index j = 0; j < 3; ++j) {
    EXPECT_LE(rel_diff(kr_apply(op, DenseVector::Unit(3, j)), dense.col(j)), 1e-15);
  }
}

TEST(KrApply, MatchesOracleAtModerateSize) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Index n1 = 1 + static_cast<Index>((s * 7) % 50), n2 = 1 + static_cast<Index>((s * 13) % 50);
    const Index p = 1 + static_cast<Index>(s % 5);
    std::vector<FactorPair> terms;
    for (Index l = 0; l < 1 + static_cast<Index>(s % 3); ++l)
      terms.push_back({random_matrix(n1, p, 1000 * s + 2 * l), random_matrix(n2, p, 1000 * s + 2 * l + 1)});
    const DenseMatrix oracle = operator_oracle(terms);
    const KhatriRaoOperator op(terms);
    const DenseVector x = random_vector(p, 77 + s);
    EXPECT_LE(rel_diff(kr_apply(op, x), oracle * x), 1e-12);
    EXPECT_LE(rel_diff(kr_materialize(op), oracle), 1e-15);
  }
}

TEST(KrApply, DimensionMismatchRejected) {
  const KhatriRaoOperator op(random_matrix(3, 2, 1), random_matrix(3, 2, 2));
  EXPECT_THROW(kr_apply(op, DenseVector::Zero(3)), DimensionError);
}

TEST(Operator, TermsMustAgree) {
  EXPECT_THROW(KhatriRaoOperator(std::vector<FactorPair>{{random_matrix(3, 2, 1), random_matrix(3, 2, 2)},
                                  {random_matrix(4, 2, 1), random_matrix(3, 2, 2)}}),
               DimensionError);
  EXPECT_THROW(KhatriRaoOperator(std::vector<FactorPair>{}), DomainError);
}

TEST(Operator, ScaledScalesColumns) {
  const KhatriRaoOperator op(random_matrix(3, 2, 1), random_matrix(4, 2, 2));
  EXPECT_LE(rel_diff(kr_materialize(op.scaled(-3.0)), -3.0 * kr_materialize(op)), 1e-15);
}

TEST(MixedProduct, Examples) {
  const DenseMatrix i2 = DenseMatrix::Identity(2, 2), i3 = DenseMatrix::Identity(3, 3);
  EXPECT_EQ(mixed_product_check(i2, i3, i2, i3), 0.0);
  DenseMatrix a(1, 1), b(1, 1), c(1, 1), d(1, 1);
  a << 2;
  b << 3;
  c << 5;
  d << 7;
  EXPECT_EQ(mixed_product_check(a, b, c, d), 0.0);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseMatrix x = random_matrix(2, 2, 4 * s), y = random_matrix(2, 2, 4 * s + 1),
                      z = random_matrix(2, 2, 4 * s + 2), w = random_matrix(2, 2, 4 * s + 3);
    EXPECT_LE(mixed_product_check(x, y, z, w), 1e-13);
  }
}

TEST(MixedProduct, RelativeResidualUpToEight) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Index m = 1 + s % 8, k = 1 + (s / 2) % 8, n = 1 + (s / 3) % 8, q = 1 + (s / 5) % 8,
                t = 1 + (s / 7) % 8, u = 1 + (s * 3) % 8;
    const DenseMatrix a = random_matrix(m, k, 10 * s), b = random_matrix(n, q, 10 * s + 1),
                      c = random_matrix(k, t, 10 * s + 2), d = random_matrix(q, u, 10 * s + 3);
    const DenseMatrix rhs = kron_oracle(a * c, b * d);
    const double scale = std::max(rhs.cwiseAbs().maxCoeff(), 1e-300);
    EXPECT_LE(mixed_product_check(a, b, c, d) / scale, 1e-12);
  }
}

TEST(MixedProduct, ShapeMismatchRejected) {
  EXPECT_THROW(mixed_product_check(random_matrix(2, 3, 1), random_matrix(2, 2, 2),
                                   random_matrix(2, 2, 3), random_matrix(2, 2, 4)),
               DimensionError);
}

TEST(VecIdentity, Residual) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const DenseMatrix a = random_matrix(1 + s % 6, 1 + s % 5, 3 * s), b = random_matrix(1 + s % 4, 1 + s % 7, 3 * s + 1);
    const DenseMatrix x = random_matrix(a.cols(), b.cols(), 3 * s + 2);
    const double scale = (a * x * b.transpose()).cwiseAbs().maxCoeff();
    EXPECT_LE(vec_identity_check(a, b, x), 1e-12 * std::max(scale, 1e-300));
  }
}

TEST(VecIdentity, KronOfFactorsActsThroughMatricization) {
  const DenseMatrix p = random_matrix(3, 4, 1), q = random_matrix(2, 5, 2);
  const DenseVector y = random_vector(20, 3);
  const DenseVector direct = kron_oracle(p, q) * y;
  const DenseVector via = vectorize(q * matricize(y, 4, 5) * p.transpose());
  EXPECT_LE(rel_diff(direct, via), 1e-14);
}
