#include <cmath>
#include <cstring>
#include <numeric>

#include <gtest/gtest.h>

#include "krsketch/error.hpp"
#include "krsketch/random.hpp"
#include "krsketch/sketch.hpp"
#include "oracles.hpp"

using namespace krs;
using krs::test::kron_oracle;
using krs::test::random_matrix;
using krs::test::random_vector;
using krs::test::rel_diff;

namespace {

DenseMatrix dense_oracle(const Sketch& s) { return krs::test::dense_sketch_oracle(s); }
DenseMatrix operator_oracle(const KhatriRaoOperator& op) { return krs::test::dense_operator_oracle(op); }

Sketch sketch_for(Strategy st, Index r, Index n1, Index n2, std::uint64_t seed) {
  SketchSize size;
  size.r = r;
  if (st == Strategy::Case1) {
    size.r1 = 1 + static_cast<Index>(seed % 4);
    size.r2 = std::max<Index>(1, r / size.r1);
  }
  return make_sketch(st, size, n1, n2, seed);
}

bool same_bits(const DenseMatrix& a, const DenseMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

double sq_norm_sketch(Strategy st, Index r, const DenseVector& y, Index n1, Index n2, std::uint64_t seed) {
  SketchSize size;
  size.r = r;
  return apply_to_dense_vec(make_sketch(st, size, n1, n2, seed), y).squaredNorm();
}

}  // namespace

TEST(Strategy, NamesRoundTrip) {
  for (auto s : {Strategy::Case1, Strategy::Case2, Strategy::DenseGaussian})
    EXPECT_EQ(parse_strategy(strategy_name(s)), s);
  EXPECT_EQ(parse_strategy("dense-gaussian"), Strategy::DenseGaussian);
  EXPECT_THROW(parse_strategy("hadamard"), DomainError);
}

TEST(Case1, SingleRowIsUnscaledTensorProduct) {
  const auto s = Case1Sketch::generate(1, 1, 3, 2, 9);
  const DenseMatrix dense = materialize(Sketch(s));
  ASSERT_EQ(dense.rows(), 1);
  EXPECT_LE(rel_diff(dense, kron_oracle(s.p(), s.q())), 0.0);
  const GaussianStream gp(9, StreamTag::Case1P);
  EXPECT_EQ(s.p()(0, 0), gp.at(0));
}

TEST(Case1, SameSeedBitIdentical) {
  const auto a = Case1Sketch::generate(5, 4, 7, 6, 3), b = Case1Sketch::generate(5, 4, 7, 6, 3);
  EXPECT_TRUE(same_bits(a.p(), b.p()));
  EXPECT_TRUE(same_bits(a.q(), b.q()));
  const auto c = Case1Sketch::generate(5, 4, 7, 6, 4);
  EXPECT_FALSE(same_bits(a.p(), c.p()));
}

TEST(Case1, EntryMeanWithinCltBand) {
  const Index r1 = 1000;
  const auto s = Case1Sketch::generate(r1, 1, 1000, 1, 21);
  const double mean = s.p().mean();
  EXPECT_LE(std::abs(mean), 4.0 / std::sqrt(1e6) / std::sqrt(double(r1)));
  const double var = s.p().squaredNorm() / 1e6;
  EXPECT_NEAR(var * r1, 1.0, 4.0 * std::sqrt(2.0 / 1e6));
}

TEST(Case1, ZeroCountsRejected) {
  EXPECT_THROW(Case1Sketch::generate(0, 1, 2, 2, 0), DomainError);
  EXPECT_THROW(Case2Sketch::generate(1, 0, 2, 0), DomainError);
}

TEST(Case2, OneByOneIsProductOfNormals) {
  const auto s = Case2Sketch::generate(1, 1, 1, 5);
  const DenseMatrix dense = materialize(Sketch(s));
  EXPECT_EQ(dense(0, 0), s.p()(0, 0) * s.q()(0, 0));
  EXPECT_EQ(s.scale(), 1.0);
}

TEST(Case2, SameSeedBitIdentical) {
  const auto a = Case2Sketch::generate(9, 4, 5, 8), b = Case2Sketch::generate(9, 4, 5, 8);
  EXPECT_TRUE(same_bits(a.p(), b.p()));
  EXPECT_TRUE(same_bits(a.q(), b.q()));
}

TEST(Case2, SecondMomentOfEntries) {
  const Index r = 100000;
  const auto s = Case2Sketch::generate(r, 1, 1, 12);
  const DenseMatrix dense = materialize(Sketch(s));
  const double m = dense.squaredNorm() / double(r);
  // Var(p^2 q^2) = 8, 3 sigma.
  EXPECT_NEAR(m * r, 1.0, 3.0 * std::sqrt(8.0 / double(r)));
}

TEST(Case2, CoordinateSelectionRows) {
  const Index r = 4, n1 = 3, n2 = 2, p = 3;
  DenseMatrix pv = DenseMatrix::Zero(r, n1), qv = DenseMatrix::Zero(r, n2);
  pv.col(0).setOnes();
  qv.col(0).setOnes();
  const Sketch s = Case2Sketch::from_vectors(pv, qv);
  const DenseMatrix d1 = random_matrix(n1, p, 1), e1 = random_matrix(n2, p, 2);
  const DenseMatrix d2 = random_matrix(n1, p, 3), e2 = random_matrix(n2, p, 4);
  const DenseMatrix sa = apply_to_operator(s, KhatriRaoOperator(std::vector<FactorPair>{{d1, e1}, {d2, e2}}));
  const DenseVector expect = (d1.row(0).cwiseProduct(e1.row(0)) + d2.row(0).cwiseProduct(e2.row(0))) / 2.0;
  for (Index i = 0; i < r; ++i) EXPECT_LE(rel_diff(sa.row(i).transpose(), expect), 1e-15);
}

TEST(DenseGaussian, RowsRegenerateFromSeed) {
  const DenseGaussianSketch s(6, 10, 4);
  std::vector<double> all(60), part(20);
  s.fill_rows(0, 6, all);
  s.fill_rows(2, 2, part);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(part[i], all[20 + i]);
  EXPECT_THROW(s.fill_rows(5, 2, part), DimensionError);
}

TEST(ApplyToOperator, ZeroAdjointColumnAnnihilates) {
  DenseMatrix f = random_matrix(4, 3, 1), g = random_matrix(5, 3, 2);
  g.col(1).setZero();
  const KhatriRaoOperator op(f, g);
  for (auto st : {Strategy::Case1, Strategy::Case2, Strategy::DenseGaussian}) {
    const DenseMatrix sa = apply_to_operator(sketch_for(st, 12, 4, 5, 3), op);
    EXPECT_EQ(sa.col(1).cwiseAbs().maxCoeff(), 0.0) << strategy_name(st);
  }
}

TEST(ApplyToOperator, Case1AgainstDenseOracle) {
  const KhatriRaoOperator op(random_matrix(4, 2, 5), random_matrix(4, 2, 6));
  const Sketch s = Case1Sketch::generate(3, 3, 4, 4, 17);
  EXPECT_LE(rel_diff(apply_to_operator(s, op), dense_oracle(s) * operator_oracle(op)), 1e-12);
}

TEST(ApplyToTensorVec, Examples) {
  const Sketch s = Case2Sketch::generate(7, 3, 4, 1);
  EXPECT_EQ(apply_to_tensor_vec(s, {DenseVector::Zero(3), random_vector(4, 1)}), DenseVector::Zero(7));

  const DenseVector f = random_vector(3, 2), g = random_vector(4, 3);
  const DenseMatrix p = random_matrix(1, 3, 4), q = random_matrix(1, 4, 5);
  const Sketch one = Case1Sketch::from_factors(p, q);
  const DenseVector got = apply_to_tensor_vec(one, {f, g});
  ASSERT_EQ(got.size(), 1);
  EXPECT_NEAR(got[0], p.row(0).dot(f) * q.row(0).dot(g), 1e-15);
}

TEST(ApplyToDenseVec, ConsistentWithTensorVec) {
  const DenseVector f = random_vector(5, 1), g = random_vector(6, 2);
  for (auto st : {Strategy::Case1, Strategy::Case2, Strategy::DenseGaussian}) {
    const Sketch s = sketch_for(st, 10, 5, 6, 8);
    EXPECT_LE(rel_diff(apply_to_dense_vec(s, kron_vec(f, g)), apply_to_tensor_vec(s, {f, g})), 1e-12);
    EXPECT_EQ(apply_to_dense_vec(s, DenseVector::Zero(30)).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(ApplyToDenseVec, LengthMismatchRejected) {
  const Sketch s = Case2Sketch::generate(3, 2, 2, 1);
  EXPECT_THROW(apply_to_dense_vec(s, DenseVector::Zero(5)), DimensionError);
  EXPECT_THROW(apply_to_operator(s, KhatriRaoOperator(random_matrix(3, 1, 1), random_matrix(2, 1, 2))),
               DimensionError);
}

// Every strategy against explicit dense S on small instances over 100 seeds.
TEST(OracleEquivalence, AllStrategiesHundredSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index n1 = 1 + static_cast<Index>(seed % 8), n2 = 1 + static_cast<Index>((seed / 8) % 8);
    const Index p = 1 + static_cast<Index>(seed % 4), r = 1 + static_cast<Index>((seed * 5) % 16);
    std::vector<FactorPair> terms;
    for (int l = 0; l < 1 + int(seed % 2); ++l)
      terms.push_back({random_matrix(n1, p, 10 * seed + l), random_matrix(n2, p, 10 * seed + 5 + l)});
    const KhatriRaoOperator op(terms);
    const DenseMatrix a = operator_oracle(op);
    const DenseVector f = random_vector(n1, 7000 + seed), g = random_vector(n2, 8000 + seed);
    const DenseVector y = random_vector(n1 * n2, 9000 + seed);
    for (auto st : {Strategy::Case1, Strategy::Case2, Strategy::DenseGaussian}) {
      const Sketch s = sketch_for(st, r, n1, n2, seed);
      const DenseMatrix sd = dense_oracle(s);
      EXPECT_LE(rel_diff(apply_to_operator(s, op), sd * a), 1e-10) << seed << strategy_name(st);
      EXPECT_LE(rel_diff(apply_to_tensor_vec(s, {f, g}), sd * kron_oracle(f, g)), 1e-10);
      EXPECT_LE(rel_diff(apply_to_dense_vec(s, y), sd * y), 1e-10);
      EXPECT_LE(rel_diff(materialize(s), sd), 1e-15);
      const SketchedSystem sys = sketch_system(s, op, y);
      EXPECT_LE(rel_diff(sys.sa, sd * a), 1e-10);
      EXPECT_LE(rel_diff(sys.sb, sd * y), 1e-10);
    }
  }
}

TEST(DenseGaussian, ChunkedOperatorPathMatchesMaterialized) {
  const KhatriRaoOperator op(std::vector<FactorPair>{{random_matrix(6, 5, 1), random_matrix(7, 5, 2)},
                              {random_matrix(6, 5, 3), random_matrix(7, 5, 4)}});
  const Sketch s = DenseGaussianSketch(9, 42, 5);
  const DenseMatrix full = apply_to_operator(s, op);
  const DenseMatrix chunked = apply_to_operator(s, op, 1);
  EXPECT_LE(rel_diff(full, chunked), 1e-13);
  EXPECT_LE(rel_diff(full, dense_oracle(s) * operator_oracle(op)), 1e-12);
}

TEST(Determinism, SketchedSystemBitIdentical) {
  const KhatriRaoOperator op(random_matrix(6, 3, 1), random_matrix(5, 3, 2));
  const DenseVector b = random_vector(30, 3);
  for (auto st : {Strategy::Case1, Strategy::Case2, Strategy::DenseGaussian}) {
    const auto a1 = sketch_system(sketch_for(st, 9, 6, 5, 44), op, b);
    const auto a2 = sketch_system(sketch_for(st, 9, 6, 5, 44), op, b);
    EXPECT_TRUE(same_bits(a1.sa, a2.sa));
    EXPECT_TRUE(same_bits(a1.sb, a2.sb));
  }
}

TEST(Unbiasedness, MeanSquaredNormNearOne) {
  const Index n1 = 8, n2 = 8, r = 16, draws = 2000;
  DenseVector y = random_vector(n1 * n2, 1);
  y.normalize();
  for (auto st : {Strategy::Case1, Strategy::Case2, Strategy::DenseGaussian}) {
    std::vector<double> v(draws);
    for (Index d = 0; d < draws; ++d) v[d] = sq_norm_sketch(st, r, y, n1, n2, 100000 + d);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / draws;
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= draws - 1;
    double bound_var = var;
    if (st == Strategy::Case2) bound_var = 8.0 / r;
    if (st == Strategy::DenseGaussian) bound_var = 2.0 / r;
    EXPECT_LE(std::abs(mean - 1.0), 4.0 * std::sqrt(bound_var / draws)) << strategy_name(st);
  }
}

TEST(ScaleLaw, Case2VarianceHalvesWhenRowsDouble) {
  const Index n1 = 8, n2 = 8, draws = 4000;
  DenseVector y = random_vector(n1 * n2, 2);
  y.normalize();
  auto variance = [&](Index r, std::uint64_t base) {
    std::vector<double> v(draws);
    for (Index d = 0; d < draws; ++d) v[d] = sq_norm_sketch(Strategy::Case2, r, y, n1, n2, base + d);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / draws;
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    return var / (draws - 1);
  };
  const double ratio = variance(16, 0) / variance(32, 50000);
  EXPECT_GT(ratio, 1.6);
  EXPECT_LT(ratio, 2.5);
}

TEST(BalancedSplit, SquaresAndInvariants) {
  EXPECT_EQ(balanced_split(256), std::make_pair(Index{16}, Index{16}));
  EXPECT_EQ(balanced_split(2209), std::make_pair(Index{47}, Index{47}));
  EXPECT_EQ(balanced_split(65536), std::make_pair(Index{256}, Index{256}));
  EXPECT_EQ(balanced_split(1), std::make_pair(Index{1}, Index{1}));
  for (Index r = 1; r < 3000; ++r) {
    const auto [a, b] = balanced_split(r);
    EXPECT_GE(a, 1);
    EXPECT_LE(a, b);
    EXPECT_LE(a * b, r);
    const Index root = static_cast<Index>(std::floor(std::sqrt(double(r))));
    EXPECT_GE(a * b, root * root) << r;
  }
}

TEST(MakeSketch, Case1UsesBalancedSplitWhenOnlyRGiven) {
  SketchSize size;
  size.r = 4096;
  const Sketch s = make_sketch(Strategy::Case1, size, 3, 3, 1);
  const auto& c = std::get<Case1Sketch>(s);
  EXPECT_EQ(c.r1(), 64);
  EXPECT_EQ(c.r2(), 64);
  EXPECT_EQ(sketch_rows(s), 4096);
  EXPECT_EQ(sketch_ambient(s), 9);
}

TEST(Materialize, CapEnforced) {
  const Sketch s = DenseGaussianSketch(100, 1000, 1);
  EXPECT_THROW(materialize(s, 1000), CapacityError);
}
