// Copyright 2026 The rpbayes Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rpbayes/numerics.h"

#include <cmath>
#include <set>

#include "Eigen/Eigenvalues"
#include "gtest/gtest.h"

namespace rpbayes {
namespace {

Matrix RandomSymmetric(int dim, RngStream& rng) {
  Matrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = rng.Normal();
  return 0.5 * (a + a.transpose());
}

// Explicit sum formula for the probabilist's Hermite polynomial, normalized.
double HermiteByFormula(int j, double x) {
  double sum = 0.0;
  for (int m = 0; 2 * m <= j; ++m) {
    sum += std::pow(-1.0, m) * std::pow(x, j - 2 * m) /
           (std::tgamma(m + 1.0) * std::tgamma(j - 2 * m + 1.0) *
            std::pow(2.0, m));
  }
  return sum * std::tgamma(j + 1.0) / std::sqrt(std::tgamma(j + 1.0));
}

// Riemann sum of f against the standard normal density on [-12, 12].
double GridExpect(const std::function<double(double)>& f) {
  const int steps = 200000;
  const double lo = -12.0, h = 24.0 / steps;
  double sum = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double x = lo + i * h;
    const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    sum += w * f(x) * std::exp(-0.5 * x * x);
  }
  return sum * h / std::sqrt(2.0 * M_PI);
}

TEST(SymMatrixTest, CreateRejectsAsymmetric) {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  EXPECT_FALSE(SymMatrix::Create(m).ok());
  EXPECT_FALSE(SymMatrix::Create(Matrix(0, 0)).ok());
  EXPECT_TRUE(SymMatrix::Create(Matrix::Identity(3, 3)).ok());
}

TEST(SymEigTest, IdentityHasUnitEigenvalues) {
  absl::StatusOr<SymEigResult> r = SymEig(SymMatrix::Identity(3));
  ASSERT_TRUE(r.ok());
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(r->eigenvalues(i), 1.0);
}

TEST(SymEigTest, DiagonalIsAxisAligned) {
  absl::StatusOr<SymEigResult> r = SymEig(SymMatrix::Diagonal(Eigen::Vector2d(1, 4)));
  ASSERT_TRUE(r.ok());
  EXPECT_DOUBLE_EQ(r->eigenvalues(0), 4.0);
  EXPECT_DOUBLE_EQ(r->eigenvalues(1), 1.0);
  EXPECT_NEAR(std::abs(r->eigenvectors(1, 0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(r->eigenvectors(0, 1)), 1.0, 1e-12);
}

TEST(SymEigTest, RandomFiveByFiveReconstructs) {
  RngStream rng(3, 0);
  const Matrix a = RandomSymmetric(5, rng);
  absl::StatusOr<SymEigResult> r = SymEig(SymMatrix::Symmetrize(a));
  ASSERT_TRUE(r.ok());
  const Matrix rec = r->eigenvectors * r->eigenvalues.asDiagonal() *
                     r->eigenvectors.transpose();
  EXPECT_LE((rec - a).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SymEigTest, MatchesEigenSolverAndIsOrthonormalUpToDim64) {
  RngStream rng(5, 0);
  for (int dim : {1, 2, 7, 16, 33, 64}) {
    const Matrix a = RandomSymmetric(dim, rng);
    absl::StatusOr<SymEigResult> r = SymEig(SymMatrix::Symmetrize(a));
    ASSERT_TRUE(r.ok()) << dim;
    Eigen::SelfAdjointEigenSolver<Matrix> oracle(a);
    const Vector expected = oracle.eigenvalues().reverse();
    const double op = oracle.eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_LE((r->eigenvalues - expected).cwiseAbs().maxCoeff(), 1e-9 * (1 + op));
    const Matrix& v = r->eigenvectors;
    EXPECT_LE((v.transpose() * v - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff(),
              1e-9);
    const Matrix rec = v * r->eigenvalues.asDiagonal() * v.transpose();
    EXPECT_LE((rec - a).norm(), 1e-8 * std::max(1.0, op) * dim);
    for (int i = 1; i < dim; ++i) {
      EXPECT_GE(r->eigenvalues(i - 1), r->eigenvalues(i));
    }
  }
}

TEST(SymEigTest, NonConvergenceReportsResidual) {
  RngStream rng(9, 0);
  absl::StatusOr<SymEigResult> r =
      SymEig(SymMatrix::Symmetrize(RandomSymmetric(12, rng)), 1);
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.status().message().find("residual"), std::string::npos);
}

TEST(SymEigTest, TopEigenAndOperatorNorm) {
  Matrix m(2, 2);
  m << 2, 1, 1, 2;
  absl::StatusOr<SymMatrix> s = SymMatrix::Create(m);
  ASSERT_TRUE(s.ok());
  absl::StatusOr<std::pair<double, Vector>> top = TopEigen(*s);
  ASSERT_TRUE(top.ok());
  EXPECT_NEAR(top->first, 3.0, 1e-12);
  EXPECT_NEAR(std::abs(top->second(0)), std::sqrt(0.5), 1e-12);
  m << -5, 0, 0, 1;
  absl::StatusOr<double> op = OperatorNorm(SymMatrix::Symmetrize(m));
  ASSERT_TRUE(op.ok());
  EXPECT_DOUBLE_EQ(*op, 5.0);
}

TEST(RngStreamTest, SameSeedAndStreamReplays) {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.Normal();
    EXPECT_EQ(x, b.Normal());
    differs |= x != c.Normal();
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(RngStream(1, 2).Split(3).NextU64(), RngStream(1, 2).Split(3).NextU64());
}

TEST(RngStreamTest, UniformAndSubsetRanges) {
  RngStream rng(1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.Uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(rng.UniformInt(7), 7u);
  }
  const std::vector<int> s = rng.Subset(20, 6);
  EXPECT_EQ(std::set<int>(s.begin(), s.end()).size(), 6u);
  for (int v : s) {
    EXPECT_GE(v, 0);
    EXPECT_LT(v, 20);
  }
  EXPECT_NEAR(rng.UnitVector(5).norm(), 1.0, 1e-12);
}

TEST(GaussVectorTest, ZeroCovarianceReturnsMean) {
  RngStream rng(2, 0);
  const Vector mean = Vector::LinSpaced(3, 1, 3);
  absl::StatusOr<Vector> v = GaussVector(rng, mean, Matrix::Zero(3, 3));
  ASSERT_TRUE(v.ok());
  EXPECT_EQ(*v, mean);
}

TEST(GaussVectorTest, DimensionMismatchIsAnError) {
  RngStream rng(2, 0);
  EXPECT_FALSE(GaussVector(rng, Vector::Zero(3), Matrix::Identity(2, 2)).ok());
}

TEST(GaussVectorTest, FixedSeedReplays) {
  RngStream a(11, 4), b(11, 4);
  const Matrix s = Matrix::Identity(4, 4);
  EXPECT_EQ(*GaussVector(a, Vector::Zero(4), s), *GaussVector(b, Vector::Zero(4), s));
}

TEST(GaussVectorTest, SampleCovarianceMatchesTarget) {
  RngStream rng(13, 0);
  Matrix root(3, 3);
  root << 1, 0, 0, 0.5, 2, 0, -0.3, 0.2, 0.7;
  const Matrix target = root * root.transpose();
  const int draws = 100000;
  Matrix acc = Matrix::Zero(3, 3);
  Vector mean_acc = Vector::Zero(3);
  for (int i = 0; i < draws; ++i) {
    const Vector v = *GaussVector(rng, Vector::Zero(3), root);
    acc += v * v.transpose();
    mean_acc += v;
  }
  const Matrix cov = acc / draws;
  Eigen::SelfAdjointEigenSolver<Matrix> diff(cov - target);
  Eigen::SelfAdjointEigenSolver<Matrix> tgt(target);
  EXPECT_LE(diff.eigenvalues().cwiseAbs().maxCoeff(),
            0.05 * tgt.eigenvalues().maxCoeff());
}

TEST(HermiteTest, LowOrderValues) {
  for (double x : {-3.0, 0.0, 0.7, 5.0}) EXPECT_EQ(HermiteValue(0, x), 1.0);
  EXPECT_DOUBLE_EQ(HermiteValue(1, 2.0), 2.0);
  EXPECT_NEAR(HermiteValue(2, 2.0), 3.0 / std::sqrt(2.0), 1e-14);
}

TEST(HermiteTest, MatchesExplicitFormula) {
  for (int j = 0; j <= 14; ++j) {
    for (double x : {-2.5, -0.3, 0.0, 1.1, 3.7}) {
      EXPECT_NEAR(HermiteValue(j, x), HermiteByFormula(j, x),
                  1e-9 * (1 + std::abs(HermiteByFormula(j, x))))
          << j << " " << x;
    }
  }
  const std::vector<double> all = HermiteValues(10, 1.3);
  ASSERT_EQ(all.size(), 11u);
  for (int j = 0; j <= 10; ++j) EXPECT_DOUBLE_EQ(all[j], HermiteValue(j, 1.3));
}

TEST(HermiteTest, ShiftedExpectationIsScaledMonomial) {
  const QuadratureRule& rule = DefaultQuadrature();
  for (double x : {0.5, 1.0, 2.0}) {
    for (int j = 0; j <= 8; ++j) {
      const double got =
          QuadExpect([&](double z) { return HermiteValue(j, z + x); }, rule);
      EXPECT_NEAR(got, std::pow(x, j) / std::sqrt(std::tgamma(j + 1.0)), 1e-9)
          << j << " " << x;
    }
  }
}

TEST(QuadratureTest, WeightsNormalizedAndPositive) {
  const QuadratureRule& rule = DefaultQuadrature();
  EXPECT_EQ(rule.order, 160);
  double total = 0.0;
  for (double w : rule.weights) {
    EXPECT_GT(w, 0.0);
    total += w;
  }
  EXPECT_NEAR(total, 1.0, 1e-10);
  EXPECT_FALSE(GaussHermiteRule(0).ok());
}

TEST(QuadratureTest, LowMoments) {
  const QuadratureRule& rule = DefaultQuadrature();
  EXPECT_NEAR(QuadExpect([](double) { return 1.0; }, rule), 1.0, 1e-10);
  EXPECT_NEAR(QuadExpect([](double x) { return x * x; }, rule), 1.0, 1e-10);
  EXPECT_NEAR(QuadExpect([](double x) { return std::pow(HermiteValue(3, x), 2); },
                         rule),
              1.0, 1e-8);
}

TEST(QuadratureTest, ExactOnPolynomialsUpToTwiceOrderMinusOne) {
  absl::StatusOr<QuadratureRule> rule = GaussHermiteRule(6);
  ASSERT_TRUE(rule.ok());
  // E[x^{2m}] = (2m - 1)!!.
  double dfact = 1.0;
  for (int m = 1; 2 * m <= 11; ++m) {
    dfact *= 2 * m - 1;
    EXPECT_NEAR(QuadExpect([m](double x) { return std::pow(x, 2 * m); }, *rule),
                dfact, 1e-9 * dfact);
    EXPECT_NEAR(QuadExpect([m](double x) { return std::pow(x, 2 * m - 1); }, *rule),
                0.0, 1e-9 * dfact);
  }
}

TEST(QuadratureTest, HermiteOrthonormality) {
  const QuadratureRule& rule = DefaultQuadrature();
  for (int i = 0; i <= 12; ++i) {
    for (int j = 0; j <= 12; ++j) {
      const double got = QuadExpect(
          [i, j](double x) { return HermiteValue(i, x) * HermiteValue(j, x); },
          rule);
      EXPECT_NEAR(got, i == j ? 1.0 : 0.0, 1e-8) << i << "," << j;
    }
  }
}

TEST(QuadratureTest, AgreesWithRiemannSumOnSmoothFunction) {
  auto f = [](double x) { return std::cos(x) * std::exp(0.3 * x); };
  EXPECT_NEAR(QuadExpect(f, DefaultQuadrature()), GridExpect(f), 1e-9);
}

TEST(BinomialTest, SmallValues) {
  EXPECT_DOUBLE_EQ(Binomial(5, 2), 10.0);
  EXPECT_DOUBLE_EQ(Binomial(10, 0), 1.0);
  EXPECT_EQ(Binomial(3, 4), 0.0);
  EXPECT_NEAR(LogBinomial(50, 25), std::log(126410606437752.0), 1e-9);
}

}  // namespace
}  // namespace rpbayes
