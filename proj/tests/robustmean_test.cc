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

#include "rpbayes/robustmean.h"

#include <algorithm>
#include <cmath>

#include "gtest/gtest.h"
#include "rpbayes/model.h"

namespace rpbayes {
namespace {

MeanDataset Gaussian(int n, int d, RngStream& rng) {
  MeanDataset data;
  data.samples.resize(n, d);
  for (int i = 0; i < n; ++i) data.samples.row(i) = rng.NormalVector(d).transpose();
  return data;
}

// Brute-force subset deviation over every subset of size 1..m.
double BruteResilience(const MeanDataset& data, int m) {
  const int n = data.n();
  double best = 0.0;
  for (int mask = 1; mask < (1 << n); ++mask) {
    if (__builtin_popcount(mask) > m) continue;
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) s.push_back(i);
    Vector mean = Vector::Zero(data.d());
    for (int i : s) mean += data.samples.row(i).transpose();
    mean /= s.size();
    best = std::max(best, (mean - data.Mean()).norm());
  }
  return best;
}

TEST(RatesTest, Formulas) {
  const double eta = 0.05, beta = 0.1;
  const int d = 20, n = 400;
  const double base = std::sqrt((d + std::log(1 / beta)) / n);
  EXPECT_NEAR(StatisticalRobustRate(eta, d, n, beta),
              eta * std::sqrt(std::log(1 / eta)) + std::sqrt(eta) * base, 1e-14);
  EXPECT_NEAR(EfficientRobustRate(eta, d, n, beta),
              eta * std::sqrt(std::log(1 / eta)) + std::sqrt(eta * base), 1e-14);
  EXPECT_EQ(StatisticalRobustRate(0.0, d, n, beta), 0.0);
}

TEST(ResilienceTest, IdenticalSamplesHaveZeroDeviation) {
  MeanDataset data;
  data.samples = Matrix::Constant(8, 3, 1.5);
  EXPECT_NEAR(Resilience(data, 0.2).worst_deviation, 0.0, 1e-15);
}

TEST(ResilienceTest, SingleLargeValue) {
  MeanDataset data;
  data.samples.resize(5, 1);
  data.samples << 0, 0, 0, 0, 10;
  // ceil(2 * 0.2 * 5) = 2, and the best pair still contains the 10.
  const ResilienceReport r = Resilience(data, 0.1);
  EXPECT_TRUE(r.exact);
  ASSERT_EQ(r.worst_subset, std::vector<int>{4});
  EXPECT_NEAR(r.worst_deviation, 8.0, 1e-12);
}

TEST(ResilienceTest, ExactMatchesBruteForce) {
  RngStream rng(3, 0);
  for (int t = 0; t < 10; ++t) {
    const MeanDataset data = Gaussian(10, 2, rng);
    const ResilienceReport r = Resilience(data, 0.15);
    EXPECT_TRUE(r.exact);
    EXPECT_NEAR(r.worst_deviation, BruteResilience(data, 3), 1e-12);
    EXPECT_NEAR(SubsetDeviation(data, r.worst_subset), r.worst_deviation, 1e-12);
  }
}

TEST(ResilienceTest, GreedyNeverExceedsExactAndUsuallyMatches) {
  RngStream rng(5, 0);
  int equal = 0;
  for (int t = 0; t < 100; ++t) {
    const MeanDataset data = Gaussian(12, 2, rng);
    const ResilienceReport exact = Resilience(data, 0.25);
    const ResilienceReport greedy = Resilience(data, 0.25, 1);
    ASSERT_TRUE(exact.exact);
    ASSERT_FALSE(greedy.exact);
    EXPECT_LE(greedy.worst_deviation, exact.worst_deviation + 1e-12);
    equal += greedy.worst_deviation >= exact.worst_deviation - 1e-12;
  }
  EXPECT_GE(equal, 90);
}

TEST(StatisticalTest, ZeroEtaIsEmpiricalMean) {
  RngStream rng(7, 0);
  const MeanDataset data = Gaussian(15, 3, rng);
  absl::StatusOr<StatisticalResult> r = RobustMeanStatistical(data, 0.0, 0.05);
  ASSERT_TRUE(r.ok());
  EXPECT_LE((r->estimate - data.Mean()).norm(), 1e-15);
  EXPECT_FALSE(RobustMeanStatistical(data, 0.34, 0.05).ok());
}

TEST(StatisticalTest, SingleGrossOutlierIsDropped) {
  RngStream rng(9, 0);
  MeanDataset data = Gaussian(12, 2, rng);
  const MeanDataset clean = data;
  data.samples.row(5) << 1000.0, 0.0;
  const double eta = 1.0 / 12;
  absl::StatusOr<StatisticalResult> r = RobustMeanStatistical(data, eta, 0.05);
  ASSERT_TRUE(r.ok()) << r.status();
  // Oracle: mean of the eleven untouched points.
  Vector kept = Vector::Zero(2);
  for (int i = 0; i < 12; ++i)
    if (i != 5) kept += data.samples.row(i).transpose();
  kept /= 11;
  const double bound = kStatConstant * StatisticalRobustRate(eta, 2, 12, 1.0);
  EXPECT_LE((r->estimate - kept).norm(), bound);
  EXPECT_LE((r->estimate - clean.Mean()).norm(), bound);
  EXPECT_EQ(r->replaced, std::vector<int>{5});
}

TEST(StatisticalTest, ShiftAdversaryMeetsBound) {
  RngStream rng(11, 0);
  const int n = 20, d = 4, trials = 200;
  const double eta = 0.1;
  AdversarySpec adv;
  adv.kind = AdversaryKind::kShift;
  adv.delta = 4.0;
  adv.direction = Vector::Unit(d, 0);
  const double bound = kStatConstant * StatisticalRobustRate(eta, d, n, 1.0);
  int pass = 0;
  for (int t = 0; t < trials; ++t) {
    RngStream trial_rng = rng.Split(t);
    const MeanDataset clean = Gaussian(n, d, trial_rng);
    const ContaminatedMean obs = *Corrupt(clean, adv, eta, trial_rng);
    absl::StatusOr<StatisticalResult> r = RobustMeanStatistical(obs.observed, eta, 0.05);
    if (r.ok() && (r->estimate - clean.Mean()).norm() <= bound) ++pass;
  }
  EXPECT_GE(pass, 190);
}

TEST(StatisticalTest, TranslationEquivariance) {
  RngStream rng(13, 0);
  MeanDataset data = Gaussian(12, 2, rng);
  data.samples.row(0) << 30, 30;
  const Vector c = Eigen::Vector2d(-4.0, 2.5);
  MeanDataset shifted = data;
  shifted.samples.rowwise() += c.transpose();
  const Vector a = RobustMeanStatistical(data, 1.0 / 12, 0.05)->estimate;
  const Vector b = RobustMeanStatistical(shifted, 1.0 / 12, 0.05)->estimate;
  EXPECT_LE((b - a - c).norm(), 1e-9);
}

TEST(FilterTest, CleanDataKeepsAllWeight) {
  RngStream rng(15, 0);
  const MeanDataset data = Gaussian(400, 5, rng);
  absl::StatusOr<FilterResult> r = RobustMeanFilter(data, 0.0);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->certificate.weights, Vector::Ones(400));
  EXPECT_LE((r->estimate - data.Mean()).norm(), 1e-12);
  EXPECT_FALSE(RobustMeanFilter(data, 0.2).ok());
}

TEST(FilterTest, SingleGrossOutlierDownweighted) {
  RngStream rng(17, 0);
  MeanDataset data = Gaussian(200, 5, rng);
  data.samples.row(17) = Vector::Constant(5, 50.0).transpose();
  FilterOptions options;
  options.max_iterations = 10;
  absl::StatusOr<FilterResult> r = RobustMeanFilter(data, 0.01, options);
  ASSERT_TRUE(r.ok()) << r.status();
  EXPECT_LT(r->certificate.weights(17), 0.01);
  EXPECT_LE(r->iterations, 10);
}

TEST(FilterTest, MixturePlantMeetsEfficientBound) {
  RngStream rng(19, 0);
  const int n = 400, d = 20;
  const double eta = 0.05;
  AdversarySpec adv;
  adv.kind = AdversaryKind::kMixturePlant;
  adv.delta = 3.0;
  adv.direction = Vector::Unit(d, 0);
  const double bound = kEffConstant * EfficientRobustRate(eta, d, n, 1.0);
  int pass = 0;
  for (int t = 0; t < 100; ++t) {
    RngStream trial_rng = rng.Split(t);
    const MeanDataset clean = Gaussian(n, d, trial_rng);
    const ContaminatedMean obs = *Corrupt(clean, adv, eta, trial_rng);
    absl::StatusOr<FilterResult> r = RobustMeanFilter(obs.observed, eta);
    if (r.ok() && (r->estimate - clean.Mean()).norm() <= bound) ++pass;
  }
  EXPECT_GE(pass, 90);
}

TEST(FilterTest, TranslationAndRotationEquivariance) {
  RngStream rng(21, 0);
  const int d = 4;
  MeanDataset data = Gaussian(300, d, rng);
  for (int i = 0; i < 6; ++i) data.samples.row(i) = Vector::Constant(d, 6.0).transpose();
  const Vector base = RobustMeanFilter(data, 0.02)->estimate;
  const Vector c = Vector::LinSpaced(d, -1, 2);
  MeanDataset shifted = data;
  shifted.samples.rowwise() += c.transpose();
  EXPECT_LE((RobustMeanFilter(shifted, 0.02)->estimate - base - c).norm(), 1e-8);
  Matrix a(d, d);
  for (int i = 0; i < d; ++i) a.col(i) = rng.NormalVector(d);
  const Matrix q = Eigen::HouseholderQR<Matrix>(a).householderQ();
  MeanDataset rotated;
  rotated.samples = data.samples * q.transpose();
  EXPECT_LE((RobustMeanFilter(rotated, 0.02)->estimate - q * base).norm(), 1e-8);
}

TEST(CertifyTest, UnitWeightsOnCleanData) {
  RngStream rng(23, 0);
  const int d = 10, n = 50 * d;
  const double eta = 0.1;
  int pass = 0;
  for (int t = 0; t < 100; ++t) {
    const MeanDataset data = Gaussian(n, d, rng);
    WeightCertificate cert;
    cert.weights = Vector::Ones(n);
    cert.eta = eta;
    cert.candidate_mean = data.Mean();
    cert.alpha1 = 6 * std::sqrt(eta * d / n) + 6 * eta * std::sqrt(std::log(1 / eta));
    cert.alpha0 = cert.alpha2 = 4 * (std::sqrt(1.0 * d / n) + eta * std::log(1 / eta));
    cert.mass = n;
    pass += CertifyWeights(data, cert, 256, rng).passed;
  }
  EXPECT_GE(pass, 95);
}

TEST(CertifyTest, TooLittleMassFails) {
  RngStream rng(25, 0);
  const MeanDataset data = Gaussian(100, 3, rng);
  WeightCertificate cert;
  cert.weights = Vector::Ones(100);
  cert.weights.head(60).setZero();
  cert.eta = 0.1;
  cert.alpha0 = cert.alpha1 = cert.alpha2 = 100.0;
  cert.candidate_mean = data.Mean();
  const CertifyResult r = CertifyWeights(data, cert, 16, rng);
  EXPECT_FALSE(r.mass_ok);
  EXPECT_FALSE(r.passed);
}

TEST(CertifyTest, WeightsOnShiftedClusterFailFirstMoment) {
  RngStream rng(27, 0);
  const int n = 400, d = 5;
  const double eta = 0.05;
  MeanDataset data = Gaussian(n, d, rng);
  // Shift a 5% cluster far along e1 and keep it while zeroing a tail of the
  // clean points on the other side.
  for (int i = 0; i < 20; ++i) data.samples(i, 0) += 14.0;
  WeightCertificate cert;
  cert.weights = Vector::Ones(n);
  cert.eta = eta;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return data.samples(a, 0) < data.samples(b, 0);
  });
  for (int i = 0; i < 20; ++i) cert.weights(order[i]) = 0.0;
  cert.candidate_mean = Vector::Zero(d);
  cert.alpha1 = 6 * std::sqrt(eta * d / n) + 6 * eta * std::sqrt(std::log(1 / eta));
  cert.alpha0 = cert.alpha2 = 100.0;
  const CertifyResult r = CertifyWeights(data, cert, 64, rng);
  EXPECT_TRUE(r.mass_ok);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.alpha1, cert.alpha1);
}

// A passing certificate pins the estimate near the clean mean.
TEST(CertifyTest, PassingCertificateImpliesCloseness) {
  RngStream rng(29, 0);
  const int n = 400, d = 20;
  const double eta = 0.05;
  AdversarySpec adv;
  adv.kind = AdversaryKind::kMixturePlant;
  adv.delta = 3.0;
  adv.direction = Vector::Unit(d, 1);
  int checked = 0;
  for (int t = 0; t < 30; ++t) {
    const MeanDataset clean = Gaussian(n, d, rng);
    const ContaminatedMean obs = *Corrupt(clean, adv, eta, rng);
    absl::StatusOr<FilterResult> r = RobustMeanFilter(obs.observed, eta);
    if (!r.ok()) continue;
    const CertifyResult c = CertifyWeights(obs.observed, r->certificate, 256, rng);
    if (!c.passed) continue;
    ++checked;
    const WeightCertificate& w = r->certificate;
    const double bound =
        w.alpha1 + std::sqrt(8 * eta * (w.alpha0 + w.alpha2) +
                             8 * eta * w.alpha1 * w.alpha1 +
                             8 * eta * eta * (w.alpha0 + w.alpha2));
    EXPECT_LE((r->estimate - clean.Mean()).norm(), bound);
  }
  EXPECT_GT(checked, 20);
}

TEST(StableSupTest, DropsWeightAgainstTheSign) {
  const std::vector<double> p = {3.0, -2.0, 1.0};
  EXPECT_NEAR(StableSup(p, Vector::Ones(3), 0.0, 3), 2.0 / 3, 1e-12);
  // Dropping the -2 gives 4/3; dropping the 3 gives -1/3.
  EXPECT_NEAR(StableSup(p, Vector::Ones(3), 1.0, 3), 4.0 / 3, 1e-12);
}

}  // namespace
}  // namespace rpbayes
