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

#include "rpbayes/bayesmean.h"

#include <algorithm>
#include <cmath>

#include "gtest/gtest.h"
#include "rpbayes/model.h"
#include "rpbayes/privacy.h"
#include "rpbayes/robustmean.h"

namespace rpbayes {
namespace {

MeanDataset Gaussian(int n, const Vector& mu, RngStream& rng) {
  MeanDataset data;
  data.samples.resize(n, mu.size());
  for (int i = 0; i < n; ++i) {
    data.samples.row(i) = (mu + rng.NormalVector(mu.size())).transpose();
  }
  return data;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

TEST(BucketPlanTest, IdentityIsOneBucket) {
  const BucketPlan plan = *MakeBucketPlan(SymMatrix::Identity(4), 5);
  ASSERT_EQ(plan.buckets.size(), 1u);
  EXPECT_EQ(plan.buckets[0].level, 1);
  EXPECT_EQ(plan.buckets[0].indices.size(), 4u);
  EXPECT_TRUE(plan.tail.empty());
  EXPECT_DOUBLE_EQ(plan.EpsilonSplit(3.0), 3.0);
}

TEST(BucketPlanTest, DyadicLevels) {
  const BucketPlan plan =
      *MakeBucketPlan(SymMatrix::Diagonal(Eigen::Vector3d(1.0, 0.4, 0.2)), 3);
  ASSERT_EQ(plan.buckets.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(plan.buckets[i].level, i + 1);
    ASSERT_EQ(plan.buckets[i].indices.size(), 1u);
  }
  EXPECT_NEAR(plan.eigenvalues(plan.buckets[0].indices[0]), 1.0, 1e-15);
  EXPECT_NEAR(plan.eigenvalues(plan.buckets[1].indices[0]), 0.4, 1e-15);
  EXPECT_NEAR(plan.eigenvalues(plan.buckets[2].indices[0]), 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(plan.EpsilonSplit(3.0), 1.0);
}

TEST(BucketPlanTest, ThresholdEigenvalueGoesToTail) {
  const int m = 4;
  const BucketPlan plan = *MakeBucketPlan(
      SymMatrix::Diagonal(Eigen::Vector2d(1.0, std::ldexp(1.0, -m - 1))), m);
  ASSERT_EQ(plan.tail.size(), 1u);
  EXPECT_EQ(plan.buckets.size(), 1u);
  EXPECT_FALSE(MakeBucketPlan(SymMatrix::Identity(2), 0).ok());
}

TEST(BucketPlanTest, BucketCountClipped) {
  EXPECT_EQ(BucketCount(1000, 2, 1.0, 1e9), 1);
  EXPECT_EQ(BucketCount(1000, 2, 1.0, 1e-30), 40);
  EXPECT_EQ(BucketCount(1000, 2, 1.0, 2000.0 / 8), 3);
}

TEST(BucketPlanTest, ReassemblyReproducesLambdaXbarUpToTail) {
  RngStream rng(1, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 5, n = 50;
    Matrix a(d, d);
    for (int i = 0; i < d; ++i) a.col(i) = rng.NormalVector(d);
    const Matrix sigma = a * a.transpose() * 0.01;
    const PriorSpec prior = *PriorSpec::General(SymMatrix::Symmetrize(sigma));
    const Matrix lambda = Shrinkage(prior, n).lambda.entries();
    const int m = 1 + static_cast<int>(rng.UniformInt(8));
    const BucketPlan plan =
        *MakeBucketPlan(SymMatrix::Symmetrize(lambda * lambda), m);
    const MeanDataset data = Gaussian(n, rng.NormalVector(d), rng);
    const Vector exact = lambda * data.Mean();
    const double bound = std::pow(2.0, -m / 2.0) * d * plan.top * data.Mean().norm();
    EXPECT_LE((BucketedPosteriorMean(data, plan) - exact).norm(), bound + 1e-12);
  }
}

TEST(PrivatePosteriorTest, NearlyNoiselessLimit) {
  RngStream rng(2, 0);
  const int n = 1000;
  const PriorSpec prior = *PriorSpec::Isotropic(2, 1.0);
  const MeanInstance inst = *SampleMeanInstance(prior, n, rng);
  absl::StatusOr<BayesMeanResult> r =
      PrivatePosteriorMean(inst.data, prior, 1e6, 0.05, MeanMode::kEff, rng);
  ASSERT_TRUE(r.ok()) << r.status();
  const Vector target = PosteriorMeanMeanModel(inst.data, prior);
  // Grid pitch in the rescaled bucket coordinates.
  const double alpha = RateFunction::MeanEff(2, n, 0.05)(
      PrivacyCorruptionLevel(2, n, 1e6, 0.05));
  const double cell = alpha / (2 * std::sqrt(2.0));
  const double scale = std::sqrt(r->plan.top);
  EXPECT_LE((r->estimate - target).norm(), 2 * cell * scale);
}

TEST(PrivatePosteriorTest, ZeroPriorGivesZero) {
  RngStream rng(3, 0);
  const PriorSpec prior = *PriorSpec::Isotropic(2, 0.0);
  const MeanDataset data = Gaussian(100, Eigen::Vector2d(1, 1), rng);
  absl::StatusOr<BayesMeanResult> r =
      PrivatePosteriorMean(data, prior, 1.0, 0.05, MeanMode::kEff, rng);
  ASSERT_TRUE(r.ok()) << r.status();
  EXPECT_EQ(r->estimate, Vector::Zero(2));
}

TEST(PrivatePosteriorTest, ImproperPriorNeedsRadius) {
  RngStream rng(4, 0);
  const MeanDataset data = Gaussian(200, Eigen::Vector2d(0.2, 0), rng);
  EXPECT_FALSE(PrivatePosteriorMean(data, PriorSpec::ImproperUniform(2), 1.0, 0.05,
                                    MeanMode::kEff, rng)
                   .ok());
  BayesMeanOptions options;
  options.radius = 1.0;
  EXPECT_TRUE(PrivatePosteriorMean(data, PriorSpec::ImproperUniform(2), 1.0, 0.05,
                                   MeanMode::kEff, rng, options)
                  .ok());
}

TEST(PrivatePosteriorTest, ErrorWithinRateAtCriticalPrior) {
  RngStream rng(5, 0);
  const int n = 2000, d = 2;
  const double eps = 2.0, beta = 0.05;
  const PriorSpec prior = *PriorSpec::Isotropic(d, 1.0 / n);
  const RateFunction rate = RateFunction::MeanEff(d, n, beta);
  // One bucket scaled by sqrt(top) = |Lambda| = 1/2. With probability
  // 1 - beta the mechanism picks a cell of score at most
  // 2 (log(cells) + log(1/beta)) / epsilon.
  const double h = rate(PrivacyCorruptionLevel(d, n, eps, beta)) / (2 * std::sqrt(2.0));
  GridSpec grid;
  grid.center = Vector::Zero(d);
  grid.cell = h;
  grid.radius = 2 * std::sqrt(2.0 / n * (d + std::log(1 / beta))) + h * std::sqrt(2.0) / 2;
  const double cells = static_cast<double>(GridIndices(grid)->size());
  const int t_star =
      static_cast<int>(std::ceil(2 * (std::log(cells) + std::log(1 / beta)) / eps));
  const double bound =
      0.5 * (rate(static_cast<double>(t_star) / n) + h * std::sqrt(2.0) / 2);
  int pass = 0;
  for (int t = 0; t < 200; ++t) {
    const MeanInstance inst = *SampleMeanInstance(prior, n, rng);
    absl::StatusOr<BayesMeanResult> r =
        PrivatePosteriorMean(inst.data, prior, eps, beta, MeanMode::kEff, rng);
    ASSERT_TRUE(r.ok()) << r.status();
    pass += (r->estimate - PosteriorMeanMeanModel(inst.data, prior)).norm() <= bound;
  }
  EXPECT_GE(pass, 190);
}

TEST(FrequentistTest, DegenerateLambdaReturnsEmpiricalMean) {
  MeanDataset data;
  data.samples = Eigen::RowVector2d(0.3, -0.7).replicate(40, 1);
  RngStream rng(6, 0);
  absl::StatusOr<Vector> r = FrequentistPrivateMean(
      data, SymMatrix::Zero(2), 1.0, 1.0, 0.05, MeanMode::kEff, rng);
  ASSERT_TRUE(r.ok()) << r.status();
  EXPECT_LE((*r - data.Mean()).norm(), 1e-15);
}

TEST(FrequentistTest, LargeEpsilonErrorNearStatisticalRate) {
  RngStream rng(7, 0);
  const int n = 1000, d = 2;
  const Vector mu = Eigen::Vector2d(0.2, -0.1);
  std::vector<double> errors;
  for (int t = 0; t < 200; ++t) {
    const MeanDataset data = Gaussian(n, mu, rng);
    absl::StatusOr<Vector> r = FrequentistPrivateMean(
        data, SymMatrix::Identity(d), 1.0, 1e6, 0.05, MeanMode::kEff, rng);
    ASSERT_TRUE(r.ok());
    errors.push_back((*r - mu).norm());
  }
  EXPECT_LE(Median(errors), 1.2 * std::sqrt(1.0 * d / n));
}

TEST(ScheduleTest, CompositionWithinBudget) {
  for (int k : {1, 2, 3, 8, 64, 1000}) {
    const EpsilonSchedule s{1.5, k};
    EXPECT_LE(s.Total(), s.TotalBound() + 1e-12) << k;
    EXPECT_LE(s.TotalBound(), 2 * 1.5 + 1e-12) << k;
    EXPECT_NEAR(s.At(1), 1.5 / s.LogK(), 1e-15);
  }
}

TEST(StreamTest, PrecisionLawAndRunningAverage) {
  RngStream rng(8, 0);
  const int n = 37, d = 3;
  StreamState state = StreamStart(n, d);
  Vector sum = Vector::Zero(d);
  for (int t = 1; t <= 64; ++t) {
    const Vector mean = rng.NormalVector(d);
    sum += mean;
    state = StreamUpdateWithMean(state, mean);
    EXPECT_EQ(state.precision, static_cast<double>(n) * t);
    EXPECT_EQ(state.t, t);
    EXPECT_LE((state.mu - sum / t).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(StreamTest, FirstBatchIsPrivateEstimate) {
  const int n = 300;
  const MeanDataset batch = [] {
    RngStream r(9, 0);
    return Gaussian(300, Eigen::Vector2d(0.1, 0.2), r);
  }();
  RngStream a(10, 0), b(10, 0);
  StreamOptions options;
  const StreamState s =
      *StreamUpdate(StreamStart(n, 2), batch, 1.0, MeanMode::kEff, a, options);
  const PrivateMeanResult direct =
      *PrivateEmpiricalMean(batch, 1.0, options.beta, options.radius, MeanMode::kEff, b);
  EXPECT_EQ(s.mu, direct.estimate);
  EXPECT_EQ(s.precision, n);
}

TEST(StreamTest, BatchSizeMismatchIsAnError) {
  RngStream rng(11, 0);
  const MeanDataset batch = Gaussian(10, Vector::Zero(2), rng);
  EXPECT_FALSE(StreamUpdate(StreamStart(20, 2), batch, 1.0, MeanMode::kEff, rng).ok());
}

TEST(StreamTest, PrivateStreamTracksMean) {
  RngStream rng(12, 0);
  const int n = 500, d = 2, k = 8;
  const double eps = 4.0, beta = 0.05;
  const Vector mu = Eigen::Vector2d(0.3, -0.2);
  const EpsilonSchedule schedule{eps, k};
  const RateFunction rate = RateFunction::MeanEff(d, n, beta);
  int pass = 0;
  for (int trial = 0; trial < 100; ++trial) {
    StreamState state = StreamStart(n, d);
    bool ok = true;
    for (int t = 1; t <= k; ++t) {
      const MeanDataset batch = Gaussian(n, mu, rng);
      state = *StreamUpdate(state, batch, schedule.At(t), MeanMode::kEff, rng);
      const double bound =
          kEffConstant * std::sqrt(1.0 * d / (n * t)) +
          rate(PrivacyCorruptionLevel(d, n, schedule.At(t), beta));
      ok &= (state.mu - mu).norm() <= bound;
    }
    pass += ok;
  }
  EXPECT_GE(pass, 90);
}

TEST(StreamTest, JsonLine) {
  StreamState s = StreamStart(10, 2);
  s = StreamUpdateWithMean(s, Eigen::Vector2d(0.5, -1));
  EXPECT_EQ(StreamJsonLine(s, 0.25), R"({"t":1,"estimate":[0.5,-1.0],"epsilon_i":0.25})");
}

TEST(ErrorRecursionTest, StaysBelowPerBatchError) {
  for (double c : {0.1, 1.0, 3.0}) {
    for (double e1 : {0.0, 0.5 * c, c}) {
      for (double e : ErrorRecursion(c, e1, 200)) EXPECT_LE(e, c + 1e-12);
    }
  }
  EXPECT_TRUE(ErrorRecursion(1.0, 1.0, 0).empty());
}

}  // namespace
}  // namespace rpbayes
