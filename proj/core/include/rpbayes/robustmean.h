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

#ifndef RPBAYES_ROBUSTMEAN_H_
#define RPBAYES_ROBUSTMEAN_H_

#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"
#include "rpbayes/model.h"
#include "rpbayes/numerics.h"

namespace rpbayes {

inline constexpr int64_t kDefaultExactBudget = 2'000'000;
inline constexpr double kStatConstant = 6.0;
inline constexpr double kEffConstant = 8.0;

// eta * sqrt(log(1/eta)) + sqrt(eta) * sqrt((d + log(1/beta)) / n).
double StatisticalRobustRate(double eta, int d, int n, double beta);
// eta * sqrt(log(1/eta)) + sqrt(eta * sqrt((d + log(1/beta)) / n)).
double EfficientRobustRate(double eta, int d, int n, double beta);

struct ResilienceReport {
  double eta = 0.0;
  std::vector<int> worst_subset;
  double worst_deviation = 0.0;
  bool exact = false;
};

// || (1/|S|) sum_{i in S} (y_i - y_bar) ||.
double SubsetDeviation(const MeanDataset& data, const std::vector<int>& subset);

// Largest subset deviation over |S| <= ceil(2 eta n). Exhaustive when the
// number of subsets fits in exact_budget, otherwise a greedy search with
// swaps (a lower bound).
ResilienceReport Resilience(const MeanDataset& data, double eta,
                            int64_t exact_budget = kDefaultExactBudget);

struct StatisticalResult {
  Vector estimate;
  // Indices whose values were replaced by the kept-point mean.
  std::vector<int> replaced;
  // Rows equal to the observed data except on `replaced`.
  MeanDataset reconstruction;
  // The subset-deviation bound the reconstruction satisfies.
  double bound = 0.0;
  ResilienceReport resilience;
  bool exhaustive = false;
};

// C * sqrt((d + log(1/beta)) / (eta n) + log(1/eta)).
double StatisticalFeasibilityBound(double eta, int d, int n, double beta,
                                   double constant = kStatConstant);

// Searches reconstructions that replace at most floor(eta n) points by the
// mean of the others and keeps the feasible one with the smallest subset
// deviation. Returns kFailedPrecondition when nothing is feasible.
absl::StatusOr<StatisticalResult> RobustMeanStatistical(
    const MeanDataset& observed, double eta, double beta,
    int64_t budget = kDefaultExactBudget, double constant = kStatConstant);

struct WeightCertificate {
  Vector weights;
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double mass = 0.0;
  Vector candidate_mean;
  double eta = 0.0;
};

struct FilterOptions {
  double beta = 0.05;
  int max_iterations = 2000;
  double alpha0_constant = 4.0;
  double alpha1_constant = 6.0;
};

struct FilterResult {
  Vector estimate;
  WeightCertificate certificate;
  int iterations = 0;
};

// alpha0 = c (sqrt((d + log(1/beta)) / n) + eta log(1/eta)).
double FilterAlpha0(double eta, int d, int n, const FilterOptions& options);
// alpha1 = c (sqrt(eta (d + log(1/beta)) / n) + eta sqrt(log(1/eta))).
double FilterAlpha1(double eta, int d, int n, const FilterOptions& options);

// Spectral soft filter. Fails with kFailedPrecondition once more than
// 3 eta n of weight has been removed.
absl::StatusOr<FilterResult> RobustMeanFilter(const MeanDataset& observed,
                                              double eta,
                                              const FilterOptions& options = {});

struct CertifyResult {
  bool passed = false;
  bool mass_ok = false;
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
};

// Weighted mean and covariance about `center`, normalized by sum(a).
Matrix WeightedCovariance(const MeanDataset& data, const Vector& weights,
                          const Vector& center);

// Checks the certificate's first and second moment bounds along the top
// weighted-covariance eigenvector, `directions` random unit vectors and any
// extra directions supplied.
CertifyResult CertifyWeights(const MeanDataset& data,
                             const WeightCertificate& cert, int directions,
                             RngStream& rng,
                             const std::vector<Vector>& extra_directions = {});

// sup over b <= a with sum(b) >= sum(a) - eta n of |(1/n) sum b_i p_i|.
double StableSup(const std::vector<double>& p, const Vector& a, double removable,
                 int n);

}  // namespace rpbayes

#endif  // RPBAYES_ROBUSTMEAN_H_
