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

#ifndef RPBAYES_BAYESMEAN_H_
#define RPBAYES_BAYESMEAN_H_

#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "rpbayes/model.h"
#include "rpbayes/numerics.h"
#include "rpbayes/privacy.h"

namespace rpbayes {

inline constexpr int kMaxBucketDim = 6;

struct Bucket {
  // 1-based dyadic level i: eigenvalues in (2^-i top, 2^-(i-1) top].
  int level = 1;
  // Eigen-indices (columns of the plan's eigenvectors).
  std::vector<int> indices;
  // 2^-level * top.
  double sigma2 = 0.0;
};

struct BucketPlan {
  int m = 1;
  double top = 0.0;
  // Non-empty buckets in increasing level.
  std::vector<Bucket> buckets;
  std::vector<int> tail;
  Vector eigenvalues;
  Matrix eigenvectors;

  // The plan is public, so the budget is split over non-empty buckets only.
  double EpsilonSplit(double epsilon) const;
};

absl::StatusOr<BucketPlan> MakeBucketPlan(const SymMatrix& lambda2, int m);

// ceil(log2(n d epsilon / alpha)) clipped to [1, 40].
int BucketCount(int n, int d, double epsilon, double alpha);

struct BayesMeanOptions {
  PrivateMeanOptions grid;
  // Overrides the per-bucket ball radius; required for improper priors.
  std::optional<double> radius;
};

struct BayesMeanResult {
  Vector estimate;
  BucketPlan plan;
  double epsilon_per_bucket = 0.0;
};

absl::StatusOr<BayesMeanResult> PrivatePosteriorMean(
    const MeanDataset& data, const PriorSpec& prior, double epsilon,
    double beta, MeanMode mode, RngStream& rng,
    const BayesMeanOptions& options = {});

// Noise-free bucketed reassembly of Lambda xbar, for checking the plan.
Vector BucketedPosteriorMean(const MeanDataset& data, const BucketPlan& plan);

// Private mean for N(mu, Lambda^2) data with ||xbar|| <= radius.
// Directions where Lambda is exactly zero carry constant data and return
// the empirical mean there.
absl::StatusOr<Vector> FrequentistPrivateMean(const MeanDataset& data,
                                              const SymMatrix& lambda,
                                              double radius, double epsilon,
                                              double beta, MeanMode mode,
                                              RngStream& rng,
                                              const PrivateMeanOptions& options = {});

// epsilon_i = epsilon / (i log k) with log k floored at one.
struct EpsilonSchedule {
  double epsilon = 1.0;
  int k = 1;

  double LogK() const;
  double At(int i) const;
  double Total() const;
  // epsilon (1 + ln k) / log k.
  double TotalBound() const;
};

struct StreamState {
  int t = 0;
  int n = 1;
  Vector mu;
  // n t after t updates.
  double precision = 0.0;
};

StreamState StreamStart(int n, int d);

// mu_{t+1} = mu_t / (1 + sigma_t^2 n) + xbar / (1 + 1/(sigma_t^2 n)).
StreamState StreamUpdateWithMean(const StreamState& state,
                                 const Vector& batch_mean);

struct StreamOptions {
  double radius = 1.0;
  double beta = 0.05;
  PrivateMeanOptions grid;
};

absl::StatusOr<StreamState> StreamUpdate(const StreamState& state,
                                         const MeanDataset& batch,
                                         double epsilon_i, MeanMode mode,
                                         RngStream& rng,
                                         const StreamOptions& options = {});

// {"t":..,"estimate":[..],"epsilon_i":..}
std::string StreamJsonLine(const StreamState& state, double epsilon_i);

// E_{t+1} = (t/(1+t)) E_t + c/(1+t), starting from E_1.
std::vector<double> ErrorRecursion(double c, double e1, int steps);

}  // namespace rpbayes

#endif  // RPBAYES_BAYESMEAN_H_
