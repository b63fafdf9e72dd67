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
#include <map>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "json.hpp"

namespace rpbayes {
namespace {

RateFunction ModeRate(MeanMode mode, int d, int n, double beta) {
  return mode == MeanMode::kStat ? RateFunction::MeanStat(d, n, beta)
                                 : RateFunction::MeanEff(d, n, beta);
}

int PlanSize(const MeanDataset& data, double epsilon, double beta,
             MeanMode mode) {
  const int n = data.n();
  const int d = data.d();
  const double alpha =
      ModeRate(mode, d, n, beta)(PrivacyCorruptionLevel(d, n, epsilon, beta));
  return BucketCount(n, d, epsilon, alpha);
}

Matrix Columns(const Matrix& m, const std::vector<int>& cols) {
  Matrix out(m.rows(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j) out.col(j) = m.col(cols[j]);
  return out;
}

double LevelScale(const BucketPlan& plan, const Bucket& b) {
  return std::sqrt(std::ldexp(plan.top, -(b.level - 1)));
}

}  // namespace

double BucketPlan::EpsilonSplit(double epsilon) const {
  return epsilon / std::max<size_t>(1, buckets.size());
}

absl::StatusOr<BucketPlan> MakeBucketPlan(const SymMatrix& lambda2, int m) {
  if (m < 1) return absl::InvalidArgumentError("bucket count must be >= 1");
  absl::StatusOr<SymEigResult> eig = SymEig(lambda2);
  if (!eig.ok()) return eig.status();
  BucketPlan plan;
  plan.m = m;
  plan.eigenvalues = eig->eigenvalues;
  plan.eigenvectors = eig->eigenvectors;
  const int d = lambda2.dim();
  plan.top = std::max(0.0, eig->eigenvalues(0));
  if (plan.eigenvalues.minCoeff() < -1e-9 * std::max(1.0, plan.top)) {
    return absl::InvalidArgumentError("Lambda^2 is not PSD");
  }
  std::map<int, Bucket> by_level;
  for (int j = 0; j < d; ++j) {
    const double v = plan.eigenvalues(j);
    if (plan.top <= 0.0 || v <= std::ldexp(plan.top, -m)) {
      plan.tail.push_back(j);
      continue;
    }
    int level = 1;
    while (v <= std::ldexp(plan.top, -level)) ++level;
    Bucket& b = by_level[level];
    b.level = level;
    b.sigma2 = std::ldexp(plan.top, -level);
    b.indices.push_back(j);
  }
  for (auto& [level, b] : by_level) plan.buckets.push_back(std::move(b));
  return plan;
}

int BucketCount(int n, int d, double epsilon, double alpha) {
  if (!(alpha > 0.0)) return 40;
  const double m = std::ceil(std::log2(n * d * epsilon / alpha));
  return static_cast<int>(std::clamp(m, 1.0, 40.0));
}

absl::StatusOr<BayesMeanResult> PrivatePosteriorMean(
    const MeanDataset& data, const PriorSpec& prior, double epsilon,
    double beta, MeanMode mode, RngStream& rng,
    const BayesMeanOptions& options) {
  if (prior.dim() != data.d()) {
    return absl::InvalidArgumentError("prior and data dimensions differ");
  }
  if (prior.kind() == PriorKind::kImproperUniform && !options.radius) {
    return absl::InvalidArgumentError(
        "improper prior needs an explicit radius");
  }
  const int n = data.n();
  const Matrix lambda = Shrinkage(prior, n).lambda.entries();
  absl::StatusOr<BucketPlan> plan =
      MakeBucketPlan(SymMatrix::Symmetrize(lambda * lambda),
                     PlanSize(data, epsilon, beta, mode));
  if (!plan.ok()) return plan.status();
  BayesMeanResult result;
  result.estimate = Vector::Zero(data.d());
  result.epsilon_per_bucket = plan->EpsilonSplit(epsilon);
  const Matrix z = data.samples * plan->eigenvectors;
  const double prior_norm =
      prior.kind() == PriorKind::kImproperUniform ? 0.0 : prior.OperatorNorm();
  for (const Bucket& b : plan->buckets) {
    const int db = static_cast<int>(b.indices.size());
    if (db > kMaxBucketDim) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "bucket at level ", b.level, " has dimension ", db,
          ", grid limit is ", kMaxBucketDim));
    }
    const double s = LevelScale(*plan, b);
    MeanDataset y;
    y.samples.resize(n, db);
    for (int j = 0; j < db; ++j) {
      const int idx = b.indices[j];
      const double lam = std::sqrt(std::max(0.0, plan->eigenvalues(idx)));
      y.samples.col(j) = z.col(idx) * (lam / s);
    }
    const double radius =
        options.radius.value_or(std::sqrt((prior_norm + 1.0 / n) *
                                          (db + std::log(1.0 / beta))));
    RngStream child = rng.Split(static_cast<uint64_t>(b.level));
    absl::StatusOr<PrivateMeanResult> est =
        PrivateEmpiricalMean(y, result.epsilon_per_bucket, beta, radius, mode,
                             child, options.grid);
    if (!est.ok()) return est.status();
    result.estimate +=
        Columns(plan->eigenvectors, b.indices) * (s * est->estimate);
  }
  result.plan = *std::move(plan);
  return result;
}

Vector BucketedPosteriorMean(const MeanDataset& data, const BucketPlan& plan) {
  Vector out = Vector::Zero(data.d());
  const Vector zbar = plan.eigenvectors.transpose() * data.Mean();
  for (const Bucket& b : plan.buckets) {
    for (int idx : b.indices) {
      const double lam = std::sqrt(std::max(0.0, plan.eigenvalues(idx)));
      out += plan.eigenvectors.col(idx) * (lam * zbar(idx));
    }
  }
  return out;
}

absl::StatusOr<Vector> FrequentistPrivateMean(const MeanDataset& data,
                                              const SymMatrix& lambda,
                                              double radius, double epsilon,
                                              double beta, MeanMode mode,
                                              RngStream& rng,
                                              const PrivateMeanOptions& options) {
  if (lambda.dim() != data.d()) {
    return absl::InvalidArgumentError("Lambda and data dimensions differ");
  }
  const Matrix& l = lambda.entries();
  absl::StatusOr<BucketPlan> plan =
      MakeBucketPlan(SymMatrix::Symmetrize(l * l),
                     PlanSize(data, epsilon, beta, mode));
  if (!plan.ok()) return plan.status();
  const int n = data.n();
  const Matrix z = data.samples * plan->eigenvectors;
  Vector coords = Vector::Zero(data.d());

  // Positive eigenvalues below the cutoff join the last bucket.
  std::vector<Bucket> buckets = plan->buckets;
  std::vector<int> degenerate;
  for (int idx : plan->tail) {
    if (plan->top > 0.0 && plan->eigenvalues(idx) > 1e-24 * plan->top) {
      if (buckets.empty()) {
        buckets.push_back({plan->m, {}, std::ldexp(plan->top, -plan->m)});
      }
      buckets.back().indices.push_back(idx);
    } else {
      degenerate.push_back(idx);
    }
  }
  for (int idx : degenerate) coords(idx) = z.col(idx).mean();

  const double eps_b = epsilon / std::max<size_t>(1, buckets.size());
  for (const Bucket& b : buckets) {
    const int db = static_cast<int>(b.indices.size());
    if (db > kMaxBucketDim) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "bucket at level ", b.level, " has dimension ", db,
          ", grid limit is ", kMaxBucketDim));
    }
    const double s = LevelScale(*plan, b);
    MeanDataset y;
    y.samples.resize(n, db);
    for (int j = 0; j < db; ++j) y.samples.col(j) = z.col(b.indices[j]) / s;
    RngStream child = rng.Split(static_cast<uint64_t>(b.level));
    absl::StatusOr<PrivateMeanResult> est = PrivateEmpiricalMean(
        y, eps_b, beta, radius / s, mode, child, options);
    if (!est.ok()) return est.status();
    for (int j = 0; j < db; ++j) coords(b.indices[j]) = s * est->estimate(j);
  }
  return Vector(plan->eigenvectors * coords);
}

double EpsilonSchedule::LogK() const {
  return std::max(1.0, std::log(static_cast<double>(k)));
}

double EpsilonSchedule::At(int i) const { return epsilon / (i * LogK()); }

double EpsilonSchedule::Total() const {
  double total = 0.0;
  for (int i = 1; i <= k; ++i) total += At(i);
  return total;
}

double EpsilonSchedule::TotalBound() const {
  return epsilon * (1.0 + std::log(static_cast<double>(k))) / LogK();
}

StreamState StreamStart(int n, int d) {
  StreamState s;
  s.n = n;
  s.mu = Vector::Zero(d);
  return s;
}

StreamState StreamUpdateWithMean(const StreamState& state,
                                 const Vector& batch_mean) {
  StreamState next = state;
  if (state.t == 0) {
    // Improper start: the first batch mean is the posterior mean.
    next.mu = batch_mean;
  } else {
    const double sigma2 = 1.0 / state.precision;
    const double r = sigma2 * state.n;
    next.mu = state.mu / (1.0 + r) + batch_mean / (1.0 + 1.0 / r);
  }
  next.t = state.t + 1;
  next.precision = static_cast<double>(state.n) * next.t;
  return next;
}

absl::StatusOr<StreamState> StreamUpdate(const StreamState& state,
                                         const MeanDataset& batch,
                                         double epsilon_i, MeanMode mode,
                                         RngStream& rng,
                                         const StreamOptions& options) {
  if (batch.n() != state.n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "batch has ", batch.n(), " samples, stream expects ", state.n));
  }
  absl::StatusOr<PrivateMeanResult> est =
      PrivateEmpiricalMean(batch, epsilon_i, options.beta, options.radius,
                           mode, rng, options.grid);
  if (!est.ok()) return est.status();
  return StreamUpdateWithMean(state, est->estimate);
}

std::string StreamJsonLine(const StreamState& state, double epsilon_i) {
  nlohmann::ordered_json j;
  j["t"] = state.t;
  j["estimate"] = std::vector<double>(state.mu.data(),
                                      state.mu.data() + state.mu.size());
  j["epsilon_i"] = epsilon_i;
  return j.dump();
}

std::vector<double> ErrorRecursion(double c, double e1, int steps) {
  std::vector<double> e;
  if (steps < 1) return e;
  e.push_back(e1);
  for (int t = 1; t < steps; ++t) {
    e.push_back(t / (1.0 + t) * e.back() + c / (1.0 + t));
  }
  return e;
}

}  // namespace rpbayes
