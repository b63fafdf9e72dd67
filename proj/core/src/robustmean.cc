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
#include <limits>
#include <numeric>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace rpbayes {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Number of subsets of [n] with size in [lo, hi], saturating at cap + 1.
int64_t SubsetCount(int n, int lo, int hi, int64_t cap) {
  double total = 0.0;
  for (int s = lo; s <= hi; ++s) {
    total += Binomial(n, s);
    if (total > static_cast<double>(cap)) return cap + 1;
  }
  return static_cast<int64_t>(total);
}

// Calls visit(subset) for every subset of [n] of size exactly s, in
// lexicographic order. Stops early when visit returns false.
template <typename Visit>
void ForEachCombination(int n, int s, Visit visit) {
  std::vector<int> idx(s);
  std::iota(idx.begin(), idx.end(), 0);
  if (s > n) return;
  while (true) {
    if (!visit(idx)) return;
    int i = s - 1;
    while (i >= 0 && idx[i] == n - s + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
  }
}

struct ExactSearch {
  const Matrix* centered = nullptr;
  int n = 0;
  int k = 0;
  double best = -1.0;
  std::vector<int> best_subset;
  std::vector<int> current;

  void Run(int start, const Vector& sum) {
    for (int i = start; i < n; ++i) {
      current.push_back(i);
      const Vector next = sum + centered->row(i).transpose();
      const double value = next.norm() / current.size();
      if (value > best) {
        best = value;
        best_subset = current;
      }
      if (static_cast<int>(current.size()) < k) Run(i + 1, next);
      current.pop_back();
    }
  }
};

ResilienceReport GreedyResilience(const Matrix& centered, int k) {
  const int n = static_cast<int>(centered.rows());
  ResilienceReport report;
  int first = 0;
  for (int i = 1; i < n; ++i) {
    if (centered.row(i).norm() > centered.row(first).norm()) first = i;
  }
  std::vector<char> in(n, 0);
  std::vector<int> set = {first};
  in[first] = 1;
  Vector sum = centered.row(first).transpose();
  double best = sum.norm();
  std::vector<int> best_set = set;
  while (static_cast<int>(set.size()) < k) {
    int pick = -1;
    double pick_value = -1.0;
    for (int j = 0; j < n; ++j) {
      if (in[j]) continue;
      const double value =
          (sum + centered.row(j).transpose()).norm() / (set.size() + 1);
      if (value > pick_value) {
        pick_value = value;
        pick = j;
      }
    }
    if (pick < 0) break;
    set.push_back(pick);
    in[pick] = 1;
    sum += centered.row(pick).transpose();
    if (pick_value > best) {
      best = pick_value;
      best_set = set;
    }
  }

  // Swap refinement on the best set found while growing.
  std::fill(in.begin(), in.end(), 0);
  for (int i : best_set) in[i] = 1;
  sum.setZero(centered.cols());
  for (int i : best_set) sum += centered.row(i).transpose();
  const double size = static_cast<double>(best_set.size());
  bool improved = true;
  for (int pass = 0; improved && pass < 100; ++pass) {
    improved = false;
    for (size_t a = 0; a < best_set.size(); ++a) {
      for (int j = 0; j < n; ++j) {
        if (in[j]) continue;
        const Vector trial = sum - centered.row(best_set[a]).transpose() +
                             centered.row(j).transpose();
        const double value = trial.norm() / size;
        if (value > best * (1.0 + 1e-14)) {
          in[best_set[a]] = 0;
          in[j] = 1;
          best_set[a] = j;
          sum = trial;
          best = value;
          improved = true;
        }
      }
    }
  }
  std::sort(best_set.begin(), best_set.end());
  report.worst_subset = best_set;
  report.worst_deviation = best;
  report.exact = false;
  return report;
}

MeanDataset Reconstruct(const MeanDataset& observed,
                        const std::vector<int>& replaced, Vector* kept_mean) {
  const int n = observed.n();
  std::vector<char> drop(n, 0);
  for (int i : replaced) drop[i] = 1;
  Vector mean = Vector::Zero(observed.d());
  int kept = 0;
  for (int i = 0; i < n; ++i) {
    if (drop[i]) continue;
    mean += observed.samples.row(i).transpose();
    ++kept;
  }
  mean /= std::max(kept, 1);
  MeanDataset out = observed;
  for (int i : replaced) out.samples.row(i) = mean.transpose();
  *kept_mean = mean;
  return out;
}

}  // namespace

double StatisticalRobustRate(double eta, int d, int n, double beta) {
  if (eta <= 0) return 0.0;
  return eta * std::sqrt(std::log(1.0 / eta)) +
         std::sqrt(eta) * std::sqrt((d + std::log(1.0 / beta)) / n);
}

double EfficientRobustRate(double eta, int d, int n, double beta) {
  if (eta <= 0) return 0.0;
  return eta * std::sqrt(std::log(1.0 / eta)) +
         std::sqrt(eta * std::sqrt((d + std::log(1.0 / beta)) / n));
}

double SubsetDeviation(const MeanDataset& data, const std::vector<int>& subset) {
  if (subset.empty()) return 0.0;
  const Vector mean = data.Mean();
  Vector sum = Vector::Zero(data.d());
  for (int i : subset) sum += data.samples.row(i).transpose() - mean;
  return sum.norm() / subset.size();
}

ResilienceReport Resilience(const MeanDataset& data, double eta,
                            int64_t exact_budget) {
  const int n = data.n();
  const int k = std::min(n, CeilCount(2.0 * eta, n));
  ResilienceReport report;
  report.eta = eta;
  if (k <= 0) {
    report.exact = true;
    return report;
  }
  const Matrix centered =
      data.samples.rowwise() - data.samples.colwise().mean();
  if (SubsetCount(n, 1, k, exact_budget) <= exact_budget) {
    ExactSearch search;
    search.centered = &centered;
    search.n = n;
    search.k = k;
    search.Run(0, Vector::Zero(data.d()));
    report.worst_subset = search.best_subset;
    report.worst_deviation = search.best;
    report.exact = true;
    return report;
  }
  ResilienceReport greedy = GreedyResilience(centered, k);
  greedy.eta = eta;
  return greedy;
}

double StatisticalFeasibilityBound(double eta, int d, int n, double beta,
                                   double constant) {
  if (eta <= 0) return kInf;
  return constant * std::sqrt((d + std::log(1.0 / beta)) / (eta * n) +
                              std::log(1.0 / eta));
}

absl::StatusOr<StatisticalResult> RobustMeanStatistical(
    const MeanDataset& observed, double eta, double beta, int64_t budget,
    double constant) {
  if (!(eta >= 0.0 && eta < 1.0 / 3.0)) {
    return absl::InvalidArgumentError("statistical estimator needs eta < 1/3");
  }
  const int n = observed.n();
  const int d = observed.d();
  StatisticalResult result;
  result.bound = StatisticalFeasibilityBound(eta, d, n, beta, constant);
  const int m = FloorCount(eta, n);
  if (eta == 0.0 || m == 0) {
    // Nothing may be replaced; the observed data is the only candidate.
    result.reconstruction = observed;
    result.estimate = observed.Mean();
    result.exhaustive = true;
    if (eta > 0.0) {
      result.resilience = Resilience(observed, eta, budget);
      if (result.resilience.worst_deviation > result.bound) {
        return absl::FailedPreconditionError(
            "no feasible reconstruction (estimator outputs bottom)");
      }
    }
    return result;
  }

  if (SubsetCount(n, 0, m, budget) <= budget) {
    result.exhaustive = true;
    bool found = false;
    for (int s = 0; s <= m; ++s) {
      ForEachCombination(n, s, [&](const std::vector<int>& replaced) {
        Vector kept_mean;
        MeanDataset recon = Reconstruct(observed, replaced, &kept_mean);
        ResilienceReport res = Resilience(recon, eta, budget);
        if (res.worst_deviation <= result.bound &&
            (!found ||
             res.worst_deviation < result.resilience.worst_deviation)) {
          found = true;
          result.replaced = replaced;
          result.reconstruction = std::move(recon);
          result.estimate = kept_mean;
          result.resilience = std::move(res);
        }
        return true;
      });
    }
    if (!found) {
      return absl::FailedPreconditionError(
          "no feasible reconstruction (estimator outputs bottom)");
    }
    return result;
  }

  // Greedy: replace the point farthest from the current kept mean.
  std::vector<int> replaced;
  while (true) {
    Vector kept_mean;
    MeanDataset recon = Reconstruct(observed, replaced, &kept_mean);
    ResilienceReport res = Resilience(recon, eta, budget);
    if (res.worst_deviation <= result.bound) {
      std::sort(replaced.begin(), replaced.end());
      result.replaced = replaced;
      result.reconstruction = std::move(recon);
      result.estimate = kept_mean;
      result.resilience = std::move(res);
      return result;
    }
    if (static_cast<int>(replaced.size()) >= m) {
      return absl::FailedPreconditionError(
          "no feasible reconstruction (estimator outputs bottom)");
    }
    std::vector<char> drop(n, 0);
    for (int i : replaced) drop[i] = 1;
    int far = -1;
    double far_dist = -1.0;
    for (int i = 0; i < n; ++i) {
      if (drop[i]) continue;
      const double dist = (observed.samples.row(i).transpose() - kept_mean).norm();
      if (dist > far_dist) {
        far_dist = dist;
        far = i;
      }
    }
    replaced.push_back(far);
  }
}

double FilterAlpha0(double eta, int d, int n, const FilterOptions& options) {
  const double tail = eta > 0 ? eta * std::log(1.0 / eta) : 0.0;
  return options.alpha0_constant *
         (std::sqrt((d + std::log(1.0 / options.beta)) / n) + tail);
}

double FilterAlpha1(double eta, int d, int n, const FilterOptions& options) {
  const double tail = eta > 0 ? eta * std::sqrt(std::log(1.0 / eta)) : 0.0;
  return options.alpha1_constant *
         (std::sqrt(eta * (d + std::log(1.0 / options.beta)) / n) + tail);
}

Matrix WeightedCovariance(const MeanDataset& data, const Vector& weights,
                          const Vector& center) {
  const Matrix centered = data.samples.rowwise() - center.transpose();
  const double total = weights.sum();
  Matrix cov = centered.transpose() * weights.asDiagonal() * centered;
  return cov / std::max(total, 1e-300);
}

absl::StatusOr<FilterResult> RobustMeanFilter(const MeanDataset& observed,
                                              double eta,
                                              const FilterOptions& options) {
  if (!(eta >= 0.0 && eta < 1.0 / 6.0)) {
    return absl::InvalidArgumentError("filter needs 0 <= eta < 1/6");
  }
  const int n = observed.n();
  const int d = observed.d();
  const double alpha0 = FilterAlpha0(eta, d, n, options);
  Vector a = Vector::Ones(n);
  FilterResult result;
  Vector mean = observed.Mean();
  if (eta > 0.0) {
    const double budget = 3.0 * eta * n;
    for (int it = 0; it < options.max_iterations; ++it) {
      mean = (observed.samples.transpose() * a) / a.sum();
      const SymMatrix cov =
          SymMatrix::Symmetrize(WeightedCovariance(observed, a, mean));
      absl::StatusOr<std::pair<double, Vector>> top = TopEigen(cov);
      if (!top.ok()) return top.status();
      if (top->first <= 1.0 + alpha0) break;
      result.iterations = it + 1;
      const Vector proj =
          (observed.samples.rowwise() - mean.transpose()) * top->second;
      double tau_max = 0.0;
      for (int i = 0; i < n; ++i) {
        if (a(i) > 0) tau_max = std::max(tau_max, proj(i) * proj(i));
      }
      if (tau_max <= 0.0) break;
      for (int i = 0; i < n; ++i) {
        a(i) *= 1.0 - proj(i) * proj(i) / tau_max;
        if (a(i) < 0) a(i) = 0;
      }
      if (n - a.sum() > budget) {
        return absl::FailedPreconditionError(absl::StrCat(
            "filter removed ", n - a.sum(), " weight, above the 3*eta*n = ",
            budget, " budget"));
      }
    }
    mean = (observed.samples.transpose() * a) / a.sum();
  }
  result.estimate = mean;
  WeightCertificate& cert = result.certificate;
  cert.weights = a;
  cert.alpha0 = alpha0;
  cert.alpha2 = alpha0;
  cert.alpha1 = FilterAlpha1(eta, d, n, options);
  cert.mass = a.sum() / n;
  cert.candidate_mean = mean;
  cert.eta = eta;
  return result;
}

double StableSup(const std::vector<double>& p, const Vector& a,
                 double removable, int n) {
  const int m = static_cast<int>(p.size());
  double total = 0.0;
  for (int i = 0; i < m; ++i) total += a(i) * p[i];
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&p](int i, int j) { return p[i] < p[j]; });
  // Largest value: drop weight from the most negative entries.
  double hi = total;
  double left = removable;
  for (int idx = 0; idx < m && left > 0; ++idx) {
    const int i = order[idx];
    if (p[i] >= 0) break;
    const double take = std::min(a(i), left);
    hi -= take * p[i];
    left -= take;
  }
  double lo = total;
  left = removable;
  for (int idx = m - 1; idx >= 0 && left > 0; --idx) {
    const int i = order[idx];
    if (p[i] <= 0) break;
    const double take = std::min(a(i), left);
    lo -= take * p[i];
    left -= take;
  }
  return std::max(std::abs(hi), std::abs(lo)) / n;
}

CertifyResult CertifyWeights(const MeanDataset& data,
                             const WeightCertificate& cert, int directions,
                             RngStream& rng,
                             const std::vector<Vector>& extra_directions) {
  constexpr double kSlack = 1e-12;
  const int n = data.n();
  const int d = data.d();
  CertifyResult result;
  const Vector& a = cert.weights;
  result.mass_ok = a.sum() / n >= 1.0 - 2.0 * cert.eta - kSlack &&
                   a.minCoeff() >= 0.0 && a.maxCoeff() <= 1.0;
  const SymMatrix cov =
      SymMatrix::Symmetrize(WeightedCovariance(data, a, cert.candidate_mean));
  absl::StatusOr<std::pair<double, Vector>> top = TopEigen(cov);
  if (!top.ok()) return result;
  result.alpha0 = top->first - 1.0;

  std::vector<Vector> dirs = {top->second};
  for (const Vector& v : extra_directions) {
    if (v.size() == d && v.norm() > 0) dirs.push_back(v / v.norm());
  }
  for (int k = 0; k < directions; ++k) dirs.push_back(rng.UnitVector(d));

  const Matrix centered =
      data.samples.rowwise() - cert.candidate_mean.transpose();
  const double removable = cert.eta * n;
  std::vector<double> p(n), q(n);
  for (const Vector& v : dirs) {
    const Vector proj = centered * v;
    for (int i = 0; i < n; ++i) {
      p[i] = proj(i);
      q[i] = proj(i) * proj(i) - 1.0;
    }
    result.alpha1 = std::max(result.alpha1, StableSup(p, a, removable, n));
    result.alpha2 = std::max(result.alpha2, StableSup(q, a, removable, n));
  }
  result.passed = result.mass_ok && result.alpha0 <= cert.alpha0 + kSlack &&
                  result.alpha1 <= cert.alpha1 + kSlack &&
                  result.alpha2 <= cert.alpha2 + kSlack;
  return result;
}

}  // namespace rpbayes
