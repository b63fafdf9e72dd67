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

#include "rpbayes/concentration.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rpbayes {
namespace {

double TopEigenvalue(const Matrix& gram) {
  absl::StatusOr<std::pair<double, Vector>> top =
      TopEigen(SymMatrix::Symmetrize(gram));
  return top.ok() ? top->first : 0.0;
}

void LocalSearch(const Matrix& x, std::vector<int>& set, double& value) {
  const int n = static_cast<int>(x.cols());
  std::vector<char> in(n, 0);
  for (int i : set) in[i] = 1;
  bool improved = true;
  while (improved) {
    improved = false;
    for (size_t a = 0; a < set.size(); ++a) {
      for (int j = 0; j < n; ++j) {
        if (in[j]) continue;
        const int old = set[a];
        set[a] = j;
        const double trial = SubmatrixOperatorNorm(x, set);
        if (trial > value * (1.0 + 1e-12)) {
          in[old] = 0;
          in[j] = 1;
          value = trial;
          improved = true;
        } else {
          set[a] = old;
        }
      }
    }
  }
}

double Quantile(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  const int m = static_cast<int>(values.size());
  int idx = static_cast<int>(std::ceil(level * m)) - 1;
  idx = std::clamp(idx, 0, m - 1);
  return values[idx];
}

}  // namespace

double OrderStatBound(double eta, int d, double beta) {
  return 2.0 * std::log(std::exp(1.0) / eta) +
         2.0 / (eta * d) * std::log(1.0 / beta);
}

double SubsetSumBound(double eta, int d, double beta, double constant) {
  const double head = eta * d > 0 ? eta * d * std::log(std::exp(1.0) / eta)
                                  : 0.0;
  return constant * (head + std::log(1.0 / beta));
}

double SparseSpectralBound(int d, int n, int k, double beta, double constant) {
  return constant * (std::sqrt(static_cast<double>(d)) +
                     std::sqrt(k * std::log(std::exp(1.0) * n / k)) +
                     std::sqrt(std::log(1.0 / beta)));
}

double SubmatrixOperatorNorm(const Matrix& x, const std::vector<int>& columns) {
  if (columns.empty()) return 0.0;
  Matrix sub(x.rows(), columns.size());
  for (size_t j = 0; j < columns.size(); ++j) sub.col(j) = x.col(columns[j]);
  const Matrix gram = sub.cols() <= sub.rows() ? Matrix(sub.transpose() * sub)
                                               : Matrix(sub * sub.transpose());
  return std::sqrt(std::max(TopEigenvalue(gram), 0.0));
}

SparseSpectralResult SparseSpectralNormHeuristic(const Matrix& x, int k) {
  const int n = static_cast<int>(x.cols());
  k = std::clamp(k, 0, n);
  SparseSpectralResult best;
  if (k == 0) return best;
  std::vector<std::vector<int>> starts;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&x](int a, int b) {
    return x.col(a).squaredNorm() > x.col(b).squaredNorm();
  });
  starts.emplace_back(order.begin(), order.begin() + k);
  absl::StatusOr<std::pair<double, Vector>> top =
      TopEigen(SymMatrix::Symmetrize(x * x.transpose()));
  if (top.ok()) {
    const Vector proj = x.transpose() * top->second;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&proj](int a, int b) {
      return std::abs(proj(a)) > std::abs(proj(b));
    });
    starts.emplace_back(order.begin(), order.begin() + k);
  }
  RngStream rng(0x5eedULL, static_cast<uint64_t>(n) * 131 + k);
  while (starts.size() < 16) starts.push_back(rng.Subset(n, k));
  for (std::vector<int>& set : starts) {
    double value = SubmatrixOperatorNorm(x, set);
    LocalSearch(x, set, value);
    if (value > best.value) {
      best.value = value;
      best.subset = set;
    }
  }
  std::sort(best.subset.begin(), best.subset.end());
  return best;
}

SparseSpectralResult SparseSpectralNorm(const Matrix& x, int k,
                                        int64_t exact_budget) {
  const int n = static_cast<int>(x.cols());
  k = std::clamp(k, 0, n);
  if (k == 0) return {0.0, {}, true};
  if (Binomial(n, k) > static_cast<double>(exact_budget)) {
    return SparseSpectralNormHeuristic(x, k);
  }
  // The norm is monotone in the column set, so size exactly k suffices.
  SparseSpectralResult best;
  best.exact = true;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    const double value = SubmatrixOperatorNorm(x, idx);
    if (value > best.value) {
      best.value = value;
      best.subset = idx;
    }
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

double CovarianceDeviation(const Matrix& x) {
  const int d = static_cast<int>(x.rows());
  const double n = static_cast<double>(x.cols());
  const Matrix dev = x * x.transpose() / n - Matrix::Identity(d, d);
  absl::StatusOr<SymEigResult> eig = SymEig(SymMatrix::Symmetrize(dev));
  if (!eig.ok()) return std::numeric_limits<double>::infinity();
  return std::max(std::abs(eig->eigenvalues(0)),
                  std::abs(eig->eigenvalues(d - 1)));
}

Vector ShortFlatDecomposition::Z1() const {
  Vector z = Vector::Zero(z2.size());
  for (size_t j = 0; j < support.size(); ++j) z(support[j]) = z1_values[j];
  return z;
}

ShortFlatDecomposition ShortFlatDecomposeCount(const Vector& y, int count,
                                               double eta) {
  const int n = static_cast<int>(y.size());
  count = std::clamp(count, 0, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&y](int a, int b) {
    return std::abs(y(a)) > std::abs(y(b));
  });
  ShortFlatDecomposition dec;
  dec.eta = eta;
  dec.support.assign(order.begin(), order.begin() + count);
  std::sort(dec.support.begin(), dec.support.end());
  dec.z2 = y;
  for (int i : dec.support) {
    dec.z1_values.push_back(y(i));
    dec.norm_z1_sq += y(i) * y(i);
    dec.z2(i) = 0.0;
  }
  dec.norm_z2_inf_sq =
      n > 0 ? dec.z2.cwiseAbs().maxCoeff() * dec.z2.cwiseAbs().maxCoeff() : 0.0;
  return dec;
}

ShortFlatDecomposition ShortFlatDecompose(const Vector& y, double eta) {
  const int n = static_cast<int>(y.size());
  const int count = std::min(
      n, static_cast<int>(std::ceil(eta * n - 1e-9)));
  return ShortFlatDecomposeCount(y, count, eta);
}

bool VerifyShortFlat(const ShortFlatDecomposition& dec, const Vector& y) {
  if (dec.z2.size() != y.size()) return false;
  if (dec.support.size() != dec.z1_values.size()) return false;
  const Vector z1 = dec.Z1();
  for (int i : dec.support) {
    if (dec.z2(i) != 0.0) return false;
  }
  if ((z1 + dec.z2 - y).cwiseAbs().maxCoeff() > 0.0) return false;
  const double z1_sq = z1.squaredNorm();
  const double z2_inf = y.size() > 0 ? dec.z2.cwiseAbs().maxCoeff() : 0.0;
  const double tol = 1e-10;
  return std::abs(z1_sq - dec.norm_z1_sq) <= tol * std::max(1.0, z1_sq) &&
         std::abs(z2_inf * z2_inf - dec.norm_z2_inf_sq) <=
             tol * std::max(1.0, z2_inf * z2_inf);
}

ShortFlatBounds ResidualShortFlatBounds(double eta, int n, double beta,
                                        double chi) {
  ShortFlatBounds b;
  const double log_eta = std::log(1.0 / eta);
  const double log_beta = std::log(1.0 / beta);
  b.z1_sq = chi * (eta * n * log_eta + log_beta);
  b.z2_inf_sq = chi * log_eta + chi * log_beta / (eta * n);
  return b;
}

BoundReport RunBoundReport(double theoretical, double beta, double slack,
                           int trials, RngStream& rng,
                           const std::function<double(RngStream&)>& statistic) {
  std::vector<double> values;
  values.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    RngStream child = rng.Split(static_cast<uint64_t>(t));
    values.push_back(statistic(child));
  }
  BoundReport report;
  report.theoretical = theoretical;
  report.trials = trials;
  report.empirical_quantile =
      Quantile(std::move(values), 1.0 - std::min(1.0, slack * beta));
  report.passed = report.empirical_quantile <= report.theoretical;
  return report;
}

BoundReport ValidateOrderStat(double eta, int d, double beta, int trials,
                              double slack, RngStream& rng) {
  const int m = static_cast<int>(std::ceil(eta * d - 1e-9));
  return RunBoundReport(OrderStatBound(eta, d, beta), beta, slack, trials, rng,
                        [d, m](RngStream& r) {
                          Vector v = r.NormalVector(d).array().square();
                          std::nth_element(v.data(), v.data() + (m - 1),
                                           v.data() + d, std::greater<>());
                          return v(m - 1);
                        });
}

BoundReport ValidateSubsetSum(double eta, int d, double beta, int trials,
                              double slack, RngStream& rng) {
  const int m = static_cast<int>(std::ceil(eta * d - 1e-9));
  return RunBoundReport(SubsetSumBound(eta, d, beta), beta, slack, trials, rng,
                        [d, m](RngStream& r) {
                          Vector v = r.NormalVector(d).array().square();
                          std::sort(v.data(), v.data() + d, std::greater<>());
                          return v.head(m).sum();
                        });
}

BoundReport ValidateCovarianceDeviation(int d, int n, double beta, int trials,
                                        double slack, RngStream& rng) {
  return RunBoundReport(3.0 * std::sqrt(static_cast<double>(d) / n), beta,
                        slack, trials, rng, [d, n](RngStream& r) {
                          Matrix x(d, n);
                          for (int j = 0; j < n; ++j) x.col(j) = r.NormalVector(d);
                          return CovarianceDeviation(x);
                        });
}

BoundReport ValidateShortFlat(int n, double eta, double beta, int trials,
                              double slack, RngStream& rng) {
  const ShortFlatBounds b = ResidualShortFlatBounds(eta, n, beta);
  return RunBoundReport(1.0, beta, slack, trials, rng,
                        [n, eta, b](RngStream& r) {
                          const ShortFlatDecomposition dec =
                              ShortFlatDecompose(r.NormalVector(n), eta);
                          return std::max(dec.norm_z1_sq / b.z1_sq,
                                          dec.norm_z2_inf_sq / b.z2_inf_sq);
                        });
}

BoundReport ValidateSparseSpectral(int d, int n, int k, double beta,
                                   int trials, double slack, RngStream& rng) {
  return RunBoundReport(SparseSpectralBound(d, n, k, beta), beta, slack, trials,
                        rng, [d, n, k](RngStream& r) {
                          Matrix x(d, n);
                          for (int j = 0; j < n; ++j) x.col(j) = r.NormalVector(d);
                          return SparseSpectralNorm(x, k).value;
                        });
}

}  // namespace rpbayes
