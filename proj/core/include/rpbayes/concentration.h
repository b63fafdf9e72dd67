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

#ifndef RPBAYES_CONCENTRATION_H_
#define RPBAYES_CONCENTRATION_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "rpbayes/numerics.h"

namespace rpbayes {

inline constexpr double kChi = 4.0;
inline constexpr double kSubsetSumConstant = 3.0;
inline constexpr double kSparseSpectralConstant = 2.0;

// 2 log(e/eta) + (2/(eta d)) log(1/beta).
double OrderStatBound(double eta, int d, double beta);

// C (eta d log(e/eta) + log(1/beta)).
double SubsetSumBound(double eta, int d, double beta,
                      double constant = kSubsetSumConstant);

// C (sqrt(d) + sqrt(k log(en/k)) + sqrt(log(1/beta))).
double SparseSpectralBound(int d, int n, int k, double beta,
                           double constant = kSparseSpectralConstant);

struct SparseSpectralResult {
  double value = 0.0;
  std::vector<int> subset;
  bool exact = false;
};

// Operator norm of the columns of x listed in `columns`.
double SubmatrixOperatorNorm(const Matrix& x, const std::vector<int>& columns);

SparseSpectralResult SparseSpectralNorm(const Matrix& x, int k,
                                        int64_t exact_budget = 2'000'000);

// Local search only; never exceeds the exact value.
SparseSpectralResult SparseSpectralNormHeuristic(const Matrix& x, int k);

// ||(1/n) X X^T - I||_op for a d x n design.
double CovarianceDeviation(const Matrix& x);

struct ShortFlatDecomposition {
  // Indices of the short part, sorted ascending, with matching values.
  std::vector<int> support;
  std::vector<double> z1_values;
  // Dense flat part; zero on `support`.
  Vector z2;
  double eta = 0.0;
  double norm_z1_sq = 0.0;
  double norm_z2_inf_sq = 0.0;

  Vector Z1() const;
  Vector Reconstruct() const { return Z1() + z2; }
};

// z1 takes the ceil(eta n) largest |y_i|, ties to the lowest index.
ShortFlatDecomposition ShortFlatDecompose(const Vector& y, double eta);

// Same split with an explicit short-part size.
ShortFlatDecomposition ShortFlatDecomposeCount(const Vector& y, int count,
                                               double eta);

// True when the declared norms match the vectors to 1e-10.
bool VerifyShortFlat(const ShortFlatDecomposition& dec, const Vector& y);

struct ShortFlatBounds {
  double z1_sq = 0.0;
  double z2_inf_sq = 0.0;
};

// chi (eta n log(1/eta) + log(1/beta)) and
// chi log(1/eta) + chi log(1/beta) / (eta n).
ShortFlatBounds ResidualShortFlatBounds(double eta, int n, double beta,
                                        double chi = kChi);

struct BoundReport {
  double theoretical = 0.0;
  double empirical_quantile = 0.0;
  int trials = 0;
  bool passed = false;
};

// Draws `trials` values of `statistic` and compares their
// (1 - slack * beta) quantile with `theoretical`.
BoundReport RunBoundReport(double theoretical, double beta, double slack,
                           int trials, RngStream& rng,
                           const std::function<double(RngStream&)>& statistic);

BoundReport ValidateOrderStat(double eta, int d, double beta, int trials,
                              double slack, RngStream& rng);
BoundReport ValidateSubsetSum(double eta, int d, double beta, int trials,
                              double slack, RngStream& rng);
// Against 3 sqrt(d/n).
BoundReport ValidateCovarianceDeviation(int d, int n, double beta, int trials,
                                        double slack, RngStream& rng);
// Statistic is the larger of the two ratios to ResidualShortFlatBounds.
BoundReport ValidateShortFlat(int n, double eta, double beta, int trials,
                              double slack, RngStream& rng);
BoundReport ValidateSparseSpectral(int d, int n, int k, double beta,
                                   int trials, double slack, RngStream& rng);

}  // namespace rpbayes

#endif  // RPBAYES_CONCENTRATION_H_
