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

#ifndef RPBAYES_BAYESREG_H_
#define RPBAYES_BAYESREG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "rpbayes/concentration.h"
#include "rpbayes/model.h"
#include "rpbayes/numerics.h"
#include "rpbayes/privacy.h"

namespace rpbayes {

inline constexpr double kTauConstant = 3.0;

enum class RegressionStage {
  kRough,
  kRefined,
  kPosterior,
  kTwoStage,
  kCritical,
  kPriorMean,
};

std::string StageName(RegressionStage stage);

enum class CertificateKind {
  // Short-flat split of the kept responses.
  kResponse,
  // Short-flat split of y_K - X_K^T anchor.
  kResidual,
  // Short-flat split of X_K^T (anchor - anchor2).
  kDirection,
};

struct CertificateRecord {
  CertificateKind kind = CertificateKind::kResponse;
  ShortFlatDecomposition decomposition;
  Vector anchor;
  Vector anchor2;
};

struct RegressionEstimate {
  Vector w_hat;
  RegressionStage stage = RegressionStage::kRough;
  // true keeps the point.
  std::vector<bool> kept_mask;
  std::vector<CertificateRecord> certificates;
  double covariance_deviation = 0.0;
  // Indices whose residual vectors the completion step replaced.
  std::vector<int> replaced;
  double eta = 0.0;

  int Kept() const;
};

struct RegressionOptions {
  double chi = kChi;
};

// chi sqrt((d + log(1/beta)) / n).
double CovarianceThreshold(int d, int n, double beta, double chi = kChi);

absl::StatusOr<RegressionEstimate> CriticalPosteriorEstimate(
    const RegressionDataset& observed, double sigma2, double eta, double beta,
    const RegressionOptions& options = {});

absl::StatusOr<RegressionEstimate> RoughRegression(
    const RegressionDataset& observed, double eta, double beta,
    const RegressionOptions& options = {});

absl::StatusOr<RegressionEstimate> RefineRegression(
    const RegressionDataset& observed, const Vector& w_init, double eta,
    double beta, const RegressionOptions& options = {});

absl::StatusOr<RegressionEstimate> PosteriorRefine(
    const RegressionDataset& observed, const Vector& w1, double sigma2,
    double eta, double beta, const RegressionOptions& options = {});

// Rough, refine, then posterior refine on the same data.
absl::StatusOr<RegressionEstimate> WeakPriorPipeline(
    const RegressionDataset& observed, double sigma2, double eta, double beta,
    const RegressionOptions& options = {});

// sup over |S| <= ceil(2 eta n) of ||(1/n) sum_S z_i||.
struct UncenteredResilience {
  double value = 0.0;
  std::vector<int> subset;
  bool exact = false;
};

UncenteredResilience UncenteredResilienceOf(const Matrix& rows, double eta,
                                            int64_t exact_budget = 2'000'000);

struct CompletionResult {
  Vector mean;
  // Replaced indices, ascending.
  std::vector<int> replaced;
  Matrix completed;
  UncenteredResilience resilience;
};

// Rows of `vs` are the vectors.
absl::StatusOr<CompletionResult> CompletionMean(
    const Matrix& vs, double eta, double tau,
    int64_t exact_budget = 2'000'000);

// Resilience level fed to CompletionMean by the two-stage estimator.
double TwoStageTau(double eta, int d, int n, double beta,
                   double constant = kTauConstant);

// w + (g - lambda w) / (1 + lambda).
Vector AssemblePosterior(const Vector& w, const Vector& g, double lambda);

// u + (A + lambda I)^{-1} (g(u) - lambda u), with A = XX^T/n,
// g(u) = X(y - X^T u)/n and lambda = 1/(n sigma2).
absl::StatusOr<Vector> PosteriorIdentity(const RegressionDataset& data,
                                         double sigma2, const Vector& u);

absl::StatusOr<RegressionEstimate> TwoStagePosterior(
    const RegressionDataset& observed, double sigma2, double eta, double beta,
    const RegressionOptions& options = {});

enum class Regime { kOverlyStrong, kCritical, kWeak };

// Critical when 0.1/n <= sigma2 <= 10/n.
Regime ClassifyRegime(double sigma2, int n);

// Prior mean zero for overly strong priors, else the regime's estimator.
absl::StatusOr<RegressionEstimate> RobustPosteriorRegression(
    const RegressionDataset& observed, double sigma2, double eta, double beta,
    const RegressionOptions& options = {});

// Re-derives every certificate and the covariance deviation from the kept
// data. Empty string on success, else a description of the mismatch.
std::string VerifyRegressionEstimate(const RegressionDataset& observed,
                                     const RegressionEstimate& estimate);

std::string RegressionEstimateToJson(const RegressionEstimate& estimate);

enum class RegressionMode { kCritical, kWeak, kInefficient };

std::string RegressionModeName(RegressionMode mode);
absl::StatusOr<RegressionMode> ParseRegressionMode(const std::string& name);

BudgetEstimator RegressionBudgetEstimator(const RegressionDataset& data,
                                          double sigma2, double beta,
                                          RegressionMode mode);

absl::StatusOr<ScoreField> RegressionScoreField(
    const RegressionDataset& data, double sigma2, double epsilon, double beta,
    RegressionMode mode, int64_t max_cells = kDefaultMaxCells);

struct PrivateRegressionResult {
  Vector estimate;
  double cell = 0.0;
  int64_t cells = 0;
  int selected_score = 0;
};

absl::StatusOr<PrivateRegressionResult> PrivateRegression(
    const RegressionDataset& data, double sigma2, double epsilon, double beta,
    RegressionMode mode, RngStream& rng, int64_t max_cells = kDefaultMaxCells);

}  // namespace rpbayes

#endif  // RPBAYES_BAYESREG_H_
