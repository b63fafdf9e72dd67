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

#ifndef RPBAYES_PRIVACY_H_
#define RPBAYES_PRIVACY_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "rpbayes/model.h"
#include "rpbayes/numerics.h"

namespace rpbayes {

inline constexpr double kRegressionRateConstant = 1.0;
inline constexpr int64_t kDefaultMaxCells = 2'000'000;

enum class RateKind { kMeanStat, kMeanEff, kRegCritical, kRegWeak };

struct RateFunction {
  RateKind kind = RateKind::kMeanEff;
  double constant = 8.0;
  int d = 1;
  int n = 1;
  double beta = 0.05;

  static RateFunction MeanStat(int d, int n, double beta);
  static RateFunction MeanEff(int d, int n, double beta);
  static RateFunction Regression(RateKind kind, int d, int n, double beta);

  double operator()(double eta) const;
};

// Robust estimate of the target statistic at corruption budget T.
using BudgetEstimator = std::function<absl::StatusOr<Vector>(int t)>;

// Smallest T such that the estimate at budget T lies within
// rate(T/n) + slack of theta; n when no T up to floor(n/3) qualifies.
class RobustDistanceScorer {
 public:
  RobustDistanceScorer(int n, BudgetEstimator estimator, RateFunction rate,
                       double slack);

  int Score(const Vector& theta);
  // Cached estimate at budget T, or nullptr if the estimator failed.
  const Vector* EstimateAt(int t);
  int n() const { return n_; }
  int max_budget() const { return max_budget_; }

 private:
  bool Certifies(const Vector& theta, int t);

  int n_;
  int max_budget_;
  BudgetEstimator estimator_;
  RateFunction rate_;
  double slack_;
  std::map<int, std::optional<Vector>> cache_;
};

struct ScoreField {
  Vector center;
  double radius = 0.0;
  double cell = 0.0;
  int n = 0;
  // Lexicographic order of lattice indices.
  std::vector<std::vector<int>> indices;
  std::vector<int> scores;

  int dim() const { return static_cast<int>(center.size()); }
  int64_t size() const { return static_cast<int64_t>(scores.size()); }
  Vector CellCenter(int64_t i) const;
};

struct GridSpec {
  Vector center;
  double radius = 0.0;
  double cell = 0.0;
  int64_t max_cells = kDefaultMaxCells;
};

// Lattice points center + cell * index inside the ball, lexicographic.
absl::StatusOr<std::vector<std::vector<int>>> GridIndices(const GridSpec& grid);

absl::StatusOr<ScoreField> BuildScoreField(const GridSpec& grid,
                                           RobustDistanceScorer& scorer);

// One line per cell: index_0,...,index_{d-1},score.
std::string ScoreFieldToText(const ScoreField& field);

// Sampling probabilities proportional to exp(-epsilon * score / 2).
std::vector<double> CellProbabilities(const ScoreField& field, double epsilon);

absl::StatusOr<int64_t> ExpMechanismCell(const ScoreField& field,
                                         double epsilon, RngStream& rng);
absl::StatusOr<Vector> ExpMechanismGrid(const ScoreField& field, double epsilon,
                                        RngStream& rng);

enum class MeanMode { kStat, kEff };

std::string MeanModeName(MeanMode mode);
absl::StatusOr<MeanMode> ParseMeanMode(const std::string& name);

// clip((d + log(1/beta)) / (epsilon n), 1/n, 1/3).
double PrivacyCorruptionLevel(int d, int n, double epsilon, double beta);

struct PrivateMeanOptions {
  int64_t max_cells = kDefaultMaxCells;
  int64_t exact_budget = 2'000'000;
};

struct PrivateMeanResult {
  Vector estimate;
  double alpha_target = 0.0;
  double cell = 0.0;
  int64_t cells = 0;
  int selected_score = 0;
};

// Estimator used by the mean mechanism at budget T.
BudgetEstimator MeanBudgetEstimator(const MeanDataset& data, MeanMode mode,
                                    double beta, int64_t exact_budget);

absl::StatusOr<ScoreField> MeanScoreField(const MeanDataset& data,
                                          double epsilon, double beta,
                                          double radius, MeanMode mode,
                                          const PrivateMeanOptions& options = {});

absl::StatusOr<PrivateMeanResult> PrivateEmpiricalMean(
    const MeanDataset& data, double epsilon, double beta, double radius,
    MeanMode mode, RngStream& rng, const PrivateMeanOptions& options = {});

int MaxScoreDifference(const ScoreField& a, const ScoreField& b);

using AdjacentFieldBuilder =
    std::function<absl::StatusOr<std::pair<ScoreField, ScoreField>>(
        RngStream& rng)>;

struct SensitivityReport {
  int max_difference = 0;
  int pairs = 0;
  // Pairs whose fields differ by more than one somewhere.
  int violations = 0;
};

absl::StatusOr<SensitivityReport> SensitivityAudit(
    const AdjacentFieldBuilder& builder, int pairs, RngStream& rng);

// Swaps one uniformly chosen row for a fresh N(0, I) draw.
MeanDataset SwapOneRow(const MeanDataset& data, RngStream& rng);

struct RatioAuditReport {
  // max over cells of |log p(c) - log p'(c)| from exact probabilities.
  double max_exact_log_ratio = 0.0;
  int cells_tested = 0;
  int violations = 0;
  // Largest observed |log(c/c')| minus the allowed bound.
  double worst_excess = 0.0;
};

// Draws `draws` samples from each field and compares per-cell frequencies
// against exp(epsilon * sensitivity) with three standard errors of slack.
RatioAuditReport RatioAudit(const ScoreField& a, const ScoreField& b,
                            double epsilon, int sensitivity, int draws,
                            int min_count, RngStream& rng);

}  // namespace rpbayes

#endif  // RPBAYES_PRIVACY_H_
