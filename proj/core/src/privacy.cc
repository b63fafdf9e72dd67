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

#include "rpbayes/privacy.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "rpbayes/robustmean.h"

namespace rpbayes {
namespace {

double LogBallVolume(int d, double r) {
  return 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0) +
         d * std::log(r);
}

int64_t SampleIndex(const std::vector<double>& cumulative, RngStream& rng) {
  const double u = rng.Uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return it - cumulative.begin();
}

std::vector<double> Cumulative(const std::vector<double>& p) {
  std::vector<double> c(p.size());
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    c[i] = acc;
  }
  return c;
}

}  // namespace

RateFunction RateFunction::MeanStat(int d, int n, double beta) {
  return {RateKind::kMeanStat, kStatConstant, d, n, beta};
}

RateFunction RateFunction::MeanEff(int d, int n, double beta) {
  return {RateKind::kMeanEff, kEffConstant, d, n, beta};
}

RateFunction RateFunction::Regression(RateKind kind, int d, int n,
                                      double beta) {
  return {kind, kRegressionRateConstant, d, n, beta};
}

double RateFunction::operator()(double eta) const {
  if (eta <= 0.0) return 0.0;
  switch (kind) {
    case RateKind::kMeanStat:
      return constant * StatisticalRobustRate(eta, d, n, beta);
    case RateKind::kMeanEff:
      return constant * EfficientRobustRate(eta, d, n, beta);
    case RateKind::kRegCritical:
    case RateKind::kRegWeak: {
      const double l = std::log(1.0 / eta);
      const double stat = std::sqrt((d + std::log(1.0 / beta)) / n);
      return constant * std::sqrt(eta * eta * l * l + eta * l * stat);
    }
  }
  return 0.0;
}

RobustDistanceScorer::RobustDistanceScorer(int n, BudgetEstimator estimator,
                                           RateFunction rate, double slack)
    : n_(n),
      max_budget_(std::max(0, (n - 1) / 3)),
      estimator_(std::move(estimator)),
      rate_(rate),
      slack_(slack) {}

const Vector* RobustDistanceScorer::EstimateAt(int t) {
  auto it = cache_.find(t);
  if (it == cache_.end()) {
    absl::StatusOr<Vector> est = estimator_(t);
    it = cache_
             .emplace(t, est.ok() ? std::optional<Vector>(*std::move(est))
                                  : std::nullopt)
             .first;
  }
  return it->second ? &*it->second : nullptr;
}

bool RobustDistanceScorer::Certifies(const Vector& theta, int t) {
  const Vector* est = EstimateAt(t);
  if (est == nullptr) return false;
  return (*est - theta).norm() <=
         rate_(static_cast<double>(t) / n_) + slack_;
}

int RobustDistanceScorer::Score(const Vector& theta) {
  if (Certifies(theta, 0)) return 0;
  int lo = 0;
  int hi = -1;
  for (int t = 1; t <= max_budget_; t *= 2) {
    if (Certifies(theta, t)) {
      hi = t;
      break;
    }
    lo = t;
  }
  if (hi < 0) {
    if (lo < max_budget_ && Certifies(theta, max_budget_)) {
      hi = max_budget_;
    } else {
      return n_;
    }
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (Certifies(theta, mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

Vector ScoreField::CellCenter(int64_t i) const {
  Vector c = center;
  for (int j = 0; j < dim(); ++j) c(j) += cell * indices[i][j];
  return c;
}

absl::StatusOr<std::vector<std::vector<int>>> GridIndices(
    const GridSpec& grid) {
  const int d = static_cast<int>(grid.center.size());
  if (d < 1) return absl::InvalidArgumentError("grid dimension must be >= 1");
  if (!(grid.cell > 0.0) || !(grid.radius >= 0.0)) {
    return absl::InvalidArgumentError("grid needs cell > 0 and radius >= 0");
  }
  const int m = static_cast<int>(std::floor(grid.radius / grid.cell));
  const double log_box = d * std::log(2.0 * m + 1.0);
  if (log_box > std::log(1e8)) {
    const double required = std::exp(
        LogBallVolume(d, grid.radius) - d * std::log(grid.cell));
    if (required > static_cast<double>(grid.max_cells)) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "grid needs about ", static_cast<int64_t>(required),
          " cells, budget is ", grid.max_cells));
    }
  }
  std::vector<std::vector<int>> out;
  std::vector<int> idx(d, -m);
  const double r2 = grid.radius * grid.radius;
  int64_t count = 0;
  while (true) {
    double norm2 = 0.0;
    for (int v : idx) norm2 += grid.cell * grid.cell * v * v;
    if (norm2 <= r2 * (1.0 + 1e-12)) {
      ++count;
      if (count <= grid.max_cells) out.push_back(idx);
    }
    int j = d - 1;
    while (j >= 0 && idx[j] == m) {
      idx[j] = -m;
      --j;
    }
    if (j < 0) break;
    ++idx[j];
  }
  if (count > grid.max_cells) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "grid needs ", count, " cells, budget is ", grid.max_cells));
  }
  return out;
}

absl::StatusOr<ScoreField> BuildScoreField(const GridSpec& grid,
                                           RobustDistanceScorer& scorer) {
  absl::StatusOr<std::vector<std::vector<int>>> indices = GridIndices(grid);
  if (!indices.ok()) return indices.status();
  ScoreField field;
  field.center = grid.center;
  field.radius = grid.radius;
  field.cell = grid.cell;
  field.n = scorer.n();
  field.indices = *std::move(indices);
  field.scores.resize(field.indices.size());
  for (int64_t i = 0; i < field.size(); ++i) {
    field.scores[i] = scorer.Score(field.CellCenter(i));
  }
  return field;
}

std::string ScoreFieldToText(const ScoreField& field) {
  std::string out;
  for (int64_t i = 0; i < field.size(); ++i) {
    absl::StrAppend(&out, absl::StrJoin(field.indices[i], ","), ",",
                    field.scores[i], "\n");
  }
  return out;
}

std::vector<double> CellProbabilities(const ScoreField& field, double epsilon) {
  std::vector<double> p(field.scores.size());
  if (p.empty()) return p;
  const int s_min = *std::min_element(field.scores.begin(), field.scores.end());
  double total = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(-0.5 * epsilon * (field.scores[i] - s_min));
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

absl::StatusOr<int64_t> ExpMechanismCell(const ScoreField& field,
                                         double epsilon, RngStream& rng) {
  if (field.scores.empty()) return absl::InvalidArgumentError("empty field");
  if (!(epsilon > 0.0)) return absl::InvalidArgumentError("epsilon must be > 0");
  return SampleIndex(Cumulative(CellProbabilities(field, epsilon)), rng);
}

absl::StatusOr<Vector> ExpMechanismGrid(const ScoreField& field, double epsilon,
                                        RngStream& rng) {
  absl::StatusOr<int64_t> cell = ExpMechanismCell(field, epsilon, rng);
  if (!cell.ok()) return cell.status();
  return field.CellCenter(*cell);
}

std::string MeanModeName(MeanMode mode) {
  return mode == MeanMode::kStat ? "stat" : "eff";
}

absl::StatusOr<MeanMode> ParseMeanMode(const std::string& name) {
  if (name == "stat") return MeanMode::kStat;
  if (name == "eff") return MeanMode::kEff;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown mean mode '", name, "' (stat|eff)"));
}

double PrivacyCorruptionLevel(int d, int n, double epsilon, double beta) {
  const double eta = (d + std::log(1.0 / beta)) / (epsilon * n);
  return std::clamp(eta, 1.0 / n, 1.0 / 3.0);
}

BudgetEstimator MeanBudgetEstimator(const MeanDataset& data, MeanMode mode,
                                    double beta, int64_t exact_budget) {
  return [data, mode, beta, exact_budget](int t) -> absl::StatusOr<Vector> {
    if (t == 0) return data.Mean();
    const double eta = static_cast<double>(t) / data.n();
    if (mode == MeanMode::kStat) {
      absl::StatusOr<StatisticalResult> r =
          RobustMeanStatistical(data, eta, beta, exact_budget);
      if (!r.ok()) return r.status();
      return r->estimate;
    }
    FilterOptions options;
    options.beta = beta;
    absl::StatusOr<FilterResult> r = RobustMeanFilter(data, eta, options);
    if (!r.ok()) return r.status();
    return r->estimate;
  };
}

absl::StatusOr<ScoreField> MeanScoreField(const MeanDataset& data,
                                          double epsilon, double beta,
                                          double radius, MeanMode mode,
                                          const PrivateMeanOptions& options) {
  if (!(epsilon > 0.0)) return absl::InvalidArgumentError("epsilon must be > 0");
  if (!(radius > 0.0)) return absl::InvalidArgumentError("radius must be > 0");
  const int n = data.n();
  const int d = data.d();
  const RateFunction rate = mode == MeanMode::kStat
                                ? RateFunction::MeanStat(d, n, beta)
                                : RateFunction::MeanEff(d, n, beta);
  const double alpha =
      rate(PrivacyCorruptionLevel(d, n, epsilon, beta));
  const double h = alpha / (2.0 * std::sqrt(static_cast<double>(d)));
  const double half_diag = 0.5 * h * std::sqrt(static_cast<double>(d));
  GridSpec grid;
  grid.center = Vector::Zero(d);
  grid.cell = h;
  grid.radius = 2.0 * radius + half_diag;
  grid.max_cells = options.max_cells;
  RobustDistanceScorer scorer(
      n, MeanBudgetEstimator(data, mode, beta, options.exact_budget), rate,
      half_diag);
  return BuildScoreField(grid, scorer);
}

absl::StatusOr<PrivateMeanResult> PrivateEmpiricalMean(
    const MeanDataset& data, double epsilon, double beta, double radius,
    MeanMode mode, RngStream& rng, const PrivateMeanOptions& options) {
  absl::StatusOr<ScoreField> field =
      MeanScoreField(data, epsilon, beta, radius, mode, options);
  if (!field.ok()) return field.status();
  absl::StatusOr<int64_t> cell = ExpMechanismCell(*field, epsilon, rng);
  if (!cell.ok()) return cell.status();
  PrivateMeanResult result;
  result.estimate = field->CellCenter(*cell);
  result.cell = field->cell;
  result.alpha_target = 2.0 * field->cell * std::sqrt(data.d() * 1.0);
  result.cells = field->size();
  result.selected_score = field->scores[*cell];
  return result;
}

int MaxScoreDifference(const ScoreField& a, const ScoreField& b) {
  int best = 0;
  const int64_t m = std::min(a.size(), b.size());
  for (int64_t i = 0; i < m; ++i) {
    best = std::max(best, std::abs(a.scores[i] - b.scores[i]));
  }
  return best;
}

absl::StatusOr<SensitivityReport> SensitivityAudit(
    const AdjacentFieldBuilder& builder, int pairs, RngStream& rng) {
  if (pairs < 1) return absl::InvalidArgumentError("pairs must be >= 1");
  SensitivityReport report;
  for (int p = 0; p < pairs; ++p) {
    RngStream child = rng.Split(static_cast<uint64_t>(p));
    absl::StatusOr<std::pair<ScoreField, ScoreField>> fields = builder(child);
    if (!fields.ok()) return fields.status();
    if (fields->first.size() != fields->second.size()) {
      return absl::InternalError("adjacent fields use different grids");
    }
    const int diff = MaxScoreDifference(fields->first, fields->second);
    report.max_difference = std::max(report.max_difference, diff);
    if (diff > 1) ++report.violations;
    ++report.pairs;
  }
  return report;
}

MeanDataset SwapOneRow(const MeanDataset& data, RngStream& rng) {
  MeanDataset out = data;
  const int i = static_cast<int>(rng.UniformInt(data.n()));
  out.samples.row(i) = rng.NormalVector(data.d()).transpose();
  return out;
}

RatioAuditReport RatioAudit(const ScoreField& a, const ScoreField& b,
                            double epsilon, int sensitivity, int draws,
                            int min_count, RngStream& rng) {
  RatioAuditReport report;
  const std::vector<double> pa = CellProbabilities(a, epsilon);
  const std::vector<double> pb = CellProbabilities(b, epsilon);
  const size_t m = std::min(pa.size(), pb.size());
  for (size_t i = 0; i < m; ++i) {
    report.max_exact_log_ratio = std::max(
        report.max_exact_log_ratio, std::abs(std::log(pa[i] / pb[i])));
  }
  const std::vector<double> ca = Cumulative(pa);
  const std::vector<double> cb = Cumulative(pb);
  std::vector<int64_t> na(m, 0), nb(m, 0);
  RngStream ra = rng.Split(1);
  RngStream rb = rng.Split(2);
  for (int k = 0; k < draws; ++k) {
    ++na[SampleIndex(ca, ra)];
    ++nb[SampleIndex(cb, rb)];
  }
  const double allowed = epsilon * sensitivity;
  report.worst_excess = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < m; ++i) {
    if (na[i] < min_count || nb[i] < min_count) continue;
    ++report.cells_tested;
    const double ratio =
        std::abs(std::log(static_cast<double>(na[i]) / nb[i]));
    const double bound =
        allowed + 3.0 * std::sqrt(1.0 / na[i] + 1.0 / nb[i]);
    report.worst_excess = std::max(report.worst_excess, ratio - bound);
    if (ratio > bound) ++report.violations;
  }
  return report;
}

}  // namespace rpbayes
