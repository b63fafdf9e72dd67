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

#ifndef RPBAYES_HARNESS_H_
#define RPBAYES_HARNESS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace rpbayes {

enum class Task { kMean, kRegression, kStream, kHardness, kAudit };

std::string TaskName(Task task);
absl::StatusOr<Task> ParseTask(const std::string& name);

struct ExperimentConfig {
  Task task = Task::kMean;
  std::vector<int> n = {500};
  std::vector<int> d = {2};
  std::vector<double> eta = {0.0};
  std::vector<double> epsilon = {1.0};
  std::vector<double> beta = {0.05};
  std::vector<double> sigma2 = {1.0};
  int trials = 10;
  uint64_t seed = 1;
  // stat|eff for mean and stream, critical|weak|inefficient|auto for
  // regression, mean|regression for hardness.
  std::string mode = "eff";
  // private|robust for the mean and regression tasks.
  std::string estimator = "private";
  std::string adversary = "gross";
  double adversary_delta = 10.0;
  // r0 scale for response-replace; zero picks 1/(1 - eta), the largest
  // scale for which r0 stays a density.
  double adversary_s = 0.0;
  // Dataset CSV whose leading rows replace the corrupted points instead of
  // the built-in adversary. Mean and regression tasks only.
  std::string replacement_file;
  // Public radius; zero means derived from the prior.
  double radius = 0.0;
  // posterior|truth.
  std::string error_target = "posterior";
  int batches = 8;
  double alpha = 0.05;
  double k = 20.0;
  double delta = 0.0;
  int degree = 4;
  int draws = 100000;
  int threads = 0;
  bool timing = false;
  std::string output = "out";
};

// Flat key = value lines with optional [section] headers, '#' comments,
// quoted strings, numbers, booleans and [a, b, c] lists.
absl::StatusOr<ExperimentConfig> ParseConfig(const std::string& text);
absl::Status ApplyConfigValue(ExperimentConfig& config, const std::string& key,
                              const std::string& value);
absl::Status ValidateConfig(const ExperimentConfig& config);
std::string ConfigToJson(const ExperimentConfig& config);

struct TrialRow {
  Task task = Task::kMean;
  int n = 0;
  int d = 0;
  double eta = 0.0;
  double epsilon = 0.0;
  double beta = 0.0;
  double sigma2 = 0.0;
  int trial = 0;
  uint64_t seed = 0;
  // NaN for infeasible trials.
  double error = 0.0;
  double runtime_ms = 0.0;
  bool infeasible = false;
};

inline constexpr char kCsvHeader[] =
    "task,n,d,eta,epsilon,beta,trial,seed,error,runtime_ms";

std::string RowsToCsv(const std::vector<TrialRow>& rows);
absl::StatusOr<std::vector<TrialRow>> RowsFromCsv(const std::string& text);

struct RateFitResult {
  double exponent = 0.0;
  double intercept = 0.0;
  double standard_error = 0.0;
  int points = 0;
};

// OLS of log error on log n.
absl::StatusOr<RateFitResult> RateFit(const std::vector<double>& n,
                                      const std::vector<double>& error);

struct RateRow {
  int n = 0;
  int d = 0;
  double eta = 0.0;
  double epsilon = 0.0;
  double beta = 0.0;
  double sigma2 = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double q95 = 0.0;
  double theoretical = 0.0;
  double ratio = 0.0;
  int trials = 0;
  int infeasible = 0;
};

struct RateReport {
  std::vector<RateRow> rows;
  // Present when at least three distinct n carry finite medians.
  bool has_fit = false;
  RateFitResult fit;
  // Task-specific extras, such as audit or distinguisher summaries.
  std::map<std::string, double> extras;
};

// `theoretical` maps a row to its reference rate; rows come back grouped by
// configuration in first-appearance order.
RateReport BuildRateReport(
    const std::vector<TrialRow>& rows,
    const std::function<double(const TrialRow&)>& theoretical);

double TheoreticalRate(const ExperimentConfig& config, const TrialRow& row);

std::string RateReportToJson(const RateReport& report,
                             const ExperimentConfig* config);

struct RunOutput {
  std::vector<TrialRow> rows;
  RateReport report;
  // Extra JSON lines (stream estimates, verdicts).
  std::vector<std::string> log_lines;
  bool any_infeasible = false;
};

absl::StatusOr<RunOutput> Run(const ExperimentConfig& config);

// Writes results.csv, summary.json and, when present, log.jsonl.
absl::Status WriteRunOutput(const ExperimentConfig& config,
                            const RunOutput& output);

// 0 for OK, 2 for failed-precondition (infeasible or bottom), 1 otherwise.
int ExitCodeFor(const absl::Status& status);

}  // namespace rpbayes

#endif  // RPBAYES_HARNESS_H_
