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

#include "rpbayes/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "json.hpp"
#include "rpbayes/bayesmean.h"
#include "rpbayes/bayesreg.h"
#include "rpbayes/hardness.h"
#include "rpbayes/model.h"
#include "rpbayes/privacy.h"
#include "rpbayes/robustmean.h"

namespace rpbayes {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Json = nlohmann::ordered_json;

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  return absl::StrFormat("%.17g", v);
}

absl::StatusOr<double> ParseDouble(absl::string_view text) {
  double v;
  if (text == "nan") return kNaN;
  if (!absl::SimpleAtod(text, &v)) {
    return absl::InvalidArgumentError(absl::StrCat("not a number: '", text, "'"));
  }
  return v;
}

absl::StatusOr<std::vector<std::string>> SplitList(std::string value) {
  absl::string_view v = absl::StripAsciiWhitespace(value);
  if (absl::ConsumePrefix(&v, "[")) {
    if (!absl::ConsumeSuffix(&v, "]")) {
      return absl::InvalidArgumentError(absl::StrCat("unterminated list: ", value));
    }
  }
  std::vector<std::string> out;
  for (absl::string_view part : absl::StrSplit(v, ',', absl::SkipWhitespace())) {
    out.emplace_back(absl::StripAsciiWhitespace(part));
  }
  if (out.empty()) return absl::InvalidArgumentError("empty value");
  return out;
}

std::string Unquote(absl::string_view v) {
  v = absl::StripAsciiWhitespace(v);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') &&
      v.back() == v.front()) {
    v = v.substr(1, v.size() - 2);
  }
  return std::string(v);
}

absl::Status ParseIntList(const std::string& value, std::vector<int>& out) {
  absl::StatusOr<std::vector<std::string>> parts = SplitList(value);
  if (!parts.ok()) return parts.status();
  out.clear();
  for (const std::string& p : *parts) {
    int v;
    if (!absl::SimpleAtoi(p, &v)) {
      return absl::InvalidArgumentError(absl::StrCat("not an integer: '", p, "'"));
    }
    out.push_back(v);
  }
  return absl::OkStatus();
}

absl::Status ParseDoubleList(const std::string& value, std::vector<double>& out) {
  absl::StatusOr<std::vector<std::string>> parts = SplitList(value);
  if (!parts.ok()) return parts.status();
  out.clear();
  for (const std::string& p : *parts) {
    absl::StatusOr<double> v = ParseDouble(p);
    if (!v.ok()) return v.status();
    out.push_back(*v);
  }
  return absl::OkStatus();
}

template <typename T>
absl::Status ParseScalar(const std::string& value, T& out) {
  if constexpr (std::is_same_v<T, bool>) {
    const std::string v = absl::AsciiStrToLower(Unquote(value));
    if (v == "true" || v == "1") {
      out = true;
    } else if (v == "false" || v == "0") {
      out = false;
    } else {
      return absl::InvalidArgumentError(absl::StrCat("not a boolean: ", value));
    }
    return absl::OkStatus();
  } else if constexpr (std::is_same_v<T, std::string>) {
    out = Unquote(value);
    return absl::OkStatus();
  } else if constexpr (std::is_floating_point_v<T>) {
    absl::StatusOr<double> v = ParseDouble(Unquote(value));
    if (!v.ok()) return v.status();
    out = *v;
    return absl::OkStatus();
  } else {
    if (!absl::SimpleAtoi(Unquote(value), &out)) {
      return absl::InvalidArgumentError(absl::StrCat("not an integer: ", value));
    }
    return absl::OkStatus();
  }
}

double Quantile(std::vector<double> v, double q) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(v.size() - 1, lo + 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

struct TrialResult {
  double error = kNaN;
  bool infeasible = false;
  std::map<std::string, double> extras;
  std::vector<std::string> log_lines;
};

struct GridPoint {
  int n;
  int d;
  double eta;
  double epsilon;
  double beta;
  double sigma2;
};

struct Replacements {
  std::optional<MeanDataset> mean;
  std::optional<RegressionDataset> regression;
};

absl::StatusOr<Replacements> LoadReplacements(const ExperimentConfig& c) {
  Replacements out;
  if (c.replacement_file.empty()) return out;
  std::ifstream f(c.replacement_file, std::ios::binary);
  if (!f) {
    return absl::NotFoundError(
        absl::StrCat("cannot read replacement file '", c.replacement_file, "'"));
  }
  std::stringstream text;
  text << f.rdbuf();
  if (c.task == Task::kMean) {
    absl::StatusOr<MeanDataset> rows = MeanDatasetFromCsv(text.str(), nullptr);
    if (!rows.ok()) return rows.status();
    out.mean = *std::move(rows);
  } else {
    absl::StatusOr<RegressionDataset> rows =
        RegressionDatasetFromCsv(text.str());
    if (!rows.ok()) return rows.status();
    out.regression = *std::move(rows);
  }
  return out;
}

absl::StatusOr<AdversarySpec> MakeAdversary(const ExperimentConfig& c, int d,
                                            double eta) {
  absl::StatusOr<AdversaryKind> kind = ParseAdversary(c.adversary);
  if (!kind.ok()) return kind.status();
  AdversarySpec adv;
  adv.kind = *kind;
  adv.delta = c.adversary_delta;
  adv.direction = Vector::Unit(d, 0);
  adv.point = c.adversary_delta * Vector::Unit(d, 0);
  adv.response = c.adversary_delta;
  adv.s = c.adversary_s > 0.0 ? c.adversary_s : 1.0 / (1.0 - eta);
  adv.a = c.adversary_delta;
  return adv;
}

absl::StatusOr<TrialResult> MeanTrial(const ExperimentConfig& c,
                                      const GridPoint& g,
                                      const Replacements& rep, RngStream& rng) {
  absl::StatusOr<PriorSpec> prior = PriorSpec::Isotropic(g.d, g.sigma2);
  if (!prior.ok()) return prior.status();
  RngStream data_rng = rng.Split(0);
  absl::StatusOr<MeanInstance> inst = SampleMeanInstance(*prior, g.n, data_rng);
  if (!inst.ok()) return inst.status();
  RngStream corrupt_rng = rng.Split(1);
  absl::StatusOr<ContaminatedMean> obs;
  if (rep.mean.has_value()) {
    obs = CorruptWithRows(inst->data, *rep.mean, g.eta, corrupt_rng);
  } else {
    absl::StatusOr<AdversarySpec> adv = MakeAdversary(c, g.d, g.eta);
    if (!adv.ok()) return adv.status();
    obs = Corrupt(inst->data, *adv, g.eta, corrupt_rng);
  }
  if (!obs.ok()) return obs.status();
  const Vector target = c.error_target == "truth"
                            ? inst->mu
                            : PosteriorMeanMeanModel(inst->data, *prior);
  absl::StatusOr<MeanMode> mode = ParseMeanMode(c.mode);
  if (!mode.ok()) return mode.status();
  Vector estimate;
  if (c.estimator == "private") {
    BayesMeanOptions options;
    if (c.radius > 0.0) options.radius = c.radius;
    RngStream mech_rng = rng.Split(2);
    absl::StatusOr<BayesMeanResult> r = PrivatePosteriorMean(
        obs->observed, *prior, g.epsilon, g.beta, *mode, mech_rng, options);
    if (!r.ok()) return r.status();
    estimate = r->estimate;
  } else {
    Vector xbar;
    if (*mode == MeanMode::kStat) {
      absl::StatusOr<StatisticalResult> r =
          RobustMeanStatistical(obs->observed, g.eta, g.beta);
      if (!r.ok()) return r.status();
      xbar = r->estimate;
    } else {
      FilterOptions options;
      options.beta = g.beta;
      absl::StatusOr<FilterResult> r =
          RobustMeanFilter(obs->observed, g.eta, options);
      if (!r.ok()) return r.status();
      xbar = r->estimate;
    }
    estimate = Shrinkage(*prior, g.n).lambda.entries() * xbar;
  }
  TrialResult out;
  out.error = (estimate - target).norm();
  return out;
}

absl::StatusOr<TrialResult> RegressionTrial(const ExperimentConfig& c,
                                            const GridPoint& g,
                                            const Replacements& rep,
                                            RngStream& rng) {
  RngStream data_rng = rng.Split(0);
  RegressionInstance inst =
      SampleRegressionInstance(g.sigma2, g.n, g.d, data_rng);
  RngStream corrupt_rng = rng.Split(1);
  absl::StatusOr<ContaminatedRegression> obs;
  if (rep.regression.has_value()) {
    obs = CorruptWithRows(inst.data, *rep.regression, g.eta, corrupt_rng);
  } else {
    absl::StatusOr<AdversarySpec> adv = MakeAdversary(c, g.d, g.eta);
    if (!adv.ok()) return adv.status();
    obs = Corrupt(inst.data, *adv, g.eta, corrupt_rng);
  }
  if (!obs.ok()) return obs.status();
  Vector target = inst.w;
  if (c.error_target != "truth") {
    absl::StatusOr<Vector> post = PosteriorMeanRegression(inst.data, g.sigma2);
    if (!post.ok()) return post.status();
    target = *post;
  }
  Vector estimate;
  if (c.estimator == "private") {
    RegressionMode mode = ClassifyRegime(g.sigma2, g.n) == Regime::kCritical
                              ? RegressionMode::kCritical
                              : RegressionMode::kWeak;
    if (c.mode != "auto") {
      absl::StatusOr<RegressionMode> m = ParseRegressionMode(c.mode);
      if (!m.ok()) return m.status();
      mode = *m;
    }
    RngStream mech_rng = rng.Split(2);
    absl::StatusOr<PrivateRegressionResult> r = PrivateRegression(
        obs->observed, g.sigma2, g.epsilon, g.beta, mode, mech_rng);
    if (!r.ok()) return r.status();
    estimate = r->estimate;
  } else {
    absl::StatusOr<RegressionEstimate> r;
    if (c.mode == "auto") {
      r = RobustPosteriorRegression(obs->observed, g.sigma2, g.eta, g.beta);
    } else {
      absl::StatusOr<RegressionMode> m = ParseRegressionMode(c.mode);
      if (!m.ok()) return m.status();
      switch (*m) {
        case RegressionMode::kCritical:
          r = CriticalPosteriorEstimate(obs->observed, g.sigma2, g.eta, g.beta);
          break;
        case RegressionMode::kWeak:
          r = WeakPriorPipeline(obs->observed, g.sigma2, g.eta, g.beta);
          break;
        case RegressionMode::kInefficient:
          r = TwoStagePosterior(obs->observed, g.sigma2, g.eta, g.beta);
          break;
      }
    }
    if (!r.ok()) return r.status();
    estimate = r->w_hat;
  }
  TrialResult out;
  out.error = (estimate - target).norm();
  return out;
}

absl::StatusOr<TrialResult> StreamTrial(const ExperimentConfig& c,
                                        const GridPoint& g, RngStream& rng,
                                        bool log) {
  absl::StatusOr<MeanMode> mode = ParseMeanMode(c.mode);
  if (!mode.ok()) return mode.status();
  RngStream mu_rng = rng.Split(0);
  const Vector mu = std::sqrt(g.sigma2) * mu_rng.NormalVector(g.d);
  EpsilonSchedule schedule{g.epsilon, c.batches};
  StreamOptions options;
  options.beta = g.beta;
  options.radius =
      c.radius > 0.0
          ? c.radius
          : std::sqrt((g.sigma2 + 1.0 / g.n) * (g.d + std::log(1.0 / g.beta)));
  StreamState state = StreamStart(g.n, g.d);
  StreamState exact = StreamStart(g.n, g.d);
  TrialResult out;
  for (int i = 1; i <= c.batches; ++i) {
    RngStream batch_rng = rng.Split(static_cast<uint64_t>(2 * i));
    MeanDataset batch;
    batch.samples.resize(g.n, g.d);
    for (int r = 0; r < g.n; ++r) {
      batch.samples.row(r) = (mu + batch_rng.NormalVector(g.d)).transpose();
    }
    RngStream mech_rng = rng.Split(static_cast<uint64_t>(2 * i + 1));
    absl::StatusOr<StreamState> next =
        StreamUpdate(state, batch, schedule.At(i), *mode, mech_rng, options);
    if (!next.ok()) return next.status();
    state = *std::move(next);
    exact = StreamUpdateWithMean(exact, batch.Mean());
    if (log) out.log_lines.push_back(StreamJsonLine(state, schedule.At(i)));
  }
  const Vector& target = c.error_target == "truth" ? mu : exact.mu;
  out.error = (state.mu - target).norm();
  return out;
}

absl::StatusOr<TrialResult> HardnessTrial(const ExperimentConfig& c,
                                          const GridPoint& g, RngStream& rng,
                                          int trial) {
  const Hypothesis which =
      trial % 2 == 0 ? Hypothesis::kNull : Hypothesis::kPlanted;
  RngStream inst_rng = rng.Split(0);
  absl::StatusOr<Hypothesis> verdict;
  if (c.mode == "regression") {
    absl::StatusOr<MlrInstance> inst =
        GenMlr(g.eta, c.alpha, c.k, g.n, g.d, which, inst_rng);
    if (!inst.ok()) return inst.status();
    const double sigma2 = g.sigma2;
    const double eta = g.eta;
    const double beta = g.beta;
    verdict = RegressionDistinguisher(
        inst->samples,
        [sigma2, eta, beta](const RegressionDataset& data)
            -> absl::StatusOr<Vector> {
          absl::StatusOr<RegressionEstimate> r =
              TwoStagePosterior(data, sigma2, eta, beta);
          if (!r.ok()) return r.status();
          return r->w_hat;
        },
        c.alpha, sigma2);
  } else {
    const double delta = c.delta > 0.0 ? c.delta : 21.0 * c.alpha / g.eta;
    absl::StatusOr<MixtureInstance> inst =
        GenMixture(g.eta, delta, g.n, g.d, which, inst_rng);
    if (!inst.ok()) return inst.status();
    const double eta = g.eta;
    const double beta = g.beta;
    verdict = MeanDistinguisher(
        inst->samples,
        [eta, beta](const MeanDataset& data) -> absl::StatusOr<Vector> {
          FilterOptions options;
          options.beta = beta;
          absl::StatusOr<FilterResult> r = RobustMeanFilter(data, eta, options);
          if (!r.ok()) return r.status();
          return r->estimate;
        },
        c.alpha);
  }
  if (!verdict.ok()) return verdict.status();
  TrialResult out;
  out.error = *verdict == which ? 0.0 : 1.0;
  out.extras[which == Hypothesis::kNull ? "null_trials" : "planted_trials"] = 1;
  out.extras[which == Hypothesis::kNull ? "null_correct" : "planted_correct"] =
      out.error == 0.0 ? 1 : 0;
  Json line;
  line["trial"] = trial;
  line["truth"] = HypothesisName(which);
  line["verdict"] = HypothesisName(*verdict);
  out.log_lines.push_back(line.dump());
  return out;
}

absl::StatusOr<TrialResult> AuditTrial(const ExperimentConfig& c,
                                       const GridPoint& g, RngStream& rng,
                                       int trial) {
  absl::StatusOr<MeanMode> mode = ParseMeanMode(c.mode);
  if (!mode.ok()) return mode.status();
  RngStream data_rng = rng.Split(0);
  MeanDataset data;
  data.samples.resize(g.n, g.d);
  for (int r = 0; r < g.n; ++r) data.samples.row(r) = data_rng.NormalVector(g.d).transpose();
  RngStream swap_rng = rng.Split(1);
  const MeanDataset adjacent = SwapOneRow(data, swap_rng);
  const double radius = c.radius > 0.0 ? c.radius : 1.0;
  absl::StatusOr<ScoreField> a =
      MeanScoreField(data, g.epsilon, g.beta, radius, *mode);
  if (!a.ok()) return a.status();
  absl::StatusOr<ScoreField> b =
      MeanScoreField(adjacent, g.epsilon, g.beta, radius, *mode);
  if (!b.ok()) return b.status();
  TrialResult out;
  out.error = MaxScoreDifference(*a, *b);
  if (trial == 0 && c.draws > 0) {
    RngStream audit_rng = rng.Split(2);
    const RatioAuditReport ratio =
        RatioAudit(*a, *b, g.epsilon, std::max(1, static_cast<int>(out.error)),
                   c.draws, 30, audit_rng);
    out.extras["max_exact_log_ratio"] = ratio.max_exact_log_ratio;
    out.extras["ratio_cells_tested"] = ratio.cells_tested;
    out.extras["ratio_violations"] = ratio.violations;
  }
  return out;
}

std::vector<GridPoint> ExpandGrid(const ExperimentConfig& c) {
  std::vector<GridPoint> grid;
  for (int n : c.n)
    for (int d : c.d)
      for (double eta : c.eta)
        for (double eps : c.epsilon)
          for (double beta : c.beta)
            for (double s2 : c.sigma2) grid.push_back({n, d, eta, eps, beta, s2});
  return grid;
}

}  // namespace

std::string TaskName(Task task) {
  switch (task) {
    case Task::kMean:
      return "mean";
    case Task::kRegression:
      return "regression";
    case Task::kStream:
      return "stream";
    case Task::kHardness:
      return "hardness";
    case Task::kAudit:
      return "audit";
  }
  return "unknown";
}

absl::StatusOr<Task> ParseTask(const std::string& name) {
  for (Task t : {Task::kMean, Task::kRegression, Task::kStream, Task::kHardness,
                 Task::kAudit}) {
    if (TaskName(t) == name) return t;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown task '", name, "'"));
}

absl::Status ApplyConfigValue(ExperimentConfig& c, const std::string& key,
                              const std::string& value) {
  if (key == "task") {
    absl::StatusOr<Task> t = ParseTask(Unquote(value));
    if (!t.ok()) return t.status();
    c.task = *t;
    return absl::OkStatus();
  }
  if (key == "n") return ParseIntList(value, c.n);
  if (key == "d") return ParseIntList(value, c.d);
  if (key == "eta") return ParseDoubleList(value, c.eta);
  if (key == "epsilon") return ParseDoubleList(value, c.epsilon);
  if (key == "beta") return ParseDoubleList(value, c.beta);
  if (key == "sigma2") return ParseDoubleList(value, c.sigma2);
  if (key == "trials") return ParseScalar(value, c.trials);
  if (key == "seed") return ParseScalar(value, c.seed);
  if (key == "mode") return ParseScalar(value, c.mode);
  if (key == "estimator") return ParseScalar(value, c.estimator);
  if (key == "adversary") return ParseScalar(value, c.adversary);
  if (key == "adversary_delta") return ParseScalar(value, c.adversary_delta);
  if (key == "adversary_s") return ParseScalar(value, c.adversary_s);
  if (key == "replacement_file") return ParseScalar(value, c.replacement_file);
  if (key == "radius") return ParseScalar(value, c.radius);
  if (key == "error_target") return ParseScalar(value, c.error_target);
  if (key == "batches") return ParseScalar(value, c.batches);
  if (key == "alpha") return ParseScalar(value, c.alpha);
  if (key == "k") return ParseScalar(value, c.k);
  if (key == "delta") return ParseScalar(value, c.delta);
  if (key == "degree") return ParseScalar(value, c.degree);
  if (key == "draws") return ParseScalar(value, c.draws);
  if (key == "threads") return ParseScalar(value, c.threads);
  if (key == "timing") return ParseScalar(value, c.timing);
  if (key == "output") return ParseScalar(value, c.output);
  return absl::InvalidArgumentError(absl::StrCat("unknown config key '", key, "'"));
}

absl::StatusOr<ExperimentConfig> ParseConfig(const std::string& text) {
  ExperimentConfig c;
  int line_no = 0;
  for (absl::string_view raw : absl::StrSplit(text, '\n')) {
    ++line_no;
    std::string line(raw);
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    absl::string_view v = absl::StripAsciiWhitespace(line);
    if (v.empty() || (v.front() == '[' && v.find('=') == absl::string_view::npos)) {
      continue;
    }
    const size_t eq = v.find('=');
    if (eq == absl::string_view::npos) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": expected key = value"));
    }
    const std::string key(absl::StripAsciiWhitespace(v.substr(0, eq)));
    const std::string value(absl::StripAsciiWhitespace(v.substr(eq + 1)));
    if (absl::Status s = ApplyConfigValue(c, key, value); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": ", s.message()));
    }
  }
  return c;
}

absl::Status ValidateConfig(const ExperimentConfig& c) {
  if (c.trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  for (int v : c.n) {
    if (v < 1) return absl::InvalidArgumentError("n values must be positive");
  }
  for (int v : c.d) {
    if (v < 1) return absl::InvalidArgumentError("d values must be positive");
  }
  for (double v : c.eta) {
    if (!(v >= 0.0 && v < 0.5)) {
      return absl::InvalidArgumentError("eta values must lie in [0, 1/2)");
    }
  }
  for (const std::vector<double>* list : {&c.epsilon, &c.beta}) {
    for (double v : *list) {
      if (!(v > 0.0)) {
        return absl::InvalidArgumentError("epsilon and beta must be positive");
      }
    }
  }
  for (double v : c.sigma2) {
    if (!(v >= 0.0)) return absl::InvalidArgumentError("sigma2 must be >= 0");
  }
  if (c.error_target != "posterior" && c.error_target != "truth") {
    return absl::InvalidArgumentError("error_target must be posterior or truth");
  }
  if (c.estimator != "private" && c.estimator != "robust") {
    return absl::InvalidArgumentError("estimator must be private or robust");
  }
  switch (c.task) {
    case Task::kMean:
    case Task::kStream:
    case Task::kAudit:
      if (!ParseMeanMode(c.mode).ok()) {
        return absl::InvalidArgumentError(
            absl::StrCat("invalid mode '", c.mode, "' (stat|eff)"));
      }
      break;
    case Task::kRegression:
      if (c.mode != "auto" && !ParseRegressionMode(c.mode).ok()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "invalid mode '", c.mode, "' (critical|weak|inefficient|auto)"));
      }
      break;
    case Task::kHardness:
      if (c.mode != "mean" && c.mode != "regression") {
        return absl::InvalidArgumentError(
            absl::StrCat("invalid mode '", c.mode, "' (mean|regression)"));
      }
      break;
  }
  if (c.task != Task::kHardness && c.task != Task::kAudit) {
    if (!ParseAdversary(c.adversary).ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("invalid adversary '", c.adversary, "'"));
    }
  }
  if (!c.replacement_file.empty() && c.task != Task::kMean &&
      c.task != Task::kRegression) {
    return absl::InvalidArgumentError(
        "replacement_file applies only to the mean and regression tasks");
  }
  if (c.batches < 1) return absl::InvalidArgumentError("batches must be >= 1");
  return absl::OkStatus();
}

std::string ConfigToJson(const ExperimentConfig& c) {
  Json j;
  j["task"] = TaskName(c.task);
  j["n"] = c.n;
  j["d"] = c.d;
  j["eta"] = c.eta;
  j["epsilon"] = c.epsilon;
  j["beta"] = c.beta;
  j["sigma2"] = c.sigma2;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["mode"] = c.mode;
  j["estimator"] = c.estimator;
  j["adversary"] = c.adversary;
  j["adversary_delta"] = c.adversary_delta;
  j["adversary_s"] = c.adversary_s;
  j["replacement_file"] = c.replacement_file;
  j["radius"] = c.radius;
  j["error_target"] = c.error_target;
  j["batches"] = c.batches;
  j["alpha"] = c.alpha;
  j["k"] = c.k;
  j["delta"] = c.delta;
  j["degree"] = c.degree;
  j["draws"] = c.draws;
  j["timing"] = c.timing;
  return j.dump();
}

std::string RowsToCsv(const std::vector<TrialRow>& rows) {
  std::string out = absl::StrCat(kCsvHeader, "\n");
  for (const TrialRow& r : rows) {
    absl::StrAppend(&out, TaskName(r.task), ",", r.n, ",", r.d, ",",
                    FormatDouble(r.eta), ",", FormatDouble(r.epsilon), ",",
                    FormatDouble(r.beta), ",", r.trial, ",", r.seed, ",",
                    FormatDouble(r.error), ",", FormatDouble(r.runtime_ms),
                    "\n");
  }
  return out;
}

absl::StatusOr<std::vector<TrialRow>> RowsFromCsv(const std::string& text) {
  std::vector<std::string> lines =
      absl::StrSplit(text, '\n', absl::SkipWhitespace());
  if (lines.empty() || absl::StripAsciiWhitespace(lines[0]) != kCsvHeader) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected header '", kCsvHeader, "'"));
  }
  std::vector<TrialRow> rows;
  for (size_t l = 1; l < lines.size(); ++l) {
    std::vector<std::string> f =
        absl::StrSplit(absl::StripAsciiWhitespace(lines[l]), ',');
    if (f.size() != 10) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", l + 1, ": expected 10 fields"));
    }
    TrialRow r;
    absl::StatusOr<Task> task = ParseTask(f[0]);
    if (!task.ok()) return task.status();
    r.task = *task;
    absl::StatusOr<double> eta = ParseDouble(f[3]);
    absl::StatusOr<double> eps = ParseDouble(f[4]);
    absl::StatusOr<double> beta = ParseDouble(f[5]);
    absl::StatusOr<double> err = ParseDouble(f[8]);
    absl::StatusOr<double> ms = ParseDouble(f[9]);
    if (!eta.ok() || !eps.ok() || !beta.ok() || !err.ok() || !ms.ok() ||
        !absl::SimpleAtoi(f[1], &r.n) || !absl::SimpleAtoi(f[2], &r.d) ||
        !absl::SimpleAtoi(f[6], &r.trial) || !absl::SimpleAtoi(f[7], &r.seed)) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", l + 1, ": malformed field"));
    }
    r.eta = *eta;
    r.epsilon = *eps;
    r.beta = *beta;
    r.error = *err;
    r.runtime_ms = *ms;
    r.infeasible = std::isnan(r.error);
    rows.push_back(r);
  }
  return rows;
}

absl::StatusOr<RateFitResult> RateFit(const std::vector<double>& n,
                                      const std::vector<double>& error) {
  if (n.size() != error.size()) {
    return absl::InvalidArgumentError("n and error lengths differ");
  }
  std::vector<double> x, y;
  for (size_t i = 0; i < n.size(); ++i) {
    if (n[i] > 0.0 && error[i] > 0.0 && std::isfinite(error[i])) {
      x.push_back(std::log(n[i]));
      y.push_back(std::log(error[i]));
    }
  }
  if (std::set<double>(x.begin(), x.end()).size() < 3) {
    return absl::InvalidArgumentError(
        "degenerate design: need three distinct n with positive error");
  }
  const double m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  RateFitResult fit;
  fit.points = static_cast<int>(x.size());
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double rss = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.exponent * x[i];
    rss += r * r;
  }
  fit.standard_error = x.size() > 2 ? std::sqrt(rss / (m - 2) / sxx) : 0.0;
  return fit;
}

RateReport BuildRateReport(
    const std::vector<TrialRow>& rows,
    const std::function<double(const TrialRow&)>& theoretical) {
  RateReport report;
  std::vector<std::vector<double>> errors;
  auto same = [](const RateRow& a, const TrialRow& b) {
    return a.n == b.n && a.d == b.d && a.eta == b.eta &&
           a.epsilon == b.epsilon && a.beta == b.beta && a.sigma2 == b.sigma2;
  };
  for (const TrialRow& r : rows) {
    size_t k = 0;
    while (k < report.rows.size() && !same(report.rows[k], r)) ++k;
    if (k == report.rows.size()) {
      RateRow row;
      row.n = r.n;
      row.d = r.d;
      row.eta = r.eta;
      row.epsilon = r.epsilon;
      row.beta = r.beta;
      row.sigma2 = r.sigma2;
      row.theoretical = theoretical(r);
      report.rows.push_back(row);
      errors.emplace_back();
    }
    ++report.rows[k].trials;
    if (r.infeasible || !std::isfinite(r.error)) {
      ++report.rows[k].infeasible;
    } else {
      errors[k].push_back(r.error);
    }
  }
  std::vector<double> ns, medians;
  for (size_t k = 0; k < report.rows.size(); ++k) {
    RateRow& row = report.rows[k];
    row.q50 = Quantile(errors[k], 0.5);
    row.q90 = Quantile(errors[k], 0.9);
    row.q95 = Quantile(errors[k], 0.95);
    row.ratio = row.theoretical > 0.0 && std::isfinite(row.q50)
                    ? row.q50 / row.theoretical
                    : 0.0;
    ns.push_back(row.n);
    medians.push_back(row.q50);
  }
  absl::StatusOr<RateFitResult> fit = RateFit(ns, medians);
  if (fit.ok()) {
    report.has_fit = true;
    report.fit = *fit;
  }
  return report;
}

double TheoreticalRate(const ExperimentConfig& c, const TrialRow& r) {
  const bool priv = c.estimator == "private";
  const double eta_priv =
      priv ? PrivacyCorruptionLevel(r.d, r.n, r.epsilon, r.beta) : 0.0;
  const double stat = c.error_target == "truth" ? std::sqrt(1.0 * r.d / r.n) : 0.0;
  switch (r.task) {
    case Task::kMean: {
      const RateFunction rate = c.mode == "stat"
                                    ? RateFunction::MeanStat(r.d, r.n, r.beta)
                                    : RateFunction::MeanEff(r.d, r.n, r.beta);
      return rate(std::max(r.eta, eta_priv)) + stat;
    }
    case Task::kRegression: {
      const RateFunction rate = RateFunction::Regression(
          c.mode == "critical" ? RateKind::kRegCritical : RateKind::kRegWeak,
          r.d, r.n, r.beta);
      return rate(std::max(r.eta, eta_priv)) + stat;
    }
    case Task::kStream: {
      const EpsilonSchedule schedule{r.epsilon, c.batches};
      const RateFunction rate = RateFunction::MeanEff(r.d, r.n, r.beta);
      return std::sqrt(1.0 * r.d / (r.n * c.batches)) +
             rate(PrivacyCorruptionLevel(r.d, r.n, schedule.At(c.batches),
                                         r.beta));
    }
    case Task::kHardness:
    case Task::kAudit:
      return 1.0;
  }
  return 0.0;
}

std::string RateReportToJson(const RateReport& report,
                             const ExperimentConfig* config) {
  Json j;
  if (config != nullptr) j["config"] = Json::parse(ConfigToJson(*config));
  Json rows = Json::array();
  for (const RateRow& r : report.rows) {
    Json row;
    row["n"] = r.n;
    row["d"] = r.d;
    row["eta"] = r.eta;
    row["epsilon"] = r.epsilon;
    row["beta"] = r.beta;
    row["sigma2"] = r.sigma2;
    row["trials"] = r.trials;
    row["infeasible"] = r.infeasible;
    row["q50"] = r.q50;
    row["q90"] = r.q90;
    row["q95"] = r.q95;
    row["theoretical"] = r.theoretical;
    row["ratio"] = r.ratio;
    rows.push_back(row);
  }
  j["rows"] = rows;
  if (report.has_fit) {
    Json fit;
    fit["exponent"] = report.fit.exponent;
    fit["standard_error"] = report.fit.standard_error;
    fit["intercept"] = report.fit.intercept;
    fit["points"] = report.fit.points;
    j["fit"] = fit;
  }
  if (!report.extras.empty()) {
    Json extras;
    for (const auto& [k, v] : report.extras) extras[k] = v;
    j["extras"] = extras;
  }
  return j.dump(2);
}

absl::StatusOr<RunOutput> Run(const ExperimentConfig& config) {
  if (absl::Status s = ValidateConfig(config); !s.ok()) return s;
  const absl::StatusOr<Replacements> replacements = LoadReplacements(config);
  if (!replacements.ok()) return replacements.status();
  const std::vector<GridPoint> grid = ExpandGrid(config);
  const int jobs = static_cast<int>(grid.size()) * config.trials;
  std::vector<absl::StatusOr<TrialResult>> results(jobs, TrialResult{});
  std::vector<double> runtimes(jobs, 0.0);
  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int job = next.fetch_add(1);
      if (job >= jobs) return;
      const int gi = job / config.trials;
      const int trial = job % config.trials;
      const GridPoint& g = grid[gi];
      RngStream rng = RngStream(config.seed, static_cast<uint64_t>(trial))
                          .Split(static_cast<uint64_t>(gi));
      const auto start = std::chrono::steady_clock::now();
      switch (config.task) {
        case Task::kMean:
          results[job] = MeanTrial(config, g, *replacements, rng);
          break;
        case Task::kRegression:
          results[job] = RegressionTrial(config, g, *replacements, rng);
          break;
        case Task::kStream:
          results[job] = StreamTrial(config, g, rng, trial == 0);
          break;
        case Task::kHardness:
          results[job] = HardnessTrial(config, g, rng, trial);
          break;
        case Task::kAudit:
          results[job] = AuditTrial(config, g, rng, trial);
          break;
      }
      runtimes[job] = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    }
  };
  int threads = config.threads > 0
                    ? config.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, std::max(1, jobs));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  RunOutput out;
  std::map<std::string, double> extras;
  for (int job = 0; job < jobs; ++job) {
    const GridPoint& g = grid[job / config.trials];
    TrialRow row;
    row.task = config.task;
    row.n = g.n;
    row.d = g.d;
    row.eta = g.eta;
    row.epsilon = g.epsilon;
    row.beta = g.beta;
    row.sigma2 = g.sigma2;
    row.trial = job % config.trials;
    row.seed = config.seed;
    row.runtime_ms = config.timing ? runtimes[job] : 0.0;
    if (results[job].ok()) {
      row.error = results[job]->error;
      for (const auto& [k, v] : results[job]->extras) {
        if (k == "max_exact_log_ratio") {
          extras[k] = std::max(extras[k], v);
        } else {
          extras[k] += v;
        }
      }
      for (const std::string& line : results[job]->log_lines) {
        out.log_lines.push_back(line);
      }
    } else if (absl::IsFailedPrecondition(results[job].status())) {
      row.error = kNaN;
      row.infeasible = true;
      out.any_infeasible = true;
    } else {
      return results[job].status();
    }
    out.rows.push_back(row);
  }
  out.report = BuildRateReport(out.rows, [&config](const TrialRow& r) {
    return TheoreticalRate(config, r);
  });
  if (config.task == Task::kAudit) {
    double max_diff = 0.0;
    for (const TrialRow& r : out.rows) {
      if (!r.infeasible) max_diff = std::max(max_diff, r.error);
    }
    extras["max_score_difference"] = max_diff;
  }
  if (config.task == Task::kHardness) {
    const double nt = extras["null_trials"];
    const double pt = extras["planted_trials"];
    if (nt > 0 && pt > 0) {
      extras["null_rate"] = extras["null_correct"] / nt;
      extras["advantage"] =
          extras["null_correct"] / nt + extras["planted_correct"] / pt - 1.0;
    }
    LdlrQuery q;
    q.n = grid[0].n;
    q.d = grid[0].d;
    q.degree = config.degree;
    q.eta = grid[0].eta;
    q.alpha = config.alpha;
    q.k = config.k;
    q.delta = config.delta > 0.0 ? config.delta : 21.0 * config.alpha / q.eta;
    q.mode = config.mode == "regression" ? LdlrMode::kRegression
                                         : LdlrMode::kMean;
    const AdvantageReport adv = AdvantageBound(q);
    extras["advantage_bound_sq"] = adv.bound;
    extras["advantage_bound_poly_degree_caveat"] = adv.poly_degree_caveat;
  }
  out.report.extras = std::move(extras);
  return out;
}

absl::Status WriteRunOutput(const ExperimentConfig& config,
                            const RunOutput& output) {
  std::error_code ec;
  std::filesystem::create_directories(config.output, ec);
  if (ec) {
    return absl::UnavailableError(absl::StrCat(
        "cannot create output directory '", config.output, "': ", ec.message()));
  }
  auto write = [](const std::filesystem::path& path,
                  const std::string& text) -> absl::Status {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
      return absl::UnavailableError(
          absl::StrCat("cannot write '", path.string(), "'"));
    }
    f << text;
    return f ? absl::OkStatus()
             : absl::UnavailableError(
                   absl::StrCat("write failed for '", path.string(), "'"));
  };
  const std::filesystem::path dir(config.output);
  if (absl::Status s = write(dir / "results.csv", RowsToCsv(output.rows));
      !s.ok()) {
    return s;
  }
  if (absl::Status s = write(dir / "summary.json",
                             RateReportToJson(output.report, &config) + "\n");
      !s.ok()) {
    return s;
  }
  if (!output.log_lines.empty()) {
    return write(dir / "log.jsonl", absl::StrJoin(output.log_lines, "\n") + "\n");
  }
  return absl::OkStatus();
}

int ExitCodeFor(const absl::Status& status) {
  if (status.ok()) return 0;
  if (absl::IsFailedPrecondition(status)) return 2;
  return 1;
}

}  // namespace rpbayes
