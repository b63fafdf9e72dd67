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

// Command-line front end for the experiment harness.
//
//   rpbayes simulate-mean --config configs/mean_sweep.toml --out out/mean
//   rpbayes rates --in out/mean/results.csv
//
// Exit codes: 0 success, 2 when any trial was infeasible, 1 on errors.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "rpbayes/harness.h"

namespace {

struct Flags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  std::string out;
  std::string in;
  std::vector<std::string> overrides;
  std::string replace;
  bool timing = false;
};

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return absl::NotFoundError(absl::StrCat("cannot read '", path, "'"));
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

absl::StatusOr<rpbayes::ExperimentConfig> BuildConfig(const Flags& flags,
                                                      rpbayes::Task task) {
  rpbayes::ExperimentConfig config;
  if (!flags.config_path.empty()) {
    absl::StatusOr<std::string> text = ReadFile(flags.config_path);
    if (!text.ok()) return text.status();
    absl::StatusOr<rpbayes::ExperimentConfig> parsed =
        rpbayes::ParseConfig(*text);
    if (!parsed.ok()) return parsed.status();
    config = *std::move(parsed);
  }
  config.task = task;
  for (const std::string& kv : flags.overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      return absl::InvalidArgumentError(
          absl::StrCat("--set expects key=value, got '", kv, "'"));
    }
    absl::Status s =
        rpbayes::ApplyConfigValue(config, kv.substr(0, eq), kv.substr(eq + 1));
    if (!s.ok()) return s;
  }
  if (flags.seed) config.seed = *flags.seed;
  if (flags.trials) config.trials = *flags.trials;
  if (flags.threads) config.threads = *flags.threads;
  if (!flags.out.empty()) config.output = flags.out;
  if (flags.timing) config.timing = true;
  if (!flags.replace.empty()) config.replacement_file = flags.replace;
  return config;
}

int Simulate(const Flags& flags, rpbayes::Task task) {
  absl::StatusOr<rpbayes::ExperimentConfig> config = BuildConfig(flags, task);
  if (!config.ok()) {
    std::cerr << "error: " << config.status().message() << "\n";
    return rpbayes::ExitCodeFor(config.status());
  }
  absl::StatusOr<rpbayes::RunOutput> out = rpbayes::Run(*config);
  if (!out.ok()) {
    std::cerr << "error: " << out.status().message() << "\n";
    return rpbayes::ExitCodeFor(out.status());
  }
  if (absl::Status s = rpbayes::WriteRunOutput(*config, *out); !s.ok()) {
    std::cerr << "error: " << s.message() << "\n";
    return 1;
  }
  std::cout << rpbayes::RateReportToJson(out->report, &*config) << "\n";
  if (out->any_infeasible) {
    std::cerr << "some trials were infeasible (estimator output bottom)\n";
    return 2;
  }
  return 0;
}

int Rates(const Flags& flags) {
  if (flags.in.empty()) {
    std::cerr << "error: rates needs --in <results.csv>\n";
    return 1;
  }
  absl::StatusOr<std::string> text = ReadFile(flags.in);
  if (!text.ok()) {
    std::cerr << "error: " << text.status().message() << "\n";
    return 1;
  }
  absl::StatusOr<std::vector<rpbayes::TrialRow>> rows =
      rpbayes::RowsFromCsv(*text);
  if (!rows.ok()) {
    std::cerr << "error: " << rows.status().message() << "\n";
    return 1;
  }
  // The theoretical column needs the run's config; without one it is zero.
  std::optional<rpbayes::ExperimentConfig> config;
  if (!flags.config_path.empty()) {
    const rpbayes::Task task =
        rows->empty() ? rpbayes::Task::kMean : rows->front().task;
    absl::StatusOr<rpbayes::ExperimentConfig> c = BuildConfig(flags, task);
    if (!c.ok()) {
      std::cerr << "error: " << c.status().message() << "\n";
      return 1;
    }
    config = *std::move(c);
  }
  rpbayes::RateReport report = rpbayes::BuildRateReport(
      *rows, [&config](const rpbayes::TrialRow& r) {
        return config ? rpbayes::TheoreticalRate(*config, r) : 0.0;
      });
  std::vector<double> n, median;
  for (const rpbayes::RateRow& r : report.rows) {
    n.push_back(r.n);
    median.push_back(r.q50);
  }
  absl::StatusOr<rpbayes::RateFitResult> fit = rpbayes::RateFit(n, median);
  if (!fit.ok()) std::cerr << "warning: " << fit.status().message() << "\n";
  const std::string json =
      rpbayes::RateReportToJson(report, config ? &*config : nullptr);
  if (!flags.out.empty()) {
    std::ofstream f(flags.out, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot write '" << flags.out << "'\n";
      return 1;
    }
    f << json << "\n";
  } else {
    std::cout << json << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust and private Bayesian estimation experiments"};
  app.require_subcommand(1);
  Flags flags;

  struct Sub {
    const char* name;
    const char* help;
    rpbayes::Task task;
  };
  const Sub subs[] = {
      {"simulate-mean", "Posterior-mean estimation under corruption or DP",
       rpbayes::Task::kMean},
      {"simulate-reg", "Linear-regression posterior under corruption or DP",
       rpbayes::Task::kRegression},
      {"stream", "Continual posterior release over k batches",
       rpbayes::Task::kStream},
      {"hardness", "Distinguisher runs and low-degree advantage bounds",
       rpbayes::Task::kHardness},
      {"audit-dp", "Score sensitivity and probability-ratio audit",
       rpbayes::Task::kAudit},
  };
  std::vector<std::pair<CLI::App*, rpbayes::Task>> commands;
  auto add_common = [&flags](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "TOML-style config file");
    cmd->add_option("--seed", flags.seed, "Master seed");
    cmd->add_option("--trials", flags.trials, "Trials per configuration");
    cmd->add_option("--threads", flags.threads, "Worker threads (0 = all)");
    cmd->add_option("--set", flags.overrides,
                    "Override a config key, e.g. --set eta=[0,0.05]");
  };
  for (const Sub& s : subs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd);
    cmd->add_option("--out", flags.out, "Output directory");
    cmd->add_flag("--timing", flags.timing, "Record wall-clock runtime_ms");
    if (s.task == rpbayes::Task::kMean || s.task == rpbayes::Task::kRegression) {
      cmd->add_option("--replace", flags.replace,
                      "Dataset CSV whose rows replace the corrupted points");
    }
    commands.emplace_back(cmd, s.task);
  }
  CLI::App* rates = app.add_subcommand("rates", "Rate report from a results CSV");
  rates->add_option("--in", flags.in, "results.csv from a previous run")
      ->required();
  rates->add_option("--config", flags.config_path,
                    "Config of the run, for the theoretical column");
  rates->add_option("--out", flags.out, "Write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (rates->parsed()) return Rates(flags);
  for (const auto& [cmd, task] : commands) {
    if (cmd->parsed()) return Simulate(flags, task);
  }
  return 1;
}
