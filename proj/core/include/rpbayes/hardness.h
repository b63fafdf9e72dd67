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

#ifndef RPBAYES_HARDNESS_H_
#define RPBAYES_HARDNESS_H_

#include <functional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "rpbayes/model.h"
#include "rpbayes/numerics.h"

namespace rpbayes {

inline constexpr double kDefaultMlrK = 20.0;
inline constexpr double kOverlapConstant = 2.0;

enum class Hypothesis { kNull, kPlanted };

std::string HypothesisName(Hypothesis h);

// Evaluation-only state. Distinguishers take the samples alone and never
// see these fields.
struct MixtureHidden {
  Vector v;
  // true marks a draw from the far component.
  std::vector<bool> component;
};

struct MixtureInstance {
  Hypothesis which = Hypothesis::kNull;
  double eta = 0.0;
  double delta = 0.0;
  MeanDataset samples;
  MixtureHidden hidden;
};

// Null: N(0, I). Planted: (1-eta) N(-eta delta v, I) + eta N((1-eta) delta v, I).
absl::StatusOr<MixtureInstance> GenMixture(double eta, double delta, int n,
                                           int d, Hypothesis which,
                                           RngStream& rng);

struct MlrHidden {
  Vector u;
  std::vector<bool> b;
};

struct MlrInstance {
  Hypothesis which = Hypothesis::kNull;
  double eta = 0.0;
  double alpha = 0.0;
  double k = kDefaultMlrK;
  double s = 1.0;
  double a = 0.0;
  RegressionDataset samples;
  MlrHidden hidden;
};

double MlrScale(double alpha, double k);

absl::StatusOr<MlrInstance> GenMlr(double eta, double alpha, double k, int n,
                                   int d, Hypothesis which, RngStream& rng);

// r0(y) = (phi_s(y) - (1 - eta) phi_1(y)) / eta.
double R0Density(double y, double eta, double s);

// Rejection sampler for r0 with a N(0, s^2) proposal.
absl::StatusOr<double> R0Sample(double eta, double s, RngStream& rng);

using MeanEstimator = std::function<absl::StatusOr<Vector>(const MeanDataset&)>;
using RegressionEstimator =
    std::function<absl::StatusOr<Vector>(const RegressionDataset&)>;

// Null iff ||estimate - empirical mean|| <= alpha. An estimator that reports
// the data infeasible yields a planted verdict.
absl::StatusOr<Hypothesis> MeanDistinguisher(const MeanDataset& samples,
                                             const MeanEstimator& estimator,
                                             double alpha);

// Planted iff ||estimate - (n + 1/sigma2)^{-1} X y|| >= 2 alpha.
absl::StatusOr<Hypothesis> RegressionDistinguisher(
    const RegressionDataset& samples, const RegressionEstimator& estimator,
    double alpha, double sigma2);

// E_A h_j for the planted univariate mixture A.
double HermiteMomentMixture(double eta, double delta, int j);

struct PsiNormResult {
  double value = 0.0;
  // Set when quadrature overflowed and the envelope was returned instead.
  bool surrogate = false;
};

// psi_k(y) = theta^k ((1 - eta) h_k(y) + eta h_k((1 - 1/eta) y)).
double PsiValue(int k, double theta, double eta, double y);

PsiNormResult PsiNorm(int k, double theta, double eta);

// E[h_k(c Y)^2] for Y ~ N(0, 1), by quadrature.
double ScaledHermiteSecondMoment(int k, double c);

enum class LdlrMode { kMean, kRegression };

struct LdlrQuery {
  int n = 0;
  int d = 1;
  int degree = 0;
  double eta = 0.1;
  // Mean mode.
  double delta = 0.0;
  // Regression mode.
  double alpha = 0.0;
  double k = kDefaultMlrK;
  LdlrMode mode = LdlrMode::kMean;
};

struct AdvantageReport {
  // Upper bound on Adv^2.
  double bound = 1.0;
  // The mean-mode bound omits a poly(D) factor.
  bool poly_degree_caveat = false;
  bool psi_surrogate = false;
};

// E|gamma|^m <= (C m / d)^{m/2}.
double OverlapMomentBound(int m, int d, double constant = kOverlapConstant);

AdvantageReport AdvantageBound(const LdlrQuery& query);

}  // namespace rpbayes

#endif  // RPBAYES_HARDNESS_H_
