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

#include "rpbayes/hardness.h"

#include <cmath>
#include <numbers>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace rpbayes {
namespace {

double GaussDensity(double y, double s) {
  return std::exp(-0.5 * y * y / (s * s)) / (s * std::sqrt(2.0 * std::numbers::pi));
}

double LogFactorial(int j) { return std::lgamma(j + 1.0); }

}  // namespace

std::string HypothesisName(Hypothesis h) {
  return h == Hypothesis::kNull ? "null" : "planted";
}

absl::StatusOr<MixtureInstance> GenMixture(double eta, double delta, int n,
                                           int d, Hypothesis which,
                                           RngStream& rng) {
  if (!(eta > 0.0 && eta < 0.5)) {
    return absl::InvalidArgumentError("mixture needs 0 < eta < 1/2");
  }
  if (n < 1 || d < 1) return absl::InvalidArgumentError("n, d must be >= 1");
  MixtureInstance inst;
  inst.which = which;
  inst.eta = eta;
  inst.delta = delta;
  inst.samples.samples.resize(n, d);
  inst.hidden.component.assign(n, false);
  if (which == Hypothesis::kPlanted) inst.hidden.v = rng.UnitVector(d);
  for (int i = 0; i < n; ++i) {
    Vector g = rng.NormalVector(d);
    if (which == Hypothesis::kPlanted) {
      const bool far = rng.Uniform() < eta;
      inst.hidden.component[i] = far;
      g += (far ? (1.0 - eta) * delta : -eta * delta) * inst.hidden.v;
    }
    inst.samples.samples.row(i) = g.transpose();
  }
  return inst;
}

double MlrScale(double alpha, double k) {
  return std::sqrt(1.0 + k * k * alpha * alpha);
}

absl::StatusOr<MlrInstance> GenMlr(double eta, double alpha, double k, int n,
                                   int d, Hypothesis which, RngStream& rng) {
  if (!(eta > 0.0 && eta < 0.5)) {
    return absl::InvalidArgumentError("mlr needs 0 < eta < 1/2");
  }
  if (!(alpha > 0.0 && alpha * alpha <= eta)) {
    return absl::InvalidArgumentError("mlr needs 0 < alpha^2 <= eta");
  }
  if (n < 1 || d < 1) return absl::InvalidArgumentError("n, d must be >= 1");
  MlrInstance inst;
  inst.which = which;
  inst.eta = eta;
  inst.alpha = alpha;
  inst.k = k;
  inst.s = MlrScale(alpha, k);
  inst.a = -k * alpha / (eta * inst.s * inst.s);
  inst.samples.x.resize(d, n);
  inst.samples.y.resize(n);
  inst.hidden.b.assign(n, false);
  if (which == Hypothesis::kPlanted) inst.hidden.u = rng.UnitVector(d);
  for (int i = 0; i < n; ++i) {
    Vector g = rng.NormalVector(d);
    const double z = rng.Normal();
    if (which == Hypothesis::kNull) {
      inst.samples.x.col(i) = g;
      inst.samples.y(i) = inst.s * z;
      continue;
    }
    const Vector& u = inst.hidden.u;
    const double y = k * alpha * g.dot(u) + z;
    const bool b = rng.Uniform() < eta;
    inst.hidden.b[i] = b;
    if (b) g += inst.a * y * u;
    inst.samples.x.col(i) = g;
    inst.samples.y(i) = y;
  }
  return inst;
}

double R0Density(double y, double eta, double s) {
  return (GaussDensity(y, s) - (1.0 - eta) * GaussDensity(y, 1.0)) / eta;
}

absl::StatusOr<double> R0Sample(double eta, double s, RngStream& rng) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    return absl::InvalidArgumentError("r0 needs 0 < eta <= 1");
  }
  if (eta < 1.0 && !(s >= 1.0 && 1.0 - 1.0 / s <= eta + 1e-12)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "r0 is not a density: need s >= 1 and 1 - 1/s <= eta, got s = ", s,
        ", eta = ", eta));
  }
  while (true) {
    const double y = s * rng.Normal();
    if (eta >= 1.0) return y;
    const double accept =
        1.0 - (1.0 - eta) * s * std::exp(-0.5 * y * y + 0.5 * y * y / (s * s));
    if (rng.Uniform() < accept) return y;
  }
}

absl::StatusOr<Hypothesis> MeanDistinguisher(const MeanDataset& samples,
                                             const MeanEstimator& estimator,
                                             double alpha) {
  absl::StatusOr<Vector> est = estimator(samples);
  if (!est.ok()) {
    if (absl::IsFailedPrecondition(est.status())) return Hypothesis::kPlanted;
    return est.status();
  }
  return (*est - samples.Mean()).norm() <= alpha ? Hypothesis::kNull
                                                 : Hypothesis::kPlanted;
}

absl::StatusOr<Hypothesis> RegressionDistinguisher(
    const RegressionDataset& samples, const RegressionEstimator& estimator,
    double alpha, double sigma2) {
  if (!(sigma2 > 0.0)) return absl::InvalidArgumentError("sigma2 must be > 0");
  const Vector w_obs =
      samples.x * samples.y / (samples.n() + 1.0 / sigma2);
  absl::StatusOr<Vector> est = estimator(samples);
  if (!est.ok()) {
    if (absl::IsFailedPrecondition(est.status())) return Hypothesis::kPlanted;
    return est.status();
  }
  return (*est - w_obs).norm() >= 2.0 * alpha ? Hypothesis::kPlanted
                                              : Hypothesis::kNull;
}

double HermiteMomentMixture(double eta, double delta, int j) {
  const double scale = std::exp(-0.5 * LogFactorial(j));
  return ((1.0 - eta) * std::pow(-eta * delta, j) +
          eta * std::pow((1.0 - eta) * delta, j)) *
         scale;
}

double PsiValue(int k, double theta, double eta, double y) {
  return std::pow(theta, k) * ((1.0 - eta) * HermiteValue(k, y) +
                               eta * HermiteValue(k, (1.0 - 1.0 / eta) * y));
}

PsiNormResult PsiNorm(int k, double theta, double eta) {
  PsiNormResult out;
  out.value = QuadExpect(
      [&](double y) {
        const double p = PsiValue(k, theta, eta, y);
        return p * p;
      },
      DefaultQuadrature());
  if (!std::isfinite(out.value)) {
    const double c = 1.0 - 1.0 / eta;
    out.value = 2.0 * std::pow(theta, 2 * k) *
                (1.0 + 2.0 * eta * eta * std::pow(4.0 * c * c, k));
    out.surrogate = true;
  }
  return out;
}

double ScaledHermiteSecondMoment(int k, double c) {
  return QuadExpect(
      [&](double y) {
        const double h = HermiteValue(k, c * y);
        return h * h;
      },
      DefaultQuadrature());
}

double OverlapMomentBound(int m, int d, double constant) {
  if (m == 0) return 1.0;
  return std::pow(constant * m / d, 0.5 * m);
}

AdvantageReport AdvantageBound(const LdlrQuery& query) {
  AdvantageReport report;
  report.poly_degree_caveat = query.mode == LdlrMode::kMean;
  const int total = query.mode == LdlrMode::kMean ? query.degree
                                                  : query.degree / 2;
  if (query.n <= 0 || total < 2) return report;

  std::vector<double> a(total + 1, 0.0);
  for (int k = 2; k <= total; ++k) {
    if (query.mode == LdlrMode::kMean) {
      const double c = HermiteMomentMixture(query.eta, query.delta, k);
      a[k] = c * c;
    } else {
      const double theta =
          query.k * query.alpha / MlrScale(query.alpha, query.k);
      const PsiNormResult psi = PsiNorm(k, theta, query.eta);
      report.psi_surrogate = report.psi_surrogate || psi.surrogate;
      a[k] = psi.value;
    }
  }

  // f[l][m]: sum over compositions of m into l parts >= 2 of prod a_{k_j}.
  const int max_parts = total / 2;
  std::vector<std::vector<double>> f(max_parts + 1,
                                     std::vector<double>(total + 1, 0.0));
  f[0][0] = 1.0;
  for (int l = 1; l <= max_parts; ++l) {
    for (int m = 2 * l; m <= total; ++m) {
      double sum = 0.0;
      for (int k = 2; k <= m - 2 * (l - 1); ++k) sum += a[k] * f[l - 1][m - k];
      f[l][m] = sum;
    }
  }
  double bound = 1.0;
  for (int l = 1; l <= max_parts && l <= query.n; ++l) {
    const double choose = std::exp(LogBinomial(query.n, l));
    for (int m = 2 * l; m <= total; ++m) {
      if (f[l][m] == 0.0) continue;
      bound += choose * f[l][m] * OverlapMomentBound(m, query.d);
    }
  }
  report.bound = bound;
  return report;
}

}  // namespace rpbayes
