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

#include "rpbayes/bayesreg.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "json.hpp"

namespace rpbayes {
namespace {

double LogInv(double x) { return std::log(1.0 / x); }

Matrix ZeroImputedX(const RegressionDataset& data,
                    const std::vector<bool>& kept) {
  Matrix x = data.x;
  for (int i = 0; i < data.n(); ++i) {
    if (!kept[i]) x.col(i).setZero();
  }
  return x;
}

Vector ZeroImputedY(const RegressionDataset& data,
                    const std::vector<bool>& kept) {
  Vector y = data.y;
  for (int i = 0; i < data.n(); ++i) {
    if (!kept[i]) y(i) = 0.0;
  }
  return y;
}

// Zero-imputed view of a dataset with a shrinking kept set.
class Trimmer {
 public:
  Trimmer(const RegressionDataset& data, double eta)
      : data_(data),
        kept_(data.n(), true),
        budget_(FloorCount(3.0 * eta, data.n())),
        step_(std::max(1, CeilCount(eta / 4.0, data.n()))) {}

  const std::vector<bool>& kept() const { return kept_; }
  int n() const { return data_.n(); }

  Matrix KeptX() const { return ZeroImputedX(data_, kept_); }
  Vector KeptY() const { return ZeroImputedY(data_, kept_); }

  // Drops the kept points with the largest scores, ties to the lowest index.
  absl::Status Drop(const Vector& scores, const char* reason) {
    std::vector<int> order;
    for (int i = 0; i < n(); ++i) {
      if (kept_[i]) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&scores](int a, int b) { return scores(a) > scores(b); });
    const int count = std::min<int>(
        {step_, budget_ - dropped_, static_cast<int>(order.size())});
    if (count <= 0) {
      return absl::FailedPreconditionError(absl::StrCat(
          "trimming budget of 3*eta*n = ", budget_,
          " points exhausted while enforcing the ", reason, " certificate"));
    }
    for (int j = 0; j < count; ++j) kept_[order[j]] = false;
    dropped_ += count;
    return absl::OkStatus();
  }

 private:
  const RegressionDataset& data_;
  std::vector<bool> kept_;
  int budget_;
  int step_;
  int dropped_ = 0;
};

Vector ResidualVector(const Matrix& xk, const Vector& yk, const Vector& w) {
  return yk - xk.transpose() * w;
}

Vector DirectionVector(const Matrix& xk, const Vector& w, const Vector& w0) {
  return xk.transpose() * (w - w0);
}

absl::StatusOr<Vector> SolveSpd(const Matrix& g, const Vector& rhs) {
  Eigen::LDLT<Matrix> ldlt(g);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    return absl::FailedPreconditionError("kept design is rank deficient");
  }
  const Vector d = ldlt.vectorD();
  if (d.minCoeff() <= 1e-12 * std::max(1.0, d.maxCoeff())) {
    return absl::FailedPreconditionError("kept design is rank deficient");
  }
  return ldlt.solve(rhs);
}

absl::StatusOr<Vector> KeptOls(const Matrix& xk, const Vector& yk) {
  return SolveSpd(xk * xk.transpose(), xk * yk);
}

// Drops by leverage until the kept covariance deviation is below threshold.
absl::StatusOr<double> TrimCovariance(Trimmer& trim, double threshold) {
  while (true) {
    const Matrix xk = trim.KeptX();
    const double dev = CovarianceDeviation(xk);
    if (dev <= threshold) return dev;
    const Matrix g = xk * xk.transpose();
    Eigen::LDLT<Matrix> ldlt(g);
    Vector lev = Vector::Zero(trim.n());
    const Matrix solved = ldlt.solve(xk);
    for (int i = 0; i < trim.n(); ++i) lev(i) = xk.col(i).dot(solved.col(i));
    if (absl::Status s = trim.Drop(lev, "covariance"); !s.ok()) return s;
  }
}

bool ResidualOk(const ShortFlatDecomposition& dec, const Vector& r,
                double eta, int n, double beta, double chi) {
  const ShortFlatBounds b = ResidualShortFlatBounds(eta, n, beta, chi);
  return dec.norm_z1_sq <= b.z1_sq && dec.norm_z2_inf_sq <= b.z2_inf_sq &&
         r.squaredNorm() <= 2.0 * n;
}

bool ResponseOk(const ShortFlatDecomposition& dec, double eta, int n,
                double beta, double chi) {
  const double bound = chi * (eta * n * LogInv(eta) + LogInv(beta));
  return dec.norm_z1_sq <= bound && eta * n * dec.norm_z2_inf_sq <= bound;
}

bool DirectionOk(const ShortFlatDecomposition& dec, double eta, int n,
                 double chi) {
  return dec.norm_z1_sq <= chi * eta * n * LogInv(eta) &&
         dec.norm_z2_inf_sq <= chi * LogInv(eta);
}

absl::Status CheckEta(double eta) {
  if (!(eta >= 0.0 && eta < 1.0 / 6.0)) {
    return absl::InvalidArgumentError("regression estimators need eta < 1/6");
  }
  return absl::OkStatus();
}

CertificateRecord MakeRecord(CertificateKind kind, const Vector& source,
                             double eta, const Vector& anchor = Vector(),
                             const Vector& anchor2 = Vector()) {
  CertificateRecord rec;
  rec.kind = kind;
  rec.decomposition = ShortFlatDecomposeCount(
      source, CeilCount(eta, static_cast<int>(source.size())), eta);
  rec.anchor = anchor;
  rec.anchor2 = anchor2;
  return rec;
}

}  // namespace

std::string StageName(RegressionStage stage) {
  switch (stage) {
    case RegressionStage::kRough:
      return "rough";
    case RegressionStage::kRefined:
      return "refined";
    case RegressionStage::kPosterior:
      return "posterior";
    case RegressionStage::kTwoStage:
      return "two-stage";
    case RegressionStage::kCritical:
      return "critical";
    case RegressionStage::kPriorMean:
      return "prior-mean";
  }
  return "unknown";
}

int RegressionEstimate::Kept() const {
  return static_cast<int>(std::count(kept_mask.begin(), kept_mask.end(), true));
}

double CovarianceThreshold(int d, int n, double beta, double chi) {
  return chi * std::sqrt((d + LogInv(beta)) / n);
}

absl::StatusOr<RegressionEstimate> CriticalPosteriorEstimate(
    const RegressionDataset& observed, double sigma2, double eta, double beta,
    const RegressionOptions& options) {
  if (absl::Status s = CheckEta(eta); !s.ok()) return s;
  const int n = observed.n();
  const int d = observed.d();
  if (!(sigma2 >= 0.1 / n && sigma2 <= 10.0 / n)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "critical estimator needs 0.1/n <= sigma2 <= 10/n, got ", sigma2));
  }
  Trimmer trim(observed, eta);
  RegressionEstimate est;
  est.stage = RegressionStage::kCritical;
  est.eta = eta;
  if (eta > 0.0) {
    while (true) {
      absl::StatusOr<double> dev =
          TrimCovariance(trim, CovarianceThreshold(d, n, beta, options.chi));
      if (!dev.ok()) return dev.status();
      const Vector yk = trim.KeptY();
      const ShortFlatDecomposition dec =
          ShortFlatDecomposeCount(yk, CeilCount(eta, n), eta);
      if (ResponseOk(dec, eta, n, beta, options.chi)) break;
      if (absl::Status s = trim.Drop(yk.cwiseAbs(), "response"); !s.ok()) {
        return s;
      }
    }
  }
  const Matrix xk = trim.KeptX();
  const Vector yk = trim.KeptY();
  est.w_hat = xk * yk / (1.0 / sigma2 + n);
  est.kept_mask = trim.kept();
  est.covariance_deviation = CovarianceDeviation(xk);
  est.certificates.push_back(MakeRecord(CertificateKind::kResponse, yk, eta));
  return est;
}

absl::StatusOr<RegressionEstimate> RoughRegression(
    const RegressionDataset& observed, double eta, double beta,
    const RegressionOptions& options) {
  if (absl::Status s = CheckEta(eta); !s.ok()) return s;
  const int n = observed.n();
  const int d = observed.d();
  if (eta > 0.0 && n < (d + LogInv(beta)) / eta) {
    return absl::InvalidArgumentError(absl::StrCat(
        "rough regression needs n >= (d + log(1/beta)) / eta = ",
        std::ceil((d + LogInv(beta)) / eta), ", got n = ", n));
  }
  Trimmer trim(observed, eta);
  Vector w;
  while (true) {
    if (eta > 0.0) {
      absl::StatusOr<double> dev =
          TrimCovariance(trim, CovarianceThreshold(d, n, beta, options.chi));
      if (!dev.ok()) return dev.status();
    }
    const Matrix xk = trim.KeptX();
    const Vector yk = trim.KeptY();
    absl::StatusOr<Vector> fit = KeptOls(xk, yk);
    if (!fit.ok()) return fit.status();
    w = *fit;
    if (eta == 0.0) break;
    const Vector r = ResidualVector(xk, yk, w);
    const ShortFlatDecomposition dec =
        ShortFlatDecomposeCount(r, CeilCount(eta, n), eta);
    if (ResidualOk(dec, r, eta, n, beta, options.chi)) break;
    if (absl::Status s = trim.Drop(r.cwiseAbs(), "residual"); !s.ok()) return s;
  }
  const Matrix xk = trim.KeptX();
  RegressionEstimate est;
  est.stage = RegressionStage::kRough;
  est.eta = eta;
  est.w_hat = w;
  est.kept_mask = trim.kept();
  est.covariance_deviation = CovarianceDeviation(xk);
  est.certificates.push_back(MakeRecord(
      CertificateKind::kResidual, ResidualVector(xk, trim.KeptY(), w), eta, w));
  return est;
}

absl::StatusOr<RegressionEstimate> RefineRegression(
    const RegressionDataset& observed, const Vector& w_init, double eta,
    double beta, const RegressionOptions& options) {
  if (absl::Status s = CheckEta(eta); !s.ok()) return s;
  const int n = observed.n();
  const int d = observed.d();
  if (w_init.size() != d) {
    return absl::InvalidArgumentError("w_init has the wrong dimension");
  }
  Trimmer trim(observed, eta);
  Vector w;
  while (true) {
    if (eta > 0.0) {
      absl::StatusOr<double> dev =
          TrimCovariance(trim, CovarianceThreshold(d, n, beta, options.chi));
      if (!dev.ok()) return dev.status();
    }
    const Matrix xk = trim.KeptX();
    const Vector yk = trim.KeptY();
    absl::StatusOr<Vector> fit = KeptOls(xk, yk);
    if (!fit.ok()) return fit.status();
    w = *fit;
    if (eta == 0.0) break;
    const Vector r = ResidualVector(xk, yk, w);
    const ShortFlatDecomposition rdec =
        ShortFlatDecomposeCount(r, CeilCount(eta, n), eta);
    if (!ResidualOk(rdec, r, eta, n, beta, options.chi)) {
      if (absl::Status s = trim.Drop(r.cwiseAbs(), "residual"); !s.ok()) {
        return s;
      }
      continue;
    }
    const Vector b = DirectionVector(xk, w, w_init);
    const ShortFlatDecomposition bdec =
        ShortFlatDecomposeCount(b, CeilCount(eta, n), eta);
    if (DirectionOk(bdec, eta, n, options.chi)) break;
    if (absl::Status s = trim.Drop(b.cwiseAbs(), "direction"); !s.ok()) {
      return s;
    }
  }
  const Matrix xk = trim.KeptX();
  const Vector yk = trim.KeptY();
  const Vector w_ls = w_init + xk * (yk - xk.transpose() * w_init) / n;
  const double rho = std::sqrt(options.chi * (d + LogInv(beta)) / n);
  Vector w1 = w;
  const double dist = (w - w_ls).norm();
  if (dist > rho) w1 = w_ls + (w - w_ls) * (rho / dist);

  RegressionEstimate est;
  est.stage = RegressionStage::kRefined;
  est.eta = eta;
  est.w_hat = w1;
  est.kept_mask = trim.kept();
  est.covariance_deviation = CovarianceDeviation(xk);
  est.certificates.push_back(MakeRecord(
      CertificateKind::kResidual, ResidualVector(xk, yk, w), eta, w));
  est.certificates.push_back(MakeRecord(CertificateKind::kDirection,
                                        DirectionVector(xk, w, w_init), eta, w,
                                        w_init));
  return est;
}

absl::StatusOr<RegressionEstimate> PosteriorRefine(
    const RegressionDataset& observed, const Vector& w1, double sigma2,
    double eta, double beta, const RegressionOptions& options) {
  if (absl::Status s = CheckEta(eta); !s.ok()) return s;
  if (!(sigma2 > 0.0)) return absl::InvalidArgumentError("sigma2 must be > 0");
  const int n = observed.n();
  const int d = observed.d();
  if (w1.size() != d) return absl::InvalidArgumentError("w1 has the wrong dimension");
  Trimmer trim(observed, eta);
  if (eta > 0.0) {
    while (true) {
      absl::StatusOr<double> dev =
          TrimCovariance(trim, CovarianceThreshold(d, n, beta, options.chi));
      if (!dev.ok()) return dev.status();
      const Vector r = ResidualVector(trim.KeptX(), trim.KeptY(), w1);
      const ShortFlatDecomposition dec =
          ShortFlatDecomposeCount(r, CeilCount(eta, n), eta);
      if (ResidualOk(dec, r, eta, n, beta, options.chi)) break;
      if (absl::Status s = trim.Drop(r.cwiseAbs(), "residual"); !s.ok()) {
        return s;
      }
    }
  }
  const Matrix xk = trim.KeptX();
  const Vector yk = trim.KeptY();
  const Vector r = ResidualVector(xk, yk, w1);
  const Vector w2 = xk * r / (n + 1.0 / sigma2);
  RegressionEstimate est;
  est.stage = RegressionStage::kPosterior;
  est.eta = eta;
  est.w_hat = w1 / (1.0 + 1.0 / (n * sigma2)) + w2;
  est.kept_mask = trim.kept();
  est.covariance_deviation = CovarianceDeviation(xk);
  est.certificates.push_back(
      MakeRecord(CertificateKind::kResidual, r, eta, w1));
  return est;
}

absl::StatusOr<RegressionEstimate> WeakPriorPipeline(
    const RegressionDataset& observed, double sigma2, double eta, double beta,
    const RegressionOptions& options) {
  absl::StatusOr<RegressionEstimate> rough =
      RoughRegression(observed, eta, beta, options);
  if (!rough.ok()) return rough.status();
  absl::StatusOr<RegressionEstimate> refined =
      RefineRegression(observed, rough->w_hat, eta, beta, options);
  if (!refined.ok()) return refined.status();
  return PosteriorRefine(observed, refined->w_hat, sigma2, eta, beta, options);
}

UncenteredResilience UncenteredResilienceOf(const Matrix& rows, double eta,
                                            int64_t exact_budget) {
  const int n = static_cast<int>(rows.rows());
  const int d = static_cast<int>(rows.cols());
  const int k = std::min(n, CeilCount(2.0 * eta, n));
  UncenteredResilience out;
  if (k <= 0 || n == 0) {
    out.exact = true;
    return out;
  }
  double count = 0.0;
  for (int s = 1; s <= k && count <= exact_budget; ++s) count += Binomial(n, s);
  if (count <= static_cast<double>(exact_budget)) {
    out.exact = true;
    std::vector<int> current;
    std::function<void(int, const Vector&)> rec = [&](int start,
                                                      const Vector& sum) {
      for (int i = start; i < n; ++i) {
        current.push_back(i);
        const Vector next = sum + rows.row(i).transpose();
        const double value = next.norm() / n;
        if (value > out.value) {
          out.value = value;
          out.subset = current;
        }
        if (static_cast<int>(current.size()) < k) rec(i + 1, next);
        current.pop_back();
      }
    };
    rec(0, Vector::Zero(d));
    return out;
  }

  auto climb = [&](Vector u) {
    std::vector<int> subset;
    std::vector<int> order(n);
    for (int iter = 0; iter < 50; ++iter) {
      const Vector proj = rows * u;
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + k, order.end(),
                        [&proj](int a, int b) {
                          return proj(a) > proj(b) || (proj(a) == proj(b) && a < b);
                        });
      std::vector<int> next;
      Vector sum = Vector::Zero(d);
      for (int j = 0; j < k && proj(order[j]) > 0.0; ++j) {
        next.push_back(order[j]);
        sum += rows.row(order[j]).transpose();
      }
      std::sort(next.begin(), next.end());
      const double value = sum.norm() / n;
      if (value > out.value) {
        out.value = value;
        out.subset = next;
      }
      if (next == subset || sum.norm() == 0.0) break;
      subset = std::move(next);
      u = sum / sum.norm();
    }
  };

  std::vector<Vector> starts;
  const Vector mean = rows.colwise().sum().transpose();
  if (mean.norm() > 0.0) starts.push_back(mean / mean.norm());
  std::vector<int> by_norm(n);
  std::iota(by_norm.begin(), by_norm.end(), 0);
  const int top = std::min(n, 8);
  std::partial_sort(by_norm.begin(), by_norm.begin() + top, by_norm.end(),
                    [&rows](int a, int b) {
                      return rows.row(a).squaredNorm() > rows.row(b).squaredNorm();
                    });
  for (int j = 0; j < top; ++j) {
    const Vector v = rows.row(by_norm[j]).transpose();
    if (v.norm() > 0.0) starts.push_back(v / v.norm());
  }
  for (int j = 0; j < d; ++j) {
    starts.push_back(Vector::Unit(d, j));
    starts.push_back(-Vector::Unit(d, j));
  }
  RngStream rng(0xC0FFEEULL, static_cast<uint64_t>(n) * 1009 + d);
  for (int j = 0; j < 16; ++j) starts.push_back(rng.UnitVector(d));
  for (const Vector& u : starts) climb(u);
  return out;
}

absl::StatusOr<CompletionResult> CompletionMean(const Matrix& vs, double eta,
                                                double tau,
                                                int64_t exact_budget) {
  if (!(tau > 0.0)) return absl::InvalidArgumentError("tau must be > 0");
  if (!(eta >= 0.0 && eta < 0.5)) {
    return absl::InvalidArgumentError("completion needs 0 <= eta < 1/2");
  }
  const int n = static_cast<int>(vs.rows());
  if (n == 0) return absl::InvalidArgumentError("no vectors");
  const int max_total = FloorCount(eta, n);
  const int per_round = std::max(1, CeilCount(eta / 8.0, n));
  CompletionResult result;
  result.completed = vs;
  std::vector<char> replaced(n, 0);
  int total = 0;
  while (true) {
    result.resilience =
        UncenteredResilienceOf(result.completed, eta, exact_budget);
    if (result.resilience.value <= tau) break;
    const std::vector<int>& worst = result.resilience.subset;
    Vector dir = Vector::Zero(vs.cols());
    for (int i : worst) dir += result.completed.row(i).transpose();
    std::vector<int> candidates;
    for (int i : worst) {
      if (!replaced[i]) candidates.push_back(i);
    }
    const Vector proj = result.completed * dir;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&proj](int a, int b) { return proj(a) > proj(b); });
    const int m = std::min<int>(
        {per_round, max_total - total, static_cast<int>(candidates.size())});
    if (m <= 0) {
      return absl::FailedPreconditionError(absl::StrCat(
          "no replacement of at most ", max_total,
          " vectors reaches resilience tau = ", tau, " (best ",
          result.resilience.value, ")"));
    }
    std::vector<char> in_worst(n, 0);
    for (int i : worst) in_worst[i] = 1;
    Vector trimmed = Vector::Zero(vs.cols());
    int kept = 0;
    for (int i = 0; i < n; ++i) {
      if (in_worst[i]) continue;
      trimmed += result.completed.row(i).transpose();
      ++kept;
    }
    if (kept > 0) trimmed /= kept;
    for (int j = 0; j < m; ++j) {
      result.completed.row(candidates[j]) = trimmed.transpose();
      replaced[candidates[j]] = 1;
    }
    total += m;
  }
  for (int i = 0; i < n; ++i) {
    if (replaced[i]) result.replaced.push_back(i);
  }
  result.mean = result.completed.colwise().mean().transpose();
  return result;
}

double TwoStageTau(double eta, int d, int n, double beta, double constant) {
  const double stat = std::sqrt((d + std::log(3.0 / beta)) / n);
  const double delta0 = constant * (stat + eta);
  const double tail = eta > 0.0 ? eta * LogInv(eta) : 0.0;
  return 2.0 * eta * delta0 +
         constant * (1.0 + delta0) * (std::sqrt(tail) * stat + tail);
}

Vector AssemblePosterior(const Vector& w, const Vector& g, double lambda) {
  return w + (g - lambda * w) / (1.0 + lambda);
}

absl::StatusOr<Vector> PosteriorIdentity(const RegressionDataset& data,
                                         double sigma2, const Vector& u) {
  if (!(sigma2 > 0.0)) return absl::InvalidArgumentError("sigma2 must be > 0");
  const int n = data.n();
  const int d = data.d();
  const double lambda = 1.0 / (n * sigma2);
  const Matrix a = data.x * data.x.transpose() / n;
  const Vector g = data.x * (data.y - data.x.transpose() * u) / n;
  Eigen::LLT<Matrix> llt(a + lambda * Matrix::Identity(d, d));
  if (llt.info() != Eigen::Success) {
    return absl::InternalError("A + lambda I is not positive definite");
  }
  return Vector(u + llt.solve(g - lambda * u));
}

absl::StatusOr<RegressionEstimate> TwoStagePosterior(
    const RegressionDataset& observed, double sigma2, double eta, double beta,
    const RegressionOptions& options) {
  if (!(sigma2 > 0.0)) return absl::InvalidArgumentError("sigma2 must be > 0");
  absl::StatusOr<RegressionEstimate> rough =
      RoughRegression(observed, eta, beta, options);
  if (!rough.ok()) return rough.status();
  absl::StatusOr<RegressionEstimate> stage1 =
      RefineRegression(observed, rough->w_hat, eta, beta, options);
  if (!stage1.ok()) return stage1.status();
  const int n = observed.n();
  const Vector w_tilde = stage1->w_hat;
  const Vector r = observed.y - observed.x.transpose() * w_tilde;
  const Matrix v = (observed.x * r.asDiagonal()).transpose();
  const double tau = std::max(
      TwoStageTau(eta, observed.d(), n, beta), 1e-300);
  absl::StatusOr<CompletionResult> completion = CompletionMean(v, eta, tau);
  if (!completion.ok()) return completion.status();
  RegressionEstimate est = *std::move(stage1);
  est.stage = RegressionStage::kTwoStage;
  est.w_hat =
      AssemblePosterior(w_tilde, completion->mean, 1.0 / (n * sigma2));
  est.replaced = completion->replaced;
  return est;
}

Regime ClassifyRegime(double sigma2, int n) {
  if (sigma2 < 0.1 / n) return Regime::kOverlyStrong;
  if (sigma2 <= 10.0 / n) return Regime::kCritical;
  return Regime::kWeak;
}

absl::StatusOr<RegressionEstimate> RobustPosteriorRegression(
    const RegressionDataset& observed, double sigma2, double eta, double beta,
    const RegressionOptions& options) {
  switch (ClassifyRegime(sigma2, observed.n())) {
    case Regime::kOverlyStrong: {
      RegressionEstimate est;
      est.stage = RegressionStage::kPriorMean;
      est.eta = eta;
      est.w_hat = Vector::Zero(observed.d());
      est.kept_mask.assign(observed.n(), true);
      est.covariance_deviation = CovarianceDeviation(observed.x);
      return est;
    }
    case Regime::kCritical:
      return CriticalPosteriorEstimate(observed, sigma2, eta, beta, options);
    case Regime::kWeak:
      return WeakPriorPipeline(observed, sigma2, eta, beta, options);
  }
  return absl::InternalError("unreachable regime");
}

std::string VerifyRegressionEstimate(const RegressionDataset& observed,
                                     const RegressionEstimate& estimate) {
  const int n = observed.n();
  if (static_cast<int>(estimate.kept_mask.size()) != n) {
    return "kept mask has the wrong length";
  }
  if (estimate.Kept() < n - FloorCount(3.0 * estimate.eta, n)) {
    return "kept set is smaller than (1 - 3 eta) n";
  }
  const Matrix xk = ZeroImputedX(observed, estimate.kept_mask);
  const Vector yk = ZeroImputedY(observed, estimate.kept_mask);
  const double dev = CovarianceDeviation(xk);
  if (std::abs(dev - estimate.covariance_deviation) >
      1e-10 * std::max(1.0, dev)) {
    return absl::StrCat("covariance deviation ", estimate.covariance_deviation,
                        " does not match recomputed ", dev);
  }
  for (size_t c = 0; c < estimate.certificates.size(); ++c) {
    const CertificateRecord& rec = estimate.certificates[c];
    Vector source;
    switch (rec.kind) {
      case CertificateKind::kResponse:
        source = yk;
        break;
      case CertificateKind::kResidual:
        source = ResidualVector(xk, yk, rec.anchor);
        break;
      case CertificateKind::kDirection:
        source = DirectionVector(xk, rec.anchor, rec.anchor2);
        break;
    }
    if (!VerifyShortFlat(rec.decomposition, source)) {
      return absl::StrCat("certificate ", c, " does not re-verify");
    }
    if (static_cast<int>(rec.decomposition.support.size()) >
        CeilCount(rec.decomposition.eta, n)) {
      return absl::StrCat("certificate ", c, " has an oversized support");
    }
  }
  return "";
}

std::string RegressionEstimateToJson(const RegressionEstimate& estimate) {
  nlohmann::ordered_json j;
  j["stage"] = StageName(estimate.stage);
  j["w_hat"] = std::vector<double>(estimate.w_hat.data(),
                                   estimate.w_hat.data() + estimate.w_hat.size());
  std::vector<int> mask;
  for (bool b : estimate.kept_mask) mask.push_back(b ? 1 : 0);
  j["kept_mask"] = mask;
  j["covariance_deviation"] = estimate.covariance_deviation;
  nlohmann::ordered_json certs = nlohmann::ordered_json::array();
  for (const CertificateRecord& rec : estimate.certificates) {
    nlohmann::ordered_json c;
    c["kind"] = rec.kind == CertificateKind::kResponse   ? "response"
                : rec.kind == CertificateKind::kResidual ? "residual"
                                                         : "direction";
    c["support_size"] = rec.decomposition.support.size();
    c["norm_z1_sq"] = rec.decomposition.norm_z1_sq;
    c["norm_z2_inf_sq"] = rec.decomposition.norm_z2_inf_sq;
    certs.push_back(c);
  }
  j["certificates"] = certs;
  j["replaced"] = estimate.replaced;
  return j.dump();
}

std::string RegressionModeName(RegressionMode mode) {
  switch (mode) {
    case RegressionMode::kCritical:
      return "critical";
    case RegressionMode::kWeak:
      return "weak";
    case RegressionMode::kInefficient:
      return "inefficient";
  }
  return "unknown";
}

absl::StatusOr<RegressionMode> ParseRegressionMode(const std::string& name) {
  if (name == "critical") return RegressionMode::kCritical;
  if (name == "weak") return RegressionMode::kWeak;
  if (name == "inefficient") return RegressionMode::kInefficient;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown regression mode '", name, "' (critical|weak|inefficient)"));
}

BudgetEstimator RegressionBudgetEstimator(const RegressionDataset& data,
                                          double sigma2, double beta,
                                          RegressionMode mode) {
  return [data, sigma2, beta, mode](int t) -> absl::StatusOr<Vector> {
    const double eta = static_cast<double>(t) / data.n();
    absl::StatusOr<RegressionEstimate> est;
    switch (mode) {
      case RegressionMode::kCritical:
        est = CriticalPosteriorEstimate(data, sigma2, eta, beta);
        break;
      case RegressionMode::kWeak:
        est = WeakPriorPipeline(data, sigma2, eta, beta);
        break;
      case RegressionMode::kInefficient:
        est = TwoStagePosterior(data, sigma2, eta, beta);
        break;
    }
    if (!est.ok()) return est.status();
    return est->w_hat;
  };
}

absl::StatusOr<ScoreField> RegressionScoreField(
    const RegressionDataset& data, double sigma2, double epsilon, double beta,
    RegressionMode mode, int64_t max_cells) {
  if (!(epsilon > 0.0)) return absl::InvalidArgumentError("epsilon must be > 0");
  if (!(sigma2 > 0.0)) return absl::InvalidArgumentError("sigma2 must be > 0");
  const int n = data.n();
  const int d = data.d();
  const RateFunction rate = RateFunction::Regression(
      mode == RegressionMode::kCritical ? RateKind::kRegCritical
                                        : RateKind::kRegWeak,
      d, n, beta);
  const double alpha = rate(PrivacyCorruptionLevel(d, n, epsilon, beta));
  const double h = alpha / (2.0 * std::sqrt(static_cast<double>(d)));
  const double half_diag = 0.5 * h * std::sqrt(static_cast<double>(d));
  GridSpec grid;
  grid.center = Vector::Zero(d);
  grid.cell = h;
  grid.radius = 2.0 * (2.0 * std::sqrt(sigma2 * d)) + half_diag;
  grid.max_cells = max_cells;
  RobustDistanceScorer scorer(
      n, RegressionBudgetEstimator(data, sigma2, beta, mode), rate, half_diag);
  return BuildScoreField(grid, scorer);
}

absl::StatusOr<PrivateRegressionResult> PrivateRegression(
    const RegressionDataset& data, double sigma2, double epsilon, double beta,
    RegressionMode mode, RngStream& rng, int64_t max_cells) {
  absl::StatusOr<ScoreField> field =
      RegressionScoreField(data, sigma2, epsilon, beta, mode, max_cells);
  if (!field.ok()) return field.status();
  absl::StatusOr<int64_t> cell = ExpMechanismCell(*field, epsilon, rng);
  if (!cell.ok()) return cell.status();
  PrivateRegressionResult out;
  out.estimate = field->CellCenter(*cell);
  out.cell = field->cell;
  out.cells = field->size();
  out.selected_score = field->scores[*cell];
  return out;
}

}  // namespace rpbayes
