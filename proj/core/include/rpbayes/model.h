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

#ifndef RPBAYES_MODEL_H_
#define RPBAYES_MODEL_H_

#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "rpbayes/numerics.h"

namespace rpbayes {

enum class PriorKind { kIsotropic, kGeneral, kImproperUniform };

// Gaussian prior N(0, Sigma) on the mean or regression vector.
class PriorSpec {
 public:
  // sigma2 == 0 is accepted and gives the point mass at zero.
  static absl::StatusOr<PriorSpec> Isotropic(int dim, double sigma2);
  static absl::StatusOr<PriorSpec> General(const SymMatrix& sigma);
  static PriorSpec ImproperUniform(int dim);

  PriorKind kind() const { return kind_; }
  int dim() const { return dim_; }
  // Only meaningful for isotropic priors.
  double sigma2() const { return sigma2_; }
  // Sigma for isotropic and general priors.
  const SymMatrix& covariance() const { return covariance_; }
  // Spectral norm of Sigma; infinity for the improper prior.
  double OperatorNorm() const;

 private:
  PriorSpec(PriorKind kind, int dim, double sigma2, SymMatrix covariance)
      : kind_(kind), dim_(dim), sigma2_(sigma2), covariance_(covariance) {}

  PriorKind kind_;
  int dim_;
  double sigma2_;
  SymMatrix covariance_;
};

// Samples are the rows of an n x d matrix.
struct MeanDataset {
  Matrix samples;

  int n() const { return static_cast<int>(samples.rows()); }
  int d() const { return static_cast<int>(samples.cols()); }
  Vector Mean() const;
};

// Columns of x are the covariates; y holds the responses.
struct RegressionDataset {
  Matrix x;
  Vector y;
  std::optional<Vector> w_star;

  int n() const { return static_cast<int>(x.cols()); }
  int d() const { return static_cast<int>(x.rows()); }
};

template <typename Dataset>
struct Contaminated {
  Dataset observed;
  std::optional<Dataset> clean;
  // true marks a replaced row.
  std::vector<bool> mask;
  double eta = 0.0;

  int Replaced() const {
    int count = 0;
    for (bool b : mask) count += b ? 1 : 0;
    return count;
  }
};

using ContaminatedMean = Contaminated<MeanDataset>;
using ContaminatedRegression = Contaminated<RegressionDataset>;

// The posterior map Lambda = (I + Sigma^{-1} / n)^{-1}.
struct ShrinkageMatrix {
  SymMatrix lambda;
  int n;
};

ShrinkageMatrix Shrinkage(const PriorSpec& prior, int n);

// Lambda * x_bar.
Vector PosteriorMeanMeanModel(const MeanDataset& data, const PriorSpec& prior);

// (I / sigma2 + X X^T)^{-1} X y.
absl::StatusOr<Vector> PosteriorMeanRegression(const RegressionDataset& data,
                                               double sigma2);

// (X X^T)^{-1} X y. Fails on a rank-deficient design.
absl::StatusOr<Vector> Ols(const RegressionDataset& data);

struct MeanInstance {
  Vector mu;
  MeanDataset data;
};

// mu ~ N(0, Sigma), then n samples from N(mu, I).
absl::StatusOr<MeanInstance> SampleMeanInstance(const PriorSpec& prior, int n,
                                                RngStream& rng);

struct RegressionInstance {
  Vector w;
  RegressionDataset data;
};

// w ~ N(0, sigma2 I), x_i ~ N(0, I_d), y = X^T w + N(0, I_n).
RegressionInstance SampleRegressionInstance(double sigma2, int n, int d,
                                            RngStream& rng);

// Samples with a fixed w.
RegressionDataset SampleRegressionData(const Vector& w, int n, RngStream& rng);

enum class AdversaryKind { kShift, kMixturePlant, kResponseReplace, kGross };

struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::kGross;
  // Shift and mixture-plant: magnitude and direction of the displacement.
  // For regression shift, delta is added to the chosen responses.
  double delta = 0.0;
  Vector direction;
  // Gross: the fixed replacement point (covariates for regression).
  Vector point;
  // Gross regression: the fixed replacement response.
  double response = 0.0;
  // Response-replace: scale s of the replacement law.
  double s = 1.0;
  // Mixture-plant for regression: x_i += a * y_i * direction.
  double a = 0.0;
};

std::string AdversaryName(AdversaryKind kind);
absl::StatusOr<AdversaryKind> ParseAdversary(const std::string& name);

// Replaces exactly floor(eta * n) rows. Returns the clean data with an empty
// mask when eta * n < 1.
absl::StatusOr<ContaminatedMean> Corrupt(const MeanDataset& clean,
                                         const AdversarySpec& adversary,
                                         double eta, RngStream& rng);
absl::StatusOr<ContaminatedRegression> Corrupt(const RegressionDataset& clean,
                                               const AdversarySpec& adversary,
                                               double eta, RngStream& rng);

// Replaces the same floor(eta * n) rows Corrupt would pick with the leading
// rows of `rows`. User-supplied adversaries enter through this.
absl::StatusOr<ContaminatedMean> CorruptWithRows(const MeanDataset& clean,
                                                 const MeanDataset& rows,
                                                 double eta, RngStream& rng);
absl::StatusOr<ContaminatedRegression> CorruptWithRows(
    const RegressionDataset& clean, const RegressionDataset& rows, double eta,
    RngStream& rng);

// floor(x * n) and ceil(x * n) with a small guard against rounding noise.
int FloorCount(double x, int n);
int CeilCount(double x, int n);

// CSV round trips. Mean: header "dim,n", then one sample per line with an
// optional trailing 0/1 mask column. Regression: header "d,n", then per
// sample the d covariates followed by y.
std::string MeanDatasetToCsv(const MeanDataset& data,
                             const std::vector<bool>* mask = nullptr);
absl::StatusOr<MeanDataset> MeanDatasetFromCsv(const std::string& text,
                                               std::vector<bool>* mask);
std::string RegressionDatasetToCsv(const RegressionDataset& data);
absl::StatusOr<RegressionDataset> RegressionDatasetFromCsv(
    const std::string& text);

}  // namespace rpbayes

#endif  // RPBAYES_MODEL_H_
