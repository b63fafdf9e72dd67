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

#include "rpbayes/model.h"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "rpbayes/hardness.h"

namespace rpbayes {
namespace {

std::string FormatDouble(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

absl::StatusOr<std::vector<double>> ParseRow(const std::string& line) {
  std::vector<double> values;
  for (absl::string_view field : absl::StrSplit(line, ',')) {
    std::string s(field);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) {
      return absl::InvalidArgumentError(
          absl::StrCat("cannot parse number from '", s, "'"));
    }
    values.push_back(v);
  }
  return values;
}

absl::StatusOr<std::vector<std::string>> DataLines(const std::string& text,
                                                   const std::string& header) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.size() < 2 || lines[0] != header) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected header '", header, "'"));
  }
  return lines;
}

Vector Unit(const Vector& v) {
  const double norm = v.norm();
  return norm > 0 ? Vector(v / norm) : v;
}

}  // namespace

absl::StatusOr<PriorSpec> PriorSpec::Isotropic(int dim, double sigma2) {
  if (dim < 1) return absl::InvalidArgumentError("prior dimension must be >= 1");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    return absl::InvalidArgumentError("prior variance must be finite and >= 0");
  }
  return PriorSpec(PriorKind::kIsotropic, dim, sigma2,
                   SymMatrix::Diagonal(Vector::Constant(dim, sigma2)));
}

absl::StatusOr<PriorSpec> PriorSpec::General(const SymMatrix& sigma) {
  absl::StatusOr<SymEigResult> eig = SymEig(sigma);
  if (!eig.ok()) return eig.status();
  const double scale = std::max(1.0, std::abs(eig->eigenvalues(0)));
  if (eig->eigenvalues(sigma.dim() - 1) < -1e-12 * scale) {
    return absl::InvalidArgumentError(
        absl::StrCat("prior covariance is not PSD: smallest eigenvalue ",
                     eig->eigenvalues(sigma.dim() - 1)));
  }
  return PriorSpec(PriorKind::kGeneral, sigma.dim(), 0.0, sigma);
}

PriorSpec PriorSpec::ImproperUniform(int dim) {
  return PriorSpec(PriorKind::kImproperUniform, dim,
                   std::numeric_limits<double>::infinity(),
                   SymMatrix::Identity(dim));
}

double PriorSpec::OperatorNorm() const {
  switch (kind_) {
    case PriorKind::kIsotropic:
      return sigma2_;
    case PriorKind::kImproperUniform:
      return std::numeric_limits<double>::infinity();
    case PriorKind::kGeneral: {
      absl::StatusOr<double> norm = rpbayes::OperatorNorm(covariance_);
      return norm.ok() ? *norm : std::numeric_limits<double>::infinity();
    }
  }
  return 0.0;
}

Vector MeanDataset::Mean() const { return samples.colwise().mean(); }

ShrinkageMatrix Shrinkage(const PriorSpec& prior, int n) {
  const int d = prior.dim();
  const double inv_n = 1.0 / n;
  switch (prior.kind()) {
    case PriorKind::kImproperUniform:
      return {SymMatrix::Identity(d), n};
    case PriorKind::kIsotropic: {
      const double s = prior.sigma2();
      const double factor = s > 0 ? n / (n + 1.0 / s) : 0.0;
      return {SymMatrix::Diagonal(Vector::Constant(d, factor)), n};
    }
    case PriorKind::kGeneral:
      break;
  }
  absl::StatusOr<SymEigResult> eig = SymEig(prior.covariance());
  // The covariance was decomposed successfully at construction.
  const double top = std::max(0.0, eig->eigenvalues(0));
  Vector shrunk(d);
  for (int i = 0; i < d; ++i) {
    const double lam = eig->eigenvalues(i);
    shrunk(i) = lam > 1e-14 * top ? lam / (lam + inv_n) : 0.0;
  }
  const Matrix& v = eig->eigenvectors;
  return {SymMatrix::Symmetrize(v * shrunk.asDiagonal() * v.transpose()), n};
}

Vector PosteriorMeanMeanModel(const MeanDataset& data, const PriorSpec& prior) {
  const Vector mean = data.Mean();
  if (prior.kind() == PriorKind::kIsotropic) {
    const double s = prior.sigma2();
    const double n = data.n();
    return s > 0 ? Vector((n / (n + 1.0 / s)) * mean) : Vector::Zero(mean.size());
  }
  return Shrinkage(prior, data.n()).lambda.entries() * mean;
}

absl::StatusOr<Vector> PosteriorMeanRegression(const RegressionDataset& data,
                                               double sigma2) {
  if (data.y.size() != data.n()) {
    return absl::InvalidArgumentError("X and y disagree on n");
  }
  if (!(sigma2 > 0.0)) {
    return absl::InvalidArgumentError("regression prior variance must be > 0");
  }
  Matrix a = data.x * data.x.transpose();
  a.diagonal().array() += 1.0 / sigma2;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    return absl::InternalError("posterior system is not positive definite");
  }
  return Vector(llt.solve(data.x * data.y));
}

absl::StatusOr<Vector> Ols(const RegressionDataset& data) {
  if (data.y.size() != data.n()) {
    return absl::InvalidArgumentError("X and y disagree on n");
  }
  const Matrix gram = data.x * data.x.transpose();
  absl::StatusOr<SymEigResult> eig = SymEig(SymMatrix::Symmetrize(gram));
  if (!eig.ok()) return eig.status();
  const double top = eig->eigenvalues(0);
  int rank = 0;
  for (int i = 0; i < data.d(); ++i) {
    if (eig->eigenvalues(i) > 1e-12 * std::max(top, 1e-300)) ++rank;
  }
  if (rank < data.d()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "design is rank deficient: rank ", rank, " < d = ", data.d()));
  }
  const Matrix& v = eig->eigenvectors;
  const Vector rhs = v.transpose() * (data.x * data.y);
  return Vector(v * rhs.cwiseQuotient(eig->eigenvalues));
}

absl::StatusOr<MeanInstance> SampleMeanInstance(const PriorSpec& prior, int n,
                                                RngStream& rng) {
  if (n < 1) return absl::InvalidArgumentError("n must be >= 1");
  if (prior.kind() == PriorKind::kImproperUniform) {
    return absl::InvalidArgumentError("cannot sample from an improper prior");
  }
  const int d = prior.dim();
  Vector mu;
  if (prior.kind() == PriorKind::kIsotropic) {
    mu = std::sqrt(prior.sigma2()) * rng.NormalVector(d);
  } else {
    absl::StatusOr<SymEigResult> eig = SymEig(prior.covariance());
    if (!eig.ok()) return eig.status();
    const Vector root = eig->eigenvalues.cwiseMax(0.0).cwiseSqrt();
    const Matrix sqrt_cov = eig->eigenvectors * root.asDiagonal() *
                            eig->eigenvectors.transpose();
    absl::StatusOr<Vector> draw = GaussVector(rng, Vector::Zero(d), sqrt_cov);
    if (!draw.ok()) return draw.status();
    mu = *draw;
  }
  MeanInstance instance;
  instance.mu = mu;
  instance.data.samples.resize(n, d);
  for (int i = 0; i < n; ++i) {
    instance.data.samples.row(i) = (mu + rng.NormalVector(d)).transpose();
  }
  return instance;
}

RegressionDataset SampleRegressionData(const Vector& w, int n, RngStream& rng) {
  const int d = static_cast<int>(w.size());
  RegressionDataset data;
  data.x.resize(d, n);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    data.x.col(i) = rng.NormalVector(d);
    data.y(i) = data.x.col(i).dot(w) + rng.Normal();
  }
  data.w_star = w;
  return data;
}

RegressionInstance SampleRegressionInstance(double sigma2, int n, int d,
                                            RngStream& rng) {
  RegressionInstance instance;
  instance.w = std::sqrt(std::max(0.0, sigma2)) * rng.NormalVector(d);
  instance.data = SampleRegressionData(instance.w, n, rng);
  return instance;
}

std::string AdversaryName(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::kShift:
      return "shift";
    case AdversaryKind::kMixturePlant:
      return "mixture-plant";
    case AdversaryKind::kResponseReplace:
      return "response-replace";
    case AdversaryKind::kGross:
      return "gross";
  }
  return "unknown";
}

absl::StatusOr<AdversaryKind> ParseAdversary(const std::string& name) {
  for (AdversaryKind kind :
       {AdversaryKind::kShift, AdversaryKind::kMixturePlant,
        AdversaryKind::kResponseReplace, AdversaryKind::kGross}) {
    if (AdversaryName(kind) == name) return kind;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown adversary '", name,
                                                 "'"));
}

int FloorCount(double x, int n) {
  return static_cast<int>(std::floor(x * n + 1e-9));
}

int CeilCount(double x, int n) {
  return static_cast<int>(std::ceil(x * n - 1e-9));
}

absl::StatusOr<ContaminatedMean> Corrupt(const MeanDataset& clean,
                                         const AdversarySpec& adversary,
                                         double eta, RngStream& rng) {
  if (!(eta >= 0.0 && eta < 0.5)) {
    return absl::InvalidArgumentError("eta must lie in [0, 1/2)");
  }
  const int n = clean.n();
  const int d = clean.d();
  ContaminatedMean out;
  out.observed = clean;
  out.clean = clean;
  out.mask.assign(n, false);
  out.eta = eta;
  const int k = FloorCount(eta, n);
  if (k < 1) return out;

  const bool needs_direction = adversary.kind == AdversaryKind::kShift ||
                               adversary.kind == AdversaryKind::kMixturePlant;
  if (needs_direction && adversary.direction.size() != d) {
    return absl::InvalidArgumentError("adversary direction has wrong dimension");
  }
  if (adversary.kind == AdversaryKind::kGross && adversary.point.size() != d) {
    return absl::InvalidArgumentError("gross adversary point has wrong dimension");
  }
  if (adversary.kind == AdversaryKind::kResponseReplace) {
    return absl::InvalidArgumentError(
        "response-replace applies only to regression data");
  }
  const Vector center = clean.Mean();
  const Vector v = needs_direction ? Unit(adversary.direction) : Vector();
  for (int i : rng.Subset(n, k)) {
    out.mask[i] = true;
    Vector row;
    switch (adversary.kind) {
      case AdversaryKind::kShift:
        row = center + adversary.delta * v;
        break;
      case AdversaryKind::kMixturePlant:
        row = center + adversary.delta * v + rng.NormalVector(d);
        break;
      default:
        row = adversary.point;
        break;
    }
    out.observed.samples.row(i) = row.transpose();
  }
  return out;
}

absl::StatusOr<ContaminatedRegression> Corrupt(const RegressionDataset& clean,
                                               const AdversarySpec& adversary,
                                               double eta, RngStream& rng) {
  if (!(eta >= 0.0 && eta < 0.5)) {
    return absl::InvalidArgumentError("eta must lie in [0, 1/2)");
  }
  const int n = clean.n();
  const int d = clean.d();
  ContaminatedRegression out;
  out.observed = clean;
  out.clean = clean;
  out.mask.assign(n, false);
  out.eta = eta;
  const int k = FloorCount(eta, n);
  if (k < 1) return out;

  if (adversary.kind == AdversaryKind::kGross && adversary.point.size() != d) {
    return absl::InvalidArgumentError("gross adversary point has wrong dimension");
  }
  if (adversary.kind == AdversaryKind::kMixturePlant &&
      adversary.direction.size() != d) {
    return absl::InvalidArgumentError("adversary direction has wrong dimension");
  }
  if (adversary.kind == AdversaryKind::kResponseReplace) {
    // Validate the replacement law once before touching the data.
    RngStream probe = rng.Split(0);
    absl::StatusOr<double> check = R0Sample(eta, adversary.s, probe);
    if (!check.ok()) return check.status();
  }
  const Vector u = adversary.kind == AdversaryKind::kMixturePlant
                       ? Unit(adversary.direction)
                       : Vector();
  for (int i : rng.Subset(n, k)) {
    out.mask[i] = true;
    switch (adversary.kind) {
      case AdversaryKind::kResponseReplace:
        out.observed.y(i) = *R0Sample(eta, adversary.s, rng);
        break;
      case AdversaryKind::kGross:
        out.observed.x.col(i) = adversary.point;
        out.observed.y(i) = adversary.response;
        break;
      case AdversaryKind::kShift:
        out.observed.y(i) += adversary.delta;
        break;
      case AdversaryKind::kMixturePlant:
        out.observed.x.col(i) += adversary.a * clean.y(i) * u;
        break;
    }
  }
  return out;
}

absl::StatusOr<ContaminatedMean> CorruptWithRows(const MeanDataset& clean,
                                                 const MeanDataset& rows,
                                                 double eta, RngStream& rng) {
  if (!(eta >= 0.0 && eta < 0.5)) {
    return absl::InvalidArgumentError("eta must lie in [0, 1/2)");
  }
  const int n = clean.n();
  const int k = FloorCount(eta, n);
  ContaminatedMean out;
  out.observed = clean;
  out.clean = clean;
  out.mask.assign(n, false);
  out.eta = eta;
  if (k < 1) return out;
  if (rows.d() != clean.d() || rows.n() < k) {
    return absl::InvalidArgumentError(absl::StrCat(
        "replacement rows must have dimension ", clean.d(), " and at least ",
        k, " rows, got ", rows.n(), " x ", rows.d()));
  }
  int next = 0;
  for (int i : rng.Subset(n, k)) {
    out.mask[i] = true;
    out.observed.samples.row(i) = rows.samples.row(next++);
  }
  return out;
}

absl::StatusOr<ContaminatedRegression> CorruptWithRows(
    const RegressionDataset& clean, const RegressionDataset& rows, double eta,
    RngStream& rng) {
  if (!(eta >= 0.0 && eta < 0.5)) {
    return absl::InvalidArgumentError("eta must lie in [0, 1/2)");
  }
  const int n = clean.n();
  const int k = FloorCount(eta, n);
  ContaminatedRegression out;
  out.observed = clean;
  out.clean = clean;
  out.mask.assign(n, false);
  out.eta = eta;
  if (k < 1) return out;
  if (rows.d() != clean.d() || rows.n() < k) {
    return absl::InvalidArgumentError(absl::StrCat(
        "replacement rows must have dimension ", clean.d(), " and at least ",
        k, " rows, got ", rows.n(), " x ", rows.d()));
  }
  int next = 0;
  for (int i : rng.Subset(n, k)) {
    out.mask[i] = true;
    out.observed.x.col(i) = rows.x.col(next);
    out.observed.y(i) = rows.y(next);
    ++next;
  }
  return out;
}

std::string MeanDatasetToCsv(const MeanDataset& data,
                             const std::vector<bool>* mask) {
  std::string out = absl::StrCat("dim,n\n", data.d(), ",", data.n(), "\n");
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.d(); ++j) {
      if (j > 0) out += ",";
      out += FormatDouble(data.samples(i, j));
    }
    if (mask != nullptr) absl::StrAppend(&out, ",", (*mask)[i] ? 1 : 0);
    out += "\n";
  }
  return out;
}

absl::StatusOr<MeanDataset> MeanDatasetFromCsv(const std::string& text,
                                               std::vector<bool>* mask) {
  absl::StatusOr<std::vector<std::string>> lines = DataLines(text, "dim,n");
  if (!lines.ok()) return lines.status();
  absl::StatusOr<std::vector<double>> dims = ParseRow((*lines)[1]);
  if (!dims.ok()) return dims.status();
  if (dims->size() != 2) return absl::InvalidArgumentError("bad dim,n row");
  const int d = static_cast<int>((*dims)[0]);
  const int n = static_cast<int>((*dims)[1]);
  if (static_cast<int>(lines->size()) != n + 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected ", n, " sample rows, found ", lines->size() - 2));
  }
  MeanDataset data;
  data.samples.resize(n, d);
  if (mask != nullptr) mask->assign(n, false);
  for (int i = 0; i < n; ++i) {
    absl::StatusOr<std::vector<double>> row = ParseRow((*lines)[i + 2]);
    if (!row.ok()) return row.status();
    const int width = static_cast<int>(row->size());
    if (width != d && width != d + 1) {
      return absl::InvalidArgumentError(
          absl::StrCat("row ", i, " has ", width, " fields, expected ", d));
    }
    for (int j = 0; j < d; ++j) data.samples(i, j) = (*row)[j];
    if (width == d + 1 && mask != nullptr) (*mask)[i] = (*row)[d] != 0.0;
  }
  return data;
}

std::string RegressionDatasetToCsv(const RegressionDataset& data) {
  std::string out = absl::StrCat("d,n\n", data.d(), ",", data.n(), "\n");
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.d(); ++j) {
      out += FormatDouble(data.x(j, i));
      out += ",";
    }
    out += FormatDouble(data.y(i));
    out += "\n";
  }
  return out;
}

absl::StatusOr<RegressionDataset> RegressionDatasetFromCsv(
    const std::string& text) {
  absl::StatusOr<std::vector<std::string>> lines = DataLines(text, "d,n");
  if (!lines.ok()) return lines.status();
  absl::StatusOr<std::vector<double>> dims = ParseRow((*lines)[1]);
  if (!dims.ok()) return dims.status();
  if (dims->size() != 2) return absl::InvalidArgumentError("bad d,n row");
  const int d = static_cast<int>((*dims)[0]);
  const int n = static_cast<int>((*dims)[1]);
  if (static_cast<int>(lines->size()) != n + 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected ", n, " sample rows, found ", lines->size() - 2));
  }
  RegressionDataset data;
  data.x.resize(d, n);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    absl::StatusOr<std::vector<double>> row = ParseRow((*lines)[i + 2]);
    if (!row.ok()) return row.status();
    if (static_cast<int>(row->size()) != d + 1) {
      return absl::InvalidArgumentError(
          absl::StrCat("row ", i, " has ", row->size(), " fields, expected ",
                       d + 1));
    }
    for (int j = 0; j < d; ++j) data.x(j, i) = (*row)[j];
    data.y(i) = (*row)[d];
  }
  return data;
}

}  // namespace rpbayes
