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

#include "rpbayes/numerics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace rpbayes {
namespace {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double OffDiagonalNorm(const Matrix& a) {
  double s = 0.0;
  for (int j = 0; j < a.cols(); ++j) {
    for (int i = 0; i < a.rows(); ++i) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace

absl::StatusOr<SymMatrix> SymMatrix::Create(const Matrix& entries) {
  if (entries.rows() != entries.cols() || entries.rows() < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("SymMatrix needs a nonempty square matrix, got ",
                     entries.rows(), "x", entries.cols()));
  }
  if (!entries.allFinite()) {
    return absl::InvalidArgumentError("SymMatrix entries must be finite");
  }
  const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
  const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    return absl::InvalidArgumentError(
        absl::StrCat("matrix is not symmetric: max |m - m^T| = ", asym));
  }
  return SymMatrix(0.5 * (entries + entries.transpose()));
}

SymMatrix SymMatrix::Identity(int dim) {
  return SymMatrix(Matrix::Identity(dim, dim));
}

SymMatrix SymMatrix::Zero(int dim) { return SymMatrix(Matrix::Zero(dim, dim)); }

SymMatrix SymMatrix::Diagonal(const Vector& diag) {
  return SymMatrix(diag.asDiagonal().toDenseMatrix());
}

SymMatrix SymMatrix::Symmetrize(const Matrix& m) {
  return SymMatrix(0.5 * (m + m.transpose()));
}

absl::StatusOr<SymEigResult> SymEig(const SymMatrix& m, int max_sweeps) {
  const int n = m.dim();
  Matrix a = m.entries();
  Matrix v = Matrix::Identity(n, n);
  const double total = a.norm();
  int sweep = 0;
  double off = OffDiagonalNorm(a);
  while (off > kJacobiTolerance * total) {
    if (sweep == max_sweeps) {
      return absl::InternalError(absl::StrCat(
          "Jacobi eigensolver did not converge after ", max_sweeps,
          " sweeps; residual off-diagonal norm ", off));
    }
    ++sweep;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0 ? 1.0 : -1.0) /
              (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    off = OffDiagonalNorm(a);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&a](int i, int j) { return a(i, i) > a(j, j); });
  SymEigResult result;
  result.eigenvalues.resize(n);
  result.eigenvectors.resize(n, n);
  result.sweeps = sweep;
  for (int j = 0; j < n; ++j) {
    result.eigenvalues(j) = a(order[j], order[j]);
    result.eigenvectors.col(j) = v.col(order[j]);
  }
  return result;
}

absl::StatusOr<std::pair<double, Vector>> TopEigen(const SymMatrix& m) {
  absl::StatusOr<SymEigResult> eig = SymEig(m);
  if (!eig.ok()) return eig.status();
  return std::make_pair(eig->eigenvalues(0), Vector(eig->eigenvectors.col(0)));
}

absl::StatusOr<double> OperatorNorm(const SymMatrix& m) {
  absl::StatusOr<SymEigResult> eig = SymEig(m);
  if (!eig.ok()) return eig.status();
  return std::max(std::abs(eig->eigenvalues(0)),
                  std::abs(eig->eigenvalues(m.dim() - 1)));
}

RngStream::RngStream(uint64_t seed, uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      engine_(SplitMix64(seed ^ SplitMix64(stream_id ^ 0x5851F42D4C957F2DULL))) {
}

RngStream RngStream::Split(uint64_t child_id) const {
  return RngStream(seed_, SplitMix64(stream_id_ + SplitMix64(child_id + 1)));
}

double RngStream::Uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

uint64_t RngStream::UniformInt(uint64_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double RngStream::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = Uniform();
  const double u2 = Uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

Vector RngStream::NormalVector(int dim) {
  Vector g(dim);
  for (int i = 0; i < dim; ++i) g(i) = Normal();
  return g;
}

Vector RngStream::UnitVector(int dim) {
  while (true) {
    Vector g = NormalVector(dim);
    const double norm = g.norm();
    if (norm > 1e-300) return g / norm;
  }
}

std::vector<int> RngStream::Subset(int n, int k) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(UniformInt(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

absl::StatusOr<Vector> GaussVector(RngStream& rng, const Vector& mean,
                                   const Matrix& cov_sqrt) {
  if (cov_sqrt.rows() != mean.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("cov_sqrt has ", cov_sqrt.rows(),
                     " rows but mean has dimension ", mean.size()));
  }
  const Vector g = rng.NormalVector(static_cast<int>(cov_sqrt.cols()));
  return Vector(mean + cov_sqrt * g);
}

double HermiteValue(int j, double x) {
  if (j == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 1; k < j; ++k) {
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                        std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

std::vector<double> HermiteValues(int jmax, double x) {
  std::vector<double> h(jmax + 1);
  h[0] = 1.0;
  if (jmax >= 1) h[1] = x;
  for (int k = 1; k < jmax; ++k) {
    h[k + 1] = (x * h[k] - std::sqrt(static_cast<double>(k)) * h[k - 1]) /
               std::sqrt(static_cast<double>(k + 1));
  }
  return h;
}

absl::StatusOr<QuadratureRule> GaussHermiteRule(int order) {
  if (order < 1) {
    return absl::InvalidArgumentError("quadrature order must be positive");
  }
  Matrix jacobi = Matrix::Zero(order, order);
  for (int k = 0; k + 1 < order; ++k) {
    jacobi(k, k + 1) = std::sqrt(static_cast<double>(k + 1));
    jacobi(k + 1, k) = jacobi(k, k + 1);
  }
  absl::StatusOr<SymEigResult> eig = SymEig(SymMatrix::Symmetrize(jacobi));
  if (!eig.ok()) return eig.status();

  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const double sqrt_n = std::sqrt(static_cast<double>(order));
  for (int i = 0; i < order; ++i) {
    double x = eig->eigenvalues(order - 1 - i);
    for (int it = 0; it < 3; ++it) {
      const std::vector<double> h = HermiteValues(order, x);
      const double deriv = sqrt_n * h[order - 1];
      if (deriv == 0.0) break;
      const double step = h[order] / deriv;
      if (!std::isfinite(step)) break;
      x -= step;
    }
    const std::vector<double> h = HermiteValues(order - 1, x);
    double sum = 0.0;
    for (double hk : h) sum += hk * hk;
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / sum;
  }
  return rule;
}

const QuadratureRule& DefaultQuadrature() {
  static const QuadratureRule* const kRule = [] {
    absl::StatusOr<QuadratureRule> rule =
        GaussHermiteRule(kDefaultQuadratureOrder);
    return new QuadratureRule(*std::move(rule));
  }();
  return *kRule;
}

double QuadExpect(const std::function<double(double)>& f,
                  const QuadratureRule& rule) {
  double sum = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(rule.nodes[i]);
  }
  return sum;
}

double LogBinomial(int n, int k) {
  if (k < 0 || k > n) return -INFINITY;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double Binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(std::exp(LogBinomial(n, k)));
}

}  // namespace rpbayes
