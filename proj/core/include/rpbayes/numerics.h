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

#ifndef RPBAYES_NUMERICS_H_
#define RPBAYES_NUMERICS_H_

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/statusor.h"

namespace rpbayes {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Dense symmetric matrix. Construction checks symmetry to a relative
// tolerance and then symmetrizes exactly.
class SymMatrix {
 public:
  static absl::StatusOr<SymMatrix> Create(const Matrix& entries);
  static SymMatrix Identity(int dim);
  static SymMatrix Zero(int dim);
  static SymMatrix Diagonal(const Vector& diag);
  // Returns (m + m^T) / 2 without a tolerance check.
  static SymMatrix Symmetrize(const Matrix& m);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

 private:
  explicit SymMatrix(Matrix entries) : entries_(std::move(entries)) {}

  Matrix entries_;
};

struct SymEigResult {
  // Sorted descending.
  Vector eigenvalues;
  // Column j is the unit eigenvector for eigenvalues[j]; m = V D V^T.
  Matrix eigenvectors;
  int sweeps = 0;
};

inline constexpr double kJacobiTolerance = 1e-12;
inline constexpr int kJacobiMaxSweeps = 100;

// Cyclic Jacobi eigendecomposition. Fails with kInternal carrying the
// remaining off-diagonal mass if it has not converged after max_sweeps.
absl::StatusOr<SymEigResult> SymEig(const SymMatrix& m,
                                    int max_sweeps = kJacobiMaxSweeps);

// Largest eigenvalue and its eigenvector.
absl::StatusOr<std::pair<double, Vector>> TopEigen(const SymMatrix& m);

// Spectral norm of a symmetric matrix (max |eigenvalue|).
absl::StatusOr<double> OperatorNorm(const SymMatrix& m);

// Deterministic random stream. The same (seed, stream_id) pair always
// produces the same draws; normals come from a fixed Box-Muller transform so
// that output does not depend on the standard library's distributions.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t stream_id);

  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_id_; }

  // Independent child stream derived from this stream's identity.
  RngStream Split(uint64_t child_id) const;

  uint64_t NextU64() { return engine_(); }
  // Uniform on the open interval (0, 1).
  double Uniform();
  // Uniform integer in [0, n).
  uint64_t UniformInt(uint64_t n);
  double Normal();
  Vector NormalVector(int dim);
  // Uniform on the unit sphere in R^dim.
  Vector UnitVector(int dim);
  // Random subset of size k from [0, n), sorted ascending.
  std::vector<int> Subset(int n, int k);

 private:
  uint64_t seed_;
  uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// mean + cov_sqrt * g with g standard normal.
absl::StatusOr<Vector> GaussVector(RngStream& rng, const Vector& mean,
                                   const Matrix& cov_sqrt);

// Normalized probabilist's Hermite polynomial, E[h_j(Z)^2] = 1.
double HermiteValue(int j, double x);
// h_0(x), ..., h_jmax(x).
std::vector<double> HermiteValues(int jmax, double x);

struct QuadratureRule {
  std::vector<double> nodes;
  // Weights for the standard normal measure; they sum to one.
  std::vector<double> weights;
  int order = 0;
};

inline constexpr int kDefaultQuadratureOrder = 160;

// Gauss-Hermite rule for N(0, 1). Nodes come from the eigenvalues of the
// Jacobi matrix, polished by Newton steps on h_order; weights use the
// Christoffel form 1 / sum_k h_k(x)^2, which stays accurate where the tiny
// eigenvector components would not.
absl::StatusOr<QuadratureRule> GaussHermiteRule(int order);

// Cached 160-node rule.
const QuadratureRule& DefaultQuadrature();

double QuadExpect(const std::function<double(double)>& f,
                  const QuadratureRule& rule);

// log C(n, k) and C(n, k) as doubles.
double LogBinomial(int n, int k);
double Binomial(int n, int k);

}  // namespace rpbayes

#endif  // RPBAYES_NUMERICS_H_
