// Copyright 2026 The ckd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CKD_TRANSPORT_H_
#define CKD_TRANSPORT_H_

#include <vector>

#include <Eigen/Dense>

namespace ckd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using LabelId = int;
using LabelSet = std::vector<LabelId>;

// A point on the probability simplex: nonnegative entries with unit mass.
class ProbabilityVector {
 public:
  // Mass tolerance enforced by FromValues.
  static constexpr double kMassTolerance = 1e-12;

  static ProbabilityVector FromValues(Vector values);
  // Divides a nonnegative vector with positive total by its sum.
  static ProbabilityVector Normalize(Vector values);
  static ProbabilityVector Uniform(Index size);

  const Vector& values() const { return values_; }
  Index size() const { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }

 private:
  explicit ProbabilityVector(Vector values) : values_(std::move(values)) {}

  Vector values_;
};

// Nonnegative finite costs between a source label set (rows) and a target
// label set (columns).
class CostMatrix {
 public:
  CostMatrix(Matrix entries, LabelSet source_labels, LabelSet target_labels);
  // Labels default to 0..R-1 on both sides.
  explicit CostMatrix(Matrix entries);

  const Matrix& entries() const { return entries_; }
  Index rows() const { return entries_.rows(); }
  Index cols() const { return entries_.cols(); }
  double operator()(Index m, Index n) const { return entries_(m, n); }
  const LabelSet& source_labels() const { return source_labels_; }
  const LabelSet& target_labels() const { return target_labels_; }

 private:
  Matrix entries_;
  LabelSet source_labels_;
  LabelSet target_labels_;
};

// K = exp(-M / epsilon). The kernel keeps the cost rather than the
// exponentiated entries so small epsilon does not lose information to
// underflow; entries() materializes K on demand.
class GibbsKernel {
 public:
  GibbsKernel(const CostMatrix& cost, double epsilon);

  double epsilon() const { return epsilon_; }
  const Matrix& cost() const { return cost_; }
  Matrix entries() const;
  Matrix log_entries() const { return -cost_ / epsilon_; }

 private:
  Matrix cost_;
  double epsilon_;
};

enum class SinkhornDomain {
  kAuto,   // plain for epsilon >= kLogDomainThreshold, log otherwise
  kPlain,
  kLog,
};

inline constexpr double kLogDomainThreshold = 0.05;

struct SinkhornConfig {
  double epsilon = 0.1;
  // L1 marginal violation summed over both marginals.
  double tol = 1e-9;
  int max_iters = 1000;
  SinkhornDomain domain = SinkhornDomain::kAuto;
};

struct SinkhornSolution {
  Matrix plan;
  Vector alpha;  // epsilon * log u
  Vector beta;   // epsilon * log v
  double primal_value = 0.0;
  double dual_value = 0.0;
  int iterations_used = 0;
  double marginal_violation = 0.0;
  bool converged = false;
  double epsilon = 0.0;
  bool log_domain = false;
  // Marginals the problem was solved for.
  Vector source_marginal;
  Vector target_marginal;
};

}  // namespace ckd

#endif  // CKD_TRANSPORT_H_
