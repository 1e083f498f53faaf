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

#include "ckd/convergence.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ckd/error.h"
#include "ckd/hilbert.h"
#include "log_sum_exp.h"

namespace ckd {

using internal::ColLogSumExp;
using internal::RowLogSumExp;

double ConvergenceTrace::MaxBoundExcess() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& p : points) worst = std::max(worst, p.seminorm_error - p.bound);
  return worst;
}

double ConvergenceTrace::MaxRatioExcess(double floor) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (size_t t = 1; t < points.size(); ++t) {
    const double previous = points[t - 1].seminorm_error;
    if (previous <= floor) continue;
    worst = std::max(worst, points[t].seminorm_error / previous - kappa * kappa);
  }
  return worst;
}

int ConvergenceTrace::FirstIterationBelow(double threshold) const {
  for (const auto& p : points) {
    if (p.seminorm_error < threshold) return p.iteration;
  }
  return -1;
}

ConvergenceTrace TraceConvergence(const ProbabilityVector& mu,
                                  const ProbabilityVector& nu,
                                  const CostMatrix& cost, double epsilon,
                                  int total_iters, int reference_iters) {
  if (mu.size() != cost.rows() || nu.size() != cost.cols()) {
    Fail(ErrorCode::kInvalidInput, "marginals do not match cost matrix");
  }
  if (total_iters < 1) Fail(ErrorCode::kInvalidInput, "total_iters must be >= 1");
  const GibbsKernel kernel(cost, epsilon);
  const int run_iters = std::max(total_iters, reference_iters);

  // Log-domain iteration: g_t = epsilon * log v^(t) is the gradient iterate.
  const Matrix scaled_cost = cost.entries() / epsilon;
  const Vector log_mu = mu.values().array().log().matrix();
  const Vector log_nu = nu.values().array().log().matrix();
  Vector f = Vector::Zero(mu.size());
  Vector g = Vector::Zero(nu.size());
  std::vector<Vector> gradients;
  gradients.reserve(static_cast<size_t>(total_iters) + 1);
  gradients.push_back(epsilon * g);
  for (int t = 1; t <= run_iters; ++t) {
    f = log_mu - RowLogSumExp((-scaled_cost).rowwise() + g.transpose());
    g = log_nu - ColLogSumExp((-scaled_cost).colwise() + f);
    if (t <= total_iters) gradients.push_back(epsilon * g);
  }
  const Vector reference = epsilon * g;

  ConvergenceTrace trace;
  trace.log_psi = LogPsi(kernel);
  trace.kappa = std::tanh(trace.log_psi / 4.0);
  trace.reference_iteration = run_iters;
  trace.points.reserve(gradients.size());
  double initial = 0.0;
  for (size_t t = 0; t < gradients.size(); ++t) {
    const Vector diff = gradients[t] - reference;
    ConvergencePoint point;
    point.iteration = static_cast<int>(t);
    point.seminorm_error = VariationSeminorm(diff);
    point.l2_error = diff.norm();
    if (t == 0) initial = point.seminorm_error;
    point.bound = std::pow(trace.kappa, 2.0 * static_cast<double>(t)) * initial;
    trace.points.push_back(point);
  }
  return trace;
}

ConvergenceTrace AverageTraces(const std::vector<ConvergenceTrace>& traces) {
  if (traces.empty()) Fail(ErrorCode::kInvalidInput, "no traces to average");
  ConvergenceTrace mean;
  mean.points.resize(traces.front().points.size());
  mean.reference_iteration = traces.front().reference_iteration;
  for (const auto& trace : traces) {
    if (trace.points.size() != mean.points.size()) {
      Fail(ErrorCode::kInvalidInput, "traces have different lengths");
    }
    mean.kappa += trace.kappa;
    mean.log_psi += trace.log_psi;
    for (size_t t = 0; t < trace.points.size(); ++t) {
      mean.points[t].iteration = trace.points[t].iteration;
      mean.points[t].seminorm_error += trace.points[t].seminorm_error;
      mean.points[t].bound += trace.points[t].bound;
      mean.points[t].l2_error += trace.points[t].l2_error;
    }
  }
  const double n = static_cast<double>(traces.size());
  mean.kappa /= n;
  mean.log_psi /= n;
  for (auto& p : mean.points) {
    p.seminorm_error /= n;
    p.bound /= n;
    p.l2_error /= n;
  }
  return mean;
}

}  // namespace ckd
