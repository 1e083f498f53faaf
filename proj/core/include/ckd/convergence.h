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

#ifndef CKD_CONVERGENCE_H_
#define CKD_CONVERGENCE_H_

#include <vector>

#include "ckd/transport.h"

namespace ckd {

struct ConvergencePoint {
  int iteration = 0;
  // ||g_t - g_ref||_var where g_t = epsilon * log v after t iterations.
  double seminorm_error = 0.0;
  // kappa(K)^(2t) * seminorm_error at t = 0.
  double bound = 0.0;
  double l2_error = 0.0;
};

struct ConvergenceTrace {
  std::vector<ConvergencePoint> points;  // iterations 0..total_iters
  double kappa = 0.0;
  double log_psi = 0.0;
  int reference_iteration = 0;

  // Largest seminorm_error - bound over the trace (<= 0 when the bound holds).
  double MaxBoundExcess() const;
  // Largest error_{t+1} / error_t - kappa^2, skipping steps whose error_t is
  // at or below `floor` (the reference iterate is itself approximate).
  double MaxRatioExcess(double floor) const;
  // First iteration with seminorm_error < threshold, or -1.
  int FirstIterationBelow(double threshold) const;
};

// Runs Sinkhorn for max(total_iters, reference_iters) iterations from
// u = v = 1 and traces the gradient error against the final iterate. With
// reference_iters <= total_iters the reference is iterate total_iters.
ConvergenceTrace TraceConvergence(const ProbabilityVector& mu,
                                  const ProbabilityVector& nu,
                                  const CostMatrix& cost, double epsilon,
                                  int total_iters, int reference_iters = 0);

// Pointwise mean of equally long traces (kappa and log_psi are averaged too).
ConvergenceTrace AverageTraces(const std::vector<ConvergenceTrace>& traces);

}  // namespace ckd

#endif  // CKD_CONVERGENCE_H_
