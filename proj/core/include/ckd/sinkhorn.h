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

#ifndef CKD_SINKHORN_H_
#define CKD_SINKHORN_H_

#include "ckd/transport.h"

namespace ckd {

// H(T) = -sum T (log T - 1), with 0 log 0 = 0.
double Entropy(const Matrix& plan);

// <T, M> - epsilon * H(T).
double PrimalObjective(const Matrix& plan, const Matrix& cost, double epsilon);

// alpha.mu + beta.nu - epsilon * sum exp((alpha_m + beta_n - M_mn) / epsilon).
double DualObjective(const Vector& alpha, const Vector& beta, const Vector& mu,
                     const Vector& nu, const Matrix& cost, double epsilon);

bool UsesLogDomain(const SinkhornConfig& config);

// Sinkhorn fixed-point iteration u <- mu ./ (K v), v <- nu ./ (K^T u), stopped
// when the L1 marginal violation drops to config.tol or after
// config.max_iters iterations. Running out of iterations is not an error: the
// returned solution has converged == false. The plain-domain variant throws
// kNumericInstability instead of producing non-finite scalings.
SinkhornSolution SolveSinkhorn(const ProbabilityVector& mu,
                               const ProbabilityVector& nu,
                               const CostMatrix& cost,
                               const SinkhornConfig& config);

// Primal value of a converged solve; throws kSinkhornNotConverged otherwise.
double SinkhornDistance(const ProbabilityVector& mu, const ProbabilityVector& nu,
                        const CostMatrix& cost, const SinkhornConfig& config);

// Gradient of the Sinkhorn distance with respect to the target marginal,
// i.e. beta. Unique only up to an additive constant.
Vector GradientWrtTarget(const SinkhornSolution& solution);

// Gradient with respect to the logits z of p_s = softmax(z / temperature):
// (beta - <beta, p_s>) .* p_s / temperature. Pass temperature = 1 for the
// unscaled form. The result always sums to zero.
Vector GradientWrtLogits(const SinkhornSolution& solution,
                         const ProbabilityVector& p_s,
                         double temperature = 1.0);

// The same formula from a raw potential, without the convergence check; for
// callers that knowingly accept a last-iterate gradient.
Vector LogitGradientFromPotential(const Vector& beta, const ProbabilityVector& p_s,
                                  double temperature = 1.0);

}  // namespace ckd

#endif  // CKD_SINKHORN_H_
