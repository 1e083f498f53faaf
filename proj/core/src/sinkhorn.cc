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

#include "ckd/sinkhorn.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "ckd/error.h"
#include "log_sum_exp.h"

namespace ckd {
namespace {

using internal::ColLogSumExp;
using internal::RowLogSumExp;

constexpr double kDenominatorFloor = 1e-300;

void CheckProblem(const ProbabilityVector& mu, const ProbabilityVector& nu,
                  const CostMatrix& cost, const SinkhornConfig& config) {
  if (mu.size() != cost.rows() || nu.size() != cost.cols()) {
    Fail(ErrorCode::kInvalidInput,
         "marginal sizes " + std::to_string(mu.size()) + "x" +
             std::to_string(nu.size()) + " do not match cost matrix " +
             std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()));
  }
  if (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon)) {
    Fail(ErrorCode::kInvalidInput, "epsilon must be positive");
  }
  if (!(config.tol > 0.0)) Fail(ErrorCode::kInvalidInput, "tol must be positive");
  if (config.max_iters <= 0) {
    Fail(ErrorCode::kInvalidInput, "max_iters must be positive");
  }
  if ((mu.values().array() <= 0.0).any() || (nu.values().array() <= 0.0).any()) {
    Fail(ErrorCode::kInvalidInput, "marginals must be strictly positive");
  }
}

double MarginalViolation(const Vector& rows, const Vector& cols, const Vector& mu,
                         const Vector& nu) {
  return (rows - mu).lpNorm<1>() + (cols - nu).lpNorm<1>();
}

[[noreturn]] void PlainUnstable(const char* where) {
  Fail(ErrorCode::kNumericInstability,
       std::string("plain-domain Sinkhorn underflowed in ") + where +
           "; use the log-domain solver for this epsilon");
}

void SolvePlain(const Vector& mu, const Vector& nu, const Matrix& cost,
                const SinkhornConfig& config, SinkhornSolution& out) {
  const double eps = config.epsilon;
  const Matrix kernel = (-cost / eps).array().exp().matrix();
  Vector u = Vector::Ones(mu.size());
  Vector v = Vector::Ones(nu.size());
  Vector kv = kernel * v;
  Vector ktu;
  int iter = 0;
  double violation = 0.0;
  while (true) {
    if (kv.minCoeff() < kDenominatorFloor) PlainUnstable("K v");
    u = mu.cwiseQuotient(kv);
    ktu = kernel.transpose() * u;
    if (ktu.minCoeff() < kDenominatorFloor) PlainUnstable("K^T u");
    v = nu.cwiseQuotient(ktu);
    if (!u.allFinite() || !v.allFinite()) PlainUnstable("scaling update");
    ++iter;
    kv = kernel * v;
    violation = MarginalViolation(u.cwiseProduct(kv), v.cwiseProduct(ktu), mu, nu);
    if (violation <= config.tol || iter >= config.max_iters) break;
  }
  out.plan = u.asDiagonal() * kernel * v.asDiagonal();
  out.alpha = eps * u.array().log().matrix();
  out.beta = eps * v.array().log().matrix();
  out.iterations_used = iter;
  out.marginal_violation = violation;
  out.converged = violation <= config.tol;
  out.log_domain = false;
}

void SolveLog(const Vector& mu, const Vector& nu, const Matrix& cost,
              const SinkhornConfig& config, SinkhornSolution& out) {
  const double eps = config.epsilon;
  const Vector log_mu = mu.array().log().matrix();
  const Vector log_nu = nu.array().log().matrix();
  const Matrix scaled_cost = cost / eps;
  // Potentials in units of epsilon: f = alpha / eps, g = beta / eps.
  Vector f = Vector::Zero(mu.size());
  Vector g = Vector::Zero(nu.size());
  Matrix log_plan;
  int iter = 0;
  double violation = 0.0;
  while (true) {
    f = log_mu - RowLogSumExp((-scaled_cost).rowwise() + g.transpose());
    g = log_nu - ColLogSumExp((-scaled_cost).colwise() + f);
    ++iter;
    log_plan = ((-scaled_cost).colwise() + f).rowwise() + g.transpose();
    const Matrix plan = log_plan.array().exp().matrix();
    violation = MarginalViolation(plan.rowwise().sum(), plan.colwise().sum().transpose(),
                                  mu, nu);
    if (violation <= config.tol || iter >= config.max_iters) break;
  }
  out.plan = log_plan.array().exp().matrix();
  out.alpha = eps * f;
  out.beta = eps * g;
  out.iterations_used = iter;
  out.marginal_violation = violation;
  out.converged = violation <= config.tol;
  out.log_domain = true;
}

}  // namespace

double Entropy(const Matrix& plan) {
  double sum = 0.0;
  for (Index j = 0; j < plan.cols(); ++j) {
    for (Index i = 0; i < plan.rows(); ++i) {
      const double t = plan(i, j);
      if (!(t >= 0.0)) {
        Fail(ErrorCode::kInvalidInput, "transport plan has a negative entry");
      }
      if (t > 0.0) sum -= t * (std::log(t) - 1.0);
    }
  }
  return sum;
}

double PrimalObjective(const Matrix& plan, const Matrix& cost, double epsilon) {
  return plan.cwiseProduct(cost).sum() - epsilon * Entropy(plan);
}

double DualObjective(const Vector& alpha, const Vector& beta, const Vector& mu,
                     const Vector& nu, const Matrix& cost, double epsilon) {
  const Matrix exponent =
      ((-cost).colwise() + alpha).rowwise() + beta.transpose();
  return alpha.dot(mu) + beta.dot(nu) -
         epsilon * (exponent / epsilon).array().exp().sum();
}

bool UsesLogDomain(const SinkhornConfig& config) {
  switch (config.domain) {
    case SinkhornDomain::kPlain: return false;
    case SinkhornDomain::kLog: return true;
    case SinkhornDomain::kAuto: return config.epsilon < kLogDomainThreshold;
  }
  return false;
}

SinkhornSolution SolveSinkhorn(const ProbabilityVector& mu,
                               const ProbabilityVector& nu,
                               const CostMatrix& cost,
                               const SinkhornConfig& config) {
  CheckProblem(mu, nu, cost, config);
  SinkhornSolution solution;
  solution.epsilon = config.epsilon;
  if (UsesLogDomain(config)) {
    SolveLog(mu.values(), nu.values(), cost.entries(), config, solution);
  } else {
    SolvePlain(mu.values(), nu.values(), cost.entries(), config, solution);
  }
  if (!solution.plan.allFinite() || !solution.alpha.allFinite() ||
      !solution.beta.allFinite()) {
    Fail(ErrorCode::kNumericInstability, "Sinkhorn produced non-finite values");
  }
  solution.primal_value = PrimalObjective(solution.plan, cost.entries(), config.epsilon);
  solution.dual_value =
      DualObjective(solution.alpha, solution.beta, mu.values(), nu.values(),
                    cost.entries(), config.epsilon);
  solution.source_marginal = mu.values();
  solution.target_marginal = nu.values();
  return solution;
}

double SinkhornDistance(const ProbabilityVector& mu, const ProbabilityVector& nu,
                        const CostMatrix& cost, const SinkhornConfig& config) {
  const SinkhornSolution solution = SolveSinkhorn(mu, nu, cost, config);
  if (!solution.converged) {
    Fail(ErrorCode::kSinkhornNotConverged,
         "marginal violation " + std::to_string(solution.marginal_violation) +
             " after " + std::to_string(solution.iterations_used) + " iterations");
  }
  return solution.primal_value;
}

Vector GradientWrtTarget(const SinkhornSolution& solution) {
  if (!solution.converged) {
    Fail(ErrorCode::kStaleGradient,
         "gradient requested from an unconverged Sinkhorn solution");
  }
  return solution.beta;
}

Vector GradientWrtLogits(const SinkhornSolution& solution,
                         const ProbabilityVector& p_s, double temperature) {
  if (!(temperature > 0.0)) {
    Fail(ErrorCode::kInvalidInput, "temperature must be positive");
  }
  if (p_s.size() != solution.beta.size()) {
    Fail(ErrorCode::kInvalidInput, "student distribution does not match beta");
  }
  if (solution.target_marginal.size() == p_s.size() &&
      (solution.target_marginal - p_s.values()).lpNorm<Eigen::Infinity>() > 1e-12) {
    Fail(ErrorCode::kInvalidInput,
         "student distribution differs from the target marginal that was solved");
  }
  return LogitGradientFromPotential(GradientWrtTarget(solution), p_s, temperature);
}

Vector LogitGradientFromPotential(const Vector& beta, const ProbabilityVector& p_s,
                                  double temperature) {
  if (!(temperature > 0.0)) {
    Fail(ErrorCode::kInvalidInput, "temperature must be positive");
  }
  if (p_s.size() != beta.size()) {
    Fail(ErrorCode::kInvalidInput, "student distribution does not match beta");
  }
  const Vector& p = p_s.values();
  return (beta.array() - beta.dot(p)).matrix().cwiseProduct(p) / temperature;
}

}  // namespace ckd
