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

#include "ckd/assess.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "ckd/error.h"
#include "ckd/seed.h"
#include "ckd/sinkhorn.h"
#include "ckd/softmax.h"

namespace ckd {
namespace {

struct HeadObjective {
  double value = 0.0;
  Matrix grad_w;
  Vector grad_b;
};

HeadObjective EvaluateHead(const Matrix& features, std::span<const int> labels,
                           const Matrix& w, const Vector& b, double l2) {
  const Index n = features.rows();
  Matrix logits = features * w;
  logits.rowwise() += b.transpose();
  const Vector peak = logits.rowwise().maxCoeff();
  logits.colwise() -= peak;
  Matrix g = logits.array().exp().matrix();
  const Vector log_z = g.rowwise().sum().array().log().matrix();
  g.array().colwise() /= g.rowwise().sum().array();
  double ce = log_z.sum();
  for (Index i = 0; i < n; ++i) {
    ce -= logits(i, labels[i]);
    g(i, labels[i]) -= 1.0;
  }
  const double inv = 1.0 / static_cast<double>(n);
  g *= inv;
  HeadObjective out;
  out.value = ce * inv + 0.5 * l2 * (w.squaredNorm() + b.squaredNorm());
  out.grad_w = features.transpose() * g + l2 * w;
  out.grad_b = g.colwise().sum().transpose() + l2 * b;
  return out;
}

// Smoothness constant of the regularized objective: the softmax cross-entropy
// Hessian is bounded by I/2 per instance.
double LipschitzConstant(const Matrix& features, double l2) {
  const Index n = features.rows();
  const Index d = features.cols();
  Matrix augmented(n, d + 1);
  augmented.leftCols(d) = features;
  augmented.col(d).setOnes();
  const Matrix gram = augmented.transpose() * augmented / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().maxCoeff() + l2;
}

Architecture FeatureHeadArchitecture(int dim) {
  Architecture arch;
  arch.embedding = Architecture::Embedding::kIdentity;
  arch.input_dim = dim;
  arch.feature_dim = dim;
  arch.head_bias = true;
  return arch;
}

void CheckConfig(const AssessmentConfig& config) {
  if (!(config.metric_tau() > 0.0) || !(config.epsilon > 0.0)) {
    Fail(ErrorCode::kInvalidConfiguration, "assessment needs tau > 0 and epsilon > 0");
  }
  if (!(config.fictitious.l2 >= 0.0) || config.fictitious.max_iters < 0 ||
      !(config.fictitious.grad_tol > 0.0) || !(config.fictitious.learning_rate >= 0.0)) {
    Fail(ErrorCode::kInvalidConfiguration, "invalid fictitious-student trainer settings");
  }
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string_view AssessmentRegimeName(AssessmentRegime regime) {
  switch (regime) {
    case AssessmentRegime::kVanilla: return "vanilla";
    case AssessmentRegime::kApproxI: return "approx-I";
    case AssessmentRegime::kApproxII: return "approx-II";
  }
  return "approx-II";
}

AssessmentRegime ParseAssessmentRegime(std::string_view name) {
  if (name == "vanilla") return AssessmentRegime::kVanilla;
  if (name == "approx-I" || name == "approx-i" || name == "approx1") {
    return AssessmentRegime::kApproxI;
  }
  if (name == "approx-II" || name == "approx-ii" || name == "approx2") {
    return AssessmentRegime::kApproxII;
  }
  Fail(ErrorCode::kInvalidConfiguration, "unknown assessment regime '" + std::string(name) + "'");
}

SinkhornConfig AssessmentConfig::sinkhorn() const {
  SinkhornConfig c;
  c.epsilon = epsilon;
  c.tol = sinkhorn_tol;
  c.max_iters = sinkhorn_max_iters;
  c.domain = sinkhorn_domain;
  return c;
}

FictitiousStudent FitFictitiousHead(const Matrix& features, std::span<const int> labels,
                                    const LabelSet& label_set,
                                    const FictitiousTrainerConfig& config) {
  const Index n = features.rows();
  const Index d = features.cols();
  const Index c = static_cast<Index>(label_set.size());
  if (n == 0) Fail(ErrorCode::kEmptyInput, "fictitious student needs training data");
  if (static_cast<size_t>(n) != labels.size()) {
    Fail(ErrorCode::kInvalidInput, "features and labels differ in length");
  }
  for (int y : labels) {
    if (y < 0 || y >= c) Fail(ErrorCode::kInvalidInput, "label index out of range");
  }
  if (!features.allFinite()) Fail(ErrorCode::kInvalidInput, "non-finite teacher features");

  const double smooth = LipschitzConstant(features, config.l2);
  const double step = config.learning_rate > 0.0 ? config.learning_rate : 1.0 / smooth;
  const double momentum =
      config.l2 > 0.0
          ? (std::sqrt(smooth) - std::sqrt(config.l2)) / (std::sqrt(smooth) + std::sqrt(config.l2))
          : 0.9;

  Matrix w = Matrix::Zero(d, c);
  Vector b = Vector::Zero(c);
  Matrix yw = w;
  Vector yb = b;
  FictitiousStudent out{.model = Classifier(FeatureHeadArchitecture(static_cast<int>(d)),
                                            label_set, Matrix(), Vector(), w, b)};
  double grad_norm = 0.0;
  int iter = 0;
  for (; iter < config.max_iters; ++iter) {
    const HeadObjective obj = EvaluateHead(features, labels, yw, yb, config.l2);
    grad_norm = std::sqrt(obj.grad_w.squaredNorm() + obj.grad_b.squaredNorm());
    if (!std::isfinite(grad_norm)) {
      Fail(ErrorCode::kTrainingDiverged, "fictitious student gradient is not finite");
    }
    if (grad_norm <= config.grad_tol) {
      w = yw;
      b = yb;
      out.converged = true;
      break;
    }
    const Matrix next_w = yw - step * obj.grad_w;
    const Vector next_b = yb - step * obj.grad_b;
    // Adaptive restart: drop momentum when it points uphill.
    const double uphill = (obj.grad_w.cwiseProduct(next_w - w)).sum() +
                          obj.grad_b.dot(next_b - b);
    if (uphill > 0.0) {
      yw = next_w;
      yb = next_b;
    } else {
      yw = next_w + momentum * (next_w - w);
      yb = next_b + momentum * (next_b - b);
    }
    w = next_w;
    b = next_b;
  }
  if (!out.converged) {
    const HeadObjective obj = EvaluateHead(features, labels, w, b, config.l2);
    grad_norm = std::sqrt(obj.grad_w.squaredNorm() + obj.grad_b.squaredNorm());
    out.converged = grad_norm <= config.grad_tol;
  }
  out.iterations = iter;
  out.gradient_norm = grad_norm;
  out.objective = EvaluateHead(features, labels, w, b, config.l2).value;
  out.model = Classifier(FeatureHeadArchitecture(static_cast<int>(d)), label_set, Matrix(),
                         Vector(), std::move(w), std::move(b));
  return out;
}

FictitiousStudent FitFictitiousStudent(const Classifier& teacher,
                                       const LabeledDataset& student_data,
                                       const FictitiousTrainerConfig& config) {
  student_data.Validate();
  if (teacher.input_dim() != student_data.dim()) {
    Fail(ErrorCode::kInvalidInput, "teacher input dimension does not match the data");
  }
  return FitFictitiousHead(teacher.Embed(student_data.instances), student_data.labels,
                           student_data.label_set, config);
}

MetricValue AssessTeacher(const Classifier& teacher, const Surrogate& surrogate,
                          const LabeledDataset& student_data,
                          const AssessmentConfig& config) {
  CheckConfig(config);
  student_data.Validate();
  if (surrogate.model.label_set() != student_data.label_set) {
    Fail(ErrorCode::kInvalidInput, "surrogate label set differs from the student task");
  }
  if (teacher.input_dim() != student_data.dim()) {
    Fail(ErrorCode::kInvalidInput, "teacher input dimension does not match the data");
  }
  if (student_data.size() == 0) Fail(ErrorCode::kEmptyInput, "no student instances");

  const Matrix features = teacher.Embed(student_data.instances);
  const CostMatrix cost = BuildCostMatrixForPair(teacher, student_data,
                                                 config.teacher_center_provenance);
  const Matrix teacher_logits = teacher.LogitsFromFeatures(features);
  const Matrix surrogate_logits = surrogate.on_teacher_features
                                      ? surrogate.model.Logits(features)
                                      : surrogate.model.Logits(student_data.instances);
  const double tau = config.metric_tau();
  const SinkhornConfig sinkhorn = config.sinkhorn();

  MetricValue out;
  double total = 0.0;
  for (Index i = 0; i < student_data.size(); ++i) {
    const ProbabilityVector p_t = TemperedSoftmax(teacher_logits.row(i).transpose(), tau);
    const ProbabilityVector p_s = TemperedSoftmax(surrogate_logits.row(i).transpose(), tau);
    const SinkhornSolution solution = SolveSinkhorn(p_t, p_s, cost, sinkhorn);
    if (!solution.converged) {
      if (config.unconverged_policy == UnconvergedPolicy::kError) {
        Fail(ErrorCode::kSinkhornNotConverged,
             "instance " + std::to_string(i) + ": marginal violation " +
                 std::to_string(solution.marginal_violation));
      }
      ++out.unconverged;
    }
    total += solution.primal_value;
  }
  out.value = total / static_cast<double>(student_data.size());
  return out;
}

const AssessmentRow* AssessmentReport::Best() const {
  for (const AssessmentRow& row : rows) {
    if (row.rank == 1) return &row;
  }
  return nullptr;
}

const AssessmentRow* AssessmentReport::Find(std::string_view teacher_id) const {
  for (const AssessmentRow& row : rows) {
    if (row.teacher_id == teacher_id) return &row;
  }
  return nullptr;
}

void RankRows(std::vector<AssessmentRow>& rows) {
  std::vector<size_t> order;
  for (size_t i = 0; i < rows.size(); ++i) {
    rows[i].rank = 0;
    if (rows[i].ok()) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (rows[a].metric != rows[b].metric) return rows[a].metric < rows[b].metric;
    return rows[a].teacher_id < rows[b].teacher_id;
  });
  for (size_t r = 0; r < order.size(); ++r) rows[order[r]].rank = static_cast<int>(r + 1);
}

Classifier MakeStudentTemplate(const LabeledDataset& data, const AssessmentConfig& config) {
  const Architecture arch =
      Architecture::Parse(config.student_architecture, static_cast<int>(data.dim()));
  return Classifier::Create(arch, data.label_set, DeriveSeed(config.seed, "assess/student-init"));
}

DistillConfig MakeStudentDistillConfig(const AssessmentConfig& config, DistillMode mode) {
  DistillConfig distill = config.distill;
  distill.mode = mode;
  distill.optimizer.seed = DeriveSeed(config.seed, "assess/student-train");
  return distill;
}

Classifier TrainPlainStudent(const LabeledDataset& student_data,
                             const AssessmentConfig& config) {
  const Classifier student = MakeStudentTemplate(student_data, config);
  const DistillRun run = RunDistillation(student, student, student_data, LabeledDataset{},
                                         MakeStudentDistillConfig(config, DistillMode::kNone));
  return run.student;
}

AssessmentReport AssessRepository(std::span<const RepositoryEntry> repository,
                                  const LabeledDataset& student_data,
                                  const AssessmentConfig& config,
                                  const std::optional<Classifier>& approx_i_student,
                                  const LabeledDataset* student_test,
                                  const std::function<void(const AssessmentRow&)>& on_row) {
  if (repository.empty()) Fail(ErrorCode::kEmptyInput, "repository is empty");
  CheckConfig(config);
  student_data.Validate();
  for (size_t i = 0; i < repository.size(); ++i) {
    for (size_t j = i + 1; j < repository.size(); ++j) {
      if (repository[i].id == repository[j].id) {
        Fail(ErrorCode::kDuplicateId, "duplicate teacher id '" + repository[i].id + "'");
      }
    }
  }

  AssessmentReport report;
  report.regime = config.regime;
  report.config = config;

  std::optional<Classifier> shared;
  if (config.regime == AssessmentRegime::kApproxI) {
    shared = approx_i_student ? *approx_i_student : TrainPlainStudent(student_data, config);
    if (shared->label_set() != student_data.label_set) {
      Fail(ErrorCode::kInvalidConfiguration, "approx-I student is for a different task");
    }
  }

  std::map<std::string, double> ground_truth;
  for (const RepositoryEntry& entry : repository) {
    AssessmentRow row;
    row.teacher_id = entry.id;
    const auto start = std::chrono::steady_clock::now();
    try {
      MetricValue metric;
      switch (config.regime) {
        case AssessmentRegime::kApproxII: {
          FictitiousStudent fictitious =
              FitFictitiousStudent(entry.model, student_data, config.fictitious);
          row.converged = fictitious.converged;
          metric = AssessTeacher(entry.model, Surrogate{std::move(fictitious.model), true},
                                 student_data, config);
          break;
        }
        case AssessmentRegime::kApproxI:
          metric = AssessTeacher(entry.model, Surrogate{*shared, false}, student_data, config);
          break;
        case AssessmentRegime::kVanilla: {
          const LabeledDataset empty;
          DistillRun run = RunDistillation(
              entry.model, MakeStudentTemplate(student_data, config), student_data,
              student_test ? *student_test : empty,
              MakeStudentDistillConfig(config, DistillMode::kSinkhorn));
          if (run.unconverged_solves > 0) row.converged = false;
          if (student_test && student_test->size() > 0) {
            ground_truth[entry.id] = run.test_accuracy;
          }
          metric = AssessTeacher(entry.model, Surrogate{std::move(run.student), false},
                                 student_data, config);
          break;
        }
      }
      row.metric = metric.value;
      if (metric.unconverged > 0) row.converged = false;
    } catch (const Error& e) {
      row.error = e.what();
      row.converged = false;
    }
    row.seconds = Seconds(start);
    if (const auto it = ground_truth.find(row.teacher_id); it != ground_truth.end()) {
      row.ground_truth = it->second;
    }
    if (on_row) on_row(row);
    report.rows.push_back(std::move(row));
  }
  RankRows(report.rows);
  if (!ground_truth.empty()) AttachGroundTruth(report, ground_truth);
  return report;
}

void AttachGroundTruth(AssessmentReport& report,
                       const std::map<std::string, double>& accuracy_by_id) {
  std::vector<double> metric;
  std::vector<double> truth;
  for (AssessmentRow& row : report.rows) {
    const auto it = accuracy_by_id.find(row.teacher_id);
    if (it == accuracy_by_id.end()) continue;
    row.ground_truth = it->second;
    if (row.ok()) {
      metric.push_back(row.metric);
      truth.push_back(it->second);
    }
  }
  report.correlation.reset();
  if (metric.size() >= 3) {
    try {
      report.correlation = MetricCorrelation(metric, truth);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUndefinedCorrelation) throw;
    }
  }
}

double KlBetweenStudents(const Classifier& a, const Classifier& b, const Matrix& x,
                         double tau) {
  if (a.label_set() != b.label_set()) {
    Fail(ErrorCode::kInvalidInput, "students have different label sets");
  }
  if (x.rows() == 0) Fail(ErrorCode::kEmptyInput, "no instances");
  if (!(tau > 0.0)) Fail(ErrorCode::kInvalidConfiguration, "tau must be positive");
  const Matrix p = TemperedSoftmaxRows(a.Logits(x), tau);
  const Matrix q = TemperedSoftmaxRows(b.Logits(x), tau);
  const double total = (p.array() * (p.array().log() - q.array().log())).sum();
  return total / static_cast<double>(x.rows());
}

}  // namespace ckd
