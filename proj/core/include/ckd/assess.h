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

#ifndef CKD_ASSESS_H_
#define CKD_ASSESS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ckd/classifier.h"
#include "ckd/correlation.h"
#include "ckd/distill.h"

namespace ckd {

enum class AssessmentRegime {
  kVanilla,  // full distillation per teacher
  kApproxI,  // one plain-trained student shared by all teachers
  kApproxII, // fictitious linear student on each teacher's features
};

std::string_view AssessmentRegimeName(AssessmentRegime regime);
AssessmentRegime ParseAssessmentRegime(std::string_view name);

// Full-batch Nesterov gradient descent on L2-regularized multinomial logistic
// regression.
struct FictitiousTrainerConfig {
  double learning_rate = 0.0;  // 0 selects 1/L from the data
  double l2 = 1e-3;
  int max_iters = 2000;
  double grad_tol = 1e-6;
};

struct AssessmentConfig {
  AssessmentRegime regime = AssessmentRegime::kApproxII;
  // Metric temperature; ignored while couple_tau is set (distill.tau is used).
  double tau = 3.0;
  bool couple_tau = true;
  double epsilon = 0.1;
  double sinkhorn_tol = 1e-9;
  int sinkhorn_max_iters = 1000;
  SinkhornDomain sinkhorn_domain = SinkhornDomain::kAuto;
  FictitiousTrainerConfig fictitious;
  CenterProvenance teacher_center_provenance = CenterProvenance::kNormalizedHeadWeights;
  UnconvergedPolicy unconverged_policy = UnconvergedPolicy::kError;
  // Student settings for the vanilla and approx-I regimes.
  std::string student_architecture = "linear";
  DistillConfig distill;
  std::uint64_t seed = 0;

  double metric_tau() const { return couple_tau ? distill.tau : tau; }
  SinkhornConfig sinkhorn() const;
};

struct FictitiousStudent {
  Classifier model;  // identity embedding over teacher features, with bias
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  double objective = 0.0;
};

FictitiousStudent FitFictitiousHead(const Matrix& features, std::span<const int> labels,
                                    const LabelSet& label_set,
                                    const FictitiousTrainerConfig& config);
FictitiousStudent FitFictitiousStudent(const Classifier& teacher,
                                       const LabeledDataset& student_data,
                                       const FictitiousTrainerConfig& config);

// A student surrogate, either over raw inputs or over the teacher's features.
struct Surrogate {
  Classifier model;
  bool on_teacher_features = false;
};

struct MetricValue {
  double value = 0.0;
  int unconverged = 0;
};

// Mean Sinkhorn distance between tempered teacher and surrogate predictions.
MetricValue AssessTeacher(const Classifier& teacher, const Surrogate& surrogate,
                          const LabeledDataset& student_data,
                          const AssessmentConfig& config);

struct RepositoryEntry {
  std::string id;
  Classifier model;
};

struct AssessmentRow {
  std::string teacher_id;
  double metric = 0.0;
  int rank = 0;         // 0 for failed rows
  bool converged = true;
  double seconds = 0.0;
  std::string error;    // empty on success
  std::optional<double> ground_truth;
  std::map<std::string, double> external;

  bool ok() const { return error.empty(); }
};

struct AssessmentReport {
  AssessmentRegime regime = AssessmentRegime::kApproxII;
  AssessmentConfig config;
  std::vector<AssessmentRow> rows;  // repository order
  std::optional<CorrelationStats> correlation;

  // Row with rank 1; nullptr if every teacher failed.
  const AssessmentRow* Best() const;
  const AssessmentRow* Find(std::string_view teacher_id) const;
};

// Assigns ranks 1..k to successful rows by (metric, teacher id).
void RankRows(std::vector<AssessmentRow>& rows);

// Scores every teacher. `approx_i_student` is the pre-trained plain student
// for the approx-I regime; one is trained from config when absent. In the
// vanilla regime `student_test` (if nonempty) yields each distilled student's
// test accuracy as ground truth. `on_row` sees each row as it completes.
AssessmentReport AssessRepository(std::span<const RepositoryEntry> repository,
                                  const LabeledDataset& student_data,
                                  const AssessmentConfig& config,
                                  const std::optional<Classifier>& approx_i_student = {},
                                  const LabeledDataset* student_test = nullptr,
                                  const std::function<void(const AssessmentRow&)>& on_row = {});

// Sets ground truth by teacher id and recomputes the correlation when at
// least three successful rows carry ground truth.
void AttachGroundTruth(AssessmentReport& report,
                       const std::map<std::string, double>& accuracy_by_id);

// Student template and distillation settings shared by the vanilla and
// approx-I regimes; seeds derive from config.seed.
Classifier MakeStudentTemplate(const LabeledDataset& student_data,
                               const AssessmentConfig& config);
DistillConfig MakeStudentDistillConfig(const AssessmentConfig& config, DistillMode mode);

// Plain-trained student used by approx-I.
Classifier TrainPlainStudent(const LabeledDataset& student_data,
                             const AssessmentConfig& config);

// Mean KL(rho_tau(a(x)) || rho_tau(b(x))) over the data.
double KlBetweenStudents(const Classifier& a, const Classifier& b, const Matrix& x,
                         double tau);

}  // namespace ckd

#endif  // CKD_ASSESS_H_
