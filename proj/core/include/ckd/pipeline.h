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

#ifndef CKD_PIPELINE_H_
#define CKD_PIPELINE_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ckd/assess.h"
#include "ckd/convergence.h"
#include "ckd/distill.h"
#include "ckd/store.h"
#include "ckd/synth.h"
#include "ckd/trainer.h"

namespace ckd {

// Declarative description of a whole experiment. Every random stream is
// derived from `seed`. The defaults are the desk-scale benchmark: empirical
// teacher centers, lambda = 1 and Sinkhorn capped at 200 iterations with the
// last iterate used (unconverged solves are counted, not fatal).
struct ExperimentConfig {
  ExperimentConfig();

  // Class pool.
  int num_classes = 100;
  int dim = 16;
  double spread = 1.0;
  double covariance_scale = 1.0;
  // Window protocol; num_windows = 0 keeps every window.
  int window_size = 20;
  int step = 5;
  int num_windows = 5;
  // Train teachers on the first window only instead of on every window.
  bool single_teacher_window = false;
  // Sampling.
  int teacher_train_per_class = 200;
  int teacher_test_per_class = 50;
  int train_per_class = 50;
  int test_per_class = 50;
  // Models.
  std::vector<std::string> teacher_architectures = {"linear", "mlp32"};
  std::string student_architecture = "linear";
  OptimizerConfig teacher_optimizer;
  DistillConfig distill;
  AssessmentConfig assess;
  std::string output_dir;
  std::uint64_t seed = 0;
};

ExperimentConfig DefaultExperimentConfig();
std::string SerializeExperimentConfig(const ExperimentConfig& config);
// Keys present in `text` override `base`; unknown keys are rejected.
ExperimentConfig ParseExperimentConfig(std::string_view text,
                                       const ExperimentConfig& base = DefaultExperimentConfig());
void ValidateExperimentConfig(const ExperimentConfig& config);

ClassPool MakeExperimentPool(const ExperimentConfig& config);

std::vector<TaskWindow> ExperimentWindows(const ExperimentConfig& config, const ClassPool& pool);

std::string TeacherTaskId(int window);
std::string StudentTaskId(int window);
std::string TeacherId(int window, std::string_view architecture);

// A "teacher-w<i>" and a "student-w<i>" task for every window.
TaskSpecSet MakeTaskSpecs(const ExperimentConfig& config, const ClassPool& pool,
                          std::string_view pool_path = {}, std::string_view pool_sha256 = {});

struct TrainedTeacher {
  std::string id;
  std::string task_id;
  int window = 0;
  Classifier model;
  ModelSummary summary{};
};

// Supervised training on the teacher task; stores the teacher's empirical
// class centers in the model.
TrainedTeacher TrainTeacher(const ExperimentConfig& config, const ClassPool& pool,
                            const NamedTask& task, std::string_view architecture);

// One teacher per (teacher window, architecture), window-major.
std::vector<TrainedTeacher> TrainTeachers(const ExperimentConfig& config, const ClassPool& pool,
                                          const TaskSpecSet& specs);

std::vector<RepositoryEntry> ToRepository(const std::vector<TrainedTeacher>& teachers);

// Assessment configuration for the student task of `window`. Its seed fixes
// the student initialization and shuffling, so vanilla assessment and
// DistillStudent train identical students.
AssessmentConfig StudentAssessmentConfig(const ExperimentConfig& config, int window);

DistillRun DistillStudent(const ExperimentConfig& config, const Classifier& teacher,
                          const TaskData& data, int window, DistillMode mode);

// Window index of a student task id ("student-w<i>").
int StudentWindow(const NamedTask& task);

// Random transport problems for convergence tracing: both label sets get
// unit-normalized Gaussian centers in R^center_dim, marginals are tempered
// softmaxes (tau) of standard normal logits scaled by tau.
struct ConvergenceProblem {
  ProbabilityVector mu;
  ProbabilityVector nu;
  CostMatrix cost;
};

struct ConvergenceExperiment {
  int problems = 256;
  int size = 100;        // classes on each side
  int center_dim = 16;
  double epsilon = 0.1;
  double tau = 3.0;
  int iters = 100;
  int reference_iters = 0;  // 0: the last traced iterate is the reference
  bool constant_cost = false;
  std::uint64_t seed = 0;
};

ConvergenceProblem MakeConvergenceProblem(const ConvergenceExperiment& config,
                                          std::uint64_t index);

struct ConvergenceResult {
  ConvergenceTrace mean;  // averaged over problems
  double max_bound_excess = 0.0;  // worst over problems
  int worst_first_below_1e10 = 0; // -1 if some problem never gets below 1e-10
};

ConvergenceResult RunConvergenceExperiment(const ConvergenceExperiment& config);

}  // namespace ckd

#endif  // CKD_PIPELINE_H_
