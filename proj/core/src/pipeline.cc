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

#include "ckd/pipeline.h"

#include <algorithm>
#include <random>
#include <string>

#include "ckd/centers.h"
#include "ckd/error.h"
#include "ckd/seed.h"
#include "ckd/softmax.h"
#include "json_io.h"

namespace ckd {

using internal::Json;

namespace {

constexpr std::string_view kTeacherTaskPrefix = "teacher-w";
constexpr std::string_view kStudentTaskPrefix = "student-w";

int WindowFromId(std::string_view id, std::string_view prefix) {
  if (!id.starts_with(prefix)) {
    Fail(ErrorCode::kInvalidInput, "task id '" + std::string(id) + "' lacks " +
                                       std::string(prefix));
  }
  const std::string digits(id.substr(prefix.size()));
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
    Fail(ErrorCode::kInvalidInput, "malformed task id '" + std::string(id) + "'");
  }
  return std::stoi(digits);
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  distill.lambda = 1.0;
  distill.sinkhorn_max_iters = 200;
  distill.unconverged_policy = UnconvergedPolicy::kUseLastIterate;
  distill.teacher_center_provenance = CenterProvenance::kEmpiricalMean;
  assess.sinkhorn_max_iters = 200;
  assess.unconverged_policy = UnconvergedPolicy::kUseLastIterate;
  assess.teacher_center_provenance = CenterProvenance::kEmpiricalMean;
}

ExperimentConfig DefaultExperimentConfig() { return ExperimentConfig(); }

std::string SerializeExperimentConfig(const ExperimentConfig& c) {
  Json j = Json::object();
  j["num_classes"] = c.num_classes;
  j["dim"] = c.dim;
  j["spread"] = c.spread;
  j["covariance_scale"] = c.covariance_scale;
  j["window_size"] = c.window_size;
  j["step"] = c.step;
  j["num_windows"] = c.num_windows;
  j["single_teacher_window"] = c.single_teacher_window;
  j["teacher_train_per_class"] = c.teacher_train_per_class;
  j["teacher_test_per_class"] = c.teacher_test_per_class;
  j["train_per_class"] = c.train_per_class;
  j["test_per_class"] = c.test_per_class;
  j["teacher_architectures"] = c.teacher_architectures;
  j["student_architecture"] = c.student_architecture;
  j["teacher_optimizer"] = internal::ToJson(c.teacher_optimizer);
  j["distill"] = internal::ToJson(c.distill);
  j["assess"] = internal::ToJson(c.assess);
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  return internal::DumpJson(j);
}

ExperimentConfig ParseExperimentConfig(std::string_view text, const ExperimentConfig& base) {
  const Json j = internal::ParseJson(text, "experiment config");
  if (!j.is_object()) {
    Fail(ErrorCode::kInvalidConfiguration, "experiment config must be a JSON object");
  }
  ExperimentConfig c = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "num_classes") {
      c.num_classes = internal::GetInt(j, key);
    } else if (key == "dim") {
      c.dim = internal::GetInt(j, key);
    } else if (key == "spread") {
      c.spread = internal::GetDouble(j, key);
    } else if (key == "covariance_scale") {
      c.covariance_scale = internal::GetDouble(j, key);
    } else if (key == "window_size") {
      c.window_size = internal::GetInt(j, key);
    } else if (key == "step") {
      c.step = internal::GetInt(j, key);
    } else if (key == "num_windows") {
      c.num_windows = internal::GetInt(j, key);
    } else if (key == "single_teacher_window") {
      c.single_teacher_window = internal::GetBool(j, key);
    } else if (key == "teacher_train_per_class") {
      c.teacher_train_per_class = internal::GetInt(j, key);
    } else if (key == "teacher_test_per_class") {
      c.teacher_test_per_class = internal::GetInt(j, key);
    } else if (key == "train_per_class") {
      c.train_per_class = internal::GetInt(j, key);
    } else if (key == "test_per_class") {
      c.test_per_class = internal::GetInt(j, key);
    } else if (key == "teacher_architectures") {
      if (!value.is_array()) {
        Fail(ErrorCode::kInvalidConfiguration, "teacher_architectures must be an array");
      }
      c.teacher_architectures.clear();
      for (const Json& a : value) {
        if (!a.is_string()) {
          Fail(ErrorCode::kInvalidConfiguration, "architecture names must be strings");
        }
        c.teacher_architectures.push_back(a.get<std::string>());
      }
    } else if (key == "student_architecture") {
      c.student_architecture = internal::GetString(j, key);
    } else if (key == "teacher_optimizer") {
      internal::UpdateFromJson(value, c.teacher_optimizer);
    } else if (key == "distill") {
      internal::UpdateFromJson(value, c.distill);
    } else if (key == "assess") {
      internal::UpdateFromJson(value, c.assess);
    } else if (key == "output_dir") {
      c.output_dir = internal::GetString(j, key);
    } else if (key == "seed") {
      c.seed = internal::GetUint64(j, key);
    } else {
      Fail(ErrorCode::kInvalidConfiguration, "unknown key '" + key + "' in experiment config");
    }
  }
  return c;
}

void ValidateExperimentConfig(const ExperimentConfig& c) {
  const auto require = [](bool ok, const char* message) {
    if (!ok) Fail(ErrorCode::kInvalidConfiguration, message);
  };
  require(c.num_classes >= 2, "num_classes must be at least 2");
  require(c.dim >= 1, "dim must be positive");
  require(c.spread >= 0.0 && c.covariance_scale >= 0.0, "pool scales must be nonnegative");
  require(c.window_size >= 1 && c.window_size <= c.num_classes,
          "window_size must lie in [1, num_classes]");
  require(c.step >= 1, "step must be positive");
  require(c.num_windows >= 0, "num_windows must be nonnegative");
  require(c.teacher_train_per_class >= 1 && c.train_per_class >= 1,
          "training sets need at least one instance per class");
  require(c.teacher_test_per_class >= 0 && c.test_per_class >= 0,
          "test sizes must be nonnegative");
  require(!c.teacher_architectures.empty(), "at least one teacher architecture is needed");
  for (const std::string& name : c.teacher_architectures) Architecture::Parse(name, c.dim);
  Architecture::Parse(c.student_architecture, c.dim);
}

ClassPool MakeExperimentPool(const ExperimentConfig& config) {
  return MakePool(config.num_classes, config.dim, config.spread, config.covariance_scale,
                  DeriveSeed(config.seed, "pool"));
}

std::vector<TaskWindow> ExperimentWindows(const ExperimentConfig& config,
                                          const ClassPool& pool) {
  std::vector<TaskWindow> windows = SlidingWindows(pool, config.window_size, config.step);
  if (config.num_windows > 0 && windows.size() > static_cast<size_t>(config.num_windows)) {
    windows.resize(static_cast<size_t>(config.num_windows));
  }
  return windows;
}

std::string TeacherTaskId(int window) {
  return std::string(kTeacherTaskPrefix) + std::to_string(window);
}

std::string StudentTaskId(int window) {
  return std::string(kStudentTaskPrefix) + std::to_string(window);
}

std::string TeacherId(int window, std::string_view architecture) {
  return "w" + std::to_string(window) + "-" + std::string(architecture);
}

int StudentWindow(const NamedTask& task) { return WindowFromId(task.id, kStudentTaskPrefix); }

TaskSpecSet MakeTaskSpecs(const ExperimentConfig& config, const ClassPool& pool,
                          std::string_view pool_path, std::string_view pool_sha256) {
  ValidateExperimentConfig(config);
  TaskSpecSet specs;
  specs.pool_path = pool_path;
  specs.pool_sha256 = pool_sha256;
  specs.window_size = config.window_size;
  specs.step = config.step;
  const std::vector<TaskWindow> windows = ExperimentWindows(config, pool);
  for (const TaskWindow& w : windows) {
    if (config.single_teacher_window && w.index != windows.front().index) break;
    NamedTask teacher;
    teacher.id = TeacherTaskId(w.index);
    teacher.window_index = w.index;
    teacher.offset = w.offset;
    teacher.spec = TaskSpec{w.label_set, config.teacher_train_per_class,
                            config.teacher_test_per_class,
                            DeriveSeed(config.seed, "teacher-task",
                                       static_cast<std::uint64_t>(w.index))};
    specs.tasks.push_back(std::move(teacher));
  }
  for (const TaskWindow& w : windows) {
    NamedTask student;
    student.id = StudentTaskId(w.index);
    student.window_index = w.index;
    student.offset = w.offset;
    student.spec = TaskSpec{w.label_set, config.train_per_class, config.test_per_class,
                            DeriveSeed(config.seed, "student-task",
                                       static_cast<std::uint64_t>(w.index))};
    specs.tasks.push_back(std::move(student));
  }
  return specs;
}

TrainedTeacher TrainTeacher(const ExperimentConfig& config, const ClassPool& pool,
                            const NamedTask& task, std::string_view architecture) {
  const TaskData data = SampleDataset(pool, task.spec);
  const std::string id = TeacherId(task.window_index, architecture);
  const std::uint64_t seed = DeriveSeed(config.seed, "teacher/" + id);
  const Architecture arch = Architecture::Parse(architecture, pool.dim());
  OptimizerConfig opt = config.teacher_optimizer;
  opt.seed = DeriveSeed(seed, "train");
  TrainResult result = TrainSupervised(Classifier::Create(arch, task.spec.label_set,
                                                          DeriveSeed(seed, "init")),
                                       data.train, opt);
  result.model.set_stored_centers(EmpiricalCenters(result.model, data.train));

  TrainedTeacher out{.id = id, .task_id = task.id, .window = task.window_index,
                     .model = std::move(result.model)};
  out.summary.id = id;
  out.summary.train_accuracy = result.trace.final_train_accuracy;
  out.summary.test_accuracy = data.test.size() > 0 ? Accuracy(out.model, data.test) : 0.0;
  out.summary.seed = seed;
  out.summary.task_id = task.id;
  return out;
}

std::vector<TrainedTeacher> TrainTeachers(const ExperimentConfig& config, const ClassPool& pool,
                                          const TaskSpecSet& specs) {
  std::vector<TrainedTeacher> teachers;
  for (const NamedTask& task : specs.tasks) {
    if (!task.id.starts_with(kTeacherTaskPrefix)) continue;
    for (const std::string& arch : config.teacher_architectures) {
      teachers.push_back(TrainTeacher(config, pool, task, arch));
    }
  }
  return teachers;
}

std::vector<RepositoryEntry> ToRepository(const std::vector<TrainedTeacher>& teachers) {
  std::vector<RepositoryEntry> repository;
  repository.reserve(teachers.size());
  for (const TrainedTeacher& t : teachers) repository.push_back({t.id, t.model});
  return repository;
}

AssessmentConfig StudentAssessmentConfig(const ExperimentConfig& config, int window) {
  AssessmentConfig assess = config.assess;
  assess.distill = config.distill;
  assess.student_architecture = config.student_architecture;
  assess.seed = DeriveSeed(config.seed, "student", static_cast<std::uint64_t>(window));
  return assess;
}

DistillRun DistillStudent(const ExperimentConfig& config, const Classifier& teacher,
                          const TaskData& data, int window, DistillMode mode) {
  const AssessmentConfig assess = StudentAssessmentConfig(config, window);
  return RunDistillation(teacher, MakeStudentTemplate(data.train, assess), data.train,
                         data.test, MakeStudentDistillConfig(assess, mode));
}

ConvergenceProblem MakeConvergenceProblem(const ConvergenceExperiment& config,
                                          std::uint64_t index) {
  if (config.size < 1 || config.center_dim < 1 || !(config.tau > 0.0)) {
    Fail(ErrorCode::kInvalidConfiguration, "convergence problems need size, dim, tau > 0");
  }
  std::mt19937_64 rng(DeriveSeed(config.seed, "convergence", index));
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto centers = [&] {
    ClassCenters c;
    c.centers.resize(config.size, config.center_dim);
    for (Index r = 0; r < c.centers.rows(); ++r) {
      for (Index k = 0; k < c.centers.cols(); ++k) c.centers(r, k) = normal(rng);
      c.centers.row(r).normalize();
    }
    c.label_set.resize(static_cast<size_t>(config.size));
    for (int i = 0; i < config.size; ++i) c.label_set[static_cast<size_t>(i)] = i;
    return c;
  };
  const auto marginal = [&] {
    Vector logits(config.size);
    for (Index i = 0; i < logits.size(); ++i) logits[i] = config.tau * normal(rng);
    return TemperedSoftmax(logits, config.tau);
  };
  const ClassCenters source = centers();
  const ClassCenters target = centers();
  ProbabilityVector mu = marginal();
  ProbabilityVector nu = marginal();
  CostMatrix cost = config.constant_cost
                        ? CostMatrix(Matrix::Constant(config.size, config.size, 1.0))
                        : BuildCostMatrix(source, target);
  return ConvergenceProblem{std::move(mu), std::move(nu), std::move(cost)};
}

ConvergenceResult RunConvergenceExperiment(const ConvergenceExperiment& config) {
  if (config.problems < 1 || config.iters < 1) {
    Fail(ErrorCode::kInvalidConfiguration, "need at least one problem and one iteration");
  }
  std::vector<ConvergenceTrace> traces;
  ConvergenceResult result;
  for (int p = 0; p < config.problems; ++p) {
    const ConvergenceProblem problem =
        MakeConvergenceProblem(config, static_cast<std::uint64_t>(p));
    traces.push_back(TraceConvergence(problem.mu, problem.nu, problem.cost, config.epsilon,
                                      config.iters, config.reference_iters));
    const ConvergenceTrace& t = traces.back();
    result.max_bound_excess =
        p == 0 ? t.MaxBoundExcess() : std::max(result.max_bound_excess, t.MaxBoundExcess());
    const int first = t.FirstIterationBelow(1e-10);
    if (first < 0 || result.worst_first_below_1e10 < 0) {
      result.worst_first_below_1e10 = -1;
    } else {
      result.worst_first_below_1e10 = std::max(result.worst_first_below_1e10, first);
    }
  }
  result.mean = AverageTraces(traces);
  return result;
}

}  // namespace ckd
