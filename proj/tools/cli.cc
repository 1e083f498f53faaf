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

#include "cli.h"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ckd/assess.h"
#include "ckd/error.h"
#include "ckd/pipeline.h"
#include "ckd/store.h"
#include "ckd/synth.h"

namespace ckd::cli {
namespace {

namespace fs = std::filesystem;

constexpr char kOutputDirEnv[] = "CKD_OUTPUT_DIR";
constexpr char kDefaultOutputDir[] = "ckd-out";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Aligned text table that can also be written as CSV.
class Table {
 public:
  explicit Table(std::vector<std::string> headers) : headers_(std::move(headers)) {}

  void AddRow(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  void Print(std::ostream& os) const {
    std::vector<size_t> width(headers_.size());
    for (size_t c = 0; c < headers_.size(); ++c) width[c] = headers_[c].size();
    for (const auto& row : rows_) {
      for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    const auto line = [&](const std::vector<std::string>& cells) {
      for (size_t c = 0; c < cells.size(); ++c) {
        os << (c ? "  " : "") << std::left << std::setw(static_cast<int>(width[c])) << cells[c];
      }
      os << "\n";
    };
    line(headers_);
    for (const auto& row : rows_) line(row);
  }

  std::string Csv() const {
    std::string out;
    const auto line = [&](const std::vector<std::string>& cells) {
      for (size_t c = 0; c < cells.size(); ++c) out += (c ? "," : "") + cells[c];
      out += "\n";
    };
    line(headers_);
    for (const auto& row : rows_) line(row);
    return out;
  }

 private:
  std::vector<std::string> headers_;
  std::vector<std::vector<std::string>> rows_;
};

std::string Fixed(double value, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << value;
  return os.str();
}

std::string JoinLabels(const LabelSet& labels, size_t limit = 6) {
  std::string s;
  for (size_t i = 0; i < labels.size() && i < limit; ++i) {
    s += (i ? " " : "") + std::to_string(labels[i]);
  }
  if (labels.size() > limit) s += " ...";
  return s;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

// Options shared by every subcommand.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void AddCommon(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path,
                  "Experiment config JSON; its keys override the flags")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", common.seed, "Master seed");
  cmd->add_option("--out", common.out_dir,
                  std::string("Output directory (default $") + kOutputDirEnv + " or " +
                      kDefaultOutputDir + ")");
}

// Flags first, then the config file on top of them.
ExperimentConfig Resolve(const Common& common, const ExperimentConfig& from_flags,
                         fs::path& out_dir) {
  ExperimentConfig config = from_flags;
  if (common.seed) config.seed = *common.seed;
  if (!common.config_path.empty()) {
    config = ParseExperimentConfig(ReadFile(common.config_path), config);
  }
  if (!config.output_dir.empty()) {
    out_dir = config.output_dir;
  } else if (!common.out_dir.empty()) {
    out_dir = common.out_dir;
  } else if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    out_dir = env;
  } else {
    out_dir = kDefaultOutputDir;
  }
  return config;
}

fs::path OrDefault(const std::string& given, const fs::path& fallback) {
  return given.empty() ? fallback : fs::path(given);
}

ClassPool LoadCheckedPool(const TaskSpecSet& specs, const fs::path& override_path) {
  const fs::path path = override_path.empty() ? fs::path(specs.pool_path) : override_path;
  const std::string text = ReadFile(path);
  if (!specs.pool_sha256.empty() && Sha256Hex(text) != specs.pool_sha256) {
    Fail(ErrorCode::kHashMismatch, "pool file '" + path.string() +
                                       "' does not match the hash recorded with the tasks");
  }
  return ParsePool(text);
}

const NamedTask& ResolveTarget(const TaskSpecSet& specs, const std::string& target) {
  if (!target.empty() && target.find_first_not_of("0123456789") == std::string::npos) {
    return specs.Find(StudentTaskId(std::stoi(target)));
  }
  return specs.Find(target.empty() ? StudentTaskId(0) : target);
}

// ---------------------------------------------------------------- gen-pool

struct GenPoolFlags {
  Common common;
  std::optional<int> classes;
  std::optional<int> dim;
  std::optional<double> spread;
  std::optional<double> cov;
  std::string output;
};

int GenPool(const GenPoolFlags& f, std::ostream& out) {
  if (f.common.config_path.empty() && (!f.classes || !f.dim)) {
    throw UsageError("gen-pool requires --classes and --dim (or --config)");
  }
  ExperimentConfig flags;
  if (f.classes) flags.num_classes = *f.classes;
  if (f.dim) flags.dim = *f.dim;
  if (f.spread) flags.spread = *f.spread;
  if (f.cov) flags.covariance_scale = *f.cov;
  fs::path out_dir;
  const ExperimentConfig config = Resolve(f.common, flags, out_dir);
  const ClassPool pool = MakeExperimentPool(config);
  const fs::path path = OrDefault(f.output, out_dir / "pool.json");
  const std::string text = SerializePool(pool);
  WriteFile(path, text);

  double mean_distance = 0.0;
  int pairs = 0;
  for (int i = 0; i < pool.num_classes(); ++i) {
    for (int j = i + 1; j < pool.num_classes(); ++j) {
      mean_distance += (pool.prototypes.row(i) - pool.prototypes.row(j)).norm();
      ++pairs;
    }
  }
  Table table({"classes", "dim", "spread", "covariance", "seed", "mean_proto_dist"});
  table.AddRow({std::to_string(pool.num_classes()), std::to_string(pool.dim()),
                Fixed(pool.spread), Fixed(pool.covariance_scale), std::to_string(config.seed),
                Fixed(mean_distance / pairs)});
  table.Print(out);
  out << "pool written to " << path.string() << " (sha256 " << Sha256Hex(text) << ")\n";
  return 0;
}

// ---------------------------------------------------------------- gen-tasks

struct GenTasksFlags {
  Common common;
  std::string pool;
  std::optional<int> window;
  std::optional<int> step;
  std::optional<int> num_windows;
  std::optional<int> teacher_train;
  std::optional<int> teacher_test;
  std::optional<int> train;
  std::optional<int> test;
  bool single_teacher_window = false;
  bool export_csv = false;
  std::string output;
};

int GenTasks(const GenTasksFlags& f, std::ostream& out) {
  ExperimentConfig flags;
  if (f.window) flags.window_size = *f.window;
  if (f.step) flags.step = *f.step;
  if (f.num_windows) flags.num_windows = *f.num_windows;
  if (f.teacher_train) flags.teacher_train_per_class = *f.teacher_train;
  if (f.teacher_test) flags.teacher_test_per_class = *f.teacher_test;
  if (f.train) flags.train_per_class = *f.train;
  if (f.test) flags.test_per_class = *f.test;
  flags.single_teacher_window = f.single_teacher_window;
  fs::path out_dir;
  ExperimentConfig config = Resolve(f.common, flags, out_dir);
  const fs::path pool_path = OrDefault(f.pool, out_dir / "pool.json");
  const std::string pool_text = ReadFile(pool_path);
  const ClassPool pool = ParsePool(pool_text);
  config.num_classes = pool.num_classes();
  config.dim = pool.dim();
  ValidateExperimentConfig(config);
  const TaskSpecSet specs = MakeTaskSpecs(config, pool, pool_path.string(), Sha256Hex(pool_text));
  const fs::path path = OrDefault(f.output, out_dir / "tasks.json");
  WriteFile(path, SerializeTaskSpecs(specs));

  const LabelSet& first = specs.tasks.front().spec.label_set;
  Table table({"task", "window", "offset", "classes", "train/class", "test/class",
               "overlap_w0", "labels"});
  for (const NamedTask& task : specs.tasks) {
    table.AddRow({task.id, std::to_string(task.window_index), std::to_string(task.offset),
                  std::to_string(task.spec.label_set.size()),
                  std::to_string(task.spec.train_per_class),
                  std::to_string(task.spec.test_per_class),
                  Fixed(OverlapRatio(task.spec.label_set, first), 2),
                  JoinLabels(task.spec.label_set)});
    if (f.export_csv) {
      const TaskData data = SampleDataset(pool, task.spec);
      ExportDatasetCsv(out_dir / "data" / (task.id + "-train.csv"), data.train);
      if (data.test.size() > 0) {
        ExportDatasetCsv(out_dir / "data" / (task.id + "-test.csv"), data.test);
      }
    }
  }
  table.Print(out);
  WriteFile(out_dir / "tasks.csv", table.Csv());
  out << specs.tasks.size() << " tasks written to " << path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- train-teachers

struct TrainTeachersFlags {
  Common common;
  std::string tasks;
  std::string pool;
  std::string architectures;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::string repo;
};

int TrainTeachersCmd(const TrainTeachersFlags& f, std::ostream& out, std::ostream& err) {
  ExperimentConfig flags;
  if (!f.architectures.empty()) flags.teacher_architectures = SplitList(f.architectures);
  if (f.epochs) flags.teacher_optimizer.epochs = *f.epochs;
  if (f.lr) flags.teacher_optimizer.learning_rate = *f.lr;
  fs::path out_dir;
  const ExperimentConfig config = Resolve(f.common, flags, out_dir);
  const TaskSpecSet specs = LoadTaskSpecs(OrDefault(f.tasks, out_dir / "tasks.json"));
  const ClassPool pool = LoadCheckedPool(specs, f.pool);
  const fs::path repo = OrDefault(f.repo, out_dir / "repo");
  for (const std::string& arch : config.teacher_architectures) {
    Architecture::Parse(arch, pool.dim());
  }

  DirectoryLock lock(repo);
  Table table({"teacher", "task", "architecture", "train_acc", "test_acc", "status"});
  int failures = 0;
  for (const NamedTask& task : specs.tasks) {
    if (!task.id.starts_with("teacher-")) continue;
    for (const std::string& arch : config.teacher_architectures) {
      const std::string id = TeacherId(task.window_index, arch);
      try {
        const TrainedTeacher teacher = TrainTeacher(config, pool, task, arch);
        SaveModel(repo / (teacher.id + std::string(kModelSuffix)), teacher.model,
                  teacher.summary);
        table.AddRow({teacher.id, task.id, arch, Fixed(teacher.summary.train_accuracy),
                      Fixed(teacher.summary.test_accuracy), "ok"});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kTrainingDiverged) throw;
        ++failures;
        table.AddRow({id, task.id, arch, "", "", "diverged"});
        err << "teacher " << id << ": " << e.what() << "\n";
      }
    }
  }
  RepositoryManifest manifest = BuildManifest(repo, specs.pool_path, specs.pool_sha256);
  manifest.complete = failures == 0;
  SaveManifest(repo, manifest);
  table.Print(out);
  WriteFile(repo / "teachers.csv", table.Csv());
  out << manifest.entries.size() << " manifest entries in "
      << (repo / kManifestFileName).string() << (manifest.complete ? "" : " (incomplete)")
      << "\n";
  return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------- assess

struct AssessFlags {
  Common common;
  std::string repo;
  std::string tasks;
  std::string pool;
  std::string target;
  std::string regime;
  std::optional<double> tau;
  std::optional<double> lambda;
  std::optional<int> epochs;
  std::string external;
  std::string ground_truth;
  std::string output;
  bool timing = false;
};

struct AssessmentSetup {
  ExperimentConfig config;
  fs::path out_dir;
  TaskSpecSet specs;
  ClassPool pool;
  std::vector<RepositoryEntry> repository;
};

AssessmentSetup LoadSetup(const Common& common, const ExperimentConfig& flags,
                          const std::string& tasks, const std::string& pool,
                          const std::string& repo) {
  AssessmentSetup s;
  s.config = Resolve(common, flags, s.out_dir);
  s.specs = LoadTaskSpecs(OrDefault(tasks, s.out_dir / "tasks.json"));
  s.pool = LoadCheckedPool(s.specs, pool);
  s.repository = LoadRepository(OrDefault(repo, s.out_dir / "repo"));
  return s;
}

void PrintReport(const AssessmentReport& report, std::ostream& out) {
  std::vector<const AssessmentRow*> rows;
  for (const AssessmentRow& row : report.rows) rows.push_back(&row);
  std::stable_sort(rows.begin(), rows.end(), [](const AssessmentRow* a, const AssessmentRow* b) {
    const int ra = a->rank > 0 ? a->rank : INT32_MAX;
    const int rb = b->rank > 0 ? b->rank : INT32_MAX;
    return ra < rb;
  });
  Table table({"rank", "teacher", "metric", "converged", "ground_truth", "error"});
  for (const AssessmentRow* row : rows) {
    table.AddRow({row->rank > 0 ? std::to_string(row->rank) : "-", row->teacher_id,
                  row->ok() ? Fixed(row->metric, 6) : "",
                  row->converged ? "yes" : "no",
                  row->ground_truth ? Fixed(*row->ground_truth) : "", row->error});
  }
  table.Print(out);
  if (report.correlation) {
    out << "pearson(-metric, accuracy) = " << Fixed(report.correlation->pearson)
        << ", spearman = " << Fixed(report.correlation->spearman) << "\n";
  }
}

AssessmentReport RunAssessment(const AssessmentSetup& s, const NamedTask& target,
                               const AssessmentConfig& assess, std::ostream& out) {
  const TaskData data = SampleDataset(s.pool, target.spec);
  const auto log_row = [&](const AssessmentRow& row) {
    if (assess.regime == AssessmentRegime::kVanilla && row.ok()) {
      out << "distilled student with teacher " << row.teacher_id << ": test accuracy "
          << Fixed(row.ground_truth.value_or(0.0)) << "\n";
    }
  };
  return AssessRepository(s.repository, data.train, assess, std::nullopt, &data.test, log_row);
}

int Assess(const AssessFlags& f, std::ostream& out) {
  ExperimentConfig flags;
  if (!f.regime.empty()) flags.assess.regime = ParseAssessmentRegime(f.regime);
  if (f.tau) {
    flags.assess.tau = *f.tau;
    flags.assess.couple_tau = false;
  }
  if (f.lambda) flags.distill.lambda = *f.lambda;
  if (f.epochs) flags.distill.optimizer.epochs = *f.epochs;
  const AssessmentSetup s = LoadSetup(f.common, flags, f.tasks, f.pool, f.repo);
  const NamedTask& target = ResolveTarget(s.specs, f.target);
  const AssessmentConfig assess = StudentAssessmentConfig(s.config, StudentWindow(target));

  AssessmentReport report = RunAssessment(s, target, assess, out);
  if (!f.ground_truth.empty()) {
    std::map<std::string, double> truth;
    for (const auto& [id, values] : ParseExternalMetricsCsv(ReadFile(f.ground_truth))) {
      const auto it = values.find("accuracy");
      if (it == values.end()) {
        Fail(ErrorCode::kMalformedFile, "ground-truth CSV needs an 'accuracy' column");
      }
      truth[id] = it->second;
    }
    AttachGroundTruth(report, truth);
  }
  if (!f.external.empty()) {
    AttachExternalMetrics(report, ParseExternalMetricsCsv(ReadFile(f.external)));
  }
  const fs::path path = OrDefault(
      f.output, s.out_dir / "reports" /
                    ("assess-" + target.id + "-" +
                     std::string(AssessmentRegimeName(assess.regime)) + ".csv"));
  WriteFile(path, ReportToCsv(report, f.timing));

  out << "target " << target.id << ", regime " << AssessmentRegimeName(assess.regime)
      << ", metric tau " << assess.metric_tau()
      << (assess.couple_tau ? " (coupled to distillation tau)" : " (override)") << "\n";
  PrintReport(report, out);
  out << "report written to " << path.string() << "\n";
  const AssessmentRow* best = report.Best();
  if (best == nullptr) {
    out << "no teacher could be assessed\n";
    return 1;
  }
  out << "selected teacher: " << best->teacher_id << "\n";
  return 0;
}

// ---------------------------------------------------------------- distill

struct DistillFlags {
  Common common;
  std::string repo;
  std::string tasks;
  std::string pool;
  std::string target;
  std::string teacher;
  bool automatic = false;
  std::string regime;
  std::string mode;
  std::optional<double> lambda;
  std::optional<double> tau;
  std::optional<double> epsilon;
  std::optional<int> epochs;
  std::string output;
};

int Distill(const DistillFlags& f, std::ostream& out) {
  ExperimentConfig flags;
  if (!f.mode.empty()) flags.distill.mode = ParseDistillMode(f.mode);
  if (f.lambda) flags.distill.lambda = *f.lambda;
  if (f.tau) flags.distill.tau = *f.tau;
  if (f.epsilon) flags.distill.epsilon = *f.epsilon;
  if (f.epochs) flags.distill.optimizer.epochs = *f.epochs;
  if (!f.regime.empty()) flags.assess.regime = ParseAssessmentRegime(f.regime);
  const AssessmentSetup s = LoadSetup(f.common, flags, f.tasks, f.pool, f.repo);
  const DistillMode mode = s.config.distill.mode;
  if (mode != DistillMode::kNone && f.teacher.empty() && !f.automatic) {
    throw UsageError("distill needs --teacher <id> or --auto unless --mode none");
  }
  const NamedTask& target = ResolveTarget(s.specs, f.target);
  const int window = StudentWindow(target);

  std::string teacher_id = f.teacher;
  if (f.automatic) {
    const AssessmentConfig assess = StudentAssessmentConfig(s.config, window);
    const AssessmentReport report = RunAssessment(s, target, assess, out);
    const AssessmentRow* best = report.Best();
    if (best == nullptr) Fail(ErrorCode::kInvalidInput, "no teacher could be assessed");
    teacher_id = best->teacher_id;
    out << "assessment (" << AssessmentRegimeName(assess.regime) << ") selected teacher "
        << teacher_id << "\n";
  }
  const TaskData data = SampleDataset(s.pool, target.spec);
  const Classifier* teacher = nullptr;
  for (const RepositoryEntry& entry : s.repository) {
    if (entry.id == teacher_id) teacher = &entry.model;
  }
  // A bare number selects by position in the manifest order.
  if (teacher == nullptr && !teacher_id.empty() &&
      teacher_id.find_first_not_of("0123456789") == std::string::npos) {
    const size_t index = std::stoul(teacher_id);
    if (index < s.repository.size()) {
      teacher = &s.repository[index].model;
      teacher_id = s.repository[index].id;
    }
  }
  if (!teacher_id.empty() && teacher == nullptr) {
    Fail(ErrorCode::kInvalidInput, "no teacher '" + teacher_id + "' in the repository");
  }
  const AssessmentConfig assess = StudentAssessmentConfig(s.config, window);
  const Classifier placeholder = MakeStudentTemplate(data.train, assess);
  const DistillRun run =
      DistillStudent(s.config, teacher ? *teacher : placeholder, data, window, mode);

  const std::string stem = target.id + "-" + (teacher_id.empty() ? "none" : teacher_id) + "-" +
                           std::string(DistillModeName(mode));
  const fs::path prefix = OrDefault(f.output, s.out_dir / "runs" / stem);
  fs::path json_path = prefix;
  json_path += ".json";
  fs::path trace_path = prefix;
  trace_path += ".trace.csv";
  WriteFile(json_path, SerializeRun(run, teacher_id, target.id));
  WriteFile(trace_path, TraceToCsv(run.trace));

  Table table({"target", "teacher", "mode", "lambda", "train_acc", "test_acc", "unconverged"});
  table.AddRow({target.id, teacher_id.empty() ? "-" : teacher_id,
                std::string(DistillModeName(mode)), Fixed(run.config.lambda, 2),
                Fixed(run.final_train_accuracy), Fixed(run.test_accuracy),
                std::to_string(run.unconverged_solves)});
  table.Print(out);
  out << "run written to " << json_path.string() << " and " << trace_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- trace-convergence

struct TraceFlags {
  Common common;
  ConvergenceExperiment experiment;
  std::string output;
};

int TraceConvergenceCmd(TraceFlags f, std::ostream& out) {
  fs::path out_dir;
  const ExperimentConfig config = Resolve(f.common, ExperimentConfig(), out_dir);
  f.experiment.seed = config.seed;
  const ConvergenceResult result = RunConvergenceExperiment(f.experiment);
  std::string csv = "iteration,seminorm_error,bound,l2_error\n";
  for (const ConvergencePoint& p : result.mean.points) {
    if (p.iteration == 0) continue;
    std::ostringstream row;
    row << std::setprecision(17) << p.iteration << "," << p.seminorm_error << "," << p.bound
        << "," << p.l2_error << "\n";
    csv += row.str();
  }
  const fs::path path = OrDefault(f.output, out_dir / "convergence.csv");
  WriteFile(path, csv);

  Table table({"problems", "size", "epsilon", "mean_kappa", "max_bound_excess",
               "iters_to_1e-10"});
  table.AddRow({std::to_string(f.experiment.problems), std::to_string(f.experiment.size),
                Fixed(f.experiment.epsilon, 3), Fixed(result.mean.kappa, 6),
                Fixed(result.max_bound_excess, 12),
                result.worst_first_below_1e10 < 0 ? "never"
                                                  : std::to_string(result.worst_first_below_1e10)});
  table.Print(out);
  out << "trace written to " << path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportFlags {
  Common common;
  std::vector<std::string> inputs;
  std::string ground_truth;
  std::string output;
};

int Report(const ReportFlags& f, std::ostream& out) {
  fs::path out_dir;
  Resolve(f.common, ExperimentConfig(), out_dir);
  std::vector<fs::path> inputs(f.inputs.begin(), f.inputs.end());
  if (inputs.empty()) {
    const fs::path dir = out_dir / "reports";
    std::error_code ec;
    if (fs::is_directory(dir, ec)) {
      for (const auto& item : fs::directory_iterator(dir)) {
        const std::string name = item.path().filename().string();
        if (name.starts_with("assess-") && name.ends_with(".csv")) inputs.push_back(item.path());
      }
    }
    std::sort(inputs.begin(), inputs.end());
  }
  if (inputs.empty()) throw UsageError("report found no assessment CSV files");
  std::map<std::string, double> truth;
  if (!f.ground_truth.empty()) {
    for (const auto& [id, values] : ParseExternalMetricsCsv(ReadFile(f.ground_truth))) {
      if (const auto it = values.find("accuracy"); it != values.end()) truth[id] = it->second;
    }
  }
  Table summary({"report", "regime", "teachers", "selected", "pearson", "spearman"});
  for (const fs::path& input : inputs) {
    AssessmentReport report = ParseReportCsv(ReadFile(input));
    std::map<std::string, double> gt = truth;
    for (const AssessmentRow& row : report.rows) {
      if (row.ground_truth && !gt.contains(row.teacher_id)) gt[row.teacher_id] = *row.ground_truth;
    }
    AttachGroundTruth(report, gt);
    out << "== " << input.filename().string() << "\n";
    PrintReport(report, out);
    const AssessmentRow* best = report.Best();
    summary.AddRow({input.filename().string(), std::string(AssessmentRegimeName(report.regime)),
                    std::to_string(report.rows.size()), best ? best->teacher_id : "-",
                    report.correlation ? Fixed(report.correlation->pearson) : "",
                    report.correlation ? Fixed(report.correlation->spearman) : ""});
  }
  out << "== summary\n";
  summary.Print(out);
  const fs::path path = OrDefault(f.output, out_dir / "reports" / "summary.csv");
  WriteFile(path, summary.Csv());
  out << "summary written to " << path.string() << "\n";
  return 0;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-task knowledge distillation with Sinkhorn distances", "ckd"};
  app.require_subcommand(1);

  GenPoolFlags gen_pool;
  CLI::App* gen_pool_cmd = app.add_subcommand("gen-pool", "Generate a Gaussian class pool");
  AddCommon(gen_pool_cmd, gen_pool.common);
  gen_pool_cmd->add_option("--classes", gen_pool.classes, "Number of classes P");
  gen_pool_cmd->add_option("--dim", gen_pool.dim, "Input dimension D");
  gen_pool_cmd->add_option("--spread", gen_pool.spread, "Prototype standard deviation");
  gen_pool_cmd->add_option("--cov", gen_pool.cov, "Per-coordinate class variance");
  gen_pool_cmd->add_option("--output", gen_pool.output, "Pool file (default <out>/pool.json)");

  GenTasksFlags gen_tasks;
  CLI::App* gen_tasks_cmd =
      app.add_subcommand("gen-tasks", "Build teacher and student tasks from sliding windows");
  AddCommon(gen_tasks_cmd, gen_tasks.common);
  gen_tasks_cmd->add_option("--pool", gen_tasks.pool, "Pool file (default <out>/pool.json)");
  gen_tasks_cmd->add_option("--window", gen_tasks.window, "Classes per window");
  gen_tasks_cmd->add_option("--step", gen_tasks.step, "Window step");
  gen_tasks_cmd->add_option("--num-windows", gen_tasks.num_windows,
                            "Keep the first N windows (0 = all)");
  gen_tasks_cmd->add_option("--teacher-train", gen_tasks.teacher_train,
                            "Teacher training instances per class");
  gen_tasks_cmd->add_option("--teacher-test", gen_tasks.teacher_test,
                            "Teacher test instances per class");
  gen_tasks_cmd->add_option("--train", gen_tasks.train, "Student training instances per class");
  gen_tasks_cmd->add_option("--test", gen_tasks.test, "Student test instances per class");
  gen_tasks_cmd->add_flag("--single-teacher-window", gen_tasks.single_teacher_window,
                          "Teacher task on the first window only");
  gen_tasks_cmd->add_flag("--export-csv", gen_tasks.export_csv,
                          "Also write every task's data to <out>/data/*.csv");
  gen_tasks_cmd->add_option("--output", gen_tasks.output, "Task file (default <out>/tasks.json)");

  TrainTeachersFlags train;
  CLI::App* train_cmd =
      app.add_subcommand("train-teachers", "Train one teacher per window and architecture");
  AddCommon(train_cmd, train.common);
  train_cmd->add_option("--tasks", train.tasks, "Task file (default <out>/tasks.json)");
  train_cmd->add_option("--pool", train.pool, "Pool file (default: path recorded in tasks)");
  train_cmd->add_option("--architectures", train.architectures,
                        "Comma-separated list, e.g. linear,mlp32");
  train_cmd->add_option("--epochs", train.epochs, "Training epochs");
  train_cmd->add_option("--lr", train.lr, "Learning rate");
  train_cmd->add_option("--repo", train.repo, "Repository directory (default <out>/repo)");

  AssessFlags assess;
  CLI::App* assess_cmd = app.add_subcommand("assess", "Rank repository teachers for a target task");
  AddCommon(assess_cmd, assess.common);
  assess_cmd->add_option("--repo", assess.repo, "Repository directory (default <out>/repo)");
  assess_cmd->add_option("--tasks", assess.tasks, "Task file (default <out>/tasks.json)");
  assess_cmd->add_option("--pool", assess.pool, "Pool file (default: path recorded in tasks)");
  assess_cmd->add_option("--target", assess.target, "Student task id or window index");
  assess_cmd->add_option("--regime", assess.regime, "vanilla, approx-I or approx-II");
  assess_cmd->add_option("--tau", assess.tau,
                         "Metric temperature (decouples it from distillation)");
  assess_cmd->add_option("--lambda", assess.lambda, "Distillation weight for the vanilla regime");
  assess_cmd->add_option("--epochs", assess.epochs, "Student epochs for vanilla and approx-I");
  assess_cmd->add_option("--external", assess.external,
                         "CSV with teacher_id and external metric columns");
  assess_cmd->add_option("--ground-truth", assess.ground_truth,
                         "CSV with teacher_id,accuracy columns");
  assess_cmd->add_option("--output", assess.output, "Report CSV path");
  assess_cmd->add_flag("--timing", assess.timing, "Fill the seconds column");

  DistillFlags distill;
  CLI::App* distill_cmd = app.add_subcommand("distill", "Train a student with a teacher");
  AddCommon(distill_cmd, distill.common);
  distill_cmd->add_option("--repo", distill.repo, "Repository directory (default <out>/repo)");
  distill_cmd->add_option("--tasks", distill.tasks, "Task file (default <out>/tasks.json)");
  distill_cmd->add_option("--pool", distill.pool, "Pool file (default: path recorded in tasks)");
  distill_cmd->add_option("--target", distill.target, "Student task id or window index");
  CLI::Option* teacher_opt = distill_cmd->add_option(
      "--teacher", distill.teacher, "Teacher id or 0-based position in the manifest");
  distill_cmd->add_flag("--auto", distill.automatic, "Assess the repository and use rank 1")
      ->excludes(teacher_opt);
  distill_cmd->add_option("--regime", distill.regime, "Assessment regime for --auto");
  distill_cmd->add_option("--mode", distill.mode, "sinkhorn, kl-baseline or none");
  distill_cmd->add_option("--lambda", distill.lambda, "Distillation weight");
  distill_cmd->add_option("--tau", distill.tau, "Softmax temperature");
  distill_cmd->add_option("--epsilon", distill.epsilon, "Entropic regularization");
  distill_cmd->add_option("--epochs", distill.epochs, "Training epochs");
  distill_cmd->add_option("--output", distill.output,
                          "Output prefix for <prefix>.json and <prefix>.trace.csv");

  TraceFlags trace;
  CLI::App* trace_cmd =
      app.add_subcommand("trace-convergence", "Sinkhorn gradient convergence against its bound");
  AddCommon(trace_cmd, trace.common);
  trace_cmd->add_option("--iters", trace.experiment.iters, "Traced iterations")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  trace_cmd->add_option("--problems", trace.experiment.problems, "Random problems")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  trace_cmd->add_option("--dim", trace.experiment.size, "Classes on each side")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  trace_cmd->add_option("--center-dim", trace.experiment.center_dim, "Center dimension")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  trace_cmd->add_option("--epsilon", trace.experiment.epsilon, "Entropic regularization")
      ->capture_default_str();
  trace_cmd->add_option("--tau", trace.experiment.tau, "Marginal temperature")
      ->capture_default_str();
  trace_cmd->add_option("--reference-iters", trace.experiment.reference_iters,
                        "Iterate used as reference (default: the last traced one)");
  trace_cmd->add_flag("--constant-cost", trace.experiment.constant_cost,
                      "Use a constant cost matrix");
  trace_cmd->add_option("--output", trace.output, "CSV path (default <out>/convergence.csv)");

  ReportFlags report;
  CLI::App* report_cmd = app.add_subcommand("report", "Summarize assessment reports");
  AddCommon(report_cmd, report.common);
  report_cmd->add_option("--input", report.inputs,
                         "Report CSV files (default <out>/reports/assess-*.csv)");
  report_cmd->add_option("--ground-truth", report.ground_truth,
                         "CSV with teacher_id,accuracy columns");
  report_cmd->add_option("--output", report.output,
                         "Summary CSV (default <out>/reports/summary.csv)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen_pool_cmd->parsed()) return GenPool(gen_pool, out);
    if (gen_tasks_cmd->parsed()) return GenTasks(gen_tasks, out);
    if (train_cmd->parsed()) return TrainTeachersCmd(train, out, err);
    if (assess_cmd->parsed()) return Assess(assess, out);
    if (distill_cmd->parsed()) return Distill(distill, out);
    if (trace_cmd->parsed()) return TraceConvergenceCmd(trace, out);
    if (report_cmd->parsed()) return Report(report, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace ckd::cli
