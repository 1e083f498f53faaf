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

#include <benchmark/benchmark.h>

#include "ckd/assess.h"
#include "ckd/centers.h"
#include "ckd/synth.h"
#include "ckd/trainer.h"

namespace ckd {
namespace {

struct Fixture {
  std::vector<RepositoryEntry> repository;
  LabeledDataset student;
};

// One teacher trained on a 16-class window, assessed on the next window.
const Fixture& SharedFixture() {
  static const Fixture fixture = [] {
    const ClassPool pool = MakePool(100, 16, 1.0, 1.0, 7);
    const std::vector<TaskWindow> windows = SlidingWindows(pool, 16, 8);
    const TaskData teacher_data = SampleDataset(pool, TaskSpec{windows[0].label_set, 100, 0, 8});
    OptimizerConfig opt;
    opt.epochs = 10;
    Classifier teacher = TrainSupervised(
        Classifier::Create(Architecture::Parse("mlp32", 16), windows[0].label_set, 9),
        teacher_data.train, opt).model;
    teacher.set_stored_centers(EmpiricalCenters(teacher, teacher_data.train));
    Fixture f;
    f.repository.push_back({"teacher", std::move(teacher)});
    f.student = SampleDataset(pool, TaskSpec{windows[1].label_set, 63, 0, 10}).train;
    return f;
  }();
  return fixture;
}

void BM_AssessOneTeacher(benchmark::State& state) {
  const Fixture& f = SharedFixture();
  AssessmentConfig config;
  config.regime = static_cast<AssessmentRegime>(state.range(0));
  config.teacher_center_provenance = CenterProvenance::kEmpiricalMean;
  config.unconverged_policy = UnconvergedPolicy::kUseLastIterate;
  config.sinkhorn_max_iters = 200;
  config.distill.lambda = 1.0;
  config.distill.teacher_center_provenance = CenterProvenance::kEmpiricalMean;
  config.distill.unconverged_policy = UnconvergedPolicy::kUseLastIterate;
  config.distill.sinkhorn_max_iters = 200;
  for (auto _ : state) {
    benchmark::DoNotOptimize(AssessRepository(f.repository, f.student, config));
  }
  state.SetLabel(std::string(AssessmentRegimeName(config.regime)));
}
BENCHMARK(BM_AssessOneTeacher)
    ->Arg(static_cast<int>(AssessmentRegime::kApproxII))
    ->Arg(static_cast<int>(AssessmentRegime::kApproxI))
    ->Arg(static_cast<int>(AssessmentRegime::kVanilla))
    ->Unit(benchmark::kMillisecond)
    ->Iterations(1);

void BM_FictitiousHead(benchmark::State& state) {
  const Fixture& f = SharedFixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        FitFictitiousStudent(f.repository[0].model, f.student, FictitiousTrainerConfig()));
  }
}
BENCHMARK(BM_FictitiousHead)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace ckd
