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

#include <random>

#include "ckd/convergence.h"
#include "ckd/sinkhorn.h"
#include "ckd/softmax.h"

namespace ckd {
namespace {

struct Instance {
  ProbabilityVector mu;
  ProbabilityVector nu;
  CostMatrix cost;
};

Instance MakeInstance(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Vector a(n), b(n);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    a[i] = normal(rng);
    b[i] = normal(rng);
    for (int j = 0; j < n; ++j) m(i, j) = uniform(rng);
  }
  return {TemperedSoftmax(a, 1.0), TemperedSoftmax(b, 1.0), CostMatrix(m)};
}

void BM_SolveSinkhorn(benchmark::State& state, SinkhornDomain domain) {
  const Instance inst = MakeInstance(static_cast<int>(state.range(0)), 1);
  SinkhornConfig config;
  config.domain = domain;
  for (auto _ : state) {
    benchmark::DoNotOptimize(SolveSinkhorn(inst.mu, inst.nu, inst.cost, config));
  }
}
BENCHMARK_CAPTURE(BM_SolveSinkhorn, plain, SinkhornDomain::kPlain)
    ->RangeMultiplier(2)
    ->Range(4, 128);
BENCHMARK_CAPTURE(BM_SolveSinkhorn, log, SinkhornDomain::kLog)->RangeMultiplier(2)->Range(4, 128);

void BM_LogitGradient(benchmark::State& state) {
  const Instance inst = MakeInstance(static_cast<int>(state.range(0)), 2);
  const SinkhornSolution s = SolveSinkhorn(inst.mu, inst.nu, inst.cost, SinkhornConfig());
  for (auto _ : state) benchmark::DoNotOptimize(GradientWrtLogits(s, inst.nu, 3.0));
}
BENCHMARK(BM_LogitGradient)->Arg(20)->Arg(100);

void BM_TraceConvergence(benchmark::State& state) {
  const Instance inst = MakeInstance(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(TraceConvergence(inst.mu, inst.nu, inst.cost, 0.1, 100));
  }
}
BENCHMARK(BM_TraceConvergence)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace ckd
