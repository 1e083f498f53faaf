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

#include "ckd/synth.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "ckd/error.h"
#include "ckd/seed.h"

namespace ckd {
namespace {

void CheckWindow(const ClassPool& pool, int window_size, int step) {
  if (window_size <= 0 || step <= 0) {
    Fail(ErrorCode::kInvalidInput, "window size and step must be positive");
  }
  if (window_size > pool.num_classes()) {
    Fail(ErrorCode::kInvalidInput,
         "window size " + std::to_string(window_size) + " exceeds pool of " +
             std::to_string(pool.num_classes()) + " classes");
  }
}

LabeledDataset SampleSplit(const ClassPool& pool, const TaskSpec& spec,
                           int per_class, std::string_view split) {
  LabeledDataset data;
  data.label_set = spec.label_set;
  const Index n = static_cast<Index>(per_class) * static_cast<Index>(spec.label_set.size());
  data.instances.resize(n, pool.dim());
  data.labels.resize(static_cast<size_t>(n));
  const double sigma = std::sqrt(pool.covariance_scale);
  Index row = 0;
  for (size_t c = 0; c < spec.label_set.size(); ++c) {
    const LabelId id = spec.label_set[c];
    std::mt19937_64 rng(DeriveSeed(spec.seed, split, static_cast<std::uint64_t>(id)));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int k = 0; k < per_class; ++k, ++row) {
      for (int j = 0; j < pool.dim(); ++j) {
        data.instances(row, j) = pool.prototypes(id, j) + sigma * noise(rng);
      }
      data.labels[static_cast<size_t>(row)] = static_cast<int>(c);
    }
  }
  return data;
}

}  // namespace

ClassPool MakePool(int num_classes, int dim, double spread,
                   double covariance_scale, std::uint64_t seed) {
  if (num_classes < 2 || dim < 1) {
    Fail(ErrorCode::kInvalidInput, "pool needs >= 2 classes and dim >= 1");
  }
  if (!(spread >= 0.0) || !(covariance_scale >= 0.0)) {
    Fail(ErrorCode::kInvalidInput, "spread and covariance must be nonnegative");
  }
  ClassPool pool;
  pool.spread = spread;
  pool.covariance_scale = covariance_scale;
  pool.seed = seed;
  pool.prototypes.resize(num_classes, dim);
  std::mt19937_64 rng(DeriveSeed(seed, "pool/prototypes"));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int c = 0; c < num_classes; ++c) {
    for (int j = 0; j < dim; ++j) pool.prototypes(c, j) = spread * normal(rng);
  }
  pool.permutation.resize(static_cast<size_t>(num_classes));
  std::iota(pool.permutation.begin(), pool.permutation.end(), 0);
  std::mt19937_64 order_rng(DeriveSeed(seed, "pool/permutation"));
  std::shuffle(pool.permutation.begin(), pool.permutation.end(), order_rng);
  return pool;
}

std::vector<TaskWindow> SlidingWindows(const ClassPool& pool, int window_size,
                                       int step) {
  CheckWindow(pool, window_size, step);
  std::vector<TaskWindow> windows;
  for (int offset = 0; offset + window_size <= pool.num_classes(); offset += step) {
    TaskWindow w;
    w.index = static_cast<int>(windows.size());
    w.offset = offset;
    w.label_set.assign(pool.permutation.begin() + offset,
                       pool.permutation.begin() + offset + window_size);
    windows.push_back(std::move(w));
  }
  return windows;
}

double OverlapRatio(const LabelSet& a, const LabelSet& b) {
  if (a.empty()) Fail(ErrorCode::kInvalidInput, "overlap of an empty label set");
  const std::set<LabelId> other(b.begin(), b.end());
  const auto shared = std::count_if(a.begin(), a.end(),
                                    [&](LabelId id) { return other.count(id) > 0; });
  return static_cast<double>(shared) / static_cast<double>(a.size());
}

std::vector<WindowPair> DoubleSlidingWindows(const ClassPool& pool,
                                             int window_size, int step) {
  const std::vector<TaskWindow> windows = SlidingWindows(pool, window_size, step);
  std::vector<WindowPair> pairs;
  pairs.reserve(windows.size() * windows.size());
  for (const auto& teacher : windows) {
    for (const auto& student : windows) {
      pairs.push_back({teacher, student, OverlapRatio(teacher.label_set, student.label_set)});
    }
  }
  return pairs;
}

TaskData SampleDataset(const ClassPool& pool, const TaskSpec& spec) {
  if (spec.label_set.empty()) Fail(ErrorCode::kInvalidInput, "task has no classes");
  if (spec.train_per_class < 0 || spec.test_per_class < 0) {
    Fail(ErrorCode::kInvalidInput, "instance counts must be nonnegative");
  }
  std::set<LabelId> seen;
  for (LabelId id : spec.label_set) {
    if (id < 0 || id >= pool.num_classes()) {
      Fail(ErrorCode::kInvalidInput, "class " + std::to_string(id) + " is not in the pool");
    }
    if (!seen.insert(id).second) {
      Fail(ErrorCode::kInvalidInput, "class " + std::to_string(id) + " repeated in task");
    }
  }
  return TaskData{SampleSplit(pool, spec, spec.train_per_class, "train"),
                  SampleSplit(pool, spec, spec.test_per_class, "test")};
}

}  // namespace ckd
