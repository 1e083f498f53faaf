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

#ifndef CKD_SYNTH_H_
#define CKD_SYNTH_H_

#include <cstdint>
#include <vector>

#include "ckd/classifier.h"

namespace ckd {

// A universe of P Gaussian classes. Prototype distance is the ground-truth
// semantic proximity of two classes.
struct ClassPool {
  Matrix prototypes;  // P x D
  double spread = 1.0;
  double covariance_scale = 1.0;  // per-coordinate variance around a prototype
  std::uint64_t seed = 0;
  // Seeded random order of class ids; windows slide over this order.
  std::vector<int> permutation;

  int num_classes() const { return static_cast<int>(prototypes.rows()); }
  int dim() const { return static_cast<int>(prototypes.cols()); }
};

// Prototypes i.i.d. N(0, spread^2 I). spread = 0 yields identical prototypes.
ClassPool MakePool(int num_classes, int dim, double spread,
                   double covariance_scale, std::uint64_t seed);

struct TaskWindow {
  int index = 0;
  int offset = 0;
  LabelSet label_set;  // global class ids, in permutation order
};

// Windows of `window_size` consecutive classes of pool.permutation starting at
// offsets 0, step, 2 step, ... while the window fits.
std::vector<TaskWindow> SlidingWindows(const ClassPool& pool, int window_size,
                                       int step);

// |A intersect B| / |A|.
double OverlapRatio(const LabelSet& a, const LabelSet& b);

struct WindowPair {
  TaskWindow teacher;
  TaskWindow student;
  double overlap = 0.0;
};

// Every (teacher window, student window) combination, teacher-major.
std::vector<WindowPair> DoubleSlidingWindows(const ClassPool& pool,
                                             int window_size, int step);

struct TaskSpec {
  LabelSet label_set;
  int train_per_class = 50;
  int test_per_class = 50;
  std::uint64_t seed = 0;
};

struct TaskData {
  LabeledDataset train;
  LabeledDataset test;
};

// Draws instances from N(prototype, covariance_scale I) per class. Train and
// test streams use distinct derived seeds; labels index spec.label_set.
TaskData SampleDataset(const ClassPool& pool, const TaskSpec& spec);

}  // namespace ckd

#endif  // CKD_SYNTH_H_
