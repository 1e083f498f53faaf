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

#ifndef CKD_CORRELATION_H_
#define CKD_CORRELATION_H_

#include <span>
#include <vector>

namespace ckd {

// Sample Pearson correlation. Needs >= 3 points; kUndefinedCorrelation when
// either sequence has zero variance.
double Pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of average ranks (ties share their mean rank).
double Spearman(std::span<const double> x, std::span<const double> y);

// 1-based average ranks in ascending order.
std::vector<double> AverageRanks(std::span<const double> values);

struct CorrelationStats {
  double pearson = 0.0;
  double spearman = 0.0;
};

// Correlations between -metric and the realized accuracies.
CorrelationStats MetricCorrelation(std::span<const double> metric,
                                   std::span<const double> ground_truth);

}  // namespace ckd

#endif  // CKD_CORRELATION_H_
