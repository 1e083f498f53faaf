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

#include "ckd/correlation.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ckd/error.h"

namespace ckd {
namespace {

void CheckSizes(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    Fail(ErrorCode::kInvalidInput, "correlation sequences differ in length");
  }
  if (x.size() < 3) Fail(ErrorCode::kInvalidInput, "correlation needs at least 3 points");
}

}  // namespace

double Pearson(std::span<const double> x, std::span<const double> y) {
  CheckSizes(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    Fail(ErrorCode::kUndefinedCorrelation, "a sequence has zero variance");
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> AverageRanks(std::span<const double> values) {
  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double Spearman(std::span<const double> x, std::span<const double> y) {
  CheckSizes(x, y);
  const std::vector<double> rx = AverageRanks(x);
  const std::vector<double> ry = AverageRanks(y);
  return Pearson(rx, ry);
}

CorrelationStats MetricCorrelation(std::span<const double> metric,
                                   std::span<const double> ground_truth) {
  std::vector<double> negated(metric.size());
  std::transform(metric.begin(), metric.end(), negated.begin(),
                 [](double m) { return -m; });
  return CorrelationStats{Pearson(negated, ground_truth), Spearman(negated, ground_truth)};
}

}  // namespace ckd
