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

#include "ckd/hilbert.h"

#include <algorithm>
#include <cmath>

#include "ckd/error.h"

namespace ckd {

double VariationSeminorm(const Vector& v) {
  if (v.size() == 0) return 0.0;
  return v.maxCoeff() - v.minCoeff();
}

double HilbertMetric(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() == 0) {
    Fail(ErrorCode::kInvalidInput, "Hilbert metric needs equal nonempty lengths");
  }
  if ((x.array() <= 0.0).any() || (y.array() <= 0.0).any() || !x.allFinite() ||
      !y.allFinite()) {
    Fail(ErrorCode::kInvalidInput, "Hilbert metric needs strictly positive vectors");
  }
  return VariationSeminorm((x.array().log() - y.array().log()).matrix());
}

double LogPsi(const GibbsKernel& kernel) {
  const Matrix& cost = kernel.cost();
  double best = 0.0;
  for (Index i = 0; i < cost.rows(); ++i) {
    for (Index j = i + 1; j < cost.rows(); ++j) {
      best = std::max(best, VariationSeminorm((cost.row(i) - cost.row(j)).transpose()));
    }
  }
  return best / kernel.epsilon();
}

double ContractionCoefficient(const GibbsKernel& kernel) {
  return std::tanh(LogPsi(kernel) / 4.0);
}

}  // namespace ckd
