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

#ifndef CKD_SRC_LOG_SUM_EXP_H_
#define CKD_SRC_LOG_SUM_EXP_H_

#include <cmath>

#include "ckd/transport.h"

namespace ckd::internal {

inline Vector RowLogSumExp(const Matrix& a) {
  Vector out(a.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    const double peak = a.row(i).maxCoeff();
    out[i] = peak + std::log((a.row(i).array() - peak).exp().sum());
  }
  return out;
}

inline Vector ColLogSumExp(const Matrix& a) {
  Vector out(a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    const double peak = a.col(j).maxCoeff();
    out[j] = peak + std::log((a.col(j).array() - peak).exp().sum());
  }
  return out;
}

}  // namespace ckd::internal

#endif  // CKD_SRC_LOG_SUM_EXP_H_
