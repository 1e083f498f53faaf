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

#ifndef CKD_SOFTMAX_H_
#define CKD_SOFTMAX_H_

#include "ckd/transport.h"

namespace ckd {

// rho_tau(z)_c = exp(z_c / tau) / sum_c' exp(z_c' / tau), evaluated with
// max-subtraction. Entries that would underflow are raised to the smallest
// normal double before normalization so the result is strictly positive.
ProbabilityVector TemperedSoftmax(const Vector& logits, double tau);

// Row-wise tempered softmax of an N x C logit matrix.
Matrix TemperedSoftmaxRows(const Matrix& logits, double tau);

// Row-wise log-softmax at temperature 1.
Matrix LogSoftmaxRows(const Matrix& logits);

}  // namespace ckd

#endif  // CKD_SOFTMAX_H_
