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

#ifndef CKD_HILBERT_H_
#define CKD_HILBERT_H_

#include "ckd/transport.h"

namespace ckd {

// max(v) - min(v).
double VariationSeminorm(const Vector& v);

// log max_{i,j} (x_i y_j) / (x_j y_i) for strictly positive x, y of equal
// length; equals VariationSeminorm(log x - log y).
double HilbertMetric(const Vector& x, const Vector& y);

// log psi(K) where psi(K) = max_{i,j,k,l} K_ik K_jl / (K_jk K_il), computed
// from the cost as max over row pairs of the variation seminorm of the row
// difference, divided by epsilon. O(R1^2 R2).
double LogPsi(const GibbsKernel& kernel);

// kappa(K) = (sqrt(psi) - 1) / (sqrt(psi) + 1) = tanh(log psi / 4), in [0, 1).
// Rounds to 1.0 for kernels with log psi beyond ~75.
double ContractionCoefficient(const GibbsKernel& kernel);

}  // namespace ckd

#endif  // CKD_HILBERT_H_
