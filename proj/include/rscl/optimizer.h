// Copyright 2026 The rscl Authors.
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

#ifndef RSCL_OPTIMIZER_H_
#define RSCL_OPTIMIZER_H_

#include <cstdint>
#include <vector>

#include "rscl/matrix.h"

namespace rscl {

// Throws NumericError naming the first non-finite gradient entry, or when the
// update itself overflows. Parameters are left untouched on failure.
void SgdStep(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
             double lr);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

// Bias-corrected Adam (Kingma & Ba). Moments are allocated on first use.
// Same failure contract as SgdStep; the state is not advanced either.
void AdamStep(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
              AdamState& state, double lr);

}  // namespace rscl

#endif  // RSCL_OPTIMIZER_H_
