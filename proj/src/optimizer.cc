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

#include "rscl/optimizer.h"

#include <cmath>
#include <string>

#include "rscl/error.h"

namespace rscl {
namespace {

void CheckGradients(const std::vector<Matrix>& params,
                    const std::vector<Matrix>& grads) {
  if (params.size() != grads.size()) {
    throw ContractError("optimizer got " + std::to_string(grads.size()) +
                        " gradients for " + std::to_string(params.size()) +
                        " parameters");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].rows() != grads[p].rows() ||
        params[p].cols() != grads[p].cols()) {
      throw ContractError("gradient shape mismatch for parameter " +
                          std::to_string(p));
    }
    auto g = grads[p].values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw NumericError("non-finite gradient in parameter " +
                           std::to_string(p) + " at element " +
                           std::to_string(i) + ": " + std::to_string(g[i]));
      }
    }
  }
}

void CheckUpdated(const std::vector<Matrix>& params) {
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto w = params[p].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!std::isfinite(w[i])) {
        throw NumericError("update made parameter " + std::to_string(p) +
                           " non-finite at element " + std::to_string(i));
      }
    }
  }
}

}  // namespace

void SgdStep(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
             double lr) {
  CheckGradients(params, grads);
  std::vector<Matrix> next = params;
  for (std::size_t p = 0; p < next.size(); ++p) {
    auto w = next[p].values();
    auto g = grads[p].values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
  }
  CheckUpdated(next);
  params = std::move(next);
}

void AdamStep(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
              AdamState& state, double lr) {
  CheckGradients(params, grads);
  if (state.first_moment.empty()) {
    for (const Matrix& p : params) {
      state.first_moment.emplace_back(p.rows(), p.cols());
      state.second_moment.emplace_back(p.rows(), p.cols());
    }
  }
  std::vector<Matrix> next = params;
  AdamState next_state = state;
  ++next_state.step;
  const double t = static_cast<double>(next_state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t p = 0; p < next.size(); ++p) {
    auto w = next[p].values();
    auto g = grads[p].values();
    auto m = next_state.first_moment[p].values();
    auto v = next_state.second_moment[p].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
  CheckUpdated(next);
  params = std::move(next);
  state = std::move(next_state);
}

}  // namespace rscl
