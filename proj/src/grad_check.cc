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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rscl/encoder.h"
#include "rscl/error.h"
#include "rscl/losses.h"
#include "rscl/noise.h"
#include "rscl/rng.h"

namespace rscl {

GradCheckReport CheckGradient(const std::function<double(const Matrix&)>& f,
                              const Matrix& x, const Matrix& analytic_grad,
                              double h, std::uint64_t seed,
                              std::size_t max_coordinates) {
  if (analytic_grad.rows() != x.rows() || analytic_grad.cols() != x.cols()) {
    throw ContractError("analytic gradient shape differs from the input");
  }
  std::vector<std::size_t> coords(x.size());
  std::iota(coords.begin(), coords.end(), 0);
  if (coords.size() > max_coordinates) {
    // Partial Fisher-Yates: the first max_coordinates entries are a uniform
    // sample without replacement.
    RngStream rng(seed, 0x67726164ull);
    for (std::size_t i = 0; i < max_coordinates; ++i) {
      const std::size_t j = i + rng.UniformInt(coords.size() - i);
      std::swap(coords[i], coords[j]);
    }
    coords.resize(max_coordinates);
    std::sort(coords.begin(), coords.end());
  }
  GradCheckReport report;
  Matrix probe = x;
  for (std::size_t idx : coords) {
    const double original = probe.values()[idx];
    probe.values()[idx] = original + h;
    const double up = f(probe);
    probe.values()[idx] = original - h;
    const double down = f(probe);
    probe.values()[idx] = original;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = analytic_grad.values()[idx];
    const double scale =
        std::max({std::abs(analytic), std::abs(numeric), kGradCheckScaleFloor});
    const double rel = std::abs(analytic - numeric) / scale;
    if (rel > report.max_rel_err || report.coordinates_checked == 0) {
      report.max_rel_err = rel;
      report.worst_row = idx / x.cols();
      report.worst_col = idx % x.cols();
      report.analytic_at_worst = analytic;
      report.numeric_at_worst = numeric;
    }
    ++report.coordinates_checked;
  }
  return report;
}

GradCheckReport CheckObjectiveGradient(const EmbeddingBatch& batch,
                                       const LossConfig& cfg, double h,
                                       std::uint64_t seed) {
  if (!(h >= 1e-7 && h <= 1e-3)) {
    throw ContractError("finite-difference step must lie in [1e-7, 1e-3]");
  }
  const LossOutput base = ComputeLoss(batch, cfg);
  // Perturbed rows leave the unit sphere; the objectives are plain functions
  // of the inner products, so the check is on that extension.
  EmbeddingBatch shifted = batch;
  auto f = [&](const Matrix& e) {
    shifted.embeddings = e;
    return ComputeLoss(shifted, cfg).value;
  };
  return CheckGradient(f, batch.embeddings, base.grad_embeddings, h, seed);
}

EmbeddingBatch RandomEmbeddingBatch(std::size_t n, std::size_t dim, int class_count,
                                    double flip_rate, std::uint64_t seed) {
  if (n < 2 || dim < 1 || class_count < 2) {
    throw ContractError("random batch needs n >= 2, dim >= 1 and at least 2 classes");
  }
  RngStream rng(seed, 0x626174ull);
  Matrix e(n, dim);
  for (double& v : e.values()) v = rng.Normal();
  EmbeddingBatch batch;
  batch.embeddings = RowNormalize(e).output;
  std::vector<int> latent(n);
  for (std::size_t i = 0; i < n; ++i) {
    latent[i] = static_cast<int>(i % static_cast<std::size_t>(class_count));
  }
  batch.assigned_labels = InjectUniformNoise(latent, flip_rate, class_count, Mix64(seed));
  batch.latent_labels = std::move(latent);
  batch.sample_ids.resize(n);
  std::iota(batch.sample_ids.begin(), batch.sample_ids.end(), 0);
  batch.class_count = class_count;
  return batch;
}

}  // namespace rscl
