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

#ifndef RSCL_LOSSES_H_
#define RSCL_LOSSES_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rscl/matrix.h"

namespace rscl {

enum class Objective {
  kInfoNce,
  kSupConIn,
  kSupConOut,
  kSupConInModified,
  kTrueLabel,
  kSclRhe,
};

enum class ContaminationMode { kFromTauFormula, kExplicit };
enum class WeightMode { kCount, kExplicit };
enum class PositiveWeighting { kDeprioritizeEasy, kPaperEstimator };

// Stable snake_case names used by configs and the command line.
std::string ObjectiveName(Objective objective);
Objective ParseObjective(const std::string& name);
std::string PositiveWeightingName(PositiveWeighting weighting);
PositiveWeighting ParsePositiveWeighting(const std::string& name);

// A batch of unit-norm embeddings and their labels.
struct EmbeddingBatch {
  Matrix embeddings;
  std::vector<int> assigned_labels;
  // Ground-truth classes, when known (synthetic data, oracle losses).
  std::optional<std::vector<int>> latent_labels;
  std::vector<std::int64_t> sample_ids;
  int class_count = 0;

  std::size_t size() const { return embeddings.rows(); }
  // Checks unit norms (1e-6), label ranges and lengths.
  void Validate() const;
};

// In-batch positives share the anchor's label; everything else is negative.
struct AnchorView {
  std::size_t anchor = 0;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

struct AnchorViews {
  std::vector<AnchorView> views;
  // Anchors without any positive in the batch.
  std::size_t skipped_anchors = 0;
};

AnchorViews BuildAnchorViews(std::span<const int> labels);
// Views over the batch's assigned labels.
AnchorViews BuildAnchorViews(const EmbeddingBatch& batch);

struct ContaminationRates {
  double false_positive = 0.0;  // share of assigned-positives from other classes
  double false_negative = 0.0;  // share of assigned-negatives from the anchor's class
};

struct LossConfig {
  Objective objective = Objective::kSupConInModified;
  // Concentration of the importance weights.
  double beta = 1.0;
  // Every inner product is divided by this.
  double temperature = 0.1;
  // Per-sample mislabel rate; only used to derive contamination rates.
  double tau = 0.0;
  int class_count = 0;
  ContaminationMode tau_fp_mode = ContaminationMode::kFromTauFormula;
  double tau_fp = 0.0;
  double tau_fn = 0.0;
  WeightMode q_weight_mode = WeightMode::kCount;
  WeightMode w_weight_mode = WeightMode::kCount;
  double q_value = 1.0;
  double w_value = 1.0;
  // Defaults to exp(-1 / temperature).
  std::optional<double> clamp_floor;
  PositiveWeighting positive_weighting = PositiveWeighting::kDeprioritizeEasy;

  void Validate() const;
  double ClampFloor() const;
  ContaminationRates Rates() const;
};

struct LossDiagnostics {
  std::size_t contributing_anchors = 0;
  std::size_t skipped_anchors = 0;
  // Debiased masses that fell below the floor and were clamped.
  std::size_t clamp_count = 0;
  // Range of the debiased positive and negative masses (before Q/W scaling,
  // in unshifted units). Only populated by the debiased objective.
  std::optional<double> min_mass;
  std::optional<double> max_mass;
};

struct LossOutput {
  double value = 0.0;
  // d(value)/d(embeddings), same shape as the batch embeddings.
  Matrix grad_embeddings;
  // One entry per batch row; zero for rows that were not an anchor.
  std::vector<double> per_anchor_terms;
  std::vector<bool> contributing;
  LossDiagnostics diagnostics;
};

LossOutput InfoNce(const EmbeddingBatch& batch, const AnchorViews& views,
                   const LossConfig& cfg);
LossOutput SupConIn(const EmbeddingBatch& batch, const AnchorViews& views,
                    const LossConfig& cfg);
LossOutput SupConOut(const EmbeddingBatch& batch, const AnchorViews& views,
                     const LossConfig& cfg);
LossOutput SupConInModified(const EmbeddingBatch& batch,
                            const AnchorViews& views, const LossConfig& cfg);
// Builds its own views from the latent labels.
LossOutput TrueLabelLoss(const EmbeddingBatch& batch, const LossConfig& cfg);
LossOutput SclRhe(const EmbeddingBatch& batch, const AnchorViews& views,
                  const LossConfig& cfg);

// Dispatches on cfg.objective, building assigned-label views as needed.
LossOutput ComputeLoss(const EmbeddingBatch& batch, const LossConfig& cfg);

struct MassWithGradient {
  double mass = 0.0;
  std::vector<double> grad;  // d(mass)/d(sims)
};

// Self-normalized importance-sampling estimate
//   exp(-exponent_shift) * sum_i exp((1 + sign*beta) s_i) / sum_i exp(sign*beta s_i)
// of the expected exp(s) under weights proportional to exp(sign*beta*s).
// beta_sign must be +1 or -1; sims must be non-empty.
MassWithGradient WeightedMass(std::span<const double> sims,
                              double exponent_shift, int beta_sign,
                              double beta);

// The normalized weights exp(sign*beta*s_i) / sum_j exp(sign*beta*s_j).
std::vector<double> ImportanceWeights(std::span<const double> sims,
                                      int beta_sign, double beta);

struct DebiasedMass {
  double value = 0.0;
  double d_raw = 0.0;
  double d_contaminant = 0.0;
  bool clamped = false;
};

// max((raw - rate * contaminant) / (1 - rate), floor). Gradients are zero
// when the floor is taken.
DebiasedMass DebiasMass(double raw_mass, double contaminant_mass,
                        double contamination_rate, double clamp_floor);

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_row = 0;
  std::size_t worst_col = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  std::size_t coordinates_checked = 0;
};

// Relative error |a - n| / max(|a|, |n|, kGradCheckScaleFloor).
inline constexpr double kGradCheckScaleFloor = 1e-3;

// Central differences of f around x compared with analytic_grad. Checks every
// coordinate, or a seeded random subset of max_coordinates when x is larger.
GradCheckReport CheckGradient(const std::function<double(const Matrix&)>& f,
                              const Matrix& x, const Matrix& analytic_grad,
                              double h, std::uint64_t seed = 0,
                              std::size_t max_coordinates = 10000);

// Checks cfg.objective's embedding gradient on batch. h must lie in
// [1e-7, 1e-3].
GradCheckReport CheckObjectiveGradient(const EmbeddingBatch& batch,
                                       const LossConfig& cfg, double h,
                                       std::uint64_t seed = 0);

// Seeded unit-norm batch for gradient checks: n rows split evenly over
// class_count latent classes, with round(flip_rate * n) assigned labels
// flipped to another class.
EmbeddingBatch RandomEmbeddingBatch(std::size_t n, std::size_t dim, int class_count,
                                    double flip_rate, std::uint64_t seed);

}  // namespace rscl

#endif  // RSCL_LOSSES_H_
