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

#include "rscl/losses.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rscl/error.h"
#include "rscl/noise.h"

namespace rscl {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogSumExp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// exp(x_i - lse) for each i.
std::vector<double> Softmax(std::span<const double> xs, double lse) {
  std::vector<double> p(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) p[i] = std::exp(xs[i] - lse);
  return p;
}

std::vector<double> Concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Value of one anchor's term and its derivatives with respect to the
// anchor-positive and anchor-negative similarities.
struct AnchorTerm {
  double value = 0.0;
  std::vector<double> d_pos;
  std::vector<double> d_neg;
};

using TermFn = std::function<AnchorTerm(std::span<const double> pos,
                                        std::span<const double> neg,
                                        std::size_t anchor)>;

// Shared driver: similarities s_ij = e_i . e_j / temperature, per-anchor terms
// from term_fn, mean over anchors in index order, and the embedding gradient
// (G + G^T) E / temperature where G(i, j) = d(loss)/d(s_ij).
LossOutput Accumulate(const EmbeddingBatch& batch, const AnchorViews& views,
                      const LossConfig& cfg, const TermFn& term_fn) {
  cfg.Validate();
  const std::size_t n = batch.size();
  if (views.views.empty()) {
    throw ContractError("no positive pairs: every anchor was skipped");
  }
  const double inv_t = 1.0 / cfg.temperature;
  Matrix sims = MatMulTransB(batch.embeddings, batch.embeddings);
  for (double& v : sims.values()) v *= inv_t;

  LossOutput out;
  out.per_anchor_terms.assign(n, 0.0);
  out.contributing.assign(n, false);
  out.diagnostics.skipped_anchors = views.skipped_anchors;
  Matrix g(n, n);
  std::vector<double> pos, neg;
  for (const AnchorView& view : views.views) {
    const std::size_t a = view.anchor;
    pos.clear();
    neg.clear();
    for (std::size_t p : view.positives) pos.push_back(sims(a, p));
    for (std::size_t q : view.negatives) neg.push_back(sims(a, q));
    AnchorTerm term = term_fn(pos, neg, a);
    if (!std::isfinite(term.value)) {
      throw NumericError("non-finite loss term at anchor " + std::to_string(a));
    }
    out.per_anchor_terms[a] = term.value;
    out.contributing[a] = true;
    for (std::size_t k = 0; k < view.positives.size(); ++k) {
      g(a, view.positives[k]) += term.d_pos[k];
    }
    for (std::size_t i = 0; i < view.negatives.size(); ++i) {
      g(a, view.negatives[i]) += term.d_neg[i];
    }
  }
  const std::size_t contributing = views.views.size();
  out.diagnostics.contributing_anchors = contributing;
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    if (out.contributing[a]) total += out.per_anchor_terms[a];
  }
  out.value = total / static_cast<double>(contributing);

  // Symmetrize and scale once, then a single matmul.
  const double scale = inv_t / static_cast<double>(contributing);
  Matrix gs(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) gs(i, j) = (g(i, j) + g(j, i)) * scale;
  }
  out.grad_embeddings = MatMul(gs, batch.embeddings);
  if (!out.grad_embeddings.AllFinite()) {
    throw NumericError("non-finite embedding gradient");
  }
  return out;
}

double QWeight(const LossConfig& cfg, std::size_t k) {
  return cfg.q_weight_mode == WeightMode::kCount ? static_cast<double>(k)
                                                 : cfg.q_value;
}

double WWeight(const LossConfig& cfg, std::size_t n) {
  return cfg.w_weight_mode == WeightMode::kCount ? static_cast<double>(n)
                                                 : cfg.w_value;
}

// (1/K) * (log(exp(a) + exp(b)) - a) with a = log_pos_mass and b =
// log_neg_mass; returns the value and its partials in a and b.
struct LogRatio {
  double value;
  double d_a;
  double d_b;
};

LogRatio ScaledLogRatio(double a, double b, double k) {
  if (b == kNegInf) return {0.0, 0.0, 0.0};
  const double diff = b - a;
  // log(1 + e^diff) and the share of the negative mass, both stable.
  const double softplus =
      diff > 0 ? diff + std::log1p(std::exp(-diff)) : std::log1p(std::exp(diff));
  const double neg_share =
      diff > 0 ? 1.0 / (1.0 + std::exp(-diff)) : std::exp(diff) / (1.0 + std::exp(diff));
  return {softplus / k, -neg_share / k, neg_share / k};
}

}  // namespace

std::string ObjectiveName(Objective objective) {
  switch (objective) {
    case Objective::kInfoNce: return "info_nce";
    case Objective::kSupConIn: return "supcon_in";
    case Objective::kSupConOut: return "supcon_out";
    case Objective::kSupConInModified: return "supcon_in_modified";
    case Objective::kTrueLabel: return "true_label";
    case Objective::kSclRhe: return "scl_rhe";
  }
  return "unknown";
}

Objective ParseObjective(const std::string& name) {
  for (Objective o : {Objective::kInfoNce, Objective::kSupConIn,
                      Objective::kSupConOut, Objective::kSupConInModified,
                      Objective::kTrueLabel, Objective::kSclRhe}) {
    if (ObjectiveName(o) == name) return o;
  }
  throw ContractError("unknown objective '" + name + "'");
}

std::string PositiveWeightingName(PositiveWeighting weighting) {
  return weighting == PositiveWeighting::kDeprioritizeEasy ? "deprioritize_easy"
                                                           : "paper_estimator";
}

PositiveWeighting ParsePositiveWeighting(const std::string& name) {
  if (name == "deprioritize_easy") return PositiveWeighting::kDeprioritizeEasy;
  if (name == "paper_estimator") return PositiveWeighting::kPaperEstimator;
  throw ContractError("unknown positive_weighting '" + name + "'");
}

void EmbeddingBatch::Validate() const {
  const std::size_t n = embeddings.rows();
  if (assigned_labels.size() != n) {
    throw ContractError("batch has " + std::to_string(n) + " embeddings but " +
                        std::to_string(assigned_labels.size()) + " labels");
  }
  if (latent_labels && latent_labels->size() != n) {
    throw ContractError("latent label count differs from assigned label count");
  }
  if (!sample_ids.empty() && sample_ids.size() != n) {
    throw ContractError("sample id count differs from batch size");
  }
  auto check_range = [&](const std::vector<int>& labels, const char* what) {
    for (int l : labels) {
      if (l < 0 || (class_count > 0 && l >= class_count)) {
        throw ContractError(std::string(what) + " label " + std::to_string(l) +
                            " outside [0, " + std::to_string(class_count) + ")");
      }
    }
  };
  check_range(assigned_labels, "assigned");
  if (latent_labels) check_range(*latent_labels, "latent");
  for (std::size_t r = 0; r < n; ++r) {
    const double norm = Norm2(embeddings.row(r));
    if (std::abs(norm - 1.0) > 1e-6) {
      throw ContractError("embedding row " + std::to_string(r) +
                          " is not unit norm (" + std::to_string(norm) + ")");
    }
  }
}

AnchorViews BuildAnchorViews(std::span<const int> labels) {
  AnchorViews result;
  for (std::size_t a = 0; a < labels.size(); ++a) {
    AnchorView view;
    view.anchor = a;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (j == a) continue;
      (labels[j] == labels[a] ? view.positives : view.negatives).push_back(j);
    }
    if (view.positives.empty()) {
      ++result.skipped_anchors;
    } else {
      result.views.push_back(std::move(view));
    }
  }
  return result;
}

AnchorViews BuildAnchorViews(const EmbeddingBatch& batch) {
  return BuildAnchorViews(batch.assigned_labels);
}

void LossConfig::Validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ContractError("temperature must be positive");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ContractError("beta must be non-negative");
  }
  if (clamp_floor && !(*clamp_floor > 0.0)) {
    throw ContractError("clamp_floor must be positive");
  }
  if (!(tau >= 0.0 && tau < 0.5)) throw ContractError("tau must lie in [0, 0.5)");
  if (tau_fp_mode == ContaminationMode::kExplicit) {
    if (!(tau_fp >= 0.0 && tau_fp < 1.0) || !(tau_fn >= 0.0 && tau_fn < 1.0)) {
      throw ContractError("tau_fp and tau_fn must lie in [0, 1)");
    }
  }
  if (q_weight_mode == WeightMode::kExplicit && !(q_value > 0.0)) {
    throw ContractError("q_value must be positive");
  }
  if (w_weight_mode == WeightMode::kExplicit && !(w_value >= 0.0)) {
    throw ContractError("w_value must be non-negative");
  }
}

double LossConfig::ClampFloor() const {
  return clamp_floor ? *clamp_floor : std::exp(-1.0 / temperature);
}

ContaminationRates LossConfig::Rates() const {
  if (tau_fp_mode == ContaminationMode::kExplicit) return {tau_fp, tau_fn};
  if (tau == 0.0) return {0.0, 0.0};
  return {PFalsePositive(tau, class_count), PFalseNegative(tau, class_count)};
}

LossOutput InfoNce(const EmbeddingBatch& batch, const AnchorViews& views,
                   const LossConfig& cfg) {
  // Only the first positive of each view is used.
  AnchorViews single = views;
  for (AnchorView& v : single.views) v.positives.resize(1);
  return Accumulate(batch, single, cfg,
                    [](std::span<const double> pos, std::span<const double> neg,
                       std::size_t) {
                      const std::vector<double> all = Concat(pos, neg);
                      const double lse = LogSumExp(all);
                      std::vector<double> p = Softmax(all, lse);
                      AnchorTerm t;
                      t.value = lse - pos[0];
                      t.d_pos = {p[0] - 1.0};
                      t.d_neg.assign(p.begin() + 1, p.end());
                      return t;
                    });
}

LossOutput SupConIn(const EmbeddingBatch& batch, const AnchorViews& views,
                    const LossConfig& cfg) {
  return Accumulate(batch, views, cfg,
                    [](std::span<const double> pos, std::span<const double> neg,
                       std::size_t) {
                      const std::vector<double> all = Concat(pos, neg);
                      const double lse_all = LogSumExp(all);
                      const double lse_pos = LogSumExp(pos);
                      const double k = static_cast<double>(pos.size());
                      std::vector<double> p_all = Softmax(all, lse_all);
                      std::vector<double> p_pos = Softmax(pos, lse_pos);
                      AnchorTerm t;
                      t.value = std::log(k) - lse_pos + lse_all;
                      for (std::size_t i = 0; i < pos.size(); ++i) {
                        t.d_pos.push_back(p_all[i] - p_pos[i]);
                      }
                      t.d_neg.assign(p_all.begin() + pos.size(), p_all.end());
                      return t;
                    });
}

LossOutput SupConOut(const EmbeddingBatch& batch, const AnchorViews& views,
                     const LossConfig& cfg) {
  return Accumulate(batch, views, cfg,
                    [](std::span<const double> pos, std::span<const double> neg,
                       std::size_t) {
                      const std::vector<double> all = Concat(pos, neg);
                      const double lse_all = LogSumExp(all);
                      const double k = static_cast<double>(pos.size());
                      std::vector<double> p_all = Softmax(all, lse_all);
                      double mean_pos = 0.0;
                      for (double s : pos) mean_pos += s;
                      mean_pos /= k;
                      AnchorTerm t;
                      t.value = lse_all - mean_pos;
                      for (std::size_t i = 0; i < pos.size(); ++i) {
                        t.d_pos.push_back(p_all[i] - 1.0 / k);
                      }
                      t.d_neg.assign(p_all.begin() + pos.size(), p_all.end());
                      return t;
                    });
}

LossOutput SupConInModified(const EmbeddingBatch& batch,
                            const AnchorViews& views, const LossConfig& cfg) {
  return Accumulate(batch, views, cfg,
                    [](std::span<const double> pos, std::span<const double> neg,
                       std::size_t) {
                      const std::vector<double> all = Concat(pos, neg);
                      const double lse_all = LogSumExp(all);
                      const double lse_pos = LogSumExp(pos);
                      const double k = static_cast<double>(pos.size());
                      std::vector<double> p_all = Softmax(all, lse_all);
                      std::vector<double> p_pos = Softmax(pos, lse_pos);
                      AnchorTerm t;
                      t.value = (lse_all - lse_pos) / k;
                      for (std::size_t i = 0; i < pos.size(); ++i) {
                        t.d_pos.push_back((p_all[i] - p_pos[i]) / k);
                      }
                      for (std::size_t i = pos.size(); i < all.size(); ++i) {
                        t.d_neg.push_back(p_all[i] / k);
                      }
                      return t;
                    });
}

LossOutput TrueLabelLoss(const EmbeddingBatch& batch, const LossConfig& cfg) {
  if (!batch.latent_labels) {
    throw ContractError("true_label loss requires latent labels");
  }
  const AnchorViews views = BuildAnchorViews(*batch.latent_labels);
  return Accumulate(
      batch, views, cfg,
      [&cfg](std::span<const double> pos, std::span<const double> neg,
             std::size_t) {
        const double k = static_cast<double>(pos.size());
        const double lse_pos = LogSumExp(pos);
        const double a = std::log(QWeight(cfg, pos.size()) / k) + lse_pos;
        AnchorTerm t;
        t.d_pos.assign(pos.size(), 0.0);
        t.d_neg.assign(neg.size(), 0.0);
        const double w = WWeight(cfg, neg.size());
        if (neg.empty() || w == 0.0) return t;
        const double lse_neg = LogSumExp(neg);
        const double b = std::log(w / static_cast<double>(neg.size())) + lse_neg;
        const LogRatio r = ScaledLogRatio(a, b, k);
        t.value = r.value;
        std::vector<double> p_pos = Softmax(pos, lse_pos);
        std::vector<double> p_neg = Softmax(neg, lse_neg);
        for (std::size_t i = 0; i < pos.size(); ++i) t.d_pos[i] = r.d_a * p_pos[i];
        for (std::size_t i = 0; i < neg.size(); ++i) t.d_neg[i] = r.d_b * p_neg[i];
        return t;
      });
}

MassWithGradient WeightedMass(std::span<const double> sims,
                              double exponent_shift, int beta_sign,
                              double beta) {
  if (sims.empty()) throw ContractError("weighted mass of an empty set");
  if (beta_sign != 1 && beta_sign != -1) {
    throw ContractError("beta_sign must be +1 or -1");
  }
  const double b = beta_sign * beta;
  std::vector<double> num(sims.size()), den(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i) {
    num[i] = (1.0 + b) * sims[i];
    den[i] = b * sims[i];
  }
  const double lse_num = LogSumExp(num);
  const double lse_den = LogSumExp(den);
  MassWithGradient out;
  out.mass = std::exp(lse_num - lse_den - exponent_shift);
  out.grad.resize(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i) {
    const double alpha = std::exp(num[i] - lse_num);
    const double gamma = std::exp(den[i] - lse_den);
    out.grad[i] = out.mass * ((1.0 + b) * alpha - b * gamma);
  }
  return out;
}

std::vector<double> ImportanceWeights(std::span<const double> sims,
                                      int beta_sign, double beta) {
  if (sims.empty()) return {};
  std::vector<double> logits(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i) logits[i] = beta_sign * beta * sims[i];
  return Softmax(logits, LogSumExp(logits));
}

DebiasedMass DebiasMass(double raw_mass, double contaminant_mass,
                        double contamination_rate, double clamp_floor) {
  if (!(contamination_rate >= 0.0 && contamination_rate < 1.0)) {
    throw ContractError("contamination rate must lie in [0, 1)");
  }
  if (!(clamp_floor > 0.0)) throw ContractError("clamp floor must be positive");
  const double keep = 1.0 - contamination_rate;
  const double value = (raw_mass - contamination_rate * contaminant_mass) / keep;
  if (value < clamp_floor) return {clamp_floor, 0.0, 0.0, true};
  return {value, 1.0 / keep, -contamination_rate / keep, false};
}

LossOutput SclRhe(const EmbeddingBatch& batch, const AnchorViews& views,
                  const LossConfig& cfg) {
  cfg.Validate();
  const ContaminationRates rates = cfg.Rates();
  const double floor = cfg.ClampFloor();
  const int pos_sign =
      cfg.positive_weighting == PositiveWeighting::kDeprioritizeEasy ? -1 : 1;
  LossDiagnostics diag;
  auto note_mass = [&diag](double m) {
    diag.min_mass = diag.min_mass ? std::min(*diag.min_mass, m) : m;
    diag.max_mass = diag.max_mass ? std::max(*diag.max_mass, m) : m;
  };
  LossOutput out = Accumulate(
      batch, views, cfg,
      [&](std::span<const double> pos, std::span<const double> neg,
          std::size_t anchor) {
        AnchorTerm t;
        t.d_pos.assign(pos.size(), 0.0);
        t.d_neg.assign(neg.size(), 0.0);
        if (neg.empty()) return t;
        const double k = static_cast<double>(pos.size());
        const double q = QWeight(cfg, pos.size());
        const double w = WWeight(cfg, neg.size());
        // All masses are carried scaled by exp(-shift); the debiasing is
        // homogeneous once the floor is scaled the same way.
        double shift = kNegInf;
        for (double s : pos) shift = std::max(shift, s);
        for (double s : neg) shift = std::max(shift, s);
        const MassWithGradient pos_raw = WeightedMass(pos, shift, pos_sign, cfg.beta);
        const MassWithGradient neg_raw = WeightedMass(neg, shift, +1, cfg.beta);
        const double scaled_floor = floor * std::exp(-shift);
        const DebiasedMass p_mass = DebiasMass(pos_raw.mass, neg_raw.mass,
                                               rates.false_positive, scaled_floor);
        const DebiasedMass n_mass = DebiasMass(neg_raw.mass, pos_raw.mass,
                                               rates.false_negative, scaled_floor);
        diag.clamp_count += (p_mass.clamped ? 1 : 0) + (n_mass.clamped ? 1 : 0);
        note_mass(p_mass.value * std::exp(shift));
        note_mass(n_mass.value * std::exp(shift));
        const double big_p = q * p_mass.value;
        const double big_n = w * n_mass.value;
        if (!(big_p > 0.0) || !std::isfinite(big_p) || !std::isfinite(big_n)) {
          throw NumericError("degenerate debiased mass at anchor " +
                             std::to_string(anchor) + " (P=" +
                             std::to_string(big_p) + ", N=" +
                             std::to_string(big_n) + ")");
        }
        if (big_n == 0.0) return t;
        const double total = big_p + big_n;
        t.value = std::log1p(big_n / big_p) / k;
        const double d_big_p = (1.0 / total - 1.0 / big_p) / k;
        const double d_big_n = 1.0 / (total * k);
        const double d_pos_raw =
            d_big_p * q * p_mass.d_raw + d_big_n * w * n_mass.d_contaminant;
        const double d_neg_raw =
            d_big_p * q * p_mass.d_contaminant + d_big_n * w * n_mass.d_raw;
        for (std::size_t i = 0; i < pos.size(); ++i) {
          t.d_pos[i] = d_pos_raw * pos_raw.grad[i];
        }
        for (std::size_t i = 0; i < neg.size(); ++i) {
          t.d_neg[i] = d_neg_raw * neg_raw.grad[i];
        }
        return t;
      });
  diag.contributing_anchors = out.diagnostics.contributing_anchors;
  diag.skipped_anchors = out.diagnostics.skipped_anchors;
  out.diagnostics = diag;
  return out;
}

LossOutput ComputeLoss(const EmbeddingBatch& batch, const LossConfig& cfg) {
  if (cfg.objective == Objective::kTrueLabel) return TrueLabelLoss(batch, cfg);
  const AnchorViews views = BuildAnchorViews(batch);
  switch (cfg.objective) {
    case Objective::kInfoNce: return InfoNce(batch, views, cfg);
    case Objective::kSupConIn: return SupConIn(batch, views, cfg);
    case Objective::kSupConOut: return SupConOut(batch, views, cfg);
    case Objective::kSupConInModified: return SupConInModified(batch, views, cfg);
    case Objective::kSclRhe: return SclRhe(batch, views, cfg);
    case Objective::kTrueLabel: break;
  }
  throw ContractError("unhandled objective");
}

}  // namespace rscl
