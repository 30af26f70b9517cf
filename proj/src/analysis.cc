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

#include "rscl/analysis.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rscl/error.h"
#include "rscl/rng.h"

namespace rscl {

Histogram Histogram::Uniform(std::size_t bins, double lo, double hi) {
  if (bins == 0 || !(hi > lo)) throw ContractError("invalid histogram range");
  Histogram h;
  h.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.bin_edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  h.counts.assign(bins, 0);
  return h;
}

void Histogram::Add(double value) {
  const double lo = bin_edges.front();
  const double hi = bin_edges.back();
  const double pos = (value - lo) / (hi - lo) * static_cast<double>(bins());
  auto bin = static_cast<std::ptrdiff_t>(std::floor(pos));
  bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(bins()) - 1);
  ++counts[bin];
  ++total;
}

SimilarityHistograms ComputeSimilarityHistograms(
    const Matrix& embeddings, std::span<const int> assigned,
    std::span<const int> latent, std::size_t bins, std::uint64_t seed,
    std::uint64_t max_pairs) {
  const std::size_t n = embeddings.rows();
  if (latent.empty()) throw ContractError("similarity analysis needs latent labels");
  if (assigned.size() != n || latent.size() != n) {
    throw ContractError("label counts do not match the embeddings");
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (std::abs(Norm2(embeddings.row(r)) - 1.0) > 1e-6) {
      throw ContractError("similarity analysis needs unit-norm embeddings");
    }
  }
  SimilarityHistograms h{Histogram::Uniform(bins), Histogram::Uniform(bins),
                         Histogram::Uniform(bins)};
  auto visit = [&](std::size_t i, std::size_t j) {
    const bool same_assigned = assigned[i] == assigned[j];
    const bool same_latent = latent[i] == latent[j];
    const double cos = Dot(embeddings.row(i), embeddings.row(j));
    if (same_assigned && same_latent) {
      h.true_positive.Add(cos);
    } else if (!same_assigned && !same_latent) {
      h.true_negative.Add(cos);
    } else if (same_assigned) {
      h.fp_mislabel.Add(cos);
    }
    ++h.pairs_examined;
  };
  const std::uint64_t all_pairs = static_cast<std::uint64_t>(n) * (n - (n > 0)) / 2;
  if (all_pairs <= max_pairs) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) visit(i, j);
    }
  } else {
    h.subsampled = true;
    RngStream rng(seed, 0x68697374ull);
    for (std::uint64_t p = 0; p < max_pairs; ++p) {
      const std::size_t i = rng.UniformInt(n);
      std::size_t j = rng.UniformInt(n - 1);
      if (j >= i) ++j;
      visit(std::min(i, j), std::max(i, j));
    }
  }
  return h;
}

double OverlapCoefficient(const Histogram& a, const Histogram& b) {
  if (a.bin_edges != b.bin_edges) throw ContractError("histogram bin edges differ");
  if (a.total == 0 || b.total == 0) throw ContractError("overlap of an empty histogram");
  double overlap = 0.0;
  for (std::size_t i = 0; i < a.bins(); ++i) {
    overlap += std::min(static_cast<double>(a.counts[i]) / static_cast<double>(a.total),
                        static_cast<double>(b.counts[i]) / static_cast<double>(b.total));
  }
  return overlap;
}

void WriteHistogramCsv(const SimilarityHistograms& h, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::kOpenFailed, path);
  out << "bin_lo,bin_hi,count_tp,count_tn,count_fp\n";
  out.precision(17);
  const Histogram& tp = h.true_positive;
  for (std::size_t i = 0; i < tp.bins(); ++i) {
    out << tp.bin_edges[i] << ',' << tp.bin_edges[i + 1] << ',' << tp.counts[i]
        << ',' << h.true_negative.counts[i] << ',' << h.fp_mislabel.counts[i] << '\n';
  }
  if (!out) throw DataError(DataErrorKind::kWriteFailed, path);
}

ProbeLossGrad ProbeLossAndGradient(const ProbeModel& model,
                                   const Matrix& embeddings,
                                   std::span<const int> labels) {
  const std::size_t n = embeddings.rows();
  const std::size_t classes = model.class_count();
  if (labels.size() != n || n == 0) throw ContractError("probe label count mismatch");
  Matrix logits = model.Logits(embeddings);
  ProbeLossGrad out;
  // d(loss)/d(logits), reused in place.
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = logits.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      sum += v;
    }
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ContractError("probe label out of range");
    }
    out.loss -= std::log(row[y] / sum) * inv_n;
    for (double& v : row) v = v / sum * inv_n;
    row[y] -= inv_n;
  }
  out.grad_weight = MatMulTransA(logits, embeddings);
  out.grad_bias.assign(classes, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < classes; ++c) out.grad_bias[c] += logits(r, c);
  }
  return out;
}

ProbeModel TrainLinearProbe(const Matrix& embeddings, std::span<const int> labels,
                            int class_count, int epochs, double lr,
                            std::uint64_t seed) {
  if (class_count < 2) throw ContractError("probe needs at least 2 classes");
  if (epochs < 0 || !(lr >= 0.0)) throw ContractError("invalid probe schedule");
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    if (std::abs(Norm2(embeddings.row(r)) - 1.0) > 1e-6) {
      throw ContractError("probe expects unit-norm embeddings");
    }
  }
  ProbeModel model{Matrix(class_count, embeddings.cols()),
                   std::vector<double>(class_count, 0.0)};
  RngStream rng(seed, 0x70726f6265ull);
  for (double& v : model.weight.values()) v = 0.01 * rng.Normal();
  for (int e = 0; e < epochs; ++e) {
    const ProbeLossGrad g = ProbeLossAndGradient(model, embeddings, labels);
    auto w = model.weight.values();
    auto gw = g.grad_weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
    for (int c = 0; c < class_count; ++c) model.bias[c] -= lr * g.grad_bias[c];
  }
  return model;
}

ProbeReport EvaluateProbe(const ProbeModel& model, const Matrix& embeddings,
                          std::span<const int> labels) {
  if (labels.size() != embeddings.rows()) throw ContractError("probe label count mismatch");
  const std::size_t classes = model.class_count();
  const Matrix logits = model.Logits(embeddings);
  ProbeReport report;
  report.n_test = labels.size();
  report.per_class_count.assign(classes, 0);
  std::vector<std::size_t> correct(classes, 0);
  std::size_t total_correct = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    auto row = logits.row(r);
    // max_element returns the first maximum, i.e. the lower class on ties.
    const auto pred = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ContractError("test label out of range");
    }
    ++report.per_class_count[y];
    if (pred == y) {
      ++correct[y];
      ++total_correct;
    }
  }
  report.top1_accuracy =
      labels.empty() ? 0.0 : static_cast<double>(total_correct) / labels.size();
  report.per_class_accuracy.assign(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    if (report.per_class_count[c] > 0) {
      report.per_class_accuracy[c] =
          static_cast<double>(correct[c]) / report.per_class_count[c];
    }
  }
  return report;
}

double KnnAccuracy(const Matrix& train_embeddings, std::span<const int> train_labels,
                   const Matrix& test_embeddings, std::span<const int> test_labels,
                   std::size_t k) {
  const std::size_t n_train = train_embeddings.rows();
  if (train_labels.size() != n_train || test_labels.size() != test_embeddings.rows()) {
    throw ContractError("k-NN label count mismatch");
  }
  if (k == 0 || k > n_train) throw ContractError("k must lie in [1, n_train]");
  if (test_labels.empty()) return 0.0;
  int max_label = 0;
  for (int l : train_labels) max_label = std::max(max_label, l);
  std::vector<std::size_t> order(n_train);
  std::vector<double> sims(n_train);
  std::vector<std::size_t> votes(max_label + 1);
  std::size_t correct = 0;
  for (std::size_t t = 0; t < test_labels.size(); ++t) {
    for (std::size_t i = 0; i < n_train; ++i) {
      sims[i] = Dot(test_embeddings.row(t), train_embeddings.row(i));
    }
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return sims[a] != sims[b] ? sims[a] > sims[b] : a < b;
                      });
    std::fill(votes.begin(), votes.end(), 0);
    for (std::size_t i = 0; i < k; ++i) ++votes[train_labels[order[i]]];
    const auto pred =
        static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    correct += pred == test_labels[t];
  }
  return static_cast<double>(correct) / test_labels.size();
}

WrongSignalCounts WrongSignalAudit(const AnchorViews& views,
                                   std::span<const int> assigned,
                                   std::span<const int> latent) {
  if (latent.empty()) throw ContractError("wrong-signal audit needs latent labels");
  if (assigned.size() != latent.size()) {
    throw ContractError("assigned and latent label counts differ");
  }
  WrongSignalCounts counts;
  for (const AnchorView& v : views.views) {
    const int anchor_class = latent[v.anchor];
    for (std::size_t p : v.positives) counts.fp_pair_count += latent[p] != anchor_class;
    for (std::size_t q : v.negatives) counts.fn_pair_count += latent[q] == anchor_class;
  }
  const std::uint64_t total = counts.fp_pair_count + counts.fn_pair_count;
  if (total > 0) {
    counts.fraction_from_positives =
        static_cast<double>(counts.fp_pair_count) / static_cast<double>(total);
  }
  return counts;
}

}  // namespace rscl
