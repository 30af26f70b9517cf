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

#ifndef RSCL_ANALYSIS_H_
#define RSCL_ANALYSIS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rscl/encoder.h"
#include "rscl/losses.h"
#include "rscl/matrix.h"

namespace rscl {

struct Histogram {
  std::vector<double> bin_edges;  // bins + 1 strictly increasing edges
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  // `bins` equal-width bins over [lo, hi]; hi itself falls in the last bin.
  static Histogram Uniform(std::size_t bins, double lo = -1.0, double hi = 1.0);
  void Add(double value);
  std::size_t bins() const { return counts.size(); }
};

struct SimilarityHistograms {
  Histogram true_positive;   // same latent, same assigned
  Histogram true_negative;   // different latent, different assigned
  Histogram fp_mislabel;     // same assigned, different latent
  std::uint64_t pairs_examined = 0;
  // Set when the pair count exceeded max_pairs and pairs were sampled.
  bool subsampled = false;
};

inline constexpr std::size_t kDefaultHistogramBins = 200;

// Cosine similarities of unit-norm embeddings over all unordered pairs, or
// max_pairs seeded random pairs when there are more.
SimilarityHistograms ComputeSimilarityHistograms(
    const Matrix& embeddings, std::span<const int> assigned,
    std::span<const int> latent, std::size_t bins = kDefaultHistogramBins,
    std::uint64_t seed = 0, std::uint64_t max_pairs = 10'000'000);

// Histogram intersection of the normalized bins; in [0, 1] and symmetric.
double OverlapCoefficient(const Histogram& a, const Histogram& b);

// bin_lo,bin_hi,count_tp,count_tn,count_fp
void WriteHistogramCsv(const SimilarityHistograms& h, const std::string& path);

struct ProbeTrainConfig {
  int epochs = 300;
  double lr = 2.0;
};

struct ProbeLossGrad {
  double loss = 0.0;  // mean cross-entropy
  Matrix grad_weight;
  std::vector<double> grad_bias;
};

ProbeLossGrad ProbeLossAndGradient(const ProbeModel& model,
                                   const Matrix& embeddings,
                                   std::span<const int> labels);

// Multinomial logistic regression by full-batch gradient descent. Weights
// start from N(0, 0.01^2) drawn from seed, biases at zero.
ProbeModel TrainLinearProbe(const Matrix& embeddings, std::span<const int> labels,
                            int class_count, int epochs, double lr,
                            std::uint64_t seed);

struct ProbeReport {
  double top1_accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // 0 for classes absent from the test set
  std::vector<std::size_t> per_class_count;
  std::size_t n_test = 0;
};

// Argmax of the logits; ties go to the lower class index.
ProbeReport EvaluateProbe(const ProbeModel& model, const Matrix& embeddings,
                          std::span<const int> labels);

// Cosine k-NN majority vote. Neighbour ties go to the lower train index,
// vote ties to the lower class.
double KnnAccuracy(const Matrix& train_embeddings, std::span<const int> train_labels,
                   const Matrix& test_embeddings, std::span<const int> test_labels,
                   std::size_t k);

struct WrongSignalCounts {
  std::uint64_t fp_pair_count = 0;  // (anchor, positive) with different latent labels
  std::uint64_t fn_pair_count = 0;  // (anchor, negative) with the same latent label
  std::optional<double> fraction_from_positives;
};

WrongSignalCounts WrongSignalAudit(const AnchorViews& views,
                                   std::span<const int> assigned,
                                   std::span<const int> latent);

}  // namespace rscl

#endif  // RSCL_ANALYSIS_H_
