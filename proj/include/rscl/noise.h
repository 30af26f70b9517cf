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

#ifndef RSCL_NOISE_H_
#define RSCL_NOISE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rscl/matrix.h"

namespace rscl {

// Pairwise label-error probabilities for a per-sample mislabel rate tau and C
// classes, in the closed forms used throughout the label-noise literature on
// contrastive pairs:
//   P_FP = 2 tau - tau^2 - tau^2 / (C - 1)^2
//   P_FN = tau^2 / (C - 2)^2 + (2 tau - 2 tau^2) / (C - 1)
// Both require C >= 3 and tau in [0, 0.5).
double PFalsePositive(double tau, int class_count);
double PFalseNegative(double tau, int class_count);

struct SignalSplit {
  double from_positives = 0.0;
  double from_negatives = 0.0;
};

// P_FP / (P_FP + P_FN) and its complement. At tau = 0 both are zero.
SignalSplit WrongSignalFraction(double tau, int class_count);

// Exact pair probabilities when latent labels are uniform over C classes and
// each label is flipped with probability tau to a uniformly random other
// class:
//   fp = 2 tau - tau^2 - tau^2 / (C - 1)
//   fn = 2 tau (1 - tau) / (C - 1) + (C - 2) tau^2 / (C - 1)^2
// The closed forms above agree with these up to O(tau^2 / C).
struct PairRates {
  double false_positive = 0.0;
  double false_negative = 0.0;
};
PairRates SymmetricNoisePairRates(double tau, int class_count);

struct RateEstimate {
  double rate = 0.0;
  double std_error = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t pairs = 0;
};

struct MonteCarloRates {
  RateEstimate false_positive;
  RateEstimate false_negative;
};

// Simulates the symmetric flip model. For n_pairs assigned-same pairs and
// n_pairs assigned-different pairs it draws the assigned classes, then each
// member's latent class given its assigned class. Under a uniform prior the
// flip channel is symmetric, so latent-given-assigned is again "keep with
// probability 1 - tau, else uniform over the other classes". Standard errors
// are binomial. n_pairs >= 10^4.
MonteCarloRates MonteCarloPairRates(double tau, int class_count,
                                    std::uint64_t n_pairs, std::uint64_t seed);

enum class NoiseModel { kUniform, kConfusion };

std::string NoiseModelName(NoiseModel model);
NoiseModel ParseNoiseModel(const std::string& name);

struct NoiseSpec {
  NoiseModel model = NoiseModel::kUniform;
  double rate = 0.0;
  // Sharpness of the confusion model.
  double gamma = 10.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Relabels exactly round(rate * n) samples, chosen without replacement, to a
// uniformly random different class.
std::vector<int> InjectUniformNoise(std::span<const int> latent_labels,
                                    double rate, int class_count,
                                    std::uint64_t seed);

// Same flip count as the uniform injector; a flipped sample of class c moves
// to c' != c with probability proportional to exp(gamma * cos(mu_c, mu_c')).
// class_centroids holds one unit-norm row per class.
std::vector<int> InjectConfusionNoise(std::span<const int> latent_labels,
                                      const Matrix& class_centroids,
                                      double rate, double gamma,
                                      std::uint64_t seed);

// Replacement-class distribution of the confusion model for source class c.
std::vector<double> ConfusionDistribution(const Matrix& class_centroids,
                                          int source_class, double gamma);

// Pair accounting over all unordered pairs (i < j), with i playing the role of
// the anchor A and j of the partner B.
struct PairTaxonomy {
  std::uint64_t true_positive = 0;
  std::uint64_t fp_case_i = 0;    // A correct, B mislabelled
  std::uint64_t fp_case_ii = 0;   // A mislabelled, B correct
  std::uint64_t fp_case_iii = 0;  // both mislabelled, different latent classes
  std::uint64_t true_negative = 0;
  std::uint64_t fn_case_iv = 0;   // both mislabelled, same latent class
  std::uint64_t fn_case_v = 0;    // A correct, B mislabelled into another class
  std::uint64_t fn_case_vi = 0;   // A mislabelled, B correct
  std::uint64_t assigned_positive_total = 0;
  std::uint64_t assigned_negative_total = 0;

  std::uint64_t false_positives() const {
    return fp_case_i + fp_case_ii + fp_case_iii;
  }
  std::uint64_t false_negatives() const {
    return fn_case_iv + fn_case_v + fn_case_vi;
  }
};

PairTaxonomy ComputePairTaxonomy(std::span<const int> assigned,
                                 std::span<const int> latent);

}  // namespace rscl

#endif  // RSCL_NOISE_H_
