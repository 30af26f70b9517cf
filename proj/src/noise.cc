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

#include "rscl/noise.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rscl/error.h"
#include "rscl/rng.h"

namespace rscl {
namespace {

void CheckTauAndClasses(double tau, int class_count) {
  if (class_count < 3) {
    throw ContractError("pair error probabilities need at least 3 classes, got " +
                        std::to_string(class_count));
  }
  if (!(tau >= 0.0 && tau < 0.5)) throw ContractError("tau must lie in [0, 0.5)");
}

// Keeps c with probability 1 - tau, otherwise moves to a uniformly random
// other class.
int Flip(int c, double tau, int class_count, RngStream& rng) {
  if (rng.NextDouble() >= tau) return c;
  const int r = static_cast<int>(rng.UniformInt(class_count - 1));
  return r >= c ? r + 1 : r;
}

RateEstimate Estimate(std::uint64_t hits, std::uint64_t pairs) {
  RateEstimate e;
  e.hits = hits;
  e.pairs = pairs;
  e.rate = static_cast<double>(hits) / static_cast<double>(pairs);
  e.std_error = std::sqrt(e.rate * (1.0 - e.rate) / static_cast<double>(pairs));
  return e;
}

std::vector<std::size_t> ChooseFlips(std::size_t n, double rate, RngStream& rng) {
  const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.UniformInt(n - i);
    std::swap(order[i], order[j]);
  }
  order.resize(count);
  return order;
}

void CheckInjection(std::span<const int> latent, double rate, int class_count) {
  if (class_count < 2) throw ContractError("noise injection needs at least 2 classes");
  if (!(rate >= 0.0 && rate <= 1.0)) throw ContractError("noise rate must lie in [0, 1]");
  for (int l : latent) {
    if (l < 0 || l >= class_count) {
      throw ContractError("latent label " + std::to_string(l) + " out of range");
    }
  }
}

}  // namespace

double PFalsePositive(double tau, int class_count) {
  CheckTauAndClasses(tau, class_count);
  const double c1 = class_count - 1.0;
  return 2.0 * tau - tau * tau - tau * tau / (c1 * c1);
}

double PFalseNegative(double tau, int class_count) {
  CheckTauAndClasses(tau, class_count);
  const double c1 = class_count - 1.0;
  const double c2 = class_count - 2.0;
  return tau * tau / (c2 * c2) + (2.0 * tau - 2.0 * tau * tau) / c1;
}

SignalSplit WrongSignalFraction(double tau, int class_count) {
  const double fp = PFalsePositive(tau, class_count);
  const double fn = PFalseNegative(tau, class_count);
  if (fp + fn == 0.0) return {};
  return {fp / (fp + fn), fn / (fp + fn)};
}

PairRates SymmetricNoisePairRates(double tau, int class_count) {
  CheckTauAndClasses(tau, class_count);
  const double c1 = class_count - 1.0;
  return {2.0 * tau - tau * tau - tau * tau / c1,
          2.0 * tau * (1.0 - tau) / c1 + (class_count - 2.0) * tau * tau / (c1 * c1)};
}

MonteCarloRates MonteCarloPairRates(double tau, int class_count,
                                    std::uint64_t n_pairs, std::uint64_t seed) {
  CheckTauAndClasses(tau, class_count);
  if (n_pairs < 10000) throw ContractError("Monte Carlo needs at least 10^4 pairs");
  const auto classes = static_cast<std::uint64_t>(class_count);
  RngStream same_rng(seed, 1);
  std::uint64_t fp = 0;
  for (std::uint64_t i = 0; i < n_pairs; ++i) {
    const int c = static_cast<int>(same_rng.UniformInt(classes));
    const int a = Flip(c, tau, class_count, same_rng);
    const int b = Flip(c, tau, class_count, same_rng);
    fp += (a != b);
  }
  RngStream diff_rng(seed, 2);
  std::uint64_t fn = 0;
  for (std::uint64_t i = 0; i < n_pairs; ++i) {
    const int c = static_cast<int>(diff_rng.UniformInt(classes));
    int c2 = static_cast<int>(diff_rng.UniformInt(classes - 1));
    if (c2 >= c) ++c2;
    const int a = Flip(c, tau, class_count, diff_rng);
    const int b = Flip(c2, tau, class_count, diff_rng);
    fn += (a == b);
  }
  return {Estimate(fp, n_pairs), Estimate(fn, n_pairs)};
}

std::string NoiseModelName(NoiseModel model) {
  return model == NoiseModel::kUniform ? "uniform" : "confusion";
}

NoiseModel ParseNoiseModel(const std::string& name) {
  if (name == "uniform") return NoiseModel::kUniform;
  if (name == "confusion") return NoiseModel::kConfusion;
  throw ContractError("unknown noise model '" + name + "'");
}

void NoiseSpec::Validate() const {
  if (!(rate >= 0.0 && rate < 1.0)) throw ContractError("noise rate must lie in [0, 1)");
  if (!std::isfinite(gamma) || gamma < 0.0) {
    throw ContractError("confusion gamma must be finite and non-negative");
  }
}

std::vector<int> InjectUniformNoise(std::span<const int> latent_labels,
                                    double rate, int class_count,
                                    std::uint64_t seed) {
  CheckInjection(latent_labels, rate, class_count);
  std::vector<int> assigned(latent_labels.begin(), latent_labels.end());
  RngStream rng(seed, 0x756e69ull);
  for (std::size_t idx : ChooseFlips(assigned.size(), rate, rng)) {
    const int original = assigned[idx];
    const int r = static_cast<int>(rng.UniformInt(class_count - 1));
    assigned[idx] = r >= original ? r + 1 : r;
  }
  return assigned;
}

std::vector<double> ConfusionDistribution(const Matrix& class_centroids,
                                          int source_class, double gamma) {
  const std::size_t classes = class_centroids.rows();
  std::vector<double> logits(classes, 0.0);
  double peak = -INFINITY;
  for (std::size_t c = 0; c < classes; ++c) {
    if (static_cast<int>(c) == source_class) continue;
    logits[c] = gamma * Dot(class_centroids.row(source_class), class_centroids.row(c));
    peak = std::max(peak, logits[c]);
  }
  std::vector<double> p(classes, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (static_cast<int>(c) == source_class) continue;
    p[c] = std::exp(logits[c] - peak);
    total += p[c];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<int> InjectConfusionNoise(std::span<const int> latent_labels,
                                      const Matrix& class_centroids,
                                      double rate, double gamma,
                                      std::uint64_t seed) {
  const int classes = static_cast<int>(class_centroids.rows());
  CheckInjection(latent_labels, rate, classes);
  if (!std::isfinite(gamma)) throw ContractError("confusion gamma must be finite");
  for (int c = 0; c < classes; ++c) {
    if (std::abs(Norm2(class_centroids.row(c)) - 1.0) > 1e-6) {
      throw ContractError("class centroid " + std::to_string(c) + " is not unit norm");
    }
  }
  std::vector<std::vector<double>> cdf(classes);
  for (int c = 0; c < classes; ++c) {
    cdf[c] = ConfusionDistribution(class_centroids, c, gamma);
    std::partial_sum(cdf[c].begin(), cdf[c].end(), cdf[c].begin());
  }
  std::vector<int> assigned(latent_labels.begin(), latent_labels.end());
  RngStream rng(seed, 0x636f6e66ull);
  for (std::size_t idx : ChooseFlips(assigned.size(), rate, rng)) {
    const int original = assigned[idx];
    const std::vector<double>& table = cdf[original];
    const double u = rng.NextDouble() * table.back();
    int pick = -1;
    for (int c = 0; c < classes; ++c) {
      if (c != original && u < table[c]) {
        pick = c;
        break;
      }
    }
    if (pick < 0) {
      // Rounding at the top of the table: take the last admissible class.
      pick = original == classes - 1 ? classes - 2 : classes - 1;
    }
    assigned[idx] = pick;
  }
  return assigned;
}

PairTaxonomy ComputePairTaxonomy(std::span<const int> assigned,
                                 std::span<const int> latent) {
  if (assigned.size() != latent.size()) {
    throw ContractError("assigned and latent label counts differ");
  }
  PairTaxonomy t;
  const std::size_t n = assigned.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool a_ok = assigned[i] == latent[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool b_ok = assigned[j] == latent[j];
      const bool same_latent = latent[i] == latent[j];
      if (assigned[i] == assigned[j]) {
        ++t.assigned_positive_total;
        if (same_latent) {
          ++t.true_positive;
        } else if (a_ok) {
          ++t.fp_case_i;
        } else if (b_ok) {
          ++t.fp_case_ii;
        } else {
          ++t.fp_case_iii;
        }
      } else {
        ++t.assigned_negative_total;
        if (!same_latent) {
          ++t.true_negative;
        } else if (!a_ok && !b_ok) {
          ++t.fn_case_iv;
        } else if (a_ok) {
          ++t.fn_case_v;
        } else {
          ++t.fn_case_vi;
        }
      }
    }
  }
  return t;
}

}  // namespace rscl
