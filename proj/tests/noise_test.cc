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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "rscl/error.h"
#include "rscl/matrix.h"
#include "rscl/noise.h"
#include "rscl/rng.h"

namespace rscl {
namespace {

std::string Percent(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * p);
  return buf;
}

// Exact pair rates under the symmetric flip model, derived independently of
// the library: condition on the latent pair and sum over flip outcomes.
double ExactFalsePositive(double tau, int c) {
  // P(latent differ | assigned same), assigned same-class pair with uniform prior.
  const double stay = 1 - tau, move = tau / (c - 1);
  // Both latent equal to the shared assigned class a: both stayed.
  // Reverse channel: latent | assigned is again the flip channel.
  double same = stay * stay + (c - 1) * move * move;
  return 1.0 - same;
}

double ExactFalseNegative(double tau, int c) {
  // P(latent same | assigned differ), assigned classes a != b.
  const double stay = 1 - tau, move = tau / (c - 1);
  // Latent both equal a, both equal b, or both equal one of the other c-2.
  return 2 * stay * move + (c - 2) * move * move;
}

TEST(PairProbabilityTest, ReferenceValuesAtTauFiveHundredths) {
  const double fp = PFalsePositive(0.05, 200);
  const double fn = PFalseNegative(0.05, 200);
  EXPECT_NEAR(fp, 0.0975, 5e-5);
  EXPECT_EQ(Percent(fp), "9.75%");
  EXPECT_NEAR(fn, 4.7745e-4, 1e-8);
  EXPECT_EQ(Percent(fn), "0.05%");
}

TEST(PairProbabilityTest, ZeroNoise) {
  for (int c : {3, 10, 1000}) {
    EXPECT_EQ(PFalsePositive(0.0, c), 0.0);
    EXPECT_EQ(PFalseNegative(0.0, c), 0.0);
  }
}

TEST(PairProbabilityTest, DomainErrors) {
  EXPECT_THROW(PFalsePositive(0.1, 2), ContractError);
  EXPECT_THROW(PFalseNegative(0.1, 2), ContractError);
  EXPECT_THROW(PFalsePositive(0.5, 10), ContractError);
  EXPECT_THROW(PFalseNegative(-0.01, 10), ContractError);
}

TEST(PairProbabilityTest, MonotoneOrderedAndFirstOrder) {
  for (int c : {3, 4, 10, 100, 1000}) {
    double prev_fp = 0.0, prev_fn = 0.0;
    for (int i = 1; i < 500; ++i) {
      const double tau = i * 0.001;
      const double fp = PFalsePositive(tau, c), fn = PFalseNegative(tau, c);
      EXPECT_GT(fp, prev_fp);
      EXPECT_GT(fn, prev_fn);
      EXPECT_GT(fp, fn) << "tau " << tau << " C " << c;
      EXPECT_LE(std::abs(fp - 2 * tau), 2 * tau * tau);
      prev_fp = fp;
      prev_fn = fn;
    }
  }
}

TEST(WrongSignalTest, ReferencePercentages) {
  const SignalSplit cifar = WrongSignalFraction(0.0585, 100);
  EXPECT_LE(std::abs(100 * cifar.from_positives - 99.04), 0.05);
  EXPECT_NEAR(cifar.from_positives + cifar.from_negatives, 1.0, 1e-15);
  const SignalSplit imagenet = WrongSignalFraction(0.0583, 1000);
  EXPECT_LE(std::abs(100 * imagenet.from_positives - 99.91), 0.02);
}

TEST(WrongSignalTest, SmallTauLimit) {
  EXPECT_NEAR(WrongSignalFraction(1e-7, 5).from_positives, 4.0 / 5.0, 1e-6);
  // Monte Carlo counting at tau = 0.01, C = 5.
  const MonteCarloRates mc = MonteCarloPairRates(0.01, 5, 10'000'000, 5);
  const double a = mc.false_positive.rate, b = mc.false_negative.rate;
  const double ratio = a / (a + b);
  const double se = std::hypot(b * mc.false_positive.std_error, a * mc.false_negative.std_error) /
                    ((a + b) * (a + b));
  EXPECT_LE(std::abs(ratio - WrongSignalFraction(0.01, 5).from_positives), 3 * se);
}

TEST(MonteCarloTest, ZeroNoiseGivesZeroRates) {
  const MonteCarloRates mc = MonteCarloPairRates(0.0, 7, 10000, 1);
  EXPECT_EQ(mc.false_positive.hits, 0u);
  EXPECT_EQ(mc.false_negative.hits, 0u);
  EXPECT_EQ(mc.false_positive.rate, 0.0);
  EXPECT_EQ(mc.false_negative.std_error, 0.0);
}

TEST(MonteCarloTest, TooFewPairsIsAnError) {
  EXPECT_THROW(MonteCarloPairRates(0.1, 10, 9999, 1), ContractError);
}

TEST(MonteCarloTest, Deterministic) {
  const MonteCarloRates a = MonteCarloPairRates(0.1, 10, 20000, 3);
  const MonteCarloRates b = MonteCarloPairRates(0.1, 10, 20000, 3);
  EXPECT_EQ(a.false_positive.hits, b.false_positive.hits);
  EXPECT_EQ(a.false_negative.hits, b.false_negative.hits);
}

TEST(MonteCarloTest, HeadlineFalsePositiveAtTwoHundredClasses) {
  const MonteCarloRates mc = MonteCarloPairRates(0.05, 200, 10'000'000, 7);
  EXPECT_LE(std::abs(mc.false_positive.rate - 0.0975), 3 * mc.false_positive.std_error);
}

TEST(MonteCarloTest, AgreesWithExactSymmetricRatesOnGrid) {
  std::uint64_t seed = 100;
  for (double tau : {0.02, 0.1, 0.3}) {
    for (int c : {3, 10, 100}) {
      const MonteCarloRates mc = MonteCarloPairRates(tau, c, 1'000'000, seed++);
      const double fp = ExactFalsePositive(tau, c), fn = ExactFalseNegative(tau, c);
      EXPECT_NEAR(SymmetricNoisePairRates(tau, c).false_positive, fp, 1e-15);
      EXPECT_NEAR(SymmetricNoisePairRates(tau, c).false_negative, fn, 1e-15);
      EXPECT_LE(std::abs(mc.false_positive.rate - fp), 3 * mc.false_positive.std_error)
          << "tau " << tau << " C " << c;
      EXPECT_LE(std::abs(mc.false_negative.rate - fn), 3 * mc.false_negative.std_error)
          << "tau " << tau << " C " << c;
    }
  }
}

TEST(MonteCarloTest, ForwardRejectionSamplerAgrees) {
  // Latent labels uniform, flipped forward, pairs kept by their assigned
  // relation. Independent of the library's sampler.
  const double tau = 0.2;
  const int c = 3;
  RngStream rng(31, 0);
  auto flip = [&](int latent) {
    if (rng.NextDouble() >= tau) return latent;
    int r = static_cast<int>(rng.UniformInt(c - 1));
    return r >= latent ? r + 1 : r;
  };
  std::uint64_t same = 0, same_fp = 0, diff = 0, diff_fn = 0;
  for (int i = 0; i < 2'000'000; ++i) {
    const int la = static_cast<int>(rng.UniformInt(c));
    const int lb = static_cast<int>(rng.UniformInt(c));
    const int aa = flip(la), ab = flip(lb);
    if (aa == ab) {
      ++same;
      same_fp += la != lb;
    } else {
      ++diff;
      diff_fn += la == lb;
    }
  }
  const double fp = static_cast<double>(same_fp) / same;
  const double fn = static_cast<double>(diff_fn) / diff;
  const PairRates exact = SymmetricNoisePairRates(tau, c);
  EXPECT_LE(std::abs(fp - exact.false_positive), 3 * std::sqrt(fp * (1 - fp) / same));
  EXPECT_LE(std::abs(fn - exact.false_negative), 3 * std::sqrt(fn * (1 - fn) / diff));
}

// The two examples below compare the closed forms as printed in the source
// formulas with simulated symmetric noise.
TEST(MonteCarloTest, ClosedFormsMatchSimulationAtTenClasses) {
  const MonteCarloRates mc = MonteCarloPairRates(0.1, 10, 10'000'000, 11);
  EXPECT_LE(std::abs(mc.false_positive.rate - PFalsePositive(0.1, 10)),
            3 * mc.false_positive.std_error);
  EXPECT_LE(std::abs(mc.false_negative.rate - PFalseNegative(0.1, 10)),
            3 * mc.false_negative.std_error);
}

TEST(MonteCarloTest, ClosedFormsMatchSimulationAtThreeClasses) {
  const MonteCarloRates mc = MonteCarloPairRates(0.2, 3, 1'000'000, 12);
  EXPECT_LE(std::abs(mc.false_positive.rate - PFalsePositive(0.2, 3)),
            3 * mc.false_positive.std_error);
  EXPECT_LE(std::abs(mc.false_negative.rate - PFalseNegative(0.2, 3)),
            3 * mc.false_negative.std_error);
}

std::vector<int> CyclicLabels(std::size_t n, int classes) {
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<int>(i % classes);
  return v;
}

std::size_t Differences(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

// Upper 0.1% point of chi-square with 8 degrees of freedom.
constexpr double kChi2Df8P001 = 26.124;

double ChiSquareUniformTargets(const std::vector<int>& assigned, int classes) {
  std::vector<double> counts(classes, 0.0);
  for (int a : assigned) counts[a] += 1;
  EXPECT_EQ(counts[0], 0.0);
  const double expected = static_cast<double>(assigned.size()) / (classes - 1);
  double chi2 = 0.0;
  for (int c = 1; c < classes; ++c) {
    chi2 += (counts[c] - expected) * (counts[c] - expected) / expected;
  }
  return chi2;
}

TEST(UniformInjectorTest, ZeroRateIsIdentity) {
  const auto latent = CyclicLabels(57, 4);
  EXPECT_EQ(InjectUniformNoise(latent, 0.0, 4, 1), latent);
}

TEST(UniformInjectorTest, ExactFlipCount) {
  const auto latent = CyclicLabels(100, 10);
  const auto assigned = InjectUniformNoise(latent, 0.05, 10, 2);
  EXPECT_EQ(Differences(latent, assigned), 5u);
  for (int a : assigned) EXPECT_TRUE(a >= 0 && a < 10);
  for (std::size_t n : {1u, 7u, 333u, 1001u}) {
    for (double rate : {0.0, 0.13, 0.5, 0.77, 1.0}) {
      const auto l = CyclicLabels(n, 3);
      EXPECT_EQ(Differences(l, InjectUniformNoise(l, rate, 3, n)),
                static_cast<std::size_t>(std::llround(rate * n)));
    }
  }
}

TEST(UniformInjectorTest, ReplacementsUniformOverOtherClasses) {
  const std::vector<int> latent(100000, 0);
  const auto assigned = InjectUniformNoise(latent, 1.0, 9, 3);
  EXPECT_LT(ChiSquareUniformTargets(assigned, 9), kChi2Df8P001);
}

TEST(UniformInjectorTest, DeterministicPerSeed) {
  const auto latent = CyclicLabels(1000, 7);
  EXPECT_EQ(InjectUniformNoise(latent, 0.2, 7, 5), InjectUniformNoise(latent, 0.2, 7, 5));
  EXPECT_NE(InjectUniformNoise(latent, 0.2, 7, 5), InjectUniformNoise(latent, 0.2, 7, 6));
}

TEST(UniformInjectorTest, ContractErrors) {
  EXPECT_THROW(InjectUniformNoise(std::vector<int>{0, 0}, 0.5, 1, 1), ContractError);
  EXPECT_THROW(InjectUniformNoise(std::vector<int>{0, 3}, 0.5, 3, 1), ContractError);
  EXPECT_THROW(InjectUniformNoise(std::vector<int>{0, 1}, 1.5, 3, 1), ContractError);
}

Matrix ThreeCentroids() {
  return Matrix{{1.0, 0.0}, {0.95, std::sqrt(1 - 0.95 * 0.95)}, {0.0, 1.0}};
}

TEST(ConfusionInjectorTest, SoftmaxOverCentroidCosines) {
  const std::vector<double> p = ConfusionDistribution(ThreeCentroids(), 0, 10.0);
  const double expected = std::exp(9.5) / (std::exp(9.5) + 1.0);
  EXPECT_EQ(p[0], 0.0);
  EXPECT_NEAR(p[1], expected, 1e-12);
  EXPECT_NEAR(p[1], 0.99993, 5e-6);
  EXPECT_NEAR(p[2], 1.0 - expected, 1e-12);
}

TEST(ConfusionInjectorTest, FlipsFollowTheDistribution) {
  const std::vector<int> latent(20000, 0);
  const auto assigned = InjectConfusionNoise(latent, ThreeCentroids(), 1.0, 10.0, 4);
  std::size_t to_two = 0;
  for (int a : assigned) to_two += a == 2;
  const double p2 = 1.0 / (std::exp(9.5) + 1.0);
  // Expect about 1.5 flips to class 2; 12 would be a >8 sigma event.
  EXPECT_LT(to_two, 12u);
  EXPECT_NEAR(static_cast<double>(to_two) / latent.size(), p2, 6e-4);
}

TEST(ConfusionInjectorTest, ZeroGammaIsUniform) {
  Matrix centroids(9, 4);
  RngStream rng(5, 0);
  for (std::size_t c = 0; c < 9; ++c) {
    double norm = 0.0;
    for (double& v : centroids.row(c)) {
      v = rng.Normal();
      norm += v * v;
    }
    for (double& v : centroids.row(c)) v /= std::sqrt(norm);
  }
  const std::vector<int> latent(100000, 0);
  const auto assigned = InjectConfusionNoise(latent, centroids, 1.0, 0.0, 6);
  EXPECT_LT(ChiSquareUniformTargets(assigned, 9), kChi2Df8P001);
}

TEST(ConfusionInjectorTest, ExactFlipCountAndDeterminism) {
  const auto latent = CyclicLabels(1000, 3);
  const auto a = InjectConfusionNoise(latent, ThreeCentroids(), 0.05, 10.0, 8);
  EXPECT_EQ(Differences(latent, a), 50u);
  EXPECT_EQ(a, InjectConfusionNoise(latent, ThreeCentroids(), 0.05, 10.0, 8));
}

TEST(ConfusionInjectorTest, CentroidsMustBeUnitNorm) {
  const Matrix bad{{2.0, 0.0}, {0.0, 1.0}};
  EXPECT_THROW(InjectConfusionNoise(std::vector<int>{0, 1}, bad, 0.5, 1.0, 1), ContractError);
}

TEST(PairTaxonomyTest, CleanLabelsHaveNoErrors) {
  const auto labels = CyclicLabels(40, 4);
  const PairTaxonomy t = ComputePairTaxonomy(labels, labels);
  EXPECT_EQ(t.false_positives(), 0u);
  EXPECT_EQ(t.false_negatives(), 0u);
  EXPECT_EQ(t.true_positive + t.true_negative, 40u * 39 / 2);
}

TEST(PairTaxonomyTest, FourSampleHandEnumeration) {
  const std::vector<int> latent = {0, 0, 1, 1};
  const std::vector<int> assigned = {0, 1, 1, 1};
  const PairTaxonomy t = ComputePairTaxonomy(assigned, latent);
  EXPECT_EQ(t.fn_case_v, 1u);        // (0,1)
  EXPECT_EQ(t.true_negative, 2u);    // (0,2), (0,3)
  EXPECT_EQ(t.fp_case_ii, 2u);       // (1,2), (1,3)
  EXPECT_EQ(t.true_positive, 1u);    // (2,3)
  EXPECT_EQ(t.fp_case_i + t.fp_case_iii + t.fn_case_iv + t.fn_case_vi, 0u);
  EXPECT_EQ(t.assigned_positive_total, 3u);
  EXPECT_EQ(t.assigned_negative_total, 3u);
}

TEST(PairTaxonomyTest, CellsPartitionAllPairs) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto latent = CyclicLabels(300, 6);
    const auto assigned = InjectUniformNoise(latent, 0.3, 6, seed);
    const PairTaxonomy t = ComputePairTaxonomy(assigned, latent);
    EXPECT_EQ(t.true_positive + t.false_positives(), t.assigned_positive_total);
    EXPECT_EQ(t.true_negative + t.false_negatives(), t.assigned_negative_total);
    EXPECT_EQ(t.assigned_positive_total + t.assigned_negative_total, 300u * 299 / 2);
    EXPECT_GT(t.fp_case_i, 0u);
    EXPECT_GT(t.fp_case_iii, 0u);
    EXPECT_GT(t.fn_case_iv, 0u);
    EXPECT_GT(t.fn_case_vi, 0u);
  }
}

TEST(PairTaxonomyTest, LengthMismatchIsAnError) {
  EXPECT_THROW(ComputePairTaxonomy(std::vector<int>{0, 1}, std::vector<int>{0}), ContractError);
}

TEST(NoiseSpecTest, Validation) {
  NoiseSpec s;
  s.rate = 1.0;
  EXPECT_THROW(s.Validate(), ContractError);
  s.rate = 0.2;
  s.gamma = -1.0;
  EXPECT_THROW(s.Validate(), ContractError);
  EXPECT_EQ(ParseNoiseModel("confusion"), NoiseModel::kConfusion);
  EXPECT_THROW(ParseNoiseModel("gaussian"), ContractError);
}

}  // namespace
}  // namespace rscl
