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

#include <array>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "rscl/checkpoint.h"
#include "rscl/encoder.h"
#include "rscl/error.h"
#include "rscl/matrix.h"
#include "rscl/optimizer.h"
#include "rscl/rng.h"
#include "test_util.h"

namespace rscl {
namespace {

Matrix RandomMatrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  RngStream rng(seed, 99);
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.Normal();
  return m;
}

// Independent triple loop.
Matrix NaiveProduct(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix Transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  }
  return t;
}

double RelErr(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-3});
}

TEST(MatMulTest, IdentityLeavesMatrixUnchanged) {
  const Matrix id{{1, 0}, {0, 1}};
  const Matrix m{{1.5, -2}, {0.25, 7}};
  EXPECT_EQ(MatMul(id, m), m);
}

TEST(MatMulTest, SmallProduct) {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{1}, {1}};
  EXPECT_EQ(MatMul(a, b), (Matrix{{3}, {7}}));
}

TEST(MatMulTest, MatchesTripleLoopBitForBit) {
  const Matrix a = RandomMatrix(5, 7, 1);
  const Matrix b = RandomMatrix(7, 3, 2);
  EXPECT_EQ(MatMul(a, b), NaiveProduct(a, b));
  EXPECT_EQ(MatMulTransA(Transpose(a), b), NaiveProduct(a, b));
  EXPECT_EQ(MatMulTransB(a, Transpose(b)), NaiveProduct(a, b));
}

TEST(MatMulTest, DimensionMismatchThrows) {
  EXPECT_THROW(MatMul(Matrix(2, 3), Matrix(2, 3)), ContractError);
  EXPECT_THROW(MatMulTransA(Matrix(2, 3), Matrix(3, 3)), ContractError);
  EXPECT_THROW(MatMulTransB(Matrix(2, 3), Matrix(2, 2)), ContractError);
}

TEST(MatrixTest, ShapeContract) {
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), ContractError);
  const Matrix m = RandomMatrix(4, 3, 5);
  const std::vector<std::size_t> idx = {3, 1};
  const Matrix g = m.Gather(idx);
  ASSERT_EQ(g.rows(), 2u);
  EXPECT_EQ(g(0, 2), m(3, 2));
  EXPECT_EQ(g(1, 0), m(1, 0));
}

TEST(RowNormalizeTest, ThreeFourRow) {
  const RowNormalized n = RowNormalize(Matrix{{3, 4}});
  EXPECT_DOUBLE_EQ(n.output(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(n.output(0, 1), 0.8);
}

TEST(RowNormalizeTest, UnitRowUnchangedAndRadialGradientRemoved) {
  const Matrix unit{{0.6, 0.8}};
  const RowNormalized n = RowNormalize(unit);
  EXPECT_NEAR(n.output(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(n.output(0, 1), 0.8, 1e-15);
  // A gradient along the row itself is purely radial.
  const Matrix back = n.Backward(Matrix{{0.6, 0.8}});
  EXPECT_NEAR(back(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(back(0, 1), 0.0, 1e-15);
  // A tangential gradient passes through unchanged.
  const Matrix tangential = n.Backward(Matrix{{-0.8, 0.6}});
  EXPECT_NEAR(tangential(0, 0), -0.8, 1e-15);
  EXPECT_NEAR(tangential(0, 1), 0.6, 1e-15);
}

TEST(RowNormalizeTest, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = RandomMatrix(3, 5, 100 + seed);
    const Matrix c = RandomMatrix(3, 5, 200 + seed);
    auto f = [&](const Matrix& m) {
      const Matrix y = RowNormalize(m).output;
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) s += c.values()[i] * y.values()[i];
      return s;
    };
    const Matrix analytic = RowNormalize(x).Backward(c);
    const double h = 1e-5;
    Matrix p = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double orig = p.values()[i];
      p.values()[i] = orig + h;
      const double up = f(p);
      p.values()[i] = orig - h;
      const double down = f(p);
      p.values()[i] = orig;
      EXPECT_LT(RelErr(analytic.values()[i], (up - down) / (2 * h)), 1e-6);
    }
  }
}

TEST(RowNormalizeTest, DegenerateRowThrows) {
  EXPECT_THROW(RowNormalize(Matrix{{1, 1}, {0, 1e-13}}), NumericError);
}

TEST(PhiloxTest, KnownAnswerVectors) {
  using Words = std::array<std::uint32_t, 4>;
  EXPECT_EQ(Philox4x32({0, 0, 0, 0}, {0, 0}),
            (Words{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                       {0xffffffffu, 0xffffffffu}),
            (Words{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                       {0xa4093822u, 0x299f31d0u}),
            (Words{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RngStreamTest, SameSeedAndStreamRepeat) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.NextU64(), b.NextU64());
}

TEST(RngStreamTest, WordsFollowTheCipherOutput) {
  const std::uint64_t seed = 0x0123456789abcdefull;
  RngStream s(seed, 5);
  const auto block = Philox4x32({0, 0, 5, 0}, {0x89abcdefu, 0x01234567u});
  for (int i = 0; i < 4; ++i) EXPECT_EQ(s.NextU32(), block[i]);
}

TEST(RngStreamTest, DistinctStreamsDiffer) {
  RngStream a(42, 1), b(42, 2), c(43, 1);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 256; ++i) {
    const auto x = a.NextU64();
    same_ab += x == b.NextU64();
    same_ac += x == c.NextU64();
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
  EXPECT_NE(DeriveStreamId(1, 0), DeriveStreamId(1, 1));
  EXPECT_NE(DeriveStreamId(1, 0), DeriveStreamId(2, 0));
}

TEST(RngStreamTest, UniformIntIsUniform) {
  RngStream rng(9, 0);
  const int bins = 7, draws = 70000;
  std::vector<int> counts(bins, 0);
  for (int i = 0; i < draws; ++i) {
    const auto v = rng.UniformInt(bins);
    ASSERT_LT(v, static_cast<std::uint64_t>(bins));
    ++counts[v];
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(draws) / bins;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 6 degrees of freedom, upper 0.1% point is 22.46.
  EXPECT_LT(chi2, 22.46);
}

TEST(RngStreamTest, DoubleAndNormalMoments) {
  RngStream rng(11, 3);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0, umin = 1.0, umax = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.NextDouble();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    const double z = rng.Normal();
    sum += z;
    sumsq += z * z;
  }
  EXPECT_GE(umin, 0.0);
  EXPECT_LT(umax, 1.0);
  EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sumsq / n, 1.0, 0.02);
}

MlpEncoder RandomEncoder(std::vector<std::size_t> dims, std::uint64_t seed) {
  RngStream rng(seed, 20);
  MlpEncoder enc(std::move(dims), rng);
  // Non-zero biases so their gradients are exercised.
  RngStream brng(seed, 21);
  auto& p = enc.mutable_parameters();
  for (std::size_t l = 1; l < p.size(); l += 2) {
    for (double& v : p[l].values()) v = 0.1 * brng.Normal();
  }
  return enc;
}

TEST(EncoderTest, ParameterCountFormula) {
  const MlpEncoder enc = RandomEncoder({6, 5, 4, 3}, 1);
  EXPECT_EQ(enc.ParameterCount(), (6u + 1) * 5 + (5u + 1) * 4 + (4u + 1) * 3);
  EXPECT_EQ(enc.layer_count(), 3u);
}

TEST(EncoderTest, LinearIdentityEncoderKeepsUnitInput) {
  Matrix w{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const MlpEncoder enc({3, 3}, {w, Matrix(1, 3)});
  const Matrix x{{0.6, 0.0, 0.8}, {0.0, 1.0, 0.0}};
  const Matrix y = Encode(enc, x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(y.values()[i], x.values()[i]);
}

TEST(EncoderTest, OutputsAreUnitNorm) {
  const MlpEncoder enc = RandomEncoder({8, 16, 4}, 3);
  const Matrix y = Encode(enc, RandomMatrix(50, 8, 4));
  for (std::size_t r = 0; r < y.rows(); ++r) EXPECT_NEAR(Norm2(y.row(r)), 1.0, 1e-9);
}

TEST(EncoderTest, InputWidthMismatchThrows) {
  const MlpEncoder enc = RandomEncoder({8, 4}, 3);
  EXPECT_THROW(Encode(enc, Matrix(2, 7, 1.0)), ContractError);
}

TEST(EncoderTest, ParameterGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::vector<std::size_t> dims = {5, 7, 6, 3};
    const MlpEncoder enc = RandomEncoder(dims, 30 + seed);
    const Matrix x = RandomMatrix(4, 5, 40 + seed);
    const EncoderForward fwd = EncoderForwardPass(enc, x);
    const Matrix ones(fwd.embeddings.rows(), fwd.embeddings.cols(), 1.0);
    const ParameterGradients grads = EncoderBackward(enc, fwd.cache, ones);
    ASSERT_EQ(grads.size(), enc.parameters().size());
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t p = 0; p < grads.size(); ++p) {
      for (std::size_t i = 0; i < grads[p].size(); ++i) {
        auto eval = [&](double delta) {
          std::vector<Matrix> params = enc.parameters();
          params[p].values()[i] += delta;
          const Matrix y = Encode(MlpEncoder(dims, params), x);
          double s = 0.0;
          for (double v : y.values()) s += v;
          return s;
        };
        const double numeric = (eval(h) - eval(-h)) / (2 * h);
        worst = std::max(worst, RelErr(grads[p].values()[i], numeric));
      }
    }
    EXPECT_LT(worst, 1e-5) << "seed " << seed;
  }
}

TEST(EncoderTest, StaleCacheIsRejected) {
  MlpEncoder enc = RandomEncoder({4, 3}, 5);
  const EncoderForward fwd = EncoderForwardPass(enc, RandomMatrix(2, 4, 6));
  enc.mutable_parameters();
  EXPECT_THROW(EncoderBackward(enc, fwd.cache, Matrix(2, 3, 1.0)), ContractError);
}

TEST(EncoderTest, GradientShapeMismatchIsRejected) {
  const MlpEncoder enc = RandomEncoder({4, 3}, 5);
  const EncoderForward fwd = EncoderForwardPass(enc, RandomMatrix(2, 4, 6));
  EXPECT_THROW(EncoderBackward(enc, fwd.cache, Matrix(3, 3, 1.0)), ContractError);
}

TEST(ProbeModelTest, LogitsByHand) {
  ProbeModel m{Matrix{{1, 0}, {0, 2}, {1, 1}}, {0.5, 0.0, -1.0}};
  const Matrix logits = m.Logits(Matrix{{0.6, 0.8}});
  EXPECT_DOUBLE_EQ(logits(0, 0), 1.1);
  EXPECT_DOUBLE_EQ(logits(0, 1), 1.6);
  EXPECT_NEAR(logits(0, 2), 0.4, 1e-15);
}

TEST(OptimizerTest, ZeroGradientLeavesParametersUnchanged) {
  std::vector<Matrix> params = {RandomMatrix(3, 2, 1)};
  const std::vector<Matrix> before = params;
  const std::vector<Matrix> zero = {Matrix(3, 2)};
  SgdStep(params, zero, 0.5);
  EXPECT_EQ(params, before);
  AdamState state;
  AdamStep(params, zero, state, 0.5);
  EXPECT_EQ(params, before);
}

TEST(OptimizerTest, SgdScalarStep) {
  std::vector<Matrix> params = {Matrix{{2.0}}};
  SgdStep(params, {Matrix{{1.0}}}, 0.1);
  EXPECT_DOUBLE_EQ(params[0](0, 0), 1.9);
}

TEST(OptimizerTest, AdamFirstStepMovesByLearningRate) {
  std::vector<Matrix> params = {Matrix{{1.0, -1.0, 0.5}}};
  const Matrix g{{3.0, -0.2, 1e-3}};
  AdamState state;
  const double lr = 0.01;
  AdamStep(params, {g}, state, lr);
  // Bias-corrected moments equal g and g^2 after one step.
  const double start[] = {1.0, -1.0, 0.5};
  for (int i = 0; i < 3; ++i) {
    const double gi = g(0, i);
    const double expected = start[i] - lr * gi / (std::abs(gi) + state.epsilon);
    EXPECT_NEAR(params[0](0, i), expected, 1e-15);
    EXPECT_NEAR(std::abs(params[0](0, i) - start[i]), lr, 2e-5 * lr);
  }
  EXPECT_EQ(state.step, 1);
}

TEST(OptimizerTest, NonFiniteGradientAbortsBeforeUpdate) {
  std::vector<Matrix> params = {Matrix{{1.0, 2.0}}, Matrix{{3.0}}};
  const std::vector<Matrix> before = params;
  const std::vector<Matrix> grads = {Matrix{{0.1, 0.1}}, Matrix{{NAN}}};
  EXPECT_THROW(SgdStep(params, grads, 0.1), NumericError);
  EXPECT_EQ(params, before);
  AdamState state;
  EXPECT_THROW(AdamStep(params, grads, state, 0.1), NumericError);
  EXPECT_EQ(params, before);
}

TEST(OptimizerTest, OverflowingUpdateIsRejected) {
  std::vector<Matrix> params = {Matrix{{1.0, -2.0}}};
  const std::vector<Matrix> before = params;
  const std::vector<Matrix> grads = {Matrix{{-1e10, 1.0}}};
  EXPECT_THROW(SgdStep(params, grads, 1e300), NumericError);
  EXPECT_EQ(params, before);
  AdamState state;
  EXPECT_THROW(AdamStep(params, grads, state, 1e308 * 10.0), NumericError);
  EXPECT_EQ(params, before);
  EXPECT_EQ(state.step, 0);
}

TEST(OptimizerTest, ShapeMismatchThrows) {
  std::vector<Matrix> params = {Matrix(2, 2)};
  EXPECT_THROW(SgdStep(params, {Matrix(2, 3)}, 0.1), ContractError);
}

TEST(CheckpointTest, HeaderLayout) {
  const MlpEncoder enc = RandomEncoder({3, 2}, 7);
  const std::string bytes = SerializeEncoder(enc);
  ASSERT_GE(bytes.size(), 20u);
  EXPECT_EQ(bytes.substr(0, 4), "SCLE");
  const auto u32 = [&](std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 3])) << 24;
  };
  EXPECT_EQ(u32(4), kCheckpointVersion);
  EXPECT_EQ(u32(8), 1u);
  EXPECT_EQ(u32(12), 3u);
  EXPECT_EQ(u32(16), 2u);
  EXPECT_EQ(bytes.size(), 20u + 8u * (3 * 2 + 2));
  double w00;
  std::memcpy(&w00, bytes.data() + 20, 8);
  EXPECT_EQ(w00, enc.weight(0)(0, 0));
}

TEST(CheckpointTest, RoundTripIsByteIdentical) {
  const std::string dir = testing::ScratchDir("checkpoint");
  const MlpEncoder enc = RandomEncoder({6, 5, 4}, 8);
  SaveCheckpoint(enc, dir + "/a.scle");
  const MlpEncoder loaded = LoadCheckpoint(dir + "/a.scle");
  EXPECT_EQ(loaded.layer_dims(), enc.layer_dims());
  EXPECT_EQ(loaded.parameters(), enc.parameters());
  SaveCheckpoint(loaded, dir + "/b.scle");
  EXPECT_EQ(testing::ReadBytes(dir + "/a.scle"), testing::ReadBytes(dir + "/b.scle"));
}

TEST(CheckpointTest, CorruptInputsAreDiagnosed) {
  const std::string good = SerializeEncoder(RandomEncoder({3, 2}, 9));
  auto kind_of = [](const std::string& bytes) {
    try {
      DeserializeEncoder(bytes);
    } catch (const DataError& e) {
      return e.kind();
    }
    return DataErrorKind::kOpenFailed;
  };
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of(bad_magic), DataErrorKind::kBadMagic);
  EXPECT_EQ(kind_of(good.substr(0, good.size() - 3)), DataErrorKind::kUnexpectedEnd);
  EXPECT_EQ(kind_of(good.substr(0, 10)), DataErrorKind::kUnexpectedEnd);
  EXPECT_EQ(kind_of(good + "x"), DataErrorKind::kCountMismatch);
  EXPECT_THROW(LoadCheckpoint("/nonexistent/dir/x.scle"), DataError);
}

}  // namespace
}  // namespace rscl
