// Copyright 2026 The AdLM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "adlm/mechanism.h"

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <vector>

#include "adlm/serialize.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace adlm {
namespace {

using ::testing::Each;
using ::testing::ElementsAre;
using ::testing::HasSubstr;

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments SampleMoments(const std::vector<double>& xs) {
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= xs.size();
  for (double x : xs) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= xs.size() - 1;
  return m;
}

std::vector<double> Column(const Tensor& t, size_t j) {
  std::vector<double> out(t.rows());
  for (size_t i = 0; i < t.rows(); ++i) out[i] = t.at(i, j);
  return out;
}

TEST(LaplaceTest, MedianIsZero) {
  EXPECT_EQ(LaplaceFromUniform(0.0, 3.0), 0.0);
}

TEST(LaplaceTest, InverseCdf) {
  // F^-1(1/2 + u) = -b sign(u) ln(1 - 2|u|).
  EXPECT_DOUBLE_EQ(LaplaceFromUniform(0.25, 2.0), -2.0 * std::log(0.5));
  EXPECT_DOUBLE_EQ(LaplaceFromUniform(-0.25, 2.0), 2.0 * std::log(0.5));
}

TEST(LaplaceTest, RejectsNonPositiveScale) {
  CounterRng rng(1, Substream::kAudit);
  EXPECT_FALSE(SampleLaplace(0.0, rng).ok());
  EXPECT_FALSE(SampleLaplace(-1.0, rng).ok());
  EXPECT_FALSE(SampleLaplace(std::nan(""), rng).ok());
}

TEST(LaplaceTest, FixedSeedGivesIdenticalSequence) {
  CounterRng a(42, Substream::kAudit);
  CounterRng b(42, Substream::kAudit);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(*SampleLaplace(1.5, a), *SampleLaplace(1.5, b));
  }
}

TEST(LaplaceTest, MomentsOfAMillionDraws) {
  CounterRng rng(2017, Substream::kAudit);
  std::vector<double> xs(1000000);
  for (double& x : xs) x = *SampleLaplace(1.0, rng);
  const Moments m = SampleMoments(xs);
  EXPECT_GE(m.mean, -0.01);
  EXPECT_LE(m.mean, 0.01);
  EXPECT_GE(m.variance, 1.9);
  EXPECT_LE(m.variance, 2.1);
}

TEST(LaplaceTest, DrawCounterAdvances) {
  CounterRng rng(3, Substream::kAudit);
  const uint64_t before = LaplaceDrawCount();
  for (int i = 0; i < 5; ++i) (void)SampleLaplace(1.0, rng);
  EXPECT_EQ(LaplaceDrawCount(), before + 5);
}

TEST(BudgetTest, SplitAndSpent) {
  auto b = PrivacyBudget::Split(1.5, {0.2, 0.3, 0.5});
  ASSERT_TRUE(b.ok());
  EXPECT_DOUBLE_EQ(b->epsilon1, 0.3);
  EXPECT_DOUBLE_EQ(b->epsilon2, 0.45);
  EXPECT_DOUBLE_EQ(b->epsilon3, 0.75);
  EXPECT_DOUBLE_EQ(b->Spent(Mechanism::kAdlm), 1.5);
  EXPECT_DOUBLE_EQ(b->Spent(Mechanism::kIlm), 1.2);
  EXPECT_TRUE(std::isinf(b->Spent(Mechanism::kNoiseless)));
  EXPECT_FALSE(PrivacyBudget::Split(0.0, {0.2, 0.3, 0.5}).ok());
  EXPECT_FALSE(PrivacyBudget::Split(1.0, {0.2, 0.3, 0.6}).ok());
}

TEST(BudgetTest, Validate) {
  PrivacyBudget ilm_only{0.0, 0.5, 0.5};
  EXPECT_FALSE(ilm_only.Validate(Mechanism::kAdlm).ok());
  EXPECT_TRUE(ilm_only.Validate(Mechanism::kIlm).ok());
  EXPECT_TRUE(PrivacyBudget{}.Validate(Mechanism::kNoiseless).ok());
  EXPECT_FALSE(PrivacyBudget({1, -1, 1}).Validate(Mechanism::kIlm).ok());
}

TEST(MechanismTest, ParseNames) {
  for (Mechanism m :
       {Mechanism::kAdlm, Mechanism::kIlm, Mechanism::kNoiseless}) {
    EXPECT_EQ(*ParseMechanism(MechanismName(m)), m);
  }
  EXPECT_FALSE(ParseMechanism("psgd").ok());
}

TEST(SensitivityTest, DeskScaleConstants) {
  EXPECT_DOUBLE_EQ(RelevanceSensitivity(784, 60000), 1568.0 / 60000.0);
  EXPECT_NEAR(RelevanceSensitivity(784, 60000), 0.0261333, 1e-7);
  EXPECT_DOUBLE_EQ(H0Sensitivity(32, 784), 50176.0);
  const Sensitivities s = Sensitivities::Compute(784, 10000, 64, 10, 25);
  EXPECT_DOUBLE_EQ(s.relevance, 0.1568);
  EXPECT_DOUBLE_EQ(s.h0, 100352.0);
  EXPECT_DOUBLE_EQ(s.loss, 1812.5);
}

TEST(PrivatizeRelevanceTest, ZeroNoiseLimit) {
  const std::vector<double> r = {0.5, -0.25, 1.0};
  auto p = PrivatizeRelevance(r, 1.0, 10, 7, NoiseOptions{0.0});
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(p->values, r);
  EXPECT_DOUBLE_EQ(p->scale, 2.0 * 3 / 10);
}

TEST(PrivatizeRelevanceTest, ScaleAndStream) {
  const std::vector<double> r(4, 0.0);
  auto p = PrivatizeRelevance(r, 0.5, 8, 11);
  ASSERT_TRUE(p.ok());
  EXPECT_DOUBLE_EQ(p->scale, 2.0 * 4 / 8 / 0.5);
  const CounterRng rng(11, Substream::kRelevanceNoise);
  EXPECT_EQ(p->stream_id, rng.stream_id());
  for (size_t j = 0; j < 4; ++j) {
    const double u = CounterRng::UniformOpenFromBits(rng.At(j)) - 0.5;
    EXPECT_EQ(p->values[j], LaplaceFromUniform(u, p->scale));
  }
  EXPECT_FALSE(PrivatizeRelevance(r, 0.0, 8, 11).ok());
}

TEST(AllocateBudgetTest, EqualMagnitudesAreUniform) {
  const std::vector<double> r = {0.3, -0.3, 0.3, 0.3, -0.3};
  BudgetAllocation a = AllocateBudget(r, 0.4);
  EXPECT_THAT(a.beta, Each(1.0));
  EXPECT_THAT(a.epsilon, Each(0.4));
}

TEST(AllocateBudgetTest, TwoFeatureRatio) {
  BudgetAllocation a = AllocateBudget(std::vector<double>{3.0, -1.0}, 2.0);
  EXPECT_THAT(a.beta, ElementsAre(1.5, 0.5));
  EXPECT_THAT(a.epsilon, ElementsAre(3.0, 1.0));
}

TEST(AllocateBudgetTest, AllZeroFallsBackToUniform) {
  BudgetAllocation a = AllocateBudget(std::vector<double>{0.0, 0.0, 0.0}, 1.0);
  EXPECT_TRUE(a.uniform_fallback);
  EXPECT_THAT(a.beta, Each(1.0));
}

TEST(AllocateBudgetTest, SumIsDimensionForRandomVectors) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> r(-2.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t d = 1 + trial % 800;
    std::vector<double> rbar(d);
    for (double& v : rbar) v = r(gen);
    BudgetAllocation a = AllocateBudget(rbar, 0.7);
    const double sum = std::accumulate(a.beta.begin(), a.beta.end(), 0.0);
    ASSERT_NEAR(sum, static_cast<double>(d), 1e-9) << "trial " << trial;
    const double eps_mean =
        std::accumulate(a.epsilon.begin(), a.epsilon.end(), 0.0) / d;
    ASSERT_NEAR(eps_mean, 0.7, 1e-9);
    for (double b : a.beta) ASSERT_GE(b, kBetaFloor);
  }
}

TEST(AllocateBudgetTest, FloorRenormalizes) {
  // One dominant feature would leave the others at ~1e-6 of a share.
  std::vector<double> r(10, 1e-6);
  r[0] = 1.0;
  BudgetAllocation a = AllocateBudget(r, 1.0);
  EXPECT_EQ(a.floored, 9);
  for (size_t j = 1; j < 10; ++j) EXPECT_EQ(a.beta[j], kBetaFloor);
  EXPECT_NEAR(a.beta[0], 10 - 9 * kBetaFloor, 1e-12);
  EXPECT_NEAR(std::accumulate(a.beta.begin(), a.beta.end(), 0.0), 10, 1e-12);
}

TEST(AllocateBudgetTest, MoreRelevantFeaturesGetLessNoise) {
  BudgetAllocation a = AllocateBudget(std::vector<double>{0.9, 0.1, 0.5}, 1.0);
  EXPECT_GT(a.epsilon[0], a.epsilon[2]);
  EXPECT_GT(a.epsilon[2], a.epsilon[1]);
}

TEST(PerturbFeaturesTest, ZeroNoiseIsIdentity) {
  Tensor x = Tensor::Matrix(2, 2, {0.1, 0.2, 0.3, 0.4});
  auto out = PerturbFeatures(x, std::vector<double>{1.0, 2.0}, 100.0, 10, 3,
                             NoiseOptions{0.0});
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(*out, x);
}

TEST(PerturbFeaturesTest, NoiseScalesInverselyWithBudget) {
  // beta_1 = 2 beta_2 -> feature 1 noise std is half of feature 2's.
  const size_t n = 100000;
  Tensor x({n, 2});
  BudgetAllocation a = AllocateBudget(std::vector<double>{2.0, 1.0}, 0.3);
  ASSERT_DOUBLE_EQ(a.beta[0], 2 * a.beta[1]);
  auto out = PerturbFeatures(x, a.epsilon, 50.0, 10, 21);
  ASSERT_TRUE(out.ok());
  const double s1 = std::sqrt(SampleMoments(Column(*out, 0)).variance);
  const double s2 = std::sqrt(SampleMoments(Column(*out, 1)).variance);
  EXPECT_NEAR(s1 / s2, 0.5, 0.5 * 0.05);
  // Expected std: sqrt(2) * Delta / (|L| eps_j).
  EXPECT_NEAR(s1, std::sqrt(2.0) * 50.0 / (10 * a.epsilon[0]),
              0.05 * std::sqrt(2.0) * 50.0 / (10 * a.epsilon[0]));
}

TEST(PerturbFeaturesTest, OutputIsNotClipped) {
  Tensor x({50, 3}, 0.1);
  auto out = PerturbFeatures(x, std::vector<double>(3, 0.1), 100.0, 2, 4);
  ASSERT_TRUE(out.ok());
  const auto [lo, hi] =
      std::minmax_element(out->vec().begin(), out->vec().end());
  EXPECT_LT(*lo, 0.0);
  EXPECT_GT(*hi, 1.0);
}

TEST(PerturbFeaturesTest, RejectsBadInputs) {
  Tensor x({2, 2});
  EXPECT_FALSE(PerturbFeatures(x, std::vector<double>{1.0}, 1, 1, 1).ok());
  EXPECT_FALSE(PerturbFeatures(x, std::vector<double>{1.0, 0.0}, 1, 1, 1).ok());
  EXPECT_FALSE(PerturbFeatures(x, std::vector<double>{1.0, 1.0}, 1, 0, 1).ok());
}

TEST(IlmTest, BitIdenticalToUniformAllocation) {
  std::mt19937_64 gen(6);
  Tensor x({40, 7});
  for (double& v : x.data()) v = std::uniform_real_distribution<>(0, 0.3)(gen);
  const std::vector<double> rbar(7, 0.42);
  BudgetAllocation a = AllocateBudget(rbar, 0.33);
  auto adaptive = PerturbFeatures(x, a.epsilon, 896.0, 30, 99);
  auto ilm = IlmPerturbFeatures(x, 0.33, 896.0, 30, 99);
  ASSERT_TRUE(adaptive.ok() && ilm.ok());
  EXPECT_EQ(*adaptive, *ilm);
}

TEST(IlmTest, ZeroNoiseIsIdentity) {
  Tensor x = Tensor::Matrix(1, 3, {0.1, 0.2, 0.3});
  auto out = IlmPerturbFeatures(x, 1.0, 10.0, 5, 1, NoiseOptions{0.0});
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(*out, x);
}

TEST(IlmTest, EqualScalesAcrossFeatures) {
  const size_t n = 100000;
  auto out = IlmPerturbFeatures(Tensor({n, 4}), 0.5, 20.0, 4, 8);
  ASSERT_TRUE(out.ok());
  const double expected = std::sqrt(2.0) * 20.0 / (4 * 0.5);
  for (size_t j = 0; j < 4; ++j) {
    const double s = std::sqrt(SampleMoments(Column(*out, j)).variance);
    EXPECT_NEAR(s, expected, 0.05 * expected) << "feature " << j;
  }
}

TEST(PerturbBiasTest, ZeroNoiseAndScalePassThrough) {
  auto zero = PerturbBias({3}, 1.0, 10.0, 5, 1, NoiseOptions{0.0});
  ASSERT_TRUE(zero.ok());
  EXPECT_THAT(zero->vec(), Each(0.0));
  auto noisy = PerturbBias({3}, 0.25, 10.0, 5, 1);
  ASSERT_TRUE(noisy.ok());
  const CounterRng rng(1, Substream::kBiasNoise);
  for (size_t k = 0; k < 3; ++k) {
    const double u = CounterRng::UniformOpenFromBits(rng.At(k)) - 0.5;
    EXPECT_EQ((*noisy)[k], LaplaceFromUniform(u, 10.0 / 0.25) / 5.0);
  }
}

TEST(PerturbBiasTest, DoublingBatchHalvesNoise) {
  const size_t n = 100000;
  auto small = PerturbBias({n}, 1.0, 10.0, 10, 2);
  auto large = PerturbBias({n}, 1.0, 10.0, 20, 2);
  ASSERT_TRUE(small.ok() && large.ok());
  const double s_small = std::sqrt(SampleMoments(small->vec()).variance);
  const double s_large = std::sqrt(SampleMoments(large->vec()).variance);
  EXPECT_NEAR(s_large / s_small, 0.5, 0.025);
}

TEST(PerturbCoefficientsTest, ZeroNoiseAndIndependentStreams) {
  LossCoefficients c = TaylorCoefficients(Tensor::Matrix(2, 2, {1, 0, 0, 1}));
  auto same = PerturbCoefficients(c, 1.0, 5.0, 4, 1, NoiseOptions{0.0});
  ASSERT_TRUE(same.ok());
  EXPECT_EQ(*same, c);
  auto noisy = PerturbCoefficients(c, 1.0, 5.0, 4, 1);
  ASSERT_TRUE(noisy.ok());
  EXPECT_NE(noisy->c0[0] - c.c0[0], noisy->c1[0] - c.c1[0]);
  EXPECT_NE(noisy->c1[0] - c.c1[0], noisy->c2[0] - c.c2[0]);
}

TEST(PerturbedDatasetTest, RoundTrip) {
  PerturbedDataset p;
  p.mechanism = Mechanism::kAdlm;
  p.seed = 17;
  p.batch_size = 30;
  p.budget = {0.1, 0.2, 0.3};
  p.sensitivities = Sensitivities::Compute(4, 100, 3, 2, 3);
  p.private_relevance = {0.1, -0.2, 0.3, 1.0 / 3.0};
  p.feature_epsilon = {0.4, 0.1, 0.2, 0.1};
  p.example_shape = {4};
  p.features = Tensor::Matrix(2, 4, {1, 2, 3, 4, 5, 6, 7, 1.0 / 7.0});
  p.bias_noise = Tensor({3}, std::vector<double>{0.5, -0.5, 1e-300});
  p.coefficients = TaylorCoefficients(Tensor::Matrix(2, 2, {1, 0, 0, 1}));
  p.draw_serial = NextDrawSerial();
  const std::string path =
      (std::filesystem::path(::testing::TempDir()) / "p.pds").string();
  ASSERT_TRUE(SavePerturbedDataset(p, path).ok());
  auto q = LoadPerturbedDataset(path);
  ASSERT_TRUE(q.ok()) << q.status();
  EXPECT_EQ(q->mechanism, p.mechanism);
  EXPECT_EQ(q->seed, 17);
  EXPECT_EQ(q->batch_size, 30);
  EXPECT_EQ(q->budget.epsilon3, 0.3);
  EXPECT_EQ(q->sensitivities.loss, p.sensitivities.loss);
  EXPECT_EQ(q->private_relevance, p.private_relevance);
  EXPECT_EQ(q->feature_epsilon, p.feature_epsilon);
  EXPECT_EQ(q->example_shape, p.example_shape);
  EXPECT_EQ(q->features, p.features);
  EXPECT_EQ(q->bias_noise, p.bias_noise);
  EXPECT_EQ(q->coefficients, p.coefficients);
  EXPECT_NE(q->draw_serial, p.draw_serial);
}

TEST(PerturbedDatasetTest, CorruptFiles) {
  const std::string dir = ::testing::TempDir();
  const std::string bad = (std::filesystem::path(dir) / "bad.pds").string();
  ASSERT_TRUE(WriteFileAtomically(bad, "NOTMAGIC").ok());
  auto a = LoadPerturbedDataset(bad);
  ASSERT_FALSE(a.ok());
  EXPECT_THAT(std::string(a.status().message()), HasSubstr("bad magic"));

  PerturbedDataset p;
  p.features = Tensor({2, 2}, 1.0);
  const std::string good = (std::filesystem::path(dir) / "ok.pds").string();
  ASSERT_TRUE(SavePerturbedDataset(p, good).ok());
  std::string bytes = *ReadFileBytes(good);
  bytes.resize(bytes.size() - 3);
  const std::string cut = (std::filesystem::path(dir) / "cut.pds").string();
  ASSERT_TRUE(WriteFileAtomically(cut, bytes).ok());
  auto b = LoadPerturbedDataset(cut);
  ASSERT_FALSE(b.ok());
  EXPECT_THAT(std::string(b.status().message()), HasSubstr("truncated"));
  EXPECT_EQ(LoadPerturbedDataset(dir + "/missing.pds").status().code(),
            absl::StatusCode::kNotFound);
}

TEST(SerializeTest, GitBlobHashMatchesGit) {
  // `printf 'hello\n' | git hash-object --stdin`
  EXPECT_EQ(GitBlobHash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(GitBlobHash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

}  // namespace
}  // namespace adlm
