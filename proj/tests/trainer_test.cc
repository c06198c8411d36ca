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

#include "adlm/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace adlm {
namespace {

using ::testing::HasSubstr;

TrainConfig SmallConfig(Mechanism m) {
  TrainConfig c;
  c.mechanism = m;
  c.batch_size = 50;
  c.epochs = 3;
  c.architecture = {"dense:16", "relu", "lrn", "dense:4:nobias"};
  c.pretrain_epochs = 3;
  c.seed = 7;
  return c;
}

Dataset Rows(const Dataset& all, size_t begin, size_t end) {
  std::vector<size_t> rows(end - begin);
  std::iota(rows.begin(), rows.end(), begin);
  std::vector<uint32_t> classes(all.classes().begin() + begin,
                                all.classes().begin() + end);
  return Dataset(all.features().GatherRows(rows), classes, all.num_classes());
}

// Train and test halves share class prototypes.
const Dataset& ToyAll() {
  static const Dataset* data = new Dataset(SyntheticDataset(600, 12, 4, 3));
  return *data;
}

const Dataset& Toy() {
  static const Dataset* data = new Dataset(Rows(ToyAll(), 0, 400));
  return *data;
}

const Dataset& ToyTest() {
  static const Dataset* data = new Dataset(Rows(ToyAll(), 400, 600));
  return *data;
}

std::vector<Tensor> Params(const Network& net) {
  std::vector<Tensor> out;
  for (const Tensor* p : net.Parameters()) out.push_back(*p);
  return out;
}

TEST(TrainConfigTest, RefusesBadBudgets) {
  TrainConfig c = SmallConfig(Mechanism::kAdlm);
  c.epsilon = 0.0;
  EXPECT_EQ(ValidateTrainConfig(c).code(), absl::StatusCode::kInvalidArgument);
  c.epsilon = 1.0;
  c.epsilon_split = {0.0, 0.5, 0.5};
  EXPECT_FALSE(ValidateTrainConfig(c).ok());
  // ILM does not release relevance, so epsilon1 = 0 is fine there.
  c.mechanism = Mechanism::kIlm;
  EXPECT_TRUE(ValidateTrainConfig(c).ok());
  c.epsilon_split = {0.2, 0.2, 0.2};
  EXPECT_FALSE(ValidateTrainConfig(c).ok());
  c.mechanism = Mechanism::kNoiseless;
  EXPECT_TRUE(ValidateTrainConfig(c).ok());
}

TEST(TrainConfigTest, RefusesOtherBadFields) {
  TrainConfig c = SmallConfig(Mechanism::kNoiseless);
  c.batch_size = 0;
  EXPECT_FALSE(ValidateTrainConfig(c).ok());
  c = SmallConfig(Mechanism::kNoiseless);
  c.learning_rate = -1;
  EXPECT_FALSE(ValidateTrainConfig(c).ok());
  c = SmallConfig(Mechanism::kNoiseless);
  c.architecture.clear();
  EXPECT_FALSE(ValidateTrainConfig(c).ok());
  c = SmallConfig(Mechanism::kNoiseless);
  c.batch_size = 401;
  EXPECT_FALSE(Train(c, Toy(), nullptr).ok());
}

TEST(TrainConfigTest, PrivateArchitectureRequirements) {
  TrainConfig c = SmallConfig(Mechanism::kIlm);
  c.architecture = {"dense:16", "relu", "lrn", "dense:4"};
  auto r = Train(c, Toy(), nullptr);
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(r.status().message(), HasSubstr("bias-free"));
  c.architecture = {"dense:16", "relu", "dense:4:nobias"};
  r = Train(c, Toy(), nullptr);
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(r.status().message(), HasSubstr("LRN"));
  c.architecture = {"dense:16", "relu", "lrn", "dense:5:nobias"};
  EXPECT_FALSE(Train(c, Toy(), nullptr).ok());
  // The noiseless baseline is unconstrained.
  c.mechanism = Mechanism::kNoiseless;
  c.architecture = {"dense:16", "relu", "dense:4"};
  EXPECT_TRUE(Train(c, Toy(), nullptr).ok());
}

TEST(EvaluateTest, ZeroNetworkPredictsFirstClass) {
  auto net = BuildNetwork({"dense:4:nobias"}, {12}, 4);
  ASSERT_TRUE(net.ok());
  const Dataset& d = ToyTest();
  size_t zeros = std::count(d.classes().begin(), d.classes().end(), 0u);
  auto acc = Evaluate(*net, d);
  ASSERT_TRUE(acc.ok());
  EXPECT_DOUBLE_EQ(*acc, static_cast<double>(zeros) / d.size());
}

TEST(EvaluateTest, InvariantToExampleOrder) {
  auto result = Train(SmallConfig(Mechanism::kNoiseless), Toy(), nullptr);
  ASSERT_TRUE(result.ok());
  const Dataset& d = ToyTest();
  std::vector<size_t> perm(d.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 gen(5);
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<uint32_t> classes;
  for (size_t i : perm) classes.push_back(d.classes()[i]);
  Dataset shuffled(d.features().GatherRows(perm), classes, d.num_classes());
  EXPECT_EQ(*Evaluate(result->net, d), *Evaluate(result->net, shuffled));
}

TEST(EvaluateTest, MemorizesTinyTrainingSet) {
  Dataset tiny = Head(Toy(), 40);
  TrainConfig c = SmallConfig(Mechanism::kNoiseless);
  c.batch_size = 10;
  c.epochs = 150;
  c.architecture = {"dense:32", "relu", "dense:4"};
  auto result = Train(c, tiny, &tiny);
  ASSERT_TRUE(result.ok());
  EXPECT_EQ(*result->metrics.rows().back().test_accuracy, 1.0);
}

TEST(PretrainTest, BeatsChanceAndIsDeterministic) {
  TrainConfig c = SmallConfig(Mechanism::kAdlm);
  c.pretrain_epochs = 10;
  auto a = Pretrain(c, Toy());
  auto b = Pretrain(c, Toy());
  ASSERT_TRUE(a.ok());
  ASSERT_TRUE(b.ok());
  EXPECT_GT(*Evaluate(*a, ToyTest()), 0.6);
  EXPECT_EQ(Params(*a), Params(*b));
  EXPECT_EQ(TrainConfig().pretrain_epochs, 12u);
}

TEST(TrainTest, NoiselessLearns) {
  TrainConfig c = SmallConfig(Mechanism::kNoiseless);
  c.epochs = 10;
  auto r = Train(c, Toy(), &ToyTest());
  ASSERT_TRUE(r.ok());
  EXPECT_GT(*r->metrics.rows().back().test_accuracy, 0.8);
  EXPECT_LT(r->metrics.rows().back().loss, r->metrics.rows().front().loss);
}

TEST(TrainTest, ZeroNoiseAdlmEqualsUnperturbedTaylorRun) {
  TrainConfig adlm = SmallConfig(Mechanism::kAdlm);
  adlm.noise_multiplier = 0.0;
  TrainConfig plain = adlm;
  plain.mechanism = Mechanism::kNoiseless;
  plain.noiseless_loss = NoiselessLoss::kTaylor;
  plain.log_every_step = adlm.log_every_step = true;
  auto a = Train(adlm, Toy(), nullptr);
  auto b = Train(plain, Toy(), nullptr);
  ASSERT_TRUE(a.ok()) << a.status();
  ASSERT_TRUE(b.ok()) << b.status();
  ASSERT_EQ(a->metrics.rows().size(), b->metrics.rows().size());
  for (size_t i = 0; i < a->metrics.rows().size(); ++i) {
    EXPECT_EQ(a->metrics.rows()[i].loss, b->metrics.rows()[i].loss) << i;
  }
  EXPECT_EQ(Params(a->net), Params(b->net));
}

TEST(TrainTest, SpentBudgetIsConstantAndLoopNeverTouchesRawData) {
  for (Mechanism m : {Mechanism::kAdlm, Mechanism::kIlm}) {
    TrainConfig c = SmallConfig(m);
    c.log_every_step = true;
    auto r = Train(c, Toy(), &ToyTest());
    ASSERT_TRUE(r.ok()) << r.status();
    const double want = m == Mechanism::kAdlm ? 1.0 : 2.0 / 3.0;
    ASSERT_EQ(r->metrics.rows().size(), 3u * 8u);
    for (const MetricsRow& row : r->metrics.rows()) {
      EXPECT_NEAR(row.epsilon_spent, want, 1e-12);
      EXPECT_EQ(row.epsilon_spent, r->metrics.rows()[0].epsilon_spent);
    }
    EXPECT_EQ(r->raw_reads_during_loop, 0u);
    EXPECT_EQ(r->laplace_draws_during_loop, 0u);
    EXPECT_TRUE(r->perturbed_untouched);
  }
}

TEST(TrainTest, SameSeedSameRunOtherSeedOtherRun) {
  TrainConfig c = SmallConfig(Mechanism::kAdlm);
  auto a = Train(c, Toy(), &ToyTest());
  auto b = Train(c, Toy(), &ToyTest());
  ASSERT_TRUE(a.ok());
  ASSERT_TRUE(b.ok());
  EXPECT_EQ(a->metrics.DeterministicCsv(), b->metrics.DeterministicCsv());
  EXPECT_EQ(Params(a->net), Params(b->net));
  EXPECT_EQ(a->perturbed->features, b->perturbed->features);
  c.seed = 8;
  auto other = Train(c, Toy(), &ToyTest());
  ASSERT_TRUE(other.ok());
  EXPECT_NE(a->perturbed->features, other->perturbed->features);
}

TEST(TrainTest, UniformReleasedRelevanceReducesToIlm) {
  TrainConfig adlm = SmallConfig(Mechanism::kAdlm);
  TrainConfig ilm = adlm;
  ilm.mechanism = Mechanism::kIlm;
  TrainOptions opts;
  opts.private_relevance_override = std::vector<double>(12, 0.25);
  auto a = Train(adlm, Toy(), nullptr, opts);
  auto b = Train(ilm, Toy(), nullptr);
  ASSERT_TRUE(a.ok());
  ASSERT_TRUE(b.ok());
  EXPECT_EQ(a->perturbed->features, b->perturbed->features);
  EXPECT_EQ(a->perturbed->bias_noise, b->perturbed->bias_noise);
  EXPECT_EQ(a->perturbed->coefficients, b->perturbed->coefficients);
  EXPECT_EQ(Params(a->net), Params(b->net));
}

TEST(TrainTest, DivergenceAborts) {
  TrainConfig c = SmallConfig(Mechanism::kNoiseless);
  auto net = BuildNetwork(c.architecture, {12}, 4);
  ASSERT_TRUE(net.ok());
  net->InitializeWeights(c.seed);
  auto data = Preprocess(c, Toy(), *net);
  ASSERT_TRUE(data.ok());
  data->features.data()[17] = std::nan("");
  auto r = RunTrainingLoop(
      c, std::make_shared<const PerturbedDataset>(*std::move(data)),
      *std::move(net), nullptr);
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.status().code(), absl::StatusCode::kAborted);
  EXPECT_THAT(r.status().message(), HasSubstr("diverged"));
}

TEST(TrainTest, ConvolutionalArchitectureTrains) {
  Dataset d = SyntheticDataset(200, 36, 4, 9);
  d.set_example_shape({1, 6, 6});
  TrainConfig c = SmallConfig(Mechanism::kAdlm);
  c.architecture = {"conv:1:4:3:1:1", "relu", "lrnconv", "flatten",
                    "dense:4:nobias"};
  c.pretrain_epochs = 2;
  c.epochs = 2;
  auto r = Train(c, d, &d);
  ASSERT_TRUE(r.ok()) << r.status();
  EXPECT_EQ(r->metrics.rows().size(), 2u);
}

TEST(MetricsTest, CsvLayout) {
  MetricsLog log;
  log.Add({8, 1, 0.5, 0.25, 1.0, 12.5});
  log.Add({16, 2, 0.4, std::nullopt, 1.0, 20.0});
  EXPECT_EQ(log.ToCsv(),
            "step,epoch,loss,test_accuracy,epsilon_spent,wall_ms\n"
            "8,1,0.5,0.25,1,12.5\n16,2,0.40000000000000002,,1,20\n");
  EXPECT_EQ(log.DeterministicCsv(),
            "step,epoch,loss,test_accuracy,epsilon_spent\n"
            "8,1,0.5,0.25,1\n16,2,0.40000000000000002,,1\n");
}

}  // namespace
}  // namespace adlm
