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

#include "adlm/audit.h"

#include <cmath>

#include "adlm/mechanism.h"
#include "adlm/random.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "json.hpp"

namespace adlm {
namespace {

std::vector<double> Mean(const std::vector<Row>& rows) {
  std::vector<double> out(rows[0].size(), 0.0);
  for (const Row& r : rows) {
    for (size_t j = 0; j < r.size(); ++j) out[j] += r[j] / rows.size();
  }
  return out;
}

TEST(BruteforceTest, ConstantStatisticHasZeroSensitivity) {
  auto r = BruteforceSensitivity(
      [](const std::vector<Row>&) { return std::vector<double>{3.0, 4.0}; },
      GridDomain({0, 1}, 2), 3);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->max_change, 0.0);
}

TEST(BruteforceTest, MeanOfTwoFeaturesOverThreeRows) {
  const double v = 1.0 / std::sqrt(2.0);
  auto r = BruteforceSensitivity(Mean, GridDomain({0, v}, 2), 3);
  ASSERT_TRUE(r.ok());
  // Hand value: one row moves from (0, 0) to (v, v).
  EXPECT_NEAR(r->max_change, 2.0 * v / 3.0, 1e-15);
  // Multisets of 2 rows from 4 (10) times 6 unordered pairs.
  EXPECT_EQ(r->pairs, 60u);
  EXPECT_EQ(NeighborPairCount(4, 3), 60.0);
}

TEST(BruteforceTest, RelevanceBoundIsAttained) {
  for (size_t d : {1, 2, 3}) {
    for (size_t n : {1, 2, 5}) {
      auto r = BruteforceSensitivity(Mean, GridDomain({-1, 1}, d), n);
      ASSERT_TRUE(r.ok());
      EXPECT_NEAR(r->max_change, RelevanceSensitivity(d, n), 1e-15);
      // The witness pair differs in exactly one row.
      size_t differing = 0;
      for (size_t i = 0; i < n; ++i) {
        differing += r->dataset[i] != r->neighbor[i];
      }
      EXPECT_EQ(differing, 1u);
    }
  }
}

TEST(BruteforceTest, MatchesOrderedEnumerationOnRandomStatistic) {
  // An order-invariant but nonlinear statistic: max and sum of squares.
  auto stat = [](const std::vector<Row>& rows) {
    double mx = -1e9, sq = 0;
    for (const Row& r : rows) {
      mx = std::max(mx, r[0] - r[1]);
      sq += r[0] * r[0] * r[1];
    }
    return std::vector<double>{mx, sq};
  };
  const std::vector<Row> domain = GridDomain({-1, 0.5, 2}, 2);
  auto r = BruteforceSensitivity(stat, domain, 3);
  ASSERT_TRUE(r.ok());
  // Oracle: every ordered dataset and every replacement of every position.
  double best = 0;
  const size_t m = domain.size();
  for (size_t a = 0; a < m; ++a)
    for (size_t b = 0; b < m; ++b)
      for (size_t c = 0; c < m; ++c)
        for (size_t pos = 0; pos < 3; ++pos)
          for (size_t e = 0; e < m; ++e) {
            std::vector<Row> x = {domain[a], domain[b], domain[c]};
            std::vector<Row> y = x;
            y[pos] = domain[e];
            auto sx = stat(x), sy = stat(y);
            best = std::max(best,
                            std::abs(sx[0] - sy[0]) + std::abs(sx[1] - sy[1]));
          }
  EXPECT_DOUBLE_EQ(r->max_change, best);
}

TEST(BruteforceTest, RefusesOversizedEnumeration) {
  auto r = BruteforceSensitivity(Mean, GridDomain({-1, 0, 1}, 4), 6);
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.status().code(), absl::StatusCode::kResourceExhausted);
  EXPECT_FALSE(BruteforceSensitivity(Mean, {}, 2).ok());
}

TEST(AnalyticRatioTest, IdenticalOutputsGiveZero) {
  std::vector<double> f = {0.3, -1.0}, b = {0.1, 2.0};
  RatioReport r = AnalyticRatioCheck(f, f, b, 1e-6);
  EXPECT_EQ(r.max_log_ratio, 0.0);
  EXPECT_EQ(r.verdict, Verdict::kPass);
}

TEST(AnalyticRatioTest, CalibratedNoisePassesAtEquality) {
  for (double eps : {0.1, 1.0, 3.0}) {
    const double delta = 1.7;
    std::vector<double> f = {0.2}, g = {0.2 + delta}, b = {delta / eps};
    RatioReport r = AnalyticRatioCheck(f, g, b, eps);
    EXPECT_NEAR(r.max_log_ratio, eps, 1e-12 * eps);
    EXPECT_NEAR(r.closed_form, eps, 1e-12 * eps);
    EXPECT_EQ(r.verdict, Verdict::kPass);
  }
}

TEST(AnalyticRatioTest, UnderScaledNoiseFails) {
  const double eps = 0.5, delta = 2.0;
  std::vector<double> f = {0.0}, g = {delta}, b = {delta / (2 * eps)};
  RatioReport r = AnalyticRatioCheck(f, g, b, eps);
  EXPECT_NEAR(r.max_log_ratio, 2 * eps, 1e-12);
  EXPECT_EQ(r.verdict, Verdict::kFail);
}

TEST(AnalyticRatioTest, SumsOverCoordinates) {
  std::vector<double> f = {0, 0, 0}, g = {1, -2, 0.5}, b = {1, 4, 0.25};
  RatioReport r = AnalyticRatioCheck(f, g, b, 10);
  EXPECT_NEAR(r.max_log_ratio, 1 + 0.5 + 2, 1e-12);
  std::vector<double> zero = {0, 0, 0};
  EXPECT_EQ(AnalyticRatioCheck(f, g, zero, 10).verdict, Verdict::kFail);
}

TEST(StatsTest, WilsonAndNormalQuantile) {
  EXPECT_NEAR(NormalUpperQuantile(0.025), 1.959963984540054, 1e-9);
  EXPECT_NEAR(NormalUpperQuantile(0.5), 0.0, 1e-12);
  const double z = 1.96;
  auto [lo, hi] = WilsonInterval(0, 10, z);
  EXPECT_EQ(lo, 0.0);
  EXPECT_NEAR(hi, z * z / (10 + z * z), 1e-12);
  // Hand evaluation of the score interval at k = 5, n = 10.
  auto [l2, h2] = WilsonInterval(5, 10, z);
  const double half = z / (1 + z * z / 10) * std::sqrt(0.025 + z * z / 400);
  EXPECT_NEAR(l2, 0.5 - half, 1e-12);
  EXPECT_NEAR(h2, 0.5 + half, 1e-12);
}

ScalarMechanism Laplace(double value, double scale) {
  return [=](uint64_t seed) {
    CounterRng rng(seed, Substream::kRelevanceNoise);
    return value + LaplaceAt(rng, 0, scale);
  };
}

TEST(MonteCarloTest, IdenticalInputsGiveRatioNearZero) {
  MonteCarloOptions o;
  o.trials = 100000;
  RatioReport r = MonteCarloRatio(Laplace(0, 1), Laplace(0, 1), 0.2, o);
  EXPECT_EQ(r.verdict, Verdict::kPass);
  EXPECT_LT(r.lower_bound, 0.05);
  EXPECT_NEAR(r.max_log_ratio - r.slack, r.lower_bound, 1e-12);
}

TEST(MonteCarloTest, ScalarLaplaceAtEpsilonOne) {
  MonteCarloOptions o;
  o.trials = 200000;
  RatioReport r = MonteCarloRatio(Laplace(0, 1), Laplace(1, 1), 1.0, o);
  EXPECT_EQ(r.verdict, Verdict::kPass);
  EXPECT_LE(r.lower_bound, 1.0);
  EXPECT_LE(r.max_log_ratio, 1.0 + r.slack + 1e-12);
  // The outer bins see the full ratio of 1.
  EXPECT_GT(r.max_log_ratio, 0.8);
  RatioReport broken =
      MonteCarloRatio(Laplace(0, 0.5), Laplace(1, 0.5), 1.0, o);
  EXPECT_EQ(broken.verdict, Verdict::kFail);
}

TEST(MonteCarloTest, NoiselessMechanismFails) {
  MonteCarloOptions o;
  o.trials = 1000;
  RatioReport r = MonteCarloRatio([](uint64_t) { return 0.0; },
                                  [](uint64_t) { return 1.0; }, 1.0, o);
  EXPECT_EQ(r.verdict, Verdict::kFail);
  EXPECT_TRUE(std::isinf(r.max_log_ratio));
}

TEST(MonteCarloTest, UndersampledIsInconclusiveNotFail) {
  MonteCarloOptions o;
  o.trials = 3;
  o.bins = 50;
  RatioReport r = MonteCarloRatio(Laplace(0, 1), Laplace(0.1, 1), 1.0, o);
  EXPECT_EQ(r.verdict, Verdict::kInconclusive);
  EXPECT_GT(r.inconclusive_bins, 0u);
}

TEST(AuditSuiteTest, DefaultSuiteBehavesAsExpected) {
  AuditConfig c;
  c.trials = 100000;
  auto suite = RunAuditSuite(c);
  ASSERT_TRUE(suite.ok()) << suite.status();
  for (const SensitivityCheck& s : suite->sensitivity) {
    EXPECT_TRUE(s.Passed()) << s.ToJson();
  }
  size_t mutations = 0;
  for (const RatioReport& r : suite->ratios) {
    EXPECT_TRUE(r.AsExpected()) << r.ToJson();
    mutations += r.expected == Expectation::kFail;
  }
  EXPECT_EQ(mutations, 7u);
  EXPECT_TRUE(suite->AllAsExpected());
  auto json = nlohmann::json::parse(suite->ToJson());
  EXPECT_TRUE(json["all_as_expected"].get<bool>());
}

TEST(AuditSuiteTest, RealizableLossCoefficientsStayBelowTheBound) {
  auto suite = RunAuditSuite(AuditConfig{.trials = 1000});
  ASSERT_TRUE(suite.ok());
  bool saw = false;
  for (const SensitivityCheck& s : suite->sensitivity) {
    if (s.name == "loss" && !s.extremal) {
      EXPECT_LT(s.observed, s.bound);
      saw = true;
    }
  }
  EXPECT_TRUE(saw);
}

TEST(AuditSuiteTest, RefusesBadBudget) {
  AuditConfig c;
  c.epsilon = 0;
  EXPECT_FALSE(RunAuditSuite(c).ok());
}

}  // namespace
}  // namespace adlm
