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

// Verification harness for the three perturbation stages: exhaustive
// sensitivity enumeration, closed-form Laplace density-ratio checks, and a
// histogram-based Monte Carlo ratio estimate for end-to-end sanity.
//
// Enumeration over small discretized domains is evidence for a sensitivity
// bound, not a proof of it.

#ifndef ADLM_AUDIT_H_
#define ADLM_AUDIT_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "adlm/mechanism.h"

namespace adlm {

using Row = std::vector<double>;
// A statistic of a dataset (or batch). It must not depend on row order.
using Statistic = std::function<std::vector<double>(const std::vector<Row>&)>;

inline constexpr size_t kMaxNeighborPairs = 1000000;

struct SensitivityResult {
  double max_change = 0.0;  // max L1 distance over neighbor pairs
  size_t pairs = 0;
  // One maximizing neighbor pair.
  std::vector<Row> dataset;
  std::vector<Row> neighbor;
};

// Number of neighbor pairs BruteforceSensitivity would visit: multisets of
// n - 1 shared rows times unordered pairs of distinct last rows.
double NeighborPairCount(size_t domain_size, size_t n);

// Exact max L1 change of `statistic` over all datasets of `n` rows drawn
// from `domain` and their neighbors (one row replaced). Refuses when the
// enumeration exceeds `max_pairs`.
absl::StatusOr<SensitivityResult> BruteforceSensitivity(
    const Statistic& statistic, const std::vector<Row>& domain, size_t n,
    size_t max_pairs = kMaxNeighborPairs);

// Cartesian power {levels}^d.
std::vector<Row> GridDomain(const std::vector<double>& levels, size_t d);

enum class Verdict { kPass, kFail, kInconclusive };
// What a check is supposed to show. Mutation checks expect kFail.
enum class Expectation { kPass, kFail };

std::string VerdictName(Verdict v);

struct RatioReport {
  std::string name;
  std::string mechanism;
  std::string method;  // "analytic" or "monte-carlo"
  double epsilon = 0.0;
  // analytic: max over the grid of |log p_D(o) - log p_D'(o)|.
  // monte-carlo: max over bins of the point estimate.
  double max_log_ratio = 0.0;
  // monte-carlo: max over bins of the lower confidence bound on the log
  // ratio; the verdict compares it with epsilon. slack = max_log_ratio -
  // lower_bound, so PASS iff max_log_ratio <= epsilon + slack.
  double lower_bound = 0.0;
  double slack = 0.0;
  // analytic: the closed form sum_k |f_k - f'_k| / b_k.
  double closed_form = 0.0;
  size_t grid_points = 0;
  size_t coordinates = 0;
  size_t bins = 0;
  size_t trials = 0;
  size_t inconclusive_bins = 0;
  double lo = 0.0;
  double hi = 0.0;
  Verdict verdict = Verdict::kInconclusive;
  Expectation expected = Expectation::kPass;
  std::string note;

  bool AsExpected() const;
  std::string ToJson() const;
};

inline constexpr size_t kDefaultGridPoints = 10000;
// Relative allowance for floating-point rounding at equality.
inline constexpr double kAnalyticRoundoff = 1e-9;

// Mechanism o = f + Lap(b) coordinate-wise. The log density ratio separates
// over coordinates, so each coordinate is scanned on its own grid over
// [min(f, f') - 3b, max(f, f') + 3b] and the maxima are summed.
RatioReport AnalyticRatioCheck(std::span<const double> f,
                               std::span<const double> f_neighbor,
                               std::span<const double> scale, double epsilon,
                               size_t grid_points = kDefaultGridPoints);

struct MonteCarloOptions {
  size_t trials = 200000;
  size_t bins = 40;
  // Family-wise error rate across all bins and both directions.
  double alpha = 1e-3;
  // Bins where either count is below this are flagged inconclusive.
  size_t min_count = 10;
  uint64_t seed = 1;
};

// A scalar mechanism output for one input given a trial seed.
using ScalarMechanism = std::function<double(uint64_t trial_seed)>;

// Histograms `trials` outputs of each side over a common range and bounds
// the per-bin log ratio with Wilson score intervals (Bonferroni-corrected).
// Fails when some bin's lower confidence bound exceeds epsilon;
// inconclusive when no bin is populated on both sides.
RatioReport MonteCarloRatio(const ScalarMechanism& on_dataset,
                            const ScalarMechanism& on_neighbor, double epsilon,
                            const MonteCarloOptions& options = {});

// Two-sided Wilson score interval for k successes in n trials.
std::pair<double, double> WilsonInterval(size_t k, size_t n, double z);
// Upper standard normal quantile: P(Z > z) = p.
double NormalUpperQuantile(double p);

struct AuditConfig {
  double epsilon = 1.0;
  std::array<double, 3> epsilon_split = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  // Shape of the released model the per-example checks are sized for.
  size_t d = 784;
  size_t h0_width = 64;
  size_t top_hidden = 25;
  size_t num_classes = 10;
  size_t batch_size = 300;
  size_t trials = 200000;
  uint64_t seed = 1;
};

struct SensitivityCheck {
  std::string name;
  std::string domain;
  double bound = 0.0;
  double observed = 0.0;
  size_t pairs = 0;
  // Whether this instance is expected to attain the bound.
  bool extremal = false;
  bool Passed() const;
  std::string ToJson() const;
};

struct AuditSuite {
  std::vector<SensitivityCheck> sensitivity;
  std::vector<RatioReport> ratios;
  bool AllAsExpected() const;
  std::string ToJson() const;
};

// Sensitivity enumeration for the three lemmas (extremal and literal
// domains), analytic ratio checks for each stage and their halved-noise
// mutations, per-example release checks at the configured model shape, and
// Monte Carlo checks of the actual perturbation functions.
absl::StatusOr<AuditSuite> RunAuditSuite(const AuditConfig& config);

}  // namespace adlm

#endif  // ADLM_AUDIT_H_
