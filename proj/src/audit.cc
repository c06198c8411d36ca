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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "adlm/approx_loss.h"
#include "adlm/random.h"
#include "json.hpp"

namespace adlm {
namespace {

using Json = nlohmann::json;

Json Number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

double L1Distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

double Choose(double n, double k) {
  double r = 1.0;
  for (double i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Advances a non-decreasing index sequence; false after the last one.
bool NextMultiset(std::vector<size_t>& idx, size_t domain_size) {
  for (size_t p = idx.size(); p-- > 0;) {
    if (idx[p] + 1 < domain_size) {
      ++idx[p];
      for (size_t q = p + 1; q < idx.size(); ++q) idx[q] = idx[p];
      return true;
    }
  }
  return false;
}

}  // namespace

double NeighborPairCount(size_t domain_size, size_t n) {
  if (domain_size < 2 || n == 0) return 0.0;
  const double m = static_cast<double>(domain_size);
  return Choose(m + static_cast<double>(n) - 2.0, static_cast<double>(n - 1)) *
         Choose(m, 2.0);
}

absl::StatusOr<SensitivityResult> BruteforceSensitivity(
    const Statistic& statistic, const std::vector<Row>& domain, size_t n,
    size_t max_pairs) {
  if (n == 0) return absl::InvalidArgumentError("dataset size must be >= 1");
  if (domain.empty()) return absl::InvalidArgumentError("empty domain");
  const double pairs = NeighborPairCount(domain.size(), n);
  if (pairs > static_cast<double>(max_pairs)) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "enumeration needs ", pairs, " neighbor pairs; limit is ", max_pairs));
  }
  SensitivityResult result;
  std::vector<size_t> base(n - 1, 0);
  std::vector<Row> rows(n);
  std::vector<std::vector<double>> stats(domain.size());
  do {
    for (size_t i = 0; i + 1 < n; ++i) rows[i] = domain[base[i]];
    for (size_t a = 0; a < domain.size(); ++a) {
      rows[n - 1] = domain[a];
      stats[a] = statistic(rows);
    }
    for (size_t a = 0; a < domain.size(); ++a) {
      for (size_t b = a + 1; b < domain.size(); ++b) {
        ++result.pairs;
        if (stats[a].size() != stats[b].size()) {
          return absl::InvalidArgumentError(
              "statistic output size depends on the data");
        }
        const double change = L1Distance(stats[a], stats[b]);
        if (change > result.max_change || result.dataset.empty()) {
          result.max_change = change;
          rows[n - 1] = domain[a];
          result.dataset = rows;
          rows[n - 1] = domain[b];
          result.neighbor = rows;
        }
      }
    }
  } while (NextMultiset(base, domain.size()));
  return result;
}

std::vector<Row> GridDomain(const std::vector<double>& levels, size_t d) {
  std::vector<Row> out;
  std::vector<size_t> idx(d, 0);
  while (true) {
    Row r(d);
    for (size_t j = 0; j < d; ++j) r[j] = levels[idx[j]];
    out.push_back(std::move(r));
    size_t p = d;
    while (p > 0 && ++idx[p - 1] == levels.size()) idx[--p] = 0;
    if (p == 0) break;
  }
  return out;
}

std::string VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kPass:
      return "PASS";
    case Verdict::kFail:
      return "FAIL";
    case Verdict::kInconclusive:
      return "INCONCLUSIVE";
  }
  return "UNKNOWN";
}

bool RatioReport::AsExpected() const {
  return expected == Expectation::kPass ? verdict == Verdict::kPass
                                        : verdict == Verdict::kFail;
}

std::string RatioReport::ToJson() const {
  Json j;
  j["name"] = name;
  j["mechanism"] = mechanism;
  j["method"] = method;
  j["epsilon"] = Number(epsilon);
  j["max_log_ratio"] = Number(max_log_ratio);
  j["verdict"] = VerdictName(verdict);
  j["expected"] = expected == Expectation::kPass ? "PASS" : "FAIL";
  j["as_expected"] = AsExpected();
  if (method == "analytic") {
    j["closed_form"] = Number(closed_form);
    j["grid_points"] = grid_points;
    j["coordinates"] = coordinates;
  } else {
    j["lower_bound"] = Number(lower_bound);
    j["slack"] = Number(slack);
    j["bins"] = bins;
    j["trials"] = trials;
    j["inconclusive_bins"] = inconclusive_bins;
  }
  j["range"] = {Number(lo), Number(hi)};
  if (!note.empty()) j["note"] = note;
  return j.dump();
}

RatioReport AnalyticRatioCheck(std::span<const double> f,
                               std::span<const double> f_neighbor,
                               std::span<const double> scale, double epsilon,
                               size_t grid_points) {
  RatioReport r;
  r.method = "analytic";
  r.epsilon = epsilon;
  r.grid_points = std::max<size_t>(grid_points, 2);
  r.coordinates = f.size();
  r.lo = std::numeric_limits<double>::infinity();
  r.hi = -r.lo;
  for (size_t k = 0; k < f.size(); ++k) {
    const double a = f[k];
    const double c = f_neighbor[k];
    const double b = scale[k];
    if (!(b > 0) || !std::isfinite(b)) {
      const double gap = a == c ? 0.0 : std::numeric_limits<double>::infinity();
      r.max_log_ratio += gap;
      r.closed_form += gap;
      continue;
    }
    r.closed_form += std::abs(a - c) / b;
    const double lo = std::min(a, c) - 3.0 * b;
    const double hi = std::max(a, c) + 3.0 * b;
    r.lo = std::min(r.lo, lo);
    r.hi = std::max(r.hi, hi);
    double best = 0.0;
    const double step = (hi - lo) / static_cast<double>(r.grid_points - 1);
    for (size_t g = 0; g < r.grid_points; ++g) {
      const double o = lo + step * static_cast<double>(g);
      best = std::max(best, std::abs(std::abs(o - c) - std::abs(o - a)) / b);
    }
    r.max_log_ratio += best;
  }
  r.verdict = r.max_log_ratio <= epsilon * (1.0 + kAnalyticRoundoff)
                  ? Verdict::kPass
                  : Verdict::kFail;
  return r;
}

double NormalUpperQuantile(double p) {
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::sqrt(2.0)) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::pair<double, double> WilsonInterval(size_t k, size_t n, double z) {
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half =
      z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

RatioReport MonteCarloRatio(const ScalarMechanism& on_dataset,
                            const ScalarMechanism& on_neighbor, double epsilon,
                            const MonteCarloOptions& options) {
  RatioReport r;
  r.method = "monte-carlo";
  r.epsilon = epsilon;
  r.trials = options.trials;
  r.bins = std::max<size_t>(options.bins, 1);
  std::vector<double> a(options.trials), b(options.trials);
  for (size_t t = 0; t < options.trials; ++t) {
    a[t] = on_dataset(Mix64(options.seed ^ Mix64(2 * t)));
    b[t] = on_neighbor(Mix64(options.seed ^ Mix64(2 * t + 1)));
  }
  // Common range: pooled 0.5% and 99.5% quantiles; outputs outside it are
  // not binned.
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  const size_t m = pooled.size();
  double lo = pooled[m / 200];
  double hi = pooled[m - 1 - m / 200];
  if (!(hi > lo)) {
    lo = pooled.front();
    hi = pooled.back();
  }
  if (!(hi > lo)) {
    lo -= 1e-9;
    hi += 1e-9;
  }
  r.lo = lo;
  r.hi = hi;
  std::vector<size_t> ca(r.bins, 0), cb(r.bins, 0);
  auto bin_of = [&](double v) -> std::optional<size_t> {
    if (v < lo || v > hi) return std::nullopt;
    size_t k =
        static_cast<size_t>((v - lo) / (hi - lo) * static_cast<double>(r.bins));
    return std::min(k, r.bins - 1);
  };
  for (double v : a) {
    if (auto k = bin_of(v)) ++ca[*k];
  }
  for (double v : b) {
    if (auto k = bin_of(v)) ++cb[*k];
  }
  const double z =
      NormalUpperQuantile(options.alpha / (4.0 * static_cast<double>(r.bins)));
  const size_t n = options.trials;
  double worst_lower = 0.0;
  bool conclusive = false;
  r.max_log_ratio = 0.0;
  for (size_t k = 0; k < r.bins; ++k) {
    if (ca[k] == 0 && cb[k] == 0) {
      ++r.inconclusive_bins;
      continue;
    }
    if (std::min(ca[k], cb[k]) < options.min_count) {
      ++r.inconclusive_bins;
    } else {
      conclusive = true;
    }
    const auto [la, ua] = WilsonInterval(ca[k], n, z);
    const auto [lb, ub] = WilsonInterval(cb[k], n, z);
    const double lower = std::max({0.0, std::log(la / ub), std::log(lb / ua)});
    const double point = (ca[k] == 0 || cb[k] == 0)
                             ? std::numeric_limits<double>::infinity()
                             : std::abs(std::log(static_cast<double>(ca[k]) /
                                                 static_cast<double>(cb[k])));
    if (std::isfinite(point) && std::isfinite(r.max_log_ratio)) {
      r.max_log_ratio = std::max(r.max_log_ratio, point);
    }
    worst_lower = std::max(worst_lower, lower);
    if (!std::isfinite(point) && lower > epsilon) {
      r.max_log_ratio = point;
    }
  }
  r.lower_bound = worst_lower;
  r.slack =
      std::isfinite(r.max_log_ratio) ? r.max_log_ratio - worst_lower : 0.0;
  if (worst_lower > epsilon) {
    r.verdict = Verdict::kFail;
  } else {
    r.verdict = conclusive ? Verdict::kPass : Verdict::kInconclusive;
  }
  return r;
}

bool SensitivityCheck::Passed() const {
  const double tol = 1e-12 * std::max(1.0, bound);
  if (observed > bound + tol) return false;
  return !extremal || std::abs(observed - bound) <= tol;
}

std::string SensitivityCheck::ToJson() const {
  Json j;
  j["name"] = name;
  j["domain"] = domain;
  j["bound"] = bound;
  j["observed"] = observed;
  j["pairs"] = pairs;
  j["extremal"] = extremal;
  j["verdict"] = Passed() ? "PASS" : "FAIL";
  return j.dump();
}

bool AuditSuite::AllAsExpected() const {
  for (const SensitivityCheck& s : sensitivity) {
    if (!s.Passed()) return false;
  }
  for (const RatioReport& r : ratios) {
    if (!r.AsExpected()) return false;
  }
  return true;
}

std::string AuditSuite::ToJson() const {
  Json j;
  j["sensitivity"] = Json::array();
  for (const SensitivityCheck& s : sensitivity) {
    j["sensitivity"].push_back(Json::parse(s.ToJson()));
  }
  j["ratios"] = Json::array();
  for (const RatioReport& r : ratios) {
    j["ratios"].push_back(Json::parse(r.ToJson()));
  }
  j["all_as_expected"] = AllAsExpected();
  j["note"] =
      "Sensitivity maxima come from exhaustive enumeration over small "
      "discretized domains; they are evidence, not proofs.";
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Default suite.

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// Mean of the rows: the average relevance statistic.
std::vector<double> MeanRows(const std::vector<Row>& rows) {
  std::vector<double> out(rows.front().size(), 0.0);
  for (const Row& r : rows) {
    for (size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  for (double& v : out) v /= static_cast<double>(rows.size());
  return out;
}

// Per h0 neuron: the batch sums of every feature and of the constant bias
// input, which the h0 perturbation protects.
Statistic H0Statistic(size_t h0_width) {
  return [h0_width](const std::vector<Row>& rows) {
    const size_t d = rows.front().size();
    std::vector<double> sums(d + 1, 0.0);
    for (const Row& r : rows) {
      sums[0] += 1.0;
      for (size_t j = 0; j < d; ++j) sums[j + 1] += r[j];
    }
    std::vector<double> out;
    for (size_t h = 0; h < h0_width; ++h) {
      out.insert(out.end(), sums.begin(), sums.end());
    }
    return out;
  };
}

// Rows already hold per-class coefficients (phi0, phi1, phi2) x M; the
// statistic is their batch sum.
std::vector<double> SumRows(const std::vector<Row>& rows) {
  std::vector<double> out(rows.front().size(), 0.0);
  for (const Row& r : rows) {
    for (size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  return out;
}

// Coefficient rows with every magnitude at its bound, signs free:
// |phi1| = K / 2 and |phi2| = K^2 / 8 for each class.
std::vector<Row> ExtremalCoefficientDomain(size_t m, size_t k) {
  const double kk = static_cast<double>(k);
  std::vector<Row> out;
  for (size_t mask = 0; mask < (size_t{1} << (2 * m)); ++mask) {
    Row r;
    for (size_t l = 0; l < m; ++l) {
      r.push_back(kLn2);
      r.push_back(((mask >> (2 * l)) & 1) ? kk / 2 : -kk / 2);
      r.push_back(((mask >> (2 * l + 1)) & 1) ? kk * kk / 8 : -kk * kk / 8);
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Realizable coefficient rows: top hidden states h in levels^K and one-hot
// labels; phi1 = (1/2 - y) sum_e h_e, phi2 = (1/8) (sum_e h_e)^2.
std::vector<Row> RealizableCoefficientDomain(
    size_t m, size_t k, const std::vector<double>& levels) {
  std::vector<Row> out;
  for (const Row& h : GridDomain(levels, k)) {
    const double s = std::accumulate(h.begin(), h.end(), 0.0);
    for (size_t cls = 0; cls < m; ++cls) {
      Row r;
      for (size_t l = 0; l < m; ++l) {
        const double y = l == cls ? 1.0 : 0.0;
        r.push_back(kLn2);
        r.push_back((0.5 - y) * s);
        r.push_back(s * s / 8.0);
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

// One-hot label rows; the statistic is the batch sum of the coefficients the
// trainer actually perturbs (c0, c1, c2 per class).
std::vector<Row> OneHotDomain(size_t m) {
  std::vector<Row> out;
  for (size_t cls = 0; cls < m; ++cls) {
    Row r(m, 0.0);
    r[cls] = 1.0;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<double> LabelCoefficientSum(const std::vector<Row>& rows) {
  const size_t m = rows.front().size();
  Tensor labels({rows.size(), m});
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t l = 0; l < m; ++l) labels[i * m + l] = rows[i][l];
  }
  const LossCoefficients c = TaylorCoefficients(labels);
  std::vector<double> out(3 * m, 0.0);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t l = 0; l < m; ++l) {
      out[3 * l] += c.c0[i * m + l];
      out[3 * l + 1] += c.c1[i * m + l];
      out[3 * l + 2] += c.c2[i * m + l];
    }
  }
  return out;
}

absl::StatusOr<SensitivityResult> Enumerate(
    std::vector<SensitivityCheck>& out, std::string name,
    std::string domain_name, const Statistic& stat,
    const std::vector<Row>& domain, size_t n, double bound, bool extremal) {
  auto r = BruteforceSensitivity(stat, domain, n);
  if (!r.ok()) return r.status();
  out.push_back({std::move(name), std::move(domain_name), bound, r->max_change,
                 r->pairs, extremal});
  return r;
}

RatioReport Named(RatioReport r, std::string name, std::string mechanism,
                  Expectation expected, std::string note = "") {
  r.name = std::move(name);
  r.mechanism = std::move(mechanism);
  r.expected = expected;
  r.note = std::move(note);
  return r;
}

}  // namespace

absl::StatusOr<AuditSuite> RunAuditSuite(const AuditConfig& config) {
  auto budget = PrivacyBudget::Split(config.epsilon, config.epsilon_split);
  if (!budget.ok()) return budget.status();
  if (absl::Status s = budget->Validate(Mechanism::kAdlm); !s.ok()) return s;
  const double e1 = budget->epsilon1, e2 = budget->epsilon2,
               e3 = budget->epsilon3;
  const NoiseOptions exact{1.0};
  const NoiseOptions halved{0.5};
  AuditSuite suite;
  auto& sens = suite.sensitivity;

  // Relevance: normalized per-example relevance lies in [-1, 1].
  constexpr size_t kRd = 3, kRn = 4;
  auto rel = Enumerate(sens, "relevance", "R in {-1,1}^3, |D| = 4", MeanRows,
                       GridDomain({-1.0, 1.0}, kRd), kRn,
                       RelevanceSensitivity(kRd, kRn), true);
  if (!rel.ok()) return rel.status();
  if (auto s = Enumerate(sens, "relevance", "R in {-1,-1/2,0,1/2,1}^2, |D| = 3",
                         MeanRows, GridDomain({-1, -0.5, 0, 0.5, 1}, 2), 3,
                         RelevanceSensitivity(2, 3), true);
      !s.ok()) {
    return s.status();
  }

  // h0: the bound's last step uses |x| <= 1, attained with x' = -x.
  constexpr size_t kHd = 3, kHw = 2, kHn = 3;
  const double delta_h0 = H0Sensitivity(kHw, kHd);
  auto h0 = Enumerate(sens, "h0", "x in {-1,1}^3, |h0| = 2, |L| = 3",
                      H0Statistic(kHw), GridDomain({-1.0, 1.0}, kHd), kHn,
                      delta_h0, true);
  if (!h0.ok()) return h0.status();
  if (auto s = Enumerate(sens, "h0", "x in {0,1/2,1}^3, |h0| = 2, |L| = 3",
                         H0Statistic(kHw), GridDomain({0, 0.5, 1}, kHd), kHn,
                         delta_h0, false);
      !s.ok()) {
    return s.status();
  }
  const double top = 1.0 / std::sqrt(static_cast<double>(kHd));
  if (auto s = Enumerate(sens, "h0",
                         "scaled x in {0,1/(2 sqrt 3),1/sqrt 3}^3, |h0| = 2",
                         H0Statistic(kHw), GridDomain({0, top / 2, top}, kHd),
                         kHn, delta_h0, false);
      !s.ok()) {
    return s.status();
  }

  // Loss coefficients.
  constexpr size_t kM = 2, kK = 2, kLn = 2;
  const double delta_f = LossSensitivity(kM, kK);
  auto loss = Enumerate(
      sens, "loss", "|phi1| = K/2, |phi2| = K^2/8, free signs; M = K = 2",
      SumRows, ExtremalCoefficientDomain(kM, kK), kLn, delta_f, true);
  if (!loss.ok()) return loss.status();
  if (auto s = Enumerate(
          sens, "loss", "h in {0,1/2,1}^2, one-hot y; M = K = 2, |L| = 2",
          SumRows, RealizableCoefficientDomain(kM, kK, {0, 0.5, 1}), kLn,
          delta_f, false);
      !s.ok()) {
    return s.status();
  }
  if (auto s = Enumerate(
          sens, "loss", "label coefficients (c0, c1, c2), one-hot y; M = 2",
          LabelCoefficientSum, OneHotDomain(kM), kLn, delta_f, false);
      !s.ok()) {
    return s.status();
  }

  // Analytic ratio checks on the maximizing pairs found above.
  auto& ratios = suite.ratios;
  {
    const std::vector<double> f = MeanRows(rel->dataset);
    const std::vector<double> g = MeanRows(rel->neighbor);
    for (const auto& [noise, expected, label] :
         {std::tuple{exact, Expectation::kPass, ""},
          std::tuple{halved, Expectation::kFail, " (noise halved)"}}) {
      std::vector<double> b(kRd, RelevanceNoiseScale(kRd, kRn, e1, noise));
      ratios.push_back(Named(AnalyticRatioCheck(f, g, b, e1),
                             absl::StrCat("relevance release", label),
                             "relevance", expected));
    }
  }
  {
    const Statistic stat = H0Statistic(kHw);
    const std::vector<double> f = stat(h0->dataset);
    const std::vector<double> g = stat(h0->neighbor);
    const std::vector<double> released = {0.6, -0.3, 0.1};
    const BudgetAllocation adaptive = AllocateBudget(released, e2);
    const BudgetAllocation uniform = UniformAllocation(kHd, e2);
    struct Case {
      const BudgetAllocation* alloc;
      NoiseOptions noise;
      Expectation expected;
      const char* name;
      const char* mech;
    };
    for (const Case& c :
         {Case{&adaptive, exact, Expectation::kPass, "h0 aggregate", "adlm"},
          Case{&adaptive, halved, Expectation::kFail,
               "h0 aggregate (noise halved)", "adlm"},
          Case{&uniform, exact, Expectation::kPass, "h0 aggregate", "ilm"},
          Case{&uniform, halved, Expectation::kFail,
               "h0 aggregate (noise halved)", "ilm"}}) {
      std::vector<double> b;
      for (size_t h = 0; h < kHw; ++h) {
        b.push_back(FeatureNoiseScale(delta_h0, e2, c.noise));  // bias
        for (double ej : c.alloc->epsilon) {
          b.push_back(FeatureNoiseScale(delta_h0, ej, c.noise));
        }
      }
      ratios.push_back(
          Named(AnalyticRatioCheck(f, g, b, e2), c.name, c.mech, c.expected));
    }
  }
  {
    const std::vector<double> f = SumRows(loss->dataset);
    const std::vector<double> g = SumRows(loss->neighbor);
    for (const auto& [noise, expected, label] :
         {std::tuple{exact, Expectation::kPass, ""},
          std::tuple{halved, Expectation::kFail, " (noise halved)"}}) {
      std::vector<double> b(f.size(),
                            CoefficientNoiseScale(delta_f, e3, noise));
      ratios.push_back(Named(AnalyticRatioCheck(f, g, b, e3),
                             absl::StrCat("loss coefficients", label), "loss",
                             expected));
    }
  }

  // Per-example releases at the configured model shape: the trainer keeps
  // x_i + Lap(Delta_h0 / epsilon_j) / |L| and c + Lap(Delta_F / epsilon3) /
  // |L| for every example, so one changed example moves one row.
  {
    const size_t d = config.d;
    const double dh = H0Sensitivity(config.h0_width, d);
    const double bs = static_cast<double>(config.batch_size);
    const std::vector<double> f(d, 1.0 / std::sqrt(static_cast<double>(d)));
    const std::vector<double> g(d, 0.0);
    std::vector<double> b(d, FeatureNoiseScale(dh, e2) / bs);
    ratios.push_back(Named(
        AnalyticRatioCheck(f, g, b, e2), "per-example features", "adlm/ilm",
        Expectation::kPass,
        absl::StrCat("scaled features x in [0, 1/sqrt(d)]^d, d = ", d,
                     ", |h0| = ", config.h0_width,
                     ", |L| = ", config.batch_size,
                     "; any allocation with sum epsilon_j = d epsilon2 gives "
                     "the same value")));
    const size_t m = config.num_classes;
    const double df = LossSensitivity(m, config.top_hidden);
    std::vector<Row> one_hot = OneHotDomain(m);
    const std::vector<double> cf = LabelCoefficientSum({one_hot[0]});
    const std::vector<double> cg = LabelCoefficientSum({one_hot[1 % m]});
    std::vector<double> cb(cf.size(), CoefficientNoiseScale(df, e3) / bs);
    ratios.push_back(Named(AnalyticRatioCheck(cf, cg, cb, e3),
                           "per-example coefficients", "adlm/ilm",
                           Expectation::kPass,
                           absl::StrCat("M = ", m, ", K = ", config.top_hidden,
                                        ", |L| = ", config.batch_size)));
  }

  // Monte Carlo on the perturbation functions themselves (|L| = 1, d = 1).
  MonteCarloOptions mc;
  mc.trials = config.trials;
  mc.seed = config.seed;
  for (const auto& [noise, expected, label] :
       {std::tuple{exact, Expectation::kPass, ""},
        std::tuple{halved, Expectation::kFail, " (noise halved)"}}) {
    auto relevance = [noise](double value, double eps) {
      return [=](uint64_t seed) {
        const std::vector<double> r = {value};
        return PrivatizeRelevance(r, eps, 2, seed, noise)->values[0];
      };
    };
    // |D| = 2 rows in {-1, 1}: means 1 and 0 differ by Delta_R = 1.
    mc.seed = Mix64(config.seed + 1);
    ratios.push_back(
        Named(MonteCarloRatio(relevance(1.0, e1), relevance(0.0, e1), e1, mc),
              absl::StrCat("relevance release", label), "relevance", expected));
    auto features = [noise](double x, double eps) {
      return [=](uint64_t seed) {
        const Tensor t({1, 1}, {x});
        const std::vector<double> ej = {eps};
        return (
            *PerturbFeatures(t, ej, H0Sensitivity(1, 1), 1, seed, noise))[0];
      };
    };
    mc.seed = Mix64(config.seed + 2);
    ratios.push_back(
        Named(MonteCarloRatio(features(1.0, e2), features(-1.0, e2), e2, mc),
              absl::StrCat("feature perturbation", label), "adlm", expected,
              "|x| <= 1, d = |h0| = |L| = 1"));
    auto coefficients = [noise](double y, double eps) {
      return [=](uint64_t seed) {
        const LossCoefficients c = TaylorCoefficients(Tensor({1, 1}, {y}));
        return PerturbCoefficients(c, eps, LossSensitivity(1, 1), 1, seed,
                                   noise)
            ->c1[0];
      };
    };
    mc.seed = Mix64(config.seed + 3);
    ratios.push_back(Named(
        MonteCarloRatio(coefficients(0.0, e3), coefficients(1.0, e3), e3, mc),
        absl::StrCat("coefficient perturbation", label), "loss", expected,
        "M = K = |L| = 1; the c1 gap of 1 is 0.8 Delta_F"));
  }
  return suite;
}

}  // namespace adlm
