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

#include "adlm/lrp.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"

namespace adlm {
namespace {

constexpr size_t kChunk = 256;

double Stabilized(double z, double mu) { return z >= 0 ? z + mu : z - mu; }

// s_m = R_m / (z_m +- mu), or an error at an unstabilized singularity.
absl::StatusOr<std::vector<double>> Messages(std::span<const double> r_upper,
                                             std::span<const double> z_m,
                                             double mu) {
  std::vector<double> s(r_upper.size(), 0.0);
  for (size_t m = 0; m < r_upper.size(); ++m) {
    if (r_upper[m] == 0.0) continue;
    if (mu == 0.0 && std::abs(z_m[m]) < kSingularDenominator) {
      return absl::FailedPreconditionError(
          absl::StrCat("relevance singularity at neuron ", m, ": z = ", z_m[m],
                       " with mu = 0"));
    }
    s[m] = r_upper[m] / Stabilized(z_m[m], mu);
  }
  return s;
}

absl::StatusOr<std::vector<double>> DenseRelevance(
    const Layer& layer, std::span<const double> x, std::span<const double> z,
    std::span<const double> r_upper, double mu) {
  auto s = Messages(r_upper, z, mu);
  if (!s.ok()) return s.status();
  const size_t in = x.size();
  std::vector<double> r(in, 0.0);
  for (size_t m = 0; m < z.size(); ++m) {
    const double sm = (*s)[m];
    if (sm == 0.0) continue;
    const double* w = layer.weights.data().data() + m * in;
    for (size_t p = 0; p < in; ++p) r[p] += w[p] * sm;
  }
  for (size_t p = 0; p < in; ++p) r[p] *= x[p];
  return r;
}

absl::StatusOr<std::vector<double>> ConvRelevance(
    const Layer& layer, std::span<const double> x, std::span<const double> z,
    std::span<const double> r_upper, double mu) {
  auto s = Messages(r_upper, z, mu);
  if (!s.ok()) return s.status();
  const auto& spec = std::get<Conv2DSpec>(layer.spec);
  const size_t c_in = layer.input_shape[0];
  const size_t h = layer.input_shape[1];
  const size_t w = layer.input_shape[2];
  const size_t c_out = layer.output_shape[0];
  const size_t ho = layer.output_shape[1];
  const size_t wo = layer.output_shape[2];
  const size_t k = spec.kernel;
  std::vector<double> back(x.size(), 0.0);
  for (size_t o = 0; o < c_out; ++o) {
    for (size_t oy = 0; oy < ho; ++oy) {
      for (size_t ox = 0; ox < wo; ++ox) {
        const double sm = (*s)[(o * ho + oy) * wo + ox];
        if (sm == 0.0) continue;
        for (size_t c = 0; c < c_in; ++c) {
          for (size_t ky = 0; ky < k; ++ky) {
            const long iy = static_cast<long>(oy * spec.stride + ky) -
                            static_cast<long>(spec.padding);
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            for (size_t kx = 0; kx < k; ++kx) {
              const long ix = static_cast<long>(ox * spec.stride + kx) -
                              static_cast<long>(spec.padding);
              if (ix < 0 || ix >= static_cast<long>(w)) continue;
              back[(c * h + iy) * w + ix] +=
                  layer.weights[((o * c_in + c) * k + ky) * k + kx] * sm;
            }
          }
        }
      }
    }
  }
  for (size_t p = 0; p < x.size(); ++p) back[p] *= x[p];
  return back;
}

}  // namespace

absl::StatusOr<std::vector<double>> PropagateLayer(
    std::span<const double> r_upper, const Tensor& z_pm,
    std::span<const double> z_m, double mu) {
  if (mu < 0) return absl::InvalidArgumentError("mu must be non-negative");
  if (z_pm.rank() != 2 || z_pm.dim(1) != r_upper.size() ||
      z_m.size() != r_upper.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "relevance shapes disagree: z_pm ", ShapeToString(z_pm.shape()),
        ", z_m ", z_m.size(), ", R ", r_upper.size()));
  }
  auto s = Messages(r_upper, z_m, mu);
  if (!s.ok()) return s.status();
  const size_t lower = z_pm.dim(0);
  const size_t upper = z_pm.dim(1);
  std::vector<double> r(lower, 0.0);
  for (size_t p = 0; p < lower; ++p) {
    for (size_t m = 0; m < upper; ++m) r[p] += z_pm[p * upper + m] * (*s)[m];
  }
  return r;
}

absl::StatusOr<std::vector<double>> OutputRelevance(
    std::span<const double> z_mo, double z_o, double class_score, double mu) {
  const double r[] = {class_score};
  const double z[] = {z_o};
  return PropagateLayer(
      r,
      Tensor({z_mo.size(), 1}, std::vector<double>(z_mo.begin(), z_mo.end())),
      z, mu);
}

absl::StatusOr<RelevanceTrace> ExplainExample(const Network& net,
                                              const ActivationTrace& trace,
                                              size_t row, uint32_t cls,
                                              double mu) {
  const auto& layers = net.layers();
  if (mu < 0) return absl::InvalidArgumentError("mu must be non-negative");
  if (!IsParameterized(layers.back().spec)) {
    return absl::InvalidArgumentError(
        "relevance needs a network ending in an affine layer");
  }
  if (trace.values.size() != layers.size() + 1 ||
      row >= trace.output().rows()) {
    return absl::InvalidArgumentError("trace does not match the network");
  }
  if (cls >= net.output_width()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "class ", cls, " outside ", net.output_width(), " outputs"));
  }
  RelevanceTrace out;
  out.mu = mu;
  out.layers.resize(layers.size() + 1);
  std::span<const double> scores = trace.output().row(row);
  out.class_score = scores[cls];
  std::vector<double> r(scores.size(), 0.0);
  r[cls] = out.class_score;
  out.layers.back() = r;
  for (size_t li = layers.size(); li-- > 0;) {
    const Layer& layer = layers[li];
    std::span<const double> x = trace.values[li].row(row);
    std::span<const double> z = trace.values[li + 1].row(row);
    if (std::holds_alternative<DenseSpec>(layer.spec)) {
      auto lower = DenseRelevance(layer, x, z, r, mu);
      if (!lower.ok()) {
        return absl::FailedPreconditionError(
            absl::StrCat("layer ", li, ": ", lower.status().message()));
      }
      r = *std::move(lower);
    } else if (std::holds_alternative<Conv2DSpec>(layer.spec)) {
      auto lower = ConvRelevance(layer, x, z, r, mu);
      if (!lower.ok()) {
        return absl::FailedPreconditionError(
            absl::StrCat("layer ", li, ": ", lower.status().message()));
      }
      r = *std::move(lower);
    }
    // Activations, normalizations and reshapes hand relevance down as is.
    out.layers[li] = r;
  }
  return out;
}

std::vector<double> NormalizeRelevance(std::span<const double> raw,
                                       RelevanceScale scale) {
  std::vector<double> out(raw.size(), 0.0);
  if (raw.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return out;
  for (size_t j = 0; j < raw.size(); ++j) {
    const double unit = std::clamp((raw[j] - lo) / (hi - lo), 0.0, 1.0);
    out[j] = scale == RelevanceScale::kSymmetric ? 2.0 * unit - 1.0 : unit;
  }
  return out;
}

absl::StatusOr<std::vector<double>> InputRelevance(const Network& net,
                                                   std::span<const double> x,
                                                   uint32_t cls,
                                                   const LrpOptions& options) {
  Tensor batch({1, x.size()}, std::vector<double>(x.begin(), x.end()));
  auto trace = net.Forward(batch, ForwardMode::kInference);
  if (!trace.ok()) return trace.status();
  auto rel = ExplainExample(net, *trace, 0, cls, options.mu);
  if (!rel.ok()) return rel.status();
  return NormalizeRelevance(rel->input(), options.scale);
}

absl::StatusOr<std::vector<double>> AverageRelevance(
    const Network& net, const Dataset& data, const LrpOptions& options) {
  const size_t n = data.size();
  const size_t d = data.dim();
  if (n == 0) return absl::InvalidArgumentError("empty dataset");
  const Tensor& features = data.features();
  const std::vector<uint32_t>& classes = data.classes();
  std::vector<double> sum(d, 0.0);
  std::vector<size_t> rows;
  for (size_t start = 0; start < n; start += kChunk) {
    const size_t end = std::min(n, start + kChunk);
    rows.resize(end - start);
    std::iota(rows.begin(), rows.end(), start);
    auto trace =
        net.Forward(features.GatherRows(rows), ForwardMode::kInference);
    if (!trace.ok()) return trace.status();
    for (size_t i = start; i < end; ++i) {
      auto rel = ExplainExample(net, *trace, i - start, classes[i], options.mu);
      if (!rel.ok()) {
        return absl::FailedPreconditionError(
            absl::StrCat("example ", i, ": ", rel.status().message()));
      }
      const std::vector<double> norm =
          NormalizeRelevance(rel->input(), options.scale);
      for (size_t j = 0; j < d; ++j) sum[j] += norm[j];
    }
  }
  for (double& v : sum) v /= static_cast<double>(n);
  return sum;
}

}  // namespace adlm
