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

// Central finite-difference oracle shared by the unit and acceptance tests.
// It only calls the public forward pass, never the analytic backward pass.

#ifndef ADLM_TESTS_SUPPORT_GRADCHECK_H_
#define ADLM_TESTS_SUPPORT_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "adlm/network.h"

namespace adlm::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  size_t checked = 0;
  size_t failures = 0;
  std::string worst;
};

inline bool GradientsAgree(double analytic, double numeric, double rel_tol,
                           double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return true;
  return diff / std::max(std::abs(analytic), std::abs(numeric)) < rel_tol;
}

inline double RelativeError(double analytic, double numeric, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return 0.0;
  return diff / std::max(std::abs(analytic), std::abs(numeric));
}

// `loss` maps (network, input) to a scalar. Every parameter entry and every
// input entry is perturbed by +-step and compared with the analytic values.
inline GradCheckResult CheckGradients(
    Network net, Tensor input, const GradientSet& analytic,
    const std::function<double(const Network&, const Tensor&)>& loss,
    double step = 1e-5, double rel_tol = 1e-5, double abs_floor = 1e-8) {
  GradCheckResult result;
  auto record = [&](double a, double n, const std::string& where) {
    ++result.checked;
    const double err = RelativeError(a, n, abs_floor);
    if (!GradientsAgree(a, n, rel_tol, abs_floor)) ++result.failures;
    if (err >= result.max_rel_error) {
      result.max_rel_error = err;
      result.worst = absl::StrCat(where, " analytic=", a, " numeric=", n);
    }
  };
  std::vector<Tensor*> params = net.Parameters();
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p];
    for (size_t k = 0; k < t.size(); ++k) {
      const double saved = t[k];
      t[k] = saved + step;
      const double up = loss(net, input);
      t[k] = saved - step;
      const double down = loss(net, input);
      t[k] = saved;
      record(analytic.params[p][k], (up - down) / (2 * step),
             absl::StrCat("param ", p, "[", k, "]"));
    }
  }
  if (!analytic.input.empty()) {
    for (size_t k = 0; k < input.size(); ++k) {
      const double saved = input[k];
      input[k] = saved + step;
      const double up = loss(net, input);
      input[k] = saved - step;
      const double down = loss(net, input);
      input[k] = saved;
      record(analytic.input[k], (up - down) / (2 * step),
             absl::StrCat("input[", k, "]"));
    }
  }
  return result;
}

// sum(projection * output), the scalar whose output gradient is `projection`.
inline double ProjectedOutput(const Network& net, const Tensor& input,
                              const Tensor& projection, ForwardMode mode) {
  auto trace = net.Forward(input, mode);
  if (!trace.ok()) return std::nan("");
  const Tensor& out = trace->output();
  double total = 0.0;
  for (size_t i = 0; i < out.size(); ++i) total += projection[i] * out[i];
  return total;
}

inline Tensor RandomTensor(const Shape& shape, std::mt19937_64& gen,
                           double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (double& v : t.data()) v = dist(gen);
  return t;
}

inline void RandomizeParameters(Network& net, std::mt19937_64& gen,
                                double scale = 0.5) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (Tensor* t : net.Parameters()) {
    for (double& v : t->data()) v = dist(gen);
  }
}

}  // namespace adlm::testing

#endif  // ADLM_TESTS_SUPPORT_GRADCHECK_H_
