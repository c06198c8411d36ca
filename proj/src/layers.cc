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

#include "adlm/layers.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"

namespace adlm {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

absl::StatusOr<size_t> ParseSize(absl::string_view field,
                                 absl::string_view text) {
  uint64_t value = 0;
  if (!absl::SimpleAtoi(field, &value)) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad integer '", field, "' in layer '", text, "'"));
  }
  return static_cast<size_t>(value);
}

absl::StatusOr<double> ParseReal(absl::string_view field,
                                 absl::string_view text) {
  double value = 0;
  if (!absl::SimpleAtod(field, &value)) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad number '", field, "' in layer '", text, "'"));
  }
  return value;
}

}  // namespace

bool IsParameterized(const LayerSpec& spec) {
  return std::holds_alternative<DenseSpec>(spec) ||
         std::holds_alternative<Conv2DSpec>(spec);
}

bool IsLrn(const LayerSpec& spec) {
  return std::holds_alternative<LrnDenseSpec>(spec) ||
         std::holds_alternative<LrnConvSpec>(spec);
}

std::string LayerSpecToString(const LayerSpec& spec) {
  return std::visit(
      Overloaded{
          [](const DenseSpec& s) {
            return absl::StrCat("dense:", s.in, ":", s.out,
                                s.bias ? "" : ":nobias");
          },
          [](const Conv2DSpec& s) {
            return absl::StrCat("conv:", s.in_channels, ":", s.out_channels,
                                ":", s.kernel, ":", s.stride, ":", s.padding,
                                s.bias ? "" : ":nobias");
          },
          [](const ReluSpec&) { return std::string("relu"); },
          [](const SigmoidSpec&) { return std::string("sigmoid"); },
          [](const LrnDenseSpec&) { return std::string("lrn"); },
          [](const LrnConvSpec& s) {
            return absl::StrCat("lrnconv:", s.q, ":", s.window, ":", s.alpha,
                                ":", s.beta);
          },
          [](const FlattenSpec&) { return std::string("flatten"); },
      },
      spec);
}

absl::StatusOr<LayerSpec> ParseLayerSpec(std::string_view spec_text) {
  // The bundled absl predates its std::string_view alias.
  const absl::string_view text(spec_text.data(), spec_text.size());
  std::vector<absl::string_view> parts = absl::StrSplit(text, ':');
  bool bias = true;
  if (parts.size() > 1 && parts.back() == "nobias") {
    bias = false;
    parts.pop_back();
  }
  const absl::string_view kind = parts[0];
  const size_t nargs = parts.size() - 1;
  auto bad_arity = [&] {
    return absl::InvalidArgumentError(
        absl::StrCat("wrong number of fields in layer '", text, "'"));
  };
  if (kind == "dense") {
    // dense:OUT infers the input width from the previous layer.
    DenseSpec s;
    s.bias = bias;
    if (nargs == 1) {
      auto out = ParseSize(parts[1], text);
      if (!out.ok()) return out.status();
      s.out = *out;
    } else if (nargs == 2) {
      auto in = ParseSize(parts[1], text);
      auto out = ParseSize(parts[2], text);
      if (!in.ok()) return in.status();
      if (!out.ok()) return out.status();
      s.in = *in;
      s.out = *out;
    } else {
      return bad_arity();
    }
    if (s.out == 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("dense width must be positive in '", text, "'"));
    }
    return s;
  }
  if (kind == "conv") {
    // conv:OUT:K, conv:IN:OUT:K, conv:IN:OUT:K:STRIDE, conv:IN:OUT:K:STRIDE:PAD
    if (nargs < 2 || nargs > 5) return bad_arity();
    std::vector<size_t> v;
    for (size_t i = 1; i < parts.size(); ++i) {
      auto x = ParseSize(parts[i], text);
      if (!x.ok()) return x.status();
      v.push_back(*x);
    }
    Conv2DSpec s;
    s.bias = bias;
    if (nargs == 2) {
      s.out_channels = v[0];
      s.kernel = v[1];
    } else {
      s.in_channels = v[0];
      s.out_channels = v[1];
      s.kernel = v[2];
      if (nargs >= 4) s.stride = v[3];
      if (nargs >= 5) s.padding = v[4];
    }
    if (s.out_channels == 0 || s.kernel == 0 || s.stride == 0) {
      return absl::InvalidArgumentError(absl::StrCat(
          "conv channels, kernel and stride must be positive in '", text, "'"));
    }
    return s;
  }
  if (!bias) return bad_arity();
  if (kind == "relu" && nargs == 0) return ReluSpec{};
  if (kind == "sigmoid" && nargs == 0) return SigmoidSpec{};
  if (kind == "lrn" && nargs == 0) return LrnDenseSpec{};
  if (kind == "flatten" && nargs == 0) return FlattenSpec{};
  if (kind == "lrnconv") {
    LrnConvSpec s;
    if (nargs == 0) return s;
    if (nargs != 4) return bad_arity();
    auto q = ParseReal(parts[1], text);
    auto window = ParseSize(parts[2], text);
    auto alpha = ParseReal(parts[3], text);
    auto beta = ParseReal(parts[4], text);
    if (!q.ok()) return q.status();
    if (!window.ok()) return window.status();
    if (!alpha.ok()) return alpha.status();
    if (!beta.ok()) return beta.status();
    s.q = *q;
    s.window = *window;
    s.alpha = *alpha;
    s.beta = *beta;
    if (absl::Status st = ValidateLayerSpec(s); !st.ok()) return st;
    return s;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown layer '", text, "'"));
}

absl::Status ValidateLayerSpec(const LayerSpec& spec) {
  if (const auto* d = std::get_if<DenseSpec>(&spec)) {
    if (d->in == 0 || d->out == 0) {
      return absl::InvalidArgumentError("dense layer widths must be positive");
    }
  } else if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
    if (c->in_channels == 0 || c->out_channels == 0 || c->kernel == 0 ||
        c->stride == 0) {
      return absl::InvalidArgumentError(
          "conv channels, kernel and stride must be positive");
    }
  } else if (const auto* l = std::get_if<LrnConvSpec>(&spec)) {
    if (!(l->q > 0) || l->window == 0 || !(l->alpha > 0) || !(l->beta > 0)) {
      return absl::InvalidArgumentError(
          "lrnconv hyper-parameters must be positive");
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<Shape> OutputShape(const LayerSpec& spec, const Shape& input) {
  if (absl::Status s = ValidateLayerSpec(spec); !s.ok()) return s;
  const std::string name = LayerSpecToString(spec);
  if (const auto* d = std::get_if<DenseSpec>(&spec)) {
    if (NumElements(input) != d->in || input.size() != 1) {
      return absl::InvalidArgumentError(
          absl::StrCat(name, " expects a flat input of width ", d->in, ", got ",
                       ShapeToString(input)));
    }
    return Shape{d->out};
  }
  if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
    if (input.size() != 3 || input[0] != c->in_channels) {
      return absl::InvalidArgumentError(
          absl::StrCat(name, " expects [", c->in_channels, "xHxW], got ",
                       ShapeToString(input)));
    }
    const size_t h = input[1] + 2 * c->padding;
    const size_t w = input[2] + 2 * c->padding;
    if (h < c->kernel || w < c->kernel) {
      return absl::InvalidArgumentError(absl::StrCat(
          name, " kernel larger than input ", ShapeToString(input)));
    }
    return Shape{c->out_channels, (h - c->kernel) / c->stride + 1,
                 (w - c->kernel) / c->stride + 1};
  }
  if (std::holds_alternative<LrnConvSpec>(spec)) {
    if (input.size() != 3) {
      return absl::InvalidArgumentError(absl::StrCat(
          name, " expects feature maps, got ", ShapeToString(input)));
    }
    return input;
  }
  if (std::holds_alternative<FlattenSpec>(spec)) {
    return Shape{NumElements(input)};
  }
  return input;
}

Tensor LrnDense(const Tensor& activations) {
  Tensor out(activations.shape());
  const size_t n = activations.rows();
  const size_t width = activations.row_size();
  for (size_t j = 0; j < width; ++j) {
    double lo = activations[j];
    double hi = activations[j];
    for (size_t i = 1; i < n; ++i) {
      lo = std::min(lo, activations[i * width + j]);
      hi = std::max(hi, activations[i * width + j]);
    }
    if (!(hi > lo)) continue;  // constant column stays zero
    const double range = hi - lo;
    for (size_t i = 0; i < n; ++i) {
      out[i * width + j] = (activations[i * width + j] - lo) / range;
    }
  }
  return out;
}

Tensor LrnConv(const Tensor& feature_maps, const LrnConvSpec& spec) {
  const Shape& shape = feature_maps.shape();
  Tensor out(shape);
  const size_t batch = shape[0];
  const size_t maps = shape[1];
  const size_t plane = NumElements(shape) / (batch * maps);
  const size_t half = spec.window / 2;
  for (size_t n = 0; n < batch; ++n) {
    const double* in = feature_maps.data().data() + n * maps * plane;
    double* o = out.data().data() + n * maps * plane;
    for (size_t k = 0; k < maps; ++k) {
      const size_t lo = k >= half ? k - half : 0;
      const size_t hi = std::min(maps - 1, k + half);
      for (size_t p = 0; p < plane; ++p) {
        double sum = 0.0;
        for (size_t m = lo; m <= hi; ++m)
          sum += in[m * plane + p] * in[m * plane + p];
        const double h = in[k * plane + p];
        const double denom =
            std::max(h, std::pow(spec.q + spec.alpha * sum, spec.beta));
        o[k * plane + p] = h / denom;
      }
    }
  }
  return out;
}

}  // namespace adlm
