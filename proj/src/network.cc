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

#include "adlm/network.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "Eigen/Core"
#include "absl/strings/str_cat.h"
#include "adlm/random.h"

namespace adlm {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

Shape Batched(size_t batch, const Shape& per_example) {
  Shape s{batch};
  s.insert(s.end(), per_example.begin(), per_example.end());
  return s;
}

struct ConvGeometry {
  size_t c, h, w;    // input
  size_t o, ho, wo;  // output
  size_t k, stride, pad;
  size_t patch() const { return c * k * k; }
  size_t positions() const { return ho * wo; }
};

ConvGeometry Geometry(const Layer& layer) {
  const auto& s = std::get<Conv2DSpec>(layer.spec);
  return {layer.input_shape[0],
          layer.input_shape[1],
          layer.input_shape[2],
          layer.output_shape[0],
          layer.output_shape[1],
          layer.output_shape[2],
          s.kernel,
          s.stride,
          s.padding};
}

// cols is (c*k*k) x (ho*wo), row-major.
void Im2Col(const ConvGeometry& g, const double* image, double* cols) {
  for (size_t ci = 0; ci < g.c; ++ci) {
    for (size_t ky = 0; ky < g.k; ++ky) {
      for (size_t kx = 0; kx < g.k; ++kx) {
        double* row = cols + ((ci * g.k + ky) * g.k + kx) * g.positions();
        for (size_t oy = 0; oy < g.ho; ++oy) {
          const long iy =
              static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          for (size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) -
                            static_cast<long>(g.pad);
            const bool inside = iy >= 0 && ix >= 0 &&
                                iy < static_cast<long>(g.h) &&
                                ix < static_cast<long>(g.w);
            row[oy * g.wo + ox] =
                inside ? image[(ci * g.h + iy) * g.w + ix] : 0.0;
          }
        }
      }
    }
  }
}

void Col2ImAdd(const ConvGeometry& g, const double* cols, double* image) {
  for (size_t ci = 0; ci < g.c; ++ci) {
    for (size_t ky = 0; ky < g.k; ++ky) {
      for (size_t kx = 0; kx < g.k; ++kx) {
        const double* row = cols + ((ci * g.k + ky) * g.k + kx) * g.positions();
        for (size_t oy = 0; oy < g.ho; ++oy) {
          const long iy =
              static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          for (size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) -
                            static_cast<long>(g.pad);
            if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
            image[(ci * g.h + iy) * g.w + ix] += row[oy * g.wo + ox];
          }
        }
      }
    }
  }
}

void AddBiasAndOffset(const Layer& layer, Tensor& out) {
  const size_t n = out.rows();
  const size_t width = out.row_size();
  if (!layer.bias.empty()) {
    const size_t channels = layer.bias.size();
    const size_t plane = width / channels;
    for (size_t i = 0; i < n; ++i) {
      double* row = out.data().data() + i * width;
      for (size_t c = 0; c < channels; ++c) {
        for (size_t p = 0; p < plane; ++p) row[c * plane + p] += layer.bias[c];
      }
    }
  }
  if (!layer.bias_offset.empty()) {
    for (size_t i = 0; i < n; ++i) {
      double* row = out.data().data() + i * width;
      for (size_t j = 0; j < width; ++j) row[j] += layer.bias_offset[j];
    }
  }
}

Tensor DenseForward(const Layer& layer, const Tensor& x) {
  const size_t n = x.rows();
  const size_t in = layer.weights.dim(1);
  const size_t out_width = layer.weights.dim(0);
  Tensor out(Batched(n, layer.output_shape));
  ConstMatMap xm(x.data().data(), n, in);
  ConstMatMap wm(layer.weights.data().data(), out_width, in);
  MatMap om(out.data().data(), n, out_width);
  om.noalias() = xm * wm.transpose();
  AddBiasAndOffset(layer, out);
  return out;
}

Tensor ConvForward(const Layer& layer, const Tensor& x) {
  const ConvGeometry g = Geometry(layer);
  const size_t n = x.rows();
  Tensor out(Batched(n, layer.output_shape));
  std::vector<double> cols(g.patch() * g.positions());
  ConstMatMap wm(layer.weights.data().data(), g.o, g.patch());
  for (size_t i = 0; i < n; ++i) {
    Im2Col(g, x.data().data() + i * x.row_size(), cols.data());
    ConstMatMap cm(cols.data(), g.patch(), g.positions());
    MatMap om(out.data().data() + i * out.row_size(), g.o, g.positions());
    om.noalias() = wm * cm;
  }
  AddBiasAndOffset(layer, out);
  return out;
}

Tensor LrnDenseFrozen(const Layer& layer, const Tensor& x) {
  Tensor out(x.shape());
  const size_t width = x.row_size();
  for (size_t i = 0; i < x.rows(); ++i) {
    for (size_t j = 0; j < width; ++j) {
      const double lo = layer.lrn_min[j];
      const double range = layer.lrn_max[j] - lo;
      if (!(range > 0)) continue;
      out[i * width + j] =
          std::clamp((x[i * width + j] - lo) / range, 0.0, 1.0);
    }
  }
  return out;
}

bool UsesFrozenRange(const Layer& layer, ForwardMode mode) {
  return mode == ForwardMode::kInference && !layer.lrn_min.empty();
}

Tensor LayerForward(const Layer& layer, const Tensor& x, ForwardMode mode) {
  const size_t n = x.rows();
  return std::visit(
      [&](const auto& spec) -> Tensor {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, DenseSpec>) {
          return DenseForward(layer, x);
        } else if constexpr (std::is_same_v<T, Conv2DSpec>) {
          return ConvForward(layer, x);
        } else if constexpr (std::is_same_v<T, ReluSpec>) {
          Tensor out = x;
          for (double& v : out.data()) v = v > 0 ? v : 0.0;
          return out;
        } else if constexpr (std::is_same_v<T, SigmoidSpec>) {
          Tensor out = x;
          for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
          return out;
        } else if constexpr (std::is_same_v<T, LrnDenseSpec>) {
          return UsesFrozenRange(layer, mode) ? LrnDenseFrozen(layer, x)
                                              : LrnDense(x);
        } else if constexpr (std::is_same_v<T, LrnConvSpec>) {
          return LrnConv(x, spec);
        } else {
          return x.Reshaped(Batched(n, layer.output_shape));
        }
      },
      layer.spec);
}

void LrnDenseBackward(const Tensor& x, const Tensor& dy, Tensor& dx) {
  const size_t n = x.rows();
  const size_t width = x.row_size();
  for (size_t j = 0; j < width; ++j) {
    size_t arg_lo = 0;
    size_t arg_hi = 0;
    for (size_t i = 1; i < n; ++i) {
      if (x[i * width + j] < x[arg_lo * width + j]) arg_lo = i;
      if (x[i * width + j] > x[arg_hi * width + j]) arg_hi = i;
    }
    const double lo = x[arg_lo * width + j];
    const double hi = x[arg_hi * width + j];
    if (!(hi > lo)) continue;
    const double range = hi - lo;
    double d_lo = 0.0;
    double d_hi = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double g = dy[i * width + j];
      const double h = x[i * width + j];
      dx[i * width + j] += g / range;
      d_lo += g * (h - hi) / (range * range);
      d_hi -= g * (h - lo) / (range * range);
    }
    dx[arg_lo * width + j] += d_lo;
    dx[arg_hi * width + j] += d_hi;
  }
}

void LrnDenseFrozenBackward(const Layer& layer, const Tensor& x,
                            const Tensor& dy, Tensor& dx) {
  const size_t width = x.row_size();
  for (size_t i = 0; i < x.rows(); ++i) {
    for (size_t j = 0; j < width; ++j) {
      const double lo = layer.lrn_min[j];
      const double range = layer.lrn_max[j] - lo;
      if (!(range > 0)) continue;
      const double t = (x[i * width + j] - lo) / range;
      if (t > 0.0 && t < 1.0) dx[i * width + j] += dy[i * width + j] / range;
    }
  }
}

void LrnConvBackward(const LrnConvSpec& spec, const Tensor& x, const Tensor& dy,
                     Tensor& dx) {
  const size_t batch = x.dim(0);
  const size_t maps = x.dim(1);
  const size_t plane = x.row_size() / maps;
  const size_t half = spec.window / 2;
  for (size_t n = 0; n < batch; ++n) {
    const double* in = x.data().data() + n * maps * plane;
    const double* g = dy.data().data() + n * maps * plane;
    double* d = dx.data().data() + n * maps * plane;
    for (size_t k = 0; k < maps; ++k) {
      const size_t lo = k >= half ? k - half : 0;
      const size_t hi = std::min(maps - 1, k + half);
      for (size_t p = 0; p < plane; ++p) {
        double sum = 0.0;
        for (size_t m = lo; m <= hi; ++m)
          sum += in[m * plane + p] * in[m * plane + p];
        const double s = spec.q + spec.alpha * sum;
        const double scale = std::pow(s, spec.beta);
        const double h = in[k * plane + p];
        if (h > scale) continue;  // output pinned at 1
        const double gk = g[k * plane + p];
        d[k * plane + p] += gk / scale;
        const double common = gk * h * (-spec.beta) * scale / s /
                              (scale * scale) * 2.0 * spec.alpha;
        for (size_t m = lo; m <= hi; ++m)
          d[m * plane + p] += common * in[m * plane + p];
      }
    }
  }
}

}  // namespace

absl::StatusOr<Network> Network::Create(Shape input_shape,
                                        std::vector<LayerSpec> specs) {
  if (specs.empty()) return absl::InvalidArgumentError("network has no layers");
  if (input_shape.empty() || NumElements(input_shape) == 0) {
    return absl::InvalidArgumentError("network input shape is empty");
  }
  Network net;
  net.input_shape_ = input_shape;
  Shape current = std::move(input_shape);
  bool found_h0 = false;
  for (size_t i = 0; i < specs.size(); ++i) {
    LayerSpec spec = specs[i];
    if (auto* d = std::get_if<DenseSpec>(&spec); d != nullptr && d->in == 0) {
      if (current.size() != 1) {
        return absl::InvalidArgumentError(
            absl::StrCat("layer ", i, ": dense layer needs a flat input, got ",
                         ShapeToString(current), " (add 'flatten')"));
      }
      d->in = current[0];
    }
    if (auto* c = std::get_if<Conv2DSpec>(&spec);
        c != nullptr && c->in_channels == 0 && current.size() == 3) {
      c->in_channels = current[0];
    }
    absl::StatusOr<Shape> out = OutputShape(spec, current);
    if (!out.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("layer ", i, ": ", out.status().message()));
    }
    Layer layer;
    layer.spec = spec;
    layer.input_shape = current;
    layer.output_shape = *out;
    if (const auto* d = std::get_if<DenseSpec>(&spec)) {
      layer.weights = Tensor({d->out, d->in});
      if (d->bias) layer.bias = Tensor({d->out});
    } else if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
      layer.weights =
          Tensor({c->out_channels, c->in_channels, c->kernel, c->kernel});
      if (c->bias) layer.bias = Tensor({c->out_channels});
    }
    if (IsParameterized(spec) && !found_h0) {
      net.h0_index_ = i;
      found_h0 = true;
    }
    current = *out;
    net.layers_.push_back(std::move(layer));
  }
  if (!found_h0) {
    return absl::InvalidArgumentError("network has no affine layer");
  }
  return net;
}

void Network::InitializeWeights(uint64_t seed) {
  for (size_t i = 0; i < layers_.size(); ++i) {
    Layer& layer = layers_[i];
    if (!IsParameterized(layer.spec)) continue;
    size_t fan_in = 0;
    size_t fan_out = 0;
    if (const auto* d = std::get_if<DenseSpec>(&layer.spec)) {
      fan_in = d->in;
      fan_out = d->out;
    } else {
      const auto& c = std::get<Conv2DSpec>(layer.spec);
      fan_in = c.in_channels * c.kernel * c.kernel;
      fan_out = c.out_channels * c.kernel * c.kernel;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    CounterRng rng(seed, Substream::kInit, i);
    for (double& w : layer.weights.data()) {
      w = (2.0 * rng.UniformOpen() - 1.0) * limit;
    }
    layer.bias.Fill(0.0);
  }
}

absl::StatusOr<ActivationTrace> Network::Forward(const Tensor& batch,
                                                 ForwardMode mode) const {
  if (batch.rank() < 1 || batch.rows() == 0 ||
      batch.row_size() != input_width()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "batch shape ", ShapeToString(batch.shape()),
        " does not match network input ", ShapeToString(input_shape_)));
  }
  ActivationTrace trace;
  trace.mode = mode;
  trace.values.reserve(layers_.size() + 1);
  trace.values.push_back(batch.Reshaped(Batched(batch.rows(), input_shape_)));
  for (const Layer& layer : layers_) {
    trace.values.push_back(LayerForward(layer, trace.values.back(), mode));
  }
  return trace;
}

absl::StatusOr<GradientSet> Network::Backward(const ActivationTrace& trace,
                                              const Tensor& output_grad) const {
  if (trace.values.size() != layers_.size() + 1) {
    return absl::InvalidArgumentError(
        "activation trace does not belong to this network");
  }
  for (size_t i = 0; i < layers_.size(); ++i) {
    if (trace.values[i + 1].row_size() !=
        NumElements(layers_[i].output_shape)) {
      return absl::InvalidArgumentError(
          absl::StrCat("activation trace layer ", i, " has the wrong shape"));
    }
  }
  if (output_grad.shape() != trace.output().shape()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "output gradient shape ", ShapeToString(output_grad.shape()),
        " does not match output ", ShapeToString(trace.output().shape())));
  }
  const size_t n = output_grad.rows();
  std::vector<Tensor> layer_w(layers_.size());
  std::vector<Tensor> layer_b(layers_.size());
  Tensor dy = output_grad;
  for (size_t li = layers_.size(); li-- > 0;) {
    const Layer& layer = layers_[li];
    const Tensor& x = trace.values[li];
    const Tensor& y = trace.values[li + 1];
    Tensor dx(x.shape());
    std::visit(
        [&](const auto& spec) {
          using T = std::decay_t<decltype(spec)>;
          if constexpr (std::is_same_v<T, DenseSpec>) {
            const size_t in = spec.in;
            const size_t out = spec.out;
            layer_w[li] = Tensor({out, in});
            ConstMatMap xm(x.data().data(), n, in);
            ConstMatMap dym(dy.data().data(), n, out);
            ConstMatMap wm(layer.weights.data().data(), out, in);
            MatMap(layer_w[li].data().data(), out, in).noalias() =
                dym.transpose() * xm;
            MatMap(dx.data().data(), n, in).noalias() = dym * wm;
            if (spec.bias) {
              layer_b[li] = Tensor({out});
              for (size_t i = 0; i < n; ++i) {
                for (size_t j = 0; j < out; ++j)
                  layer_b[li][j] += dy[i * out + j];
              }
            }
          } else if constexpr (std::is_same_v<T, Conv2DSpec>) {
            const ConvGeometry g = Geometry(layer);
            layer_w[li] = Tensor(layer.weights.shape());
            MatMap dwm(layer_w[li].data().data(), g.o, g.patch());
            ConstMatMap wm(layer.weights.data().data(), g.o, g.patch());
            std::vector<double> cols(g.patch() * g.positions());
            std::vector<double> dcols(cols.size());
            for (size_t i = 0; i < n; ++i) {
              Im2Col(g, x.data().data() + i * x.row_size(), cols.data());
              ConstMatMap cm(cols.data(), g.patch(), g.positions());
              ConstMatMap dym(dy.data().data() + i * dy.row_size(), g.o,
                              g.positions());
              dwm.noalias() += dym * cm.transpose();
              MatMap(dcols.data(), g.patch(), g.positions()).noalias() =
                  wm.transpose() * dym;
              Col2ImAdd(g, dcols.data(), dx.data().data() + i * dx.row_size());
            }
            if (spec.bias) {
              layer_b[li] = Tensor({g.o});
              for (size_t i = 0; i < n; ++i) {
                const double* row = dy.data().data() + i * dy.row_size();
                for (size_t c = 0; c < g.o; ++c) {
                  for (size_t p = 0; p < g.positions(); ++p) {
                    layer_b[li][c] += row[c * g.positions() + p];
                  }
                }
              }
            }
          } else if constexpr (std::is_same_v<T, ReluSpec>) {
            for (size_t i = 0; i < x.size(); ++i)
              dx[i] = x[i] > 0 ? dy[i] : 0.0;
          } else if constexpr (std::is_same_v<T, SigmoidSpec>) {
            for (size_t i = 0; i < x.size(); ++i)
              dx[i] = dy[i] * y[i] * (1.0 - y[i]);
          } else if constexpr (std::is_same_v<T, LrnDenseSpec>) {
            if (UsesFrozenRange(layer, trace.mode)) {
              LrnDenseFrozenBackward(layer, x, dy, dx);
            } else {
              LrnDenseBackward(x, dy, dx);
            }
          } else if constexpr (std::is_same_v<T, LrnConvSpec>) {
            LrnConvBackward(spec, x, dy, dx);
          } else {
            dx = dy.Reshaped(x.shape());
          }
        },
        layer.spec);
    dy = std::move(dx);
  }
  GradientSet grads;
  for (size_t li = 0; li < layers_.size(); ++li) {
    if (!IsParameterized(layers_[li].spec)) continue;
    grads.params.push_back(std::move(layer_w[li]));
    if (!layers_[li].bias.empty())
      grads.params.push_back(std::move(layer_b[li]));
  }
  grads.input = std::move(dy);
  return grads;
}

absl::Status Network::ApplySgd(const GradientSet& grads, double learning_rate) {
  std::vector<Tensor*> params = Parameters();
  if (grads.params.size() != params.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("gradient set has ", grads.params.size(),
                     " tensors, network has ", params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (grads.params[i].shape() != params[i]->shape()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "gradient ", i, " shape ", ShapeToString(grads.params[i].shape()),
          " does not match parameter ", ShapeToString(params[i]->shape())));
    }
  }
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads.params[i];
    for (size_t k = 0; k < p.size(); ++k) p[k] -= learning_rate * g[k];
  }
  return absl::OkStatus();
}

void Network::UpdateLrnStatistics(const ActivationTrace& trace,
                                  double momentum) {
  for (size_t li = 0; li < layers_.size(); ++li) {
    Layer& layer = layers_[li];
    if (!std::holds_alternative<LrnDenseSpec>(layer.spec)) continue;
    const Tensor& x = trace.values[li];
    const size_t width = x.row_size();
    Tensor lo({width});
    Tensor hi({width});
    for (size_t j = 0; j < width; ++j) {
      lo[j] = hi[j] = x[j];
      for (size_t i = 1; i < x.rows(); ++i) {
        lo[j] = std::min(lo[j], x[i * width + j]);
        hi[j] = std::max(hi[j], x[i * width + j]);
      }
    }
    if (layer.lrn_min.empty()) {
      layer.lrn_min = std::move(lo);
      layer.lrn_max = std::move(hi);
      continue;
    }
    for (size_t j = 0; j < width; ++j) {
      layer.lrn_min[j] = momentum * layer.lrn_min[j] + (1.0 - momentum) * lo[j];
      layer.lrn_max[j] = momentum * layer.lrn_max[j] + (1.0 - momentum) * hi[j];
    }
  }
}

std::vector<Tensor*> Network::Parameters() {
  std::vector<Tensor*> out;
  for (Layer& layer : layers_) {
    if (!IsParameterized(layer.spec)) continue;
    out.push_back(&layer.weights);
    if (!layer.bias.empty()) out.push_back(&layer.bias);
  }
  return out;
}

std::vector<const Tensor*> Network::Parameters() const {
  std::vector<const Tensor*> out;
  for (const Layer& layer : layers_) {
    if (!IsParameterized(layer.spec)) continue;
    out.push_back(&layer.weights);
    if (!layer.bias.empty()) out.push_back(&layer.bias);
  }
  return out;
}

size_t Network::NumParameters() const {
  size_t total = 0;
  for (const Tensor* p : Parameters()) total += p->size();
  return total;
}

size_t Network::h0_width() const {
  return NumElements(layers_[h0_index_].output_shape);
}

absl::StatusOr<Network> SgdStep(Network net, const GradientSet& grads,
                                double learning_rate) {
  if (absl::Status s = net.ApplySgd(grads, learning_rate); !s.ok()) return s;
  return net;
}

}  // namespace adlm
