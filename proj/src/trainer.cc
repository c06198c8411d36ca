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
#include <chrono>
#include <cmath>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "adlm/approx_loss.h"
#include "adlm/random.h"

namespace adlm {
namespace {

constexpr uint64_t kPretrainSalt = 0x707265747261696eULL;
constexpr size_t kEvalChunk = 512;

std::string FormatDouble(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

std::string MetricsCsv(const std::vector<MetricsRow>& rows, bool wall) {
  std::string out = "step,epoch,loss,test_accuracy,epsilon_spent";
  out += wall ? ",wall_ms\n" : "\n";
  for (const MetricsRow& r : rows) {
    absl::StrAppend(&out, r.step, ",", r.epoch, ",", FormatDouble(r.loss), ",",
                    r.test_accuracy ? FormatDouble(*r.test_accuracy) : "", ",",
                    FormatDouble(r.epsilon_spent));
    if (wall) absl::StrAppend(&out, ",", FormatDouble(r.wall_ms));
    out += "\n";
  }
  return out;
}

// The layer feeding the output layer, skipping reshapes, must normalize into
// [0, 1], and the output layer must be bias free, for the loss sensitivity
// to hold.
absl::Status CheckPrivateArchitecture(const Network& net) {
  const auto& layers = net.layers();
  const auto* out = std::get_if<DenseSpec>(&layers.back().spec);
  if (out == nullptr) {
    return absl::InvalidArgumentError("the output layer must be dense");
  }
  if (out->bias) {
    return absl::InvalidArgumentError(
        "private training needs a bias-free output layer (dense:M:nobias)");
  }
  for (size_t i = layers.size() - 1; i-- > 0;) {
    if (std::holds_alternative<FlattenSpec>(layers[i].spec)) continue;
    if (std::holds_alternative<LrnDenseSpec>(layers[i].spec) ||
        std::holds_alternative<LrnConvSpec>(layers[i].spec)) {
      return absl::OkStatus();
    }
    break;
  }
  return absl::InvalidArgumentError(
      "private training needs an LRN layer right before the output layer");
}

}  // namespace

PrivacyBudget TrainConfig::Budget() const {
  return PrivacyBudget{epsilon * epsilon_split[0], epsilon * epsilon_split[1],
                       epsilon * epsilon_split[2]};
}

absl::Status ValidateTrainConfig(const TrainConfig& config) {
  if (config.batch_size == 0) {
    return absl::InvalidArgumentError("batch_size must be positive");
  }
  if (!(config.learning_rate > 0) || !std::isfinite(config.learning_rate)) {
    return absl::InvalidArgumentError("learning_rate must be positive");
  }
  if (!(config.lr_decay > 0) || config.lr_decay > 1) {
    return absl::InvalidArgumentError("lr_decay must be in (0, 1]");
  }
  if (!(config.mu >= 0)) {
    return absl::InvalidArgumentError("mu must be non-negative");
  }
  if (!(config.lrn_momentum >= 0 && config.lrn_momentum <= 1)) {
    return absl::InvalidArgumentError("lrn_momentum must be in [0, 1]");
  }
  if (!(config.noise_multiplier >= 0)) {
    return absl::InvalidArgumentError("noise_multiplier must be >= 0");
  }
  if (config.eval_every == 0) {
    return absl::InvalidArgumentError("eval_every must be positive");
  }
  if (config.architecture.empty()) {
    return absl::InvalidArgumentError("architecture is empty");
  }
  if (config.mechanism != Mechanism::kNoiseless) {
    auto split = PrivacyBudget::Split(config.epsilon, config.epsilon_split);
    if (!split.ok()) return split.status();
    if (absl::Status s = split->Validate(config.mechanism); !s.ok()) return s;
  }
  return absl::OkStatus();
}

absl::StatusOr<Network> BuildNetwork(const std::vector<std::string>& layers,
                                     const Shape& example_shape,
                                     size_t num_classes) {
  std::vector<LayerSpec> specs;
  for (const std::string& text : layers) {
    auto spec = ParseLayerSpec(text);
    if (!spec.ok()) return spec.status();
    specs.push_back(*spec);
  }
  if (specs.empty()) return absl::InvalidArgumentError("no layers");
  const bool spatial = std::holds_alternative<Conv2DSpec>(specs.front());
  Shape input = spatial ? example_shape : Shape{NumElements(example_shape)};
  auto net = Network::Create(input, std::move(specs));
  if (!net.ok()) return net.status();
  if (net->output_width() != num_classes) {
    return absl::InvalidArgumentError(
        absl::StrCat("network has ", net->output_width(),
                     " outputs but the data has ", num_classes, " classes"));
  }
  return net;
}

std::string MetricsLog::ToCsv() const { return MetricsCsv(rows_, true); }

std::string MetricsLog::DeterministicCsv() const {
  return MetricsCsv(rows_, false);
}

absl::StatusOr<double> Evaluate(const Network& net, const Dataset& test) {
  const size_t n = test.size();
  if (n == 0) return absl::InvalidArgumentError("empty test set");
  const Tensor& x = test.features();
  const std::vector<uint32_t>& classes = test.classes();
  size_t correct = 0;
  std::vector<size_t> rows;
  for (size_t start = 0; start < n; start += kEvalChunk) {
    const size_t end = std::min(n, start + kEvalChunk);
    rows.resize(end - start);
    for (size_t i = start; i < end; ++i) rows[i - start] = i;
    auto trace = net.Forward(x.GatherRows(rows), ForwardMode::kInference);
    if (!trace.ok()) return trace.status();
    const Tensor& out = trace->output();
    for (size_t i = start; i < end; ++i) {
      std::span<const double> scores = out.row(i - start);
      const size_t best = static_cast<size_t>(
          std::max_element(scores.begin(), scores.end()) - scores.begin());
      if (best == classes[i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

uint64_t PretrainSeed(uint64_t seed) { return Mix64(seed ^ kPretrainSalt); }

absl::StatusOr<Network> Pretrain(const TrainConfig& config,
                                 const Dataset& train) {
  TrainConfig pre = config;
  pre.mechanism = Mechanism::kNoiseless;
  pre.noiseless_loss = NoiselessLoss::kCrossEntropy;
  pre.epochs = config.pretrain_epochs;
  pre.seed = PretrainSeed(config.seed);
  if (!config.pretrain_architecture.empty()) {
    pre.architecture = config.pretrain_architecture;
  }
  if (absl::Status s = ValidateTrainConfig(pre); !s.ok()) return s;
  auto net = BuildNetwork(pre.architecture, train.example_shape(),
                          train.num_classes());
  if (!net.ok()) return net.status();
  net->InitializeWeights(pre.seed);
  auto data = Preprocess(pre, train, *net);
  if (!data.ok()) return data.status();
  auto result = RunTrainingLoop(
      pre, std::make_shared<const PerturbedDataset>(*std::move(data)),
      *std::move(net), nullptr);
  if (!result.ok()) {
    return absl::Status(
        result.status().code(),
        absl::StrCat("pretraining: ", result.status().message()));
  }
  return std::move(result->net);
}

absl::StatusOr<PerturbedDataset> Preprocess(const TrainConfig& config,
                                            const Dataset& train,
                                            const Network& net,
                                            const TrainOptions& options) {
  if (absl::Status s = ValidateTrainConfig(config); !s.ok()) return s;
  const size_t n = train.size();
  if (config.batch_size > n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "batch size ", config.batch_size, " exceeds ", n, " examples"));
  }
  if (net.input_width() != train.dim()) {
    return absl::InvalidArgumentError(
        absl::StrCat("network input width ", net.input_width(),
                     " does not match ", train.dim(), " features"));
  }
  PerturbedDataset out;
  out.mechanism = config.mechanism;
  out.seed = config.seed;
  out.batch_size = config.batch_size;
  out.noise_multiplier = config.noise_multiplier;
  out.example_shape = train.example_shape();
  out.sensitivities = Sensitivities::Compute(
      train.dim(), n, net.h0_width(), train.num_classes(),
      NumElements(net.output_layer().input_shape));
  const LossCoefficients clean = TaylorCoefficients(train.labels());

  if (config.mechanism == Mechanism::kNoiseless) {
    out.features = train.features();
    out.coefficients = clean;
    out.clean_labels = train.labels();
    out.draw_serial = NextDrawSerial();
    return out;
  }

  if (absl::Status s = CheckPrivateArchitecture(net); !s.ok()) return s;
  out.budget = config.Budget();
  const NoiseOptions noise{config.noise_multiplier};
  const Sensitivities& sens = out.sensitivities;

  if (config.mechanism == Mechanism::kAdlm) {
    std::vector<double> released;
    if (options.private_relevance_override) {
      released = *options.private_relevance_override;
      if (released.size() != train.dim()) {
        return absl::InvalidArgumentError("relevance override has wrong size");
      }
    } else {
      std::optional<Network> owned;
      const Network* pre = options.pretrained;
      if (pre == nullptr) {
        auto trained = Pretrain(config, train);
        if (!trained.ok()) return trained.status();
        owned.emplace(*std::move(trained));
        pre = &*owned;
      }
      auto relevance = AverageRelevance(
          *pre, train, LrpOptions{config.mu, config.relevance_scale});
      if (!relevance.ok()) return relevance.status();
      auto priv = PrivatizeRelevance(*relevance, out.budget.epsilon1, n,
                                     config.seed, noise);
      if (!priv.ok()) return priv.status();
      released = std::move(priv->values);
    }
    const BudgetAllocation alloc =
        AllocateBudget(released, out.budget.epsilon2);
    auto features = PerturbFeatures(train.features(), alloc.epsilon, sens.h0,
                                    config.batch_size, config.seed, noise);
    if (!features.ok()) return features.status();
    out.features = *std::move(features);
    out.private_relevance = std::move(released);
    out.feature_epsilon = alloc.epsilon;
  } else {
    auto features =
        IlmPerturbFeatures(train.features(), out.budget.epsilon2, sens.h0,
                           config.batch_size, config.seed, noise);
    if (!features.ok()) return features.status();
    out.features = *std::move(features);
    out.feature_epsilon.assign(train.dim(), out.budget.epsilon2);
  }

  auto bias = PerturbBias(net.layers()[net.h0_index()].output_shape,
                          out.budget.epsilon2, sens.h0, config.batch_size,
                          config.seed, noise);
  if (!bias.ok()) return bias.status();
  out.bias_noise = *std::move(bias);
  auto coeffs = PerturbCoefficients(clean, out.budget.epsilon3, sens.loss,
                                    config.batch_size, config.seed, noise);
  if (!coeffs.ok()) return coeffs.status();
  out.coefficients = *std::move(coeffs);
  out.draw_serial = NextDrawSerial();
  return out;
}

absl::StatusOr<TrainResult> RunTrainingLoop(
    const TrainConfig& config, std::shared_ptr<const PerturbedDataset> data,
    Network net, const Dataset* test) {
  if (absl::Status s = ValidateTrainConfig(config); !s.ok()) return s;
  const PerturbedDataset& pd = *data;
  const size_t n = pd.size();
  const size_t batch = config.batch_size;
  if (batch > n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "batch size ", batch, " exceeds ", n, " perturbed examples"));
  }
  if (pd.features.row_size() != net.input_width()) {
    return absl::InvalidArgumentError("perturbed data does not fit network");
  }
  const bool exact_loss = config.mechanism == Mechanism::kNoiseless &&
                          config.noiseless_loss == NoiselessLoss::kCrossEntropy;
  if (exact_loss && pd.clean_labels.empty()) {
    return absl::InvalidArgumentError(
        "cross-entropy training needs the noiseless dataset");
  }
  if (config.mechanism != Mechanism::kNoiseless) {
    if (absl::Status s = CheckPrivateArchitecture(net); !s.ok()) return s;
  }
  if (!pd.bias_noise.empty()) {
    Layer& h0 = net.layers()[net.h0_index()];
    if (NumElements(h0.output_shape) != pd.bias_noise.size()) {
      return absl::InvalidArgumentError("bias noise does not match h0");
    }
    h0.bias_offset = pd.bias_noise.Reshaped(h0.output_shape);
  }

  const uint64_t serial = pd.draw_serial;
  const uint64_t draws = LaplaceDrawCount();
  const double spent = config.Budget().Spent(config.mechanism);
  const BatchPlan plan(n, batch, config.seed);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  };
  Shape batch_shape = {batch};
  for (size_t d : net.input_shape()) batch_shape.push_back(d);

  MetricsLog metrics;
  size_t step = 0;
  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate *
                      std::pow(config.lr_decay, static_cast<double>(epoch));
    const std::vector<size_t> order = plan.EpochOrder(epoch);
    double epoch_loss = 0.0;
    for (size_t s = 0; s < plan.steps_per_epoch(); ++s, ++step) {
      std::span<const size_t> rows = plan.Batch(order, s);
      auto trace =
          net.Forward(pd.features.GatherRows(rows).Reshaped(batch_shape));
      if (!trace.ok()) return trace.status();
      absl::StatusOr<LossValue> loss =
          exact_loss ? CrossEntropyFromLogits(trace->output(),
                                              pd.clean_labels.GatherRows(rows))
                     : TaylorLossFromLogits(trace->output(),
                                            pd.coefficients.GatherRows(rows));
      if (!loss.ok()) return loss.status();
      if (!std::isfinite(loss->value) || !loss->grad_logits.AllFinite()) {
        return absl::AbortedError(
            absl::StrCat("training diverged at epoch ", epoch, " step ", step,
                         ": loss ", loss->value, " (learning rate ", lr, ")"));
      }
      auto grads = net.Backward(*trace, loss->grad_logits);
      if (!grads.ok()) return grads.status();
      if (absl::Status st =
              net.ApplySgd(*grads, lr / static_cast<double>(batch));
          !st.ok()) {
        return st;
      }
      net.UpdateLrnStatistics(*trace, config.lrn_momentum);
      const double per_example = loss->value / static_cast<double>(batch);
      epoch_loss += per_example;
      if (config.log_every_step) {
        metrics.Add({step + 1, epoch + 1, per_example, std::nullopt, spent,
                     elapsed_ms()});
      }
    }
    for (const Tensor* p : net.Parameters()) {
      if (!p->AllFinite()) {
        return absl::AbortedError(absl::StrCat(
            "training diverged: non-finite parameters after epoch ", epoch));
      }
    }
    std::optional<double> accuracy;
    if (test != nullptr &&
        ((epoch + 1) % config.eval_every == 0 || epoch + 1 == config.epochs)) {
      auto acc = Evaluate(net, *test);
      if (!acc.ok()) return acc.status();
      accuracy = *acc;
    }
    const size_t steps = std::max<size_t>(1, plan.steps_per_epoch());
    if (!config.log_every_step) {
      metrics.Add({step, epoch + 1, epoch_loss / static_cast<double>(steps),
                   accuracy, spent, elapsed_ms()});
    } else if (accuracy && !metrics.rows().empty()) {
      metrics.SetLastAccuracy(*accuracy);
    }
  }
  TrainResult result{std::move(net),
                     std::move(metrics),
                     data,
                     {},
                     0,
                     LaplaceDrawCount() - draws,
                     pd.draw_serial == serial};
  result.private_relevance = pd.private_relevance;
  return result;
}

absl::StatusOr<TrainResult> Train(const TrainConfig& config,
                                  const Dataset& train, const Dataset* test,
                                  const TrainOptions& options) {
  if (absl::Status s = ValidateTrainConfig(config); !s.ok()) return s;
  auto net = BuildNetwork(config.architecture, train.example_shape(),
                          train.num_classes());
  if (!net.ok()) return net.status();
  net->InitializeWeights(config.seed);
  auto data = Preprocess(config, train, *net, options);
  if (!data.ok()) return data.status();
  const uint64_t reads = train.access_count();
  auto result = RunTrainingLoop(
      config, std::make_shared<const PerturbedDataset>(*std::move(data)),
      *std::move(net), test);
  if (!result.ok()) return result.status();
  result->raw_reads_during_loop = train.access_count() - reads;
  return result;
}

}  // namespace adlm
