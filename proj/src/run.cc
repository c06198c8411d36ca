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

#include "adlm/run.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>

#include "absl/strings/str_cat.h"
#include "adlm/audit.h"
#include "adlm/checkpoint.h"
#include "adlm/lrp.h"
#include "adlm/serialize.h"
#include "adlm/trainer.h"
#include "json.hpp"

namespace adlm {
namespace {

using Json = nlohmann::json;

std::string OutPath(const RunConfig& config, const std::string& name) {
  return (std::filesystem::path(config.out_dir) / name).string();
}

absl::StatusOr<std::string> HashFile(const std::string& path) {
  auto bytes = ReadFileBytes(path);
  if (!bytes.ok()) return bytes.status();
  return GitBlobHash(*bytes);
}

absl::Status WriteJson(const std::string& path, const Json& j) {
  return WriteFileAtomically(path, j.dump(2) + "\n");
}

// Deterministic checkpoint metadata: nothing machine- or path-specific.
std::string CheckpointMetadata(const RunConfig& config, const char* role,
                               double accuracy) {
  Json j;
  j["role"] = role;
  j["mechanism"] = MechanismName(config.train.mechanism);
  const PrivacyBudget b = config.train.Budget();
  j["epsilon"] = {b.epsilon1, b.epsilon2, b.epsilon3};
  j["epsilon_spent"] = config.train.mechanism == Mechanism::kNoiseless
                           ? Json("inf")
                           : Json(b.Spent(config.train.mechanism));
  j["epochs"] = config.train.epochs;
  j["batch_size"] = config.train.batch_size;
  j["learning_rate"] = config.train.learning_rate;
  j["test_accuracy"] = accuracy;
  return j.dump();
}

Dataset Rows(const Dataset& all, size_t begin, size_t end) {
  std::vector<size_t> rows(end - begin);
  for (size_t i = begin; i < end; ++i) rows[i - begin] = i;
  std::vector<uint32_t> classes(all.classes().begin() + begin,
                                all.classes().begin() + end);
  Dataset out(all.features().GatherRows(rows), std::move(classes),
              all.num_classes());
  out.set_example_shape(all.example_shape());
  return out;
}

absl::StatusOr<Network> LoadNetwork(const std::string& path) {
  auto ckpt = LoadCheckpoint(path);
  if (!ckpt.ok()) return ckpt.status();
  return std::move(ckpt->net);
}

}  // namespace

std::string EncodePgm(const std::vector<double>& values, size_t width,
                      size_t height) {
  std::string out = absl::StrCat("P5\n", width, " ", height, "\n255\n");
  double lo = values.empty() ? 0 : values[0], hi = lo;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : values) {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    out.push_back(static_cast<char>(static_cast<unsigned char>(
        std::lround(std::clamp(t, 0.0, 1.0) * 255))));
  }
  return out;
}

absl::StatusOr<RunData> LoadRunData(const RunConfig& config) {
  RunData data;
  Dataset train, test;
  if (config.dataset == "synthetic") {
    const size_t n_train = config.train_limit ? config.train_limit : 2000;
    const size_t n_test = config.test_limit ? config.test_limit : 1000;
    if (config.synthetic_dim == 0 || config.synthetic_classes < 2) {
      return absl::InvalidArgumentError(
          "synthetic data needs synthetic_dim >= 1 and >= 2 classes");
    }
    Dataset all = SyntheticDataset(n_train + n_test, config.synthetic_dim,
                                   config.synthetic_classes, config.train.seed);
    train = Rows(all, 0, n_train);
    test = Rows(all, n_train, n_train + n_test);
  } else {
    const std::string dir = config.ResolvedDataDir();
    for (const char* split : {"train", "t10k"}) {
      const auto files = MnistSplitFiles(dir, split);
      const char* roles[] = {"images", "labels"};
      for (int k = 0; k < 2; ++k) {
        auto hash = HashFile(files[k]);
        if (!hash.ok()) return hash.status();
        data.inputs.push_back(
            {absl::StrCat(split, "_", roles[k]), files[k], *hash});
      }
    }
    auto tr = LoadMnistSplit(dir, "train");
    if (!tr.ok()) return tr.status();
    auto te = LoadMnistSplit(dir, "t10k");
    if (!te.ok()) return te.status();
    train = config.train_limit ? Head(*tr, config.train_limit) : *tr;
    test = config.test_limit ? Head(*te, config.test_limit) : *te;
  }
  const FeatureBounds bounds = ComputeBounds(train);
  data.train = ScaleFeatures(train, bounds);
  data.test = ScaleFeatures(test, bounds);
  data.train.set_example_shape(train.example_shape());
  data.test.set_example_shape(test.example_shape());
  return data;
}

absl::Status CheckBudget(const RunConfig& config) {
  if (config.train.mechanism == Mechanism::kNoiseless) {
    return absl::OkStatus();
  }
  auto budget =
      PrivacyBudget::Split(config.train.epsilon, config.train.epsilon_split);
  if (!budget.ok()) return budget.status();
  return budget->Validate(config.train.mechanism);
}

absl::StatusOr<std::string> CmdPretrain(const RunConfig& config) {
  auto data = LoadRunData(config);
  if (!data.ok()) return data.status();
  auto net = Pretrain(config.train, data->train);
  if (!net.ok()) return net.status();
  auto acc = Evaluate(*net, data->test);
  if (!acc.ok()) return acc.status();
  const std::string path = OutPath(config, "pretrain.ckpt");
  if (absl::Status s = SaveCheckpoint(
          *net, PretrainSeed(config.train.seed),
          CheckpointMetadata(config, "relevance-model", *acc), path);
      !s.ok()) {
    return s;
  }
  Json summary;
  summary["checkpoint"] = path;
  summary["test_accuracy"] = *acc;
  summary["epochs"] = config.train.pretrain_epochs;
  if (absl::Status s = WriteJson(OutPath(config, "pretrain.json"), summary);
      !s.ok()) {
    return s;
  }
  return summary.dump();
}

absl::StatusOr<std::string> CmdRelevance(const RunConfig& config) {
  auto budget =
      PrivacyBudget::Split(config.train.epsilon, config.train.epsilon_split);
  if (!budget.ok()) return budget.status();
  if (absl::Status s = budget->Validate(Mechanism::kAdlm); !s.ok()) return s;
  auto data = LoadRunData(config);
  if (!data.ok()) return data.status();
  const std::string ckpt = config.checkpoint.empty()
                               ? OutPath(config, "pretrain.ckpt")
                               : config.checkpoint;
  auto net = LoadNetwork(ckpt);
  if (!net.ok()) return net.status();
  auto raw = AverageRelevance(
      *net, data->train,
      LrpOptions{config.train.mu, config.train.relevance_scale});
  if (!raw.ok()) return raw.status();
  auto priv = PrivatizeRelevance(*raw, budget->epsilon1, data->train.size(),
                                 config.train.seed);
  if (!priv.ok()) return priv.status();
  const BudgetAllocation alloc = AllocateBudget(priv->values, budget->epsilon2);
  std::string csv = "feature,relevance,private_relevance,beta,epsilon\n";
  for (size_t j = 0; j < raw->size(); ++j) {
    absl::StrAppend(&csv, j, ",", Json((*raw)[j]).dump(), ",",
                    Json(priv->values[j]).dump(), ",",
                    Json(alloc.beta[j]).dump(), ",",
                    Json(alloc.epsilon[j]).dump(), "\n");
  }
  const Shape& shape = data->train.example_shape();
  size_t width = raw->size(), height = 1;
  if (shape.size() >= 2 && NumElements(shape) == raw->size()) {
    width = shape.back();
    height = raw->size() / width;
  }
  const std::string csv_path = OutPath(config, "relevance.csv");
  const std::string pgm_path = OutPath(config, "relevance.pgm");
  if (absl::Status s = WriteFileAtomically(csv_path, csv); !s.ok()) return s;
  if (absl::Status s =
          WriteFileAtomically(pgm_path, EncodePgm(priv->values, width, height));
      !s.ok()) {
    return s;
  }
  Json summary;
  summary["csv"] = csv_path;
  summary["heatmap"] = pgm_path;
  summary["epsilon1"] = budget->epsilon1;
  summary["noise_scale"] = priv->scale;
  summary["floored_features"] = alloc.floored;
  return summary.dump();
}

absl::StatusOr<std::string> CmdTrain(const RunConfig& config) {
  if (absl::Status s = CheckBudget(config); !s.ok()) return s;
  auto data = LoadRunData(config);
  if (!data.ok()) return data.status();
  TrainOptions options;
  std::optional<Network> pretrained;
  if (!config.pretrained.empty() &&
      config.train.mechanism == Mechanism::kAdlm) {
    auto net = LoadNetwork(config.pretrained);
    if (!net.ok()) return net.status();
    pretrained.emplace(*std::move(net));
    options.pretrained = &*pretrained;
  }
  auto result = Train(config.train, data->train, &data->test, options);
  if (!result.ok()) return result.status();
  const auto& rows = result->metrics.rows();
  const double acc = rows.empty() || !rows.back().test_accuracy
                         ? 0.0
                         : *rows.back().test_accuracy;
  const std::string ckpt_bytes = EncodeCheckpoint(
      result->net, config.train.seed, CheckpointMetadata(config, "model", acc));
  const std::string metrics = result->metrics.ToCsv();
  const std::string ckpt_path = OutPath(config, "model.ckpt");
  const std::string metrics_path = OutPath(config, "metrics.csv");
  if (absl::Status s = WriteFileAtomically(ckpt_path, ckpt_bytes); !s.ok()) {
    return s;
  }
  if (absl::Status s = WriteFileAtomically(metrics_path, metrics); !s.ok()) {
    return s;
  }
  Json manifest;
  manifest["manifest_version"] = 1;
  manifest["command"] = "train";
  manifest["config"] = Json::parse(RunConfigToJson(config));
  manifest["seeds"] = {{"run", config.train.seed},
                       {"pretrain", PretrainSeed(config.train.seed)}};
  Json inputs = Json::object();
  for (const InputFile& f : data->inputs) {
    inputs[f.role] = {{"path", f.path}, {"git_blob", f.git_blob}};
  }
  if (config.dataset == "synthetic") {
    inputs["synthetic"] = {{"seed", config.train.seed},
                           {"dim", config.synthetic_dim},
                           {"classes", config.synthetic_classes}};
  }
  if (!config.pretrained.empty()) {
    auto h = HashFile(config.pretrained);
    if (!h.ok()) return h.status();
    inputs["pretrained"] = {{"path", config.pretrained}, {"git_blob", *h}};
  }
  manifest["inputs"] = inputs;
  manifest["outputs"] = {
      {"model.ckpt", GitBlobHash(ckpt_bytes)},
      {"metrics.csv", GitBlobHash(metrics)},
      // wall_ms varies run to run; this hash covers every other column.
      {"metrics_deterministic",
       GitBlobHash(result->metrics.DeterministicCsv())},
  };
  manifest["metrics_schema_version"] = MetricsLog::kSchemaVersion;
  const PerturbedDataset& pd = *result->perturbed;
  manifest["privacy"] = {
      {"mechanism", MechanismName(pd.mechanism)},
      {"epsilon", {pd.budget.epsilon1, pd.budget.epsilon2, pd.budget.epsilon3}},
      {"epsilon_spent", rows.empty() ? Json(nullptr)
                                     : (std::isfinite(rows.back().epsilon_spent)
                                            ? Json(rows.back().epsilon_spent)
                                            : Json("inf"))},
      {"sensitivity",
       {pd.sensitivities.relevance, pd.sensitivities.h0,
        pd.sensitivities.loss}},
      {"noise_multiplier", pd.noise_multiplier},
      {"raw_reads_during_loop", result->raw_reads_during_loop},
      {"laplace_draws_during_loop", result->laplace_draws_during_loop},
  };
  manifest["result"] = {{"test_accuracy", acc}};
  if (absl::Status s = WriteJson(OutPath(config, "manifest.json"), manifest);
      !s.ok()) {
    return s;
  }
  Json summary;
  summary["checkpoint"] = ckpt_path;
  summary["metrics"] = metrics_path;
  summary["test_accuracy"] = acc;
  summary["checkpoint_hash"] = GitBlobHash(ckpt_bytes);
  return summary.dump();
}

absl::StatusOr<std::string> CmdEval(const RunConfig& config) {
  auto data = LoadRunData(config);
  if (!data.ok()) return data.status();
  auto net = LoadNetwork(config.ResolvedCheckpoint());
  if (!net.ok()) return net.status();
  auto acc = Evaluate(*net, data->test);
  if (!acc.ok()) return acc.status();
  Json j;
  j["accuracy"] = *acc;
  if (absl::Status s = WriteJson(OutPath(config, "eval.json"), j); !s.ok()) {
    return s;
  }
  return j.dump();
}

absl::StatusOr<AuditOutcome> CmdAudit(const RunConfig& config) {
  AuditConfig ac;
  ac.epsilon = config.train.epsilon;
  ac.epsilon_split = config.train.epsilon_split;
  ac.batch_size = config.train.batch_size;
  ac.trials = config.audit_trials;
  ac.seed = config.train.seed;
  // Size the per-example checks for the configured model without loading
  // any data.
  Shape shape = {1, 28, 28};
  size_t classes = 10;
  if (config.dataset == "synthetic") {
    shape = {config.synthetic_dim};
    classes = config.synthetic_classes;
  }
  auto net = BuildNetwork(config.train.architecture, shape, classes);
  if (!net.ok()) return net.status();
  ac.d = NumElements(shape);
  ac.h0_width = net->h0_width();
  ac.top_hidden = NumElements(net->output_layer().input_shape);
  ac.num_classes = classes;
  auto suite = RunAuditSuite(ac);
  if (!suite.ok()) return suite.status();
  AuditOutcome out{suite->ToJson(), suite->AllAsExpected()};
  if (absl::Status s =
          WriteFileAtomically(OutPath(config, "audit.json"), out.json);
      !s.ok()) {
    return s;
  }
  return out;
}

}  // namespace adlm
