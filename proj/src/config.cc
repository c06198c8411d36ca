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

#include "adlm/config.h"

#include <cstdlib>
#include <functional>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "adlm/serialize.h"
#include "json.hpp"

namespace adlm {
namespace {

using Json = nlohmann::json;

struct Field {
  ConfigKey key;
  std::function<Json(const RunConfig&)> get;
  // Throws nlohmann::json::exception or std::invalid_argument on bad input.
  std::function<void(const Json&, RunConfig&)> set;
};

size_t ToSize(const Json& v) {
  if (!v.is_number_unsigned()) {
    throw std::invalid_argument("expected a non-negative integer");
  }
  return v.get<size_t>();
}

double ToDouble(const Json& v) {
  if (!v.is_number()) throw std::invalid_argument("expected a number");
  return v.get<double>();
}

std::string ToString(const Json& v) {
  if (!v.is_string()) throw std::invalid_argument("expected a string");
  return v.get<std::string>();
}

std::vector<std::string> ToStrings(const Json& v) {
  if (!v.is_array()) throw std::invalid_argument("expected a list of strings");
  std::vector<std::string> out;
  for (const Json& e : v) out.push_back(ToString(e));
  return out;
}

template <typename T>
T OrThrow(absl::StatusOr<T> v) {
  if (!v.ok()) throw std::invalid_argument(std::string(v.status().message()));
  return *std::move(v);
}

const std::vector<Field>& Fields() {
  static const std::vector<Field>* fields = new std::vector<Field>{
      {{"mechanism", "string", "adlm | ilm | noiseless"},
       [](const RunConfig& c) {
         return Json(MechanismName(c.train.mechanism));
       },
       [](const Json& v, RunConfig& c) {
         c.train.mechanism = OrThrow(ParseMechanism(ToString(v)));
       }},
      {{"epsilon", "number", "total privacy budget"},
       [](const RunConfig& c) { return Json(c.train.epsilon); },
       [](const Json& v, RunConfig& c) { c.train.epsilon = ToDouble(v); }},
      {{"epsilon_split", "[number x3]",
        "fractions of epsilon for relevance, features and loss; sum to 1"},
       [](const RunConfig& c) { return Json(c.train.epsilon_split); },
       [](const Json& v, RunConfig& c) {
         if (!v.is_array() || v.size() != 3) {
           throw std::invalid_argument("expected three numbers");
         }
         for (int i = 0; i < 3; ++i) c.train.epsilon_split[i] = ToDouble(v[i]);
       }},
      {{"batch_size", "integer", "examples per batch |L|"},
       [](const RunConfig& c) { return Json(c.train.batch_size); },
       [](const Json& v, RunConfig& c) { c.train.batch_size = ToSize(v); }},
      {{"epochs", "integer", "training epochs"},
       [](const RunConfig& c) { return Json(c.train.epochs); },
       [](const Json& v, RunConfig& c) { c.train.epochs = ToSize(v); }},
      {{"learning_rate", "number", "SGD step size"},
       [](const RunConfig& c) { return Json(c.train.learning_rate); },
       [](const Json& v, RunConfig& c) {
         c.train.learning_rate = ToDouble(v);
       }},
      {{"lr_decay", "number", "per-epoch learning-rate factor in (0, 1]"},
       [](const RunConfig& c) { return Json(c.train.lr_decay); },
       [](const Json& v, RunConfig& c) { c.train.lr_decay = ToDouble(v); }},
      {{"seed", "integer", "run seed; every random draw derives from it"},
       [](const RunConfig& c) { return Json(c.train.seed); },
       [](const Json& v, RunConfig& c) {
         if (!v.is_number_unsigned()) {
           throw std::invalid_argument("expected a non-negative integer");
         }
         c.train.seed = v.get<uint64_t>();
       }},
      {{"architecture", "[string]",
        "layers, e.g. dense:64 relu lrn conv:32:5 lrnconv flatten "
        "dense:10:nobias"},
       [](const RunConfig& c) { return Json(c.train.architecture); },
       [](const Json& v, RunConfig& c) {
         c.train.architecture = ToStrings(v);
       }},
      {{"pretrain_architecture", "[string]",
        "relevance model layers; empty uses architecture"},
       [](const RunConfig& c) { return Json(c.train.pretrain_architecture); },
       [](const Json& v, RunConfig& c) {
         c.train.pretrain_architecture = ToStrings(v);
       }},
      {{"pretrain_epochs", "integer", "epochs of the relevance model"},
       [](const RunConfig& c) { return Json(c.train.pretrain_epochs); },
       [](const Json& v, RunConfig& c) {
         c.train.pretrain_epochs = ToSize(v);
       }},
      {{"mu", "number", "LRP stabilizer"},
       [](const RunConfig& c) { return Json(c.train.mu); },
       [](const Json& v, RunConfig& c) { c.train.mu = ToDouble(v); }},
      {{"relevance_scale", "string", "symmetric ([-1, 1]) | unit ([0, 1])"},
       [](const RunConfig& c) {
         return Json(RelevanceScaleName(c.train.relevance_scale));
       },
       [](const Json& v, RunConfig& c) {
         c.train.relevance_scale = OrThrow(ParseRelevanceScale(ToString(v)));
       }},
      {{"lrn_momentum", "number", "running LRN range momentum"},
       [](const RunConfig& c) { return Json(c.train.lrn_momentum); },
       [](const Json& v, RunConfig& c) { c.train.lrn_momentum = ToDouble(v); }},
      {{"noiseless_loss", "string",
        "loss of the noiseless baseline: cross_entropy | taylor"},
       [](const RunConfig& c) {
         return Json(NoiselessLossName(c.train.noiseless_loss));
       },
       [](const Json& v, RunConfig& c) {
         c.train.noiseless_loss = OrThrow(ParseNoiselessLoss(ToString(v)));
       }},
      {{"noise_multiplier", "number",
        "scales every noise draw; anything but 1 voids the privacy claim"},
       [](const RunConfig& c) { return Json(c.train.noise_multiplier); },
       [](const Json& v, RunConfig& c) {
         c.train.noise_multiplier = ToDouble(v);
       }},
      {{"eval_every", "integer", "evaluate on the test split every N epochs"},
       [](const RunConfig& c) { return Json(c.train.eval_every); },
       [](const Json& v, RunConfig& c) { c.train.eval_every = ToSize(v); }},
      {{"log_every_step", "boolean", "one metrics row per step"},
       [](const RunConfig& c) { return Json(c.train.log_every_step); },
       [](const Json& v, RunConfig& c) {
         if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
         c.train.log_every_step = v.get<bool>();
       }},
      {{"dataset", "string", "mnist | synthetic"},
       [](const RunConfig& c) { return Json(c.dataset); },
       [](const Json& v, RunConfig& c) {
         c.dataset = ToString(v);
         if (c.dataset != "mnist" && c.dataset != "synthetic") {
           throw std::invalid_argument("expected mnist or synthetic");
         }
       }},
      {{"data_dir", "string",
        absl::StrCat("IDX directory; empty uses $", kDataDirEnv,
                     " or data/mnist")},
       [](const RunConfig& c) { return Json(c.data_dir); },
       [](const Json& v, RunConfig& c) { c.data_dir = ToString(v); }},
      {{"out_dir", "string", "run output directory"},
       [](const RunConfig& c) { return Json(c.out_dir); },
       [](const Json& v, RunConfig& c) { c.out_dir = ToString(v); }},
      {{"train_limit", "integer", "use the first N training examples (0: all)"},
       [](const RunConfig& c) { return Json(c.train_limit); },
       [](const Json& v, RunConfig& c) { c.train_limit = ToSize(v); }},
      {{"test_limit", "integer", "use the first N test examples (0: all)"},
       [](const RunConfig& c) { return Json(c.test_limit); },
       [](const Json& v, RunConfig& c) { c.test_limit = ToSize(v); }},
      {{"synthetic_dim", "integer", "feature count of synthetic data"},
       [](const RunConfig& c) { return Json(c.synthetic_dim); },
       [](const Json& v, RunConfig& c) { c.synthetic_dim = ToSize(v); }},
      {{"synthetic_classes", "integer", "class count of synthetic data"},
       [](const RunConfig& c) { return Json(c.synthetic_classes); },
       [](const Json& v, RunConfig& c) { c.synthetic_classes = ToSize(v); }},
      {{"checkpoint", "string",
        "model read by eval and relevance; empty: <out_dir>/model.ckpt"},
       [](const RunConfig& c) { return Json(c.checkpoint); },
       [](const Json& v, RunConfig& c) { c.checkpoint = ToString(v); }},
      {{"pretrained", "string",
        "relevance model checkpoint for adlm; empty trains one inline"},
       [](const RunConfig& c) { return Json(c.pretrained); },
       [](const Json& v, RunConfig& c) { c.pretrained = ToString(v); }},
      {{"audit_trials", "integer", "Monte Carlo trials per audit check"},
       [](const RunConfig& c) { return Json(c.audit_trials); },
       [](const Json& v, RunConfig& c) { c.audit_trials = ToSize(v); }},
  };
  return *fields;
}

}  // namespace

std::string RunConfig::ResolvedDataDir() const {
  if (!data_dir.empty()) return data_dir;
  if (const char* env = std::getenv(kDataDirEnv); env != nullptr && *env) {
    return env;
  }
  return "data/mnist";
}

std::string RunConfig::ResolvedCheckpoint() const {
  return checkpoint.empty() ? out_dir + "/model.ckpt" : checkpoint;
}

const std::vector<ConfigKey>& ConfigKeys() {
  static const std::vector<ConfigKey>* keys = [] {
    auto* out = new std::vector<ConfigKey>;
    for (const Field& f : Fields()) out->push_back(f.key);
    return out;
  }();
  return *keys;
}

absl::StatusOr<RunConfig> ParseRunConfig(std::string_view json_text) {
  Json doc = Json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    return absl::InvalidArgumentError("config is not valid JSON");
  }
  if (!doc.is_object()) {
    return absl::InvalidArgumentError("config must be a JSON object");
  }
  // A run manifest carries its resolved config.
  if (doc.contains("manifest_version") && doc.contains("config")) {
    doc = Json(doc["config"]);
    if (!doc.is_object()) {
      return absl::InvalidArgumentError("manifest config must be an object");
    }
  }
  RunConfig config;
  for (const auto& [key, value] : doc.items()) {
    const Field* field = nullptr;
    for (const Field& f : Fields()) {
      if (f.key.name == key) field = &f;
    }
    if (field == nullptr) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown config key '", key, "'"));
    }
    try {
      field->set(value, config);
    } catch (const std::exception& e) {
      return absl::InvalidArgumentError(
          absl::StrCat("config key '", key, "': ", e.what()));
    }
  }
  return config;
}

absl::StatusOr<RunConfig> LoadRunConfig(const std::string& path) {
  auto text = ReadFileBytes(path);
  if (!text.ok()) return text.status();
  auto config = ParseRunConfig(*text);
  if (!config.ok()) {
    return absl::Status(config.status().code(),
                        absl::StrCat(path, ": ", config.status().message()));
  }
  return config;
}

std::string RunConfigToJson(const RunConfig& config) {
  nlohmann::ordered_json ordered;
  for (const Field& f : Fields()) ordered[f.key.name] = f.get(config);
  return ordered.dump(2) + "\n";
}

absl::Status ApplyOverride(std::string_view key, std::string_view text,
                           RunConfig& config) {
  const Field* field = nullptr;
  for (const Field& f : Fields()) {
    if (f.key.name == key) field = &f;
  }
  if (field == nullptr) {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown config key '", std::string(key), "'"));
  }
  auto scalar = [](std::string_view t) {
    Json v = Json::parse(t, nullptr, /*allow_exceptions=*/false);
    return v.is_discarded() ? Json(std::string(t)) : v;
  };
  Json value = scalar(text);
  if (field->get(config).is_array() && !value.is_array()) {
    value = Json::array();
    for (absl::string_view part :
         absl::StrSplit(absl::string_view(text.data(), text.size()), ',')) {
      value.push_back(scalar(std::string_view(part.data(), part.size())));
    }
  }
  try {
    field->set(value, config);
  } catch (const std::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("config key '", std::string(key), "': ", e.what()));
  }
  return absl::OkStatus();
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  for (const Field& f : Fields()) {
    if (f.get(a) != f.get(b)) return false;
  }
  return true;
}

std::string RelevanceScaleName(RelevanceScale s) {
  return s == RelevanceScale::kUnit ? "unit" : "symmetric";
}

absl::StatusOr<RelevanceScale> ParseRelevanceScale(std::string_view name) {
  if (name == "symmetric") return RelevanceScale::kSymmetric;
  if (name == "unit") return RelevanceScale::kUnit;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown relevance scale '", std::string(name), "'"));
}

std::string NoiselessLossName(NoiselessLoss l) {
  return l == NoiselessLoss::kTaylor ? "taylor" : "cross_entropy";
}

absl::StatusOr<NoiselessLoss> ParseNoiselessLoss(std::string_view name) {
  if (name == "cross_entropy") return NoiselessLoss::kCrossEntropy;
  if (name == "taylor") return NoiselessLoss::kTaylor;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown noiseless loss '", std::string(name), "'"));
}

}  // namespace adlm
