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

// Python bindings: configs and subcommands travel as JSON text, numeric
// helpers as plain floats and lists.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "adlm/approx_loss.h"
#include "adlm/config.h"
#include "adlm/mechanism.h"
#include "adlm/run.h"

namespace py = pybind11;

namespace {

[[noreturn]] void Raise(const absl::Status& s) {
  const std::string msg(s.message());
  switch (s.code()) {
    case absl::StatusCode::kNotFound:
      PyErr_SetString(PyExc_FileNotFoundError, msg.c_str());
      throw py::error_already_set();
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kOutOfRange:
      throw py::value_error(msg);
    default:
      throw std::runtime_error(msg);
  }
}

template <typename T>
T Unwrap(absl::StatusOr<T> v) {
  if (!v.ok()) Raise(v.status());
  return *std::move(v);
}

adlm::RunConfig ConfigFrom(const std::string& json) {
  return Unwrap(adlm::ParseRunConfig(json));
}

absl::StatusOr<std::string> Dispatch(const std::string& command,
                                     const adlm::RunConfig& config) {
  if (command == "pretrain") return adlm::CmdPretrain(config);
  if (command == "relevance") return adlm::CmdRelevance(config);
  if (command == "train") {
    if (absl::Status s = adlm::CheckBudget(config); !s.ok()) return s;
    return adlm::CmdTrain(config);
  }
  if (command == "eval") return adlm::CmdEval(config);
  if (command == "audit") {
    auto audit = adlm::CmdAudit(config);
    if (!audit.ok()) return audit.status();
    return audit->json;
  }
  return absl::InvalidArgumentError("unknown command '" + command + "'");
}

std::string Run(const std::string& command, const std::string& config_json) {
  const adlm::RunConfig config = ConfigFrom(config_json);
  absl::StatusOr<std::string> out;
  {
    py::gil_scoped_release release;
    out = Dispatch(command, config);
  }
  return Unwrap(std::move(out));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive Laplace mechanism core";

  m.def(
      "default_config", [] { return adlm::RunConfigToJson({}); },
      "Default run config as JSON text.");
  m.def(
      "normalize_config",
      [](const std::string& json) {
        return adlm::RunConfigToJson(ConfigFrom(json));
      },
      py::arg("config_json"),
      "Validate a config and return it with every key filled in.");
  m.def(
      "config_keys",
      [] {
        std::vector<std::tuple<std::string, std::string, std::string>> out;
        for (const adlm::ConfigKey& k : adlm::ConfigKeys()) {
          out.emplace_back(k.name, k.type, k.help);
        }
        return out;
      },
      "(name, type, help) for every config key.");
  m.def("run", &Run, py::arg("command"), py::arg("config_json"),
        "Run a subcommand; returns its JSON summary.");

  m.def("laplace_from_uniform", &adlm::LaplaceFromUniform, py::arg("u"),
        py::arg("scale"));
  m.def("relevance_sensitivity", &adlm::RelevanceSensitivity, py::arg("d"),
        py::arg("dataset_size"));
  m.def("h0_sensitivity", &adlm::H0Sensitivity, py::arg("h0_width"),
        py::arg("d"));
  m.def("loss_sensitivity", &adlm::LossSensitivity, py::arg("num_classes"),
        py::arg("top_hidden"));
  m.def("approximation_error_bound", &adlm::ApproximationErrorBound,
        py::arg("num_classes"));
  m.def(
      "allocate_budget",
      [](const std::vector<double>& relevance, double epsilon2) {
        const adlm::BudgetAllocation a =
            adlm::AllocateBudget(relevance, epsilon2);
        py::dict out;
        out["beta"] = a.beta;
        out["epsilon"] = a.epsilon;
        out["uniform_fallback"] = a.uniform_fallback;
        out["floored"] = a.floored;
        return out;
      },
      py::arg("private_relevance"), py::arg("epsilon2"));
}
