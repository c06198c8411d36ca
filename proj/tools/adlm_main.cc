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

// adlm: pretrain, relevance, train, eval and audit subcommands.
//
// Exit codes: 0 ok, 1 other error, 2 bad config or flag, 3 missing input,
// 4 invalid privacy budget, 5 audit failure, 6 training diverged.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "adlm/config.h"
#include "adlm/mechanism.h"
#include "adlm/run.h"

namespace {

enum ExitCode {
  kOk = 0,
  kOther = 1,
  kConfig = 2,
  kMissing = 3,
  kBudget = 4,
  kAuditFailed = 5,
  kDiverged = 6,
};

int ExitFor(const absl::Status& s) {
  switch (s.code()) {
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kFailedPrecondition:
      return kConfig;
    case absl::StatusCode::kNotFound:
      return kMissing;
    case absl::StatusCode::kAborted:
      return kDiverged;
    default:
      return kOther;
  }
}

int Fail(const absl::Status& s, int code) {
  std::cerr << "adlm: " << s.message() << "\n";
  return code;
}

std::string KeyHelp() {
  std::string out =
      "\nConfig keys (JSON file via --config, or --set KEY=VALUE):\n";
  for (const adlm::ConfigKey& k : adlm::ConfigKeys()) {
    absl::StrAppend(&out, "  ", k.name, " (", k.type, "): ", k.help, "\n");
  }
  absl::StrAppend(&out, "\nThe default data directory is $", adlm::kDataDirEnv,
                  ", else data/mnist.\n");
  return out;
}

// Flags that map onto one config key each.
struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr FlagSpec kFlags[] = {
    {"--mechanism", "mechanism", "adlm | ilm | noiseless"},
    {"--epsilon", "epsilon", "total privacy budget"},
    {"--epsilon-split", "epsilon_split", "fractions a,b,c of epsilon"},
    {"--batch-size", "batch_size", "examples per batch"},
    {"--epochs", "epochs", "training epochs"},
    {"--seed", "seed", "run seed"},
    {"--data-dir", "data_dir", "MNIST IDX directory"},
    {"--out-dir", "out_dir", "output directory"},
    {"--mu", "mu", "LRP stabilizer"},
    {"--checkpoint", "checkpoint", "checkpoint read by eval/relevance"},
    {"--pretrained", "pretrained", "pretrained relevance model for train"},
    {"--train-limit", "train_limit", "keep the first N training rows"},
    {"--test-limit", "test_limit", "keep the first N test rows"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Differentially private training with the adaptive Laplace "
      "mechanism."};
  app.footer(KeyHelp());
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> flag_values;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "JSON config or run manifest")
      ->check(CLI::ExistingFile);
  for (const FlagSpec& f : kFlags) {
    app.add_option(f.flag, flag_values[f.key], f.help);
  }
  app.add_option("--set", sets, "override any config key, KEY=VALUE");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"pretrain", "train the non-private relevance model"},
      {"relevance", "export private average relevance (CSV and PGM heatmap)"},
      {"train", "private training; writes model, metrics and manifest"},
      {"eval", "test accuracy of a checkpoint"},
      {"audit", "sensitivity and privacy-ratio checks"},
  };
  for (const auto& [name, help] : commands) {
    app.add_subcommand(name, help)->fallthrough();
  }
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kConfig;
  }

  adlm::RunConfig config;
  if (!config_path.empty()) {
    auto loaded = adlm::LoadRunConfig(config_path);
    if (!loaded.ok()) return Fail(loaded.status(), ExitFor(loaded.status()));
    config = *std::move(loaded);
  }
  for (const FlagSpec& f : kFlags) {
    if (app.count(f.flag) == 0) continue;
    if (absl::Status s = adlm::ApplyOverride(f.key, flag_values[f.key], config);
        !s.ok()) {
      return Fail(s, kConfig);
    }
  }
  for (const std::string& kv : sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      return Fail(absl::InvalidArgumentError(
                      absl::StrCat("--set expects KEY=VALUE, got '", kv, "'")),
                  kConfig);
    }
    if (absl::Status s =
            adlm::ApplyOverride(kv.substr(0, eq), kv.substr(eq + 1), config);
        !s.ok()) {
      return Fail(s, kConfig);
    }
  }

  const std::string command = app.get_subcommands().front()->get_name();

  // Budget problems get their own exit code, so check before any work.
  if (command == "train") {
    if (absl::Status s = adlm::CheckBudget(config); !s.ok()) {
      return Fail(s, kBudget);
    }
  } else if (command == "relevance" || command == "audit") {
    auto budget = adlm::PrivacyBudget::Split(config.train.epsilon,
                                             config.train.epsilon_split);
    absl::Status s = budget.status();
    if (s.ok()) s = budget->Validate(adlm::Mechanism::kAdlm);
    if (!s.ok()) return Fail(s, kBudget);
  }

  absl::StatusOr<std::string> summary;
  int success = kOk;
  if (command == "pretrain") {
    summary = adlm::CmdPretrain(config);
  } else if (command == "relevance") {
    summary = adlm::CmdRelevance(config);
  } else if (command == "train") {
    summary = adlm::CmdTrain(config);
  } else if (command == "eval") {
    summary = adlm::CmdEval(config);
  } else {
    auto audit = adlm::CmdAudit(config);
    if (!audit.ok()) {
      summary = audit.status();
    } else {
      summary = audit->json;
      if (!audit->passed) success = kAuditFailed;
    }
  }
  if (!summary.ok()) return Fail(summary.status(), ExitFor(summary.status()));
  std::cout << *summary;
  if (summary->empty() || summary->back() != '\n') std::cout << "\n";
  if (success == kAuditFailed) std::cerr << "adlm: audit check failed\n";
  return success;
}
