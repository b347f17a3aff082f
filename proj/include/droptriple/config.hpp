// Copyright 2026 The droptriple Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DROPTRIPLE_CONFIG_HPP_
#define DROPTRIPLE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "droptriple/corpus.hpp"
#include "droptriple/evaluator.hpp"
#include "droptriple/trainer.hpp"

namespace droptriple {

// JSON forms shared by config files, corpus manifests and checkpoints.
// Readers are strict: unknown keys and wrong types raise InvalidConfig
// naming the key; missing keys keep their defaults.
nlohmann::json ToJson(const EncoderConfig& c);
nlohmann::json ToJson(const CorpusConfig& c);
nlohmann::json ToJson(const TrainConfig& c);
EncoderConfig EncoderConfigFromJson(const nlohmann::json& j);
CorpusConfig CorpusConfigFromJson(const nlohmann::json& j);
TrainConfig TrainConfigFromJson(const nlohmann::json& j);

struct EvalOptions {
  RelevanceMode mode = RelevanceMode::kExactPair;
  std::string split = "test";  // test | train
  bool operator==(const EvalOptions&) const = default;
};

// Everything one CLI run needs. Component seeds are derived from `seed`:
// corpus.seed = DeriveSeed(seed, "corpus"), train.seed = DeriveSeed(seed,
// "train").
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "run";
  std::string corpus_path;  // empty: <out_dir>/corpus.jsonl
  bool snapshots = false;
  CorpusConfig corpus;
  TrainConfig train;
  EvalOptions eval;

  // Recomputes derived seeds and validates every section.
  void Resolve();
  std::filesystem::path CorpusPath() const;
  bool operator==(const RunConfig&) const = default;
};

nlohmann::json ToJson(const RunConfig& c);
RunConfig RunConfigFromJson(const nlohmann::json& j);

// Reads a JSON config file (IoError / InvalidConfig).
RunConfig LoadRunConfig(const std::filesystem::path& path);

// Applies "dotted.key=value" to a config JSON document; the value is parsed
// as JSON when possible and taken as a string otherwise.
void ApplyOverride(nlohmann::json& doc, std::string_view assignment);

}  // namespace droptriple

#endif  // DROPTRIPLE_CONFIG_HPP_
