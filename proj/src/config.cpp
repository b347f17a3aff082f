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

#include "droptriple/config.hpp"

#include <concepts>
#include <fstream>
#include <set>
#include <sstream>

#include "droptriple/error.hpp"

namespace droptriple {

using nlohmann::json;

namespace {

class StrictReader {
 public:
  StrictReader(const json& doc, std::string section)
      : doc_(doc), section_(std::move(section)) {
    if (!doc_.is_object()) Fail(section_.empty() ? "config" : section_, "must be an object");
  }

  template <typename T>
  void Get(const char* key, T& out) {
    seen_.insert(key);
    auto it = doc_.find(key);
    if (it == doc_.end()) return;
    Convert(*it, Name(key), out);
  }

  const json* Child(const char* key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  void Finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      if (!seen_.count(it.key())) Fail(Name(it.key()), "is not a known key");
    }
  }

 private:
  std::string Name(const std::string& key) const {
    return section_.empty() ? key : section_ + "." + key;
  }

  [[noreturn]] static void Fail(const std::string& name,
                                const std::string& why) {
    throw Error(ErrorCode::kInvalidConfig, name + " " + why);
  }

  template <std::unsigned_integral U>
  static void Convert(const json& v, const std::string& name, U& out) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      Fail(name, "must be a non-negative integer");
    out = v.get<U>();
  }
  static void Convert(const json& v, const std::string& name, double& out) {
    if (!v.is_number()) Fail(name, "must be a number");
    out = v.get<double>();
  }
  static void Convert(const json& v, const std::string& name, bool& out) {
    if (!v.is_boolean()) Fail(name, "must be true or false");
    out = v.get<bool>();
  }
  static void Convert(const json& v, const std::string& name,
                      std::string& out) {
    if (!v.is_string()) Fail(name, "must be a string");
    out = v.get<std::string>();
  }
  static void Convert(const json& v, const std::string& name, int& out) {
    if (!v.is_number_integer()) Fail(name, "must be an integer");
    out = v.get<int>();
  }

  const json& doc_;
  std::string section_;
  std::set<std::string> seen_;
};

}  // namespace

json ToJson(const EncoderConfig& c) {
  return {{"pose_dim", c.pose_dim},     {"model_dim", c.model_dim},
          {"word_dim", c.word_dim},     {"joint_dim", c.joint_dim},
          {"vocab_size", c.vocab_size}, {"max_frames", c.max_frames},
          {"max_tokens", c.max_tokens}};
}

EncoderConfig EncoderConfigFromJson(const json& j) {
  EncoderConfig c;
  StrictReader r(j, "encoder");
  r.Get("pose_dim", c.pose_dim);
  r.Get("model_dim", c.model_dim);
  r.Get("word_dim", c.word_dim);
  r.Get("joint_dim", c.joint_dim);
  r.Get("vocab_size", c.vocab_size);
  r.Get("max_frames", c.max_frames);
  r.Get("max_tokens", c.max_tokens);
  r.Finish();
  return c;
}

json ToJson(const CorpusConfig& c) {
  return {{"num_actions", c.num_actions},
          {"pose_dim", c.pose_dim},
          {"segment_frames_min", c.segment_frames_min},
          {"segment_frames_max", c.segment_frames_max},
          {"max_actions_per_sample", c.max_actions_per_sample},
          {"noise_sigma", c.noise_sigma},
          {"feature_offset", c.feature_offset},
          {"texts_min", c.texts_min},
          {"texts_max", c.texts_max},
          {"filler_tokens", c.filler_tokens},
          {"max_fillers", c.max_fillers},
          {"train_count", c.train_count},
          {"test_count", c.test_count},
          {"duplicate_rate", c.duplicate_rate},
          {"seed", c.seed}};
}

CorpusConfig CorpusConfigFromJson(const json& j) {
  CorpusConfig c;
  StrictReader r(j, "corpus");
  r.Get("num_actions", c.num_actions);
  r.Get("pose_dim", c.pose_dim);
  r.Get("segment_frames_min", c.segment_frames_min);
  r.Get("segment_frames_max", c.segment_frames_max);
  r.Get("max_actions_per_sample", c.max_actions_per_sample);
  r.Get("noise_sigma", c.noise_sigma);
  r.Get("feature_offset", c.feature_offset);
  r.Get("texts_min", c.texts_min);
  r.Get("texts_max", c.texts_max);
  r.Get("filler_tokens", c.filler_tokens);
  r.Get("max_fillers", c.max_fillers);
  r.Get("train_count", c.train_count);
  r.Get("test_count", c.test_count);
  r.Get("duplicate_rate", c.duplicate_rate);
  r.Get("seed", c.seed);
  r.Finish();
  return c;
}

json ToJson(const TrainConfig& c) {
  return {{"loss", std::string(LossKindName(c.loss_kind))},
          {"alpha", c.loss.alpha},
          {"delta_hetero", c.loss.delta_hetero},
          {"delta_homo", c.loss.delta_homo},
          {"warmup_epochs", c.warmup_epochs},
          {"total_epochs", c.total_epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"lr_decay_epoch", c.lr_decay_epoch},
          {"lr_decay_factor", c.lr_decay_factor},
          {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"validate_each_epoch", c.validate_each_epoch},
          {"seed", c.seed},
          {"encoder", ToJson(c.encoder)}};
}

TrainConfig TrainConfigFromJson(const json& j) {
  TrainConfig c;
  StrictReader r(j, "train");
  std::string loss = std::string(LossKindName(c.loss_kind));
  r.Get("loss", loss);
  c.loss_kind = ParseLossKind(loss);
  r.Get("alpha", c.loss.alpha);
  r.Get("delta_hetero", c.loss.delta_hetero);
  r.Get("delta_homo", c.loss.delta_homo);
  r.Get("warmup_epochs", c.warmup_epochs);
  r.Get("total_epochs", c.total_epochs);
  r.Get("batch_size", c.batch_size);
  r.Get("learning_rate", c.learning_rate);
  r.Get("lr_decay_epoch", c.lr_decay_epoch);
  r.Get("lr_decay_factor", c.lr_decay_factor);
  r.Get("weight_decay", c.weight_decay);
  r.Get("beta1", c.beta1);
  r.Get("beta2", c.beta2);
  r.Get("epsilon", c.epsilon);
  r.Get("validate_each_epoch", c.validate_each_epoch);
  r.Get("seed", c.seed);
  if (const json* enc = r.Child("encoder")) {
    c.encoder = EncoderConfigFromJson(*enc);
  }
  r.Finish();
  return c;
}

void RunConfig::Resolve() {
  corpus.seed = DeriveSeed(seed, "corpus");
  train.seed = DeriveSeed(seed, "train");
  // The encoder reads what the corpus produces.
  train.encoder.pose_dim = corpus.pose_dim;
  if (out_dir.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "out must not be empty");
  }
  if (eval.split != "test" && eval.split != "train") {
    throw Error(ErrorCode::kInvalidConfig, "eval.split must be test or train");
  }
  corpus.Validate();
  train.Validate();
}

std::filesystem::path RunConfig::CorpusPath() const {
  if (!corpus_path.empty()) return corpus_path;
  return std::filesystem::path(out_dir) / "corpus.jsonl";
}

json ToJson(const RunConfig& c) {
  json corpus = ToJson(c.corpus);
  corpus.erase("seed");
  json train = ToJson(c.train);
  train.erase("seed");
  train["encoder"].erase("pose_dim");
  return {{"seed", c.seed},
          {"out", c.out_dir},
          {"corpus_path", c.corpus_path},
          {"snapshots", c.snapshots},
          {"corpus", corpus},
          {"train", train},
          {"eval",
           {{"mode", std::string(RelevanceModeName(c.eval.mode))},
            {"split", c.eval.split}}},
          {"derived",
           {{"corpus_seed", c.corpus.seed}, {"train_seed", c.train.seed}}}};
}

RunConfig RunConfigFromJson(const json& j) {
  RunConfig c;
  StrictReader r(j, "");
  r.Get("seed", c.seed);
  r.Get("out", c.out_dir);
  r.Get("corpus_path", c.corpus_path);
  r.Get("snapshots", c.snapshots);
  // Informational echo of derived seeds; recomputed by Resolve().
  r.Child("derived");
  auto reject_seed = [](const json& section, const char* name) {
    if (section.is_object() && section.contains("seed")) {
      throw Error(ErrorCode::kInvalidConfig,
                  std::string(name) +
                      ".seed is derived; set the top-level seed instead");
    }
  };
  if (const json* s = r.Child("corpus")) {
    reject_seed(*s, "corpus");
    c.corpus = CorpusConfigFromJson(*s);
  }
  if (const json* s = r.Child("train")) {
    reject_seed(*s, "train");
    if (s->is_object() && s->contains("encoder") &&
        (*s)["encoder"].is_object() && (*s)["encoder"].contains("pose_dim")) {
      throw Error(ErrorCode::kInvalidConfig,
                  "train.encoder.pose_dim follows corpus.pose_dim");
    }
    c.train = TrainConfigFromJson(*s);
  }
  if (const json* s = r.Child("eval")) {
    StrictReader e(*s, "eval");
    std::string mode = std::string(RelevanceModeName(c.eval.mode));
    e.Get("mode", mode);
    c.eval.mode = ParseRelevanceMode(mode);
    e.Get("split", c.eval.split);
    e.Finish();
  }
  r.Finish();
  c.Resolve();
  return c;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open config " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig,
                "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return RunConfigFromJson(doc);
}

void ApplyOverride(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &doc;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!node->is_object()) {
      throw Error(ErrorCode::kInvalidConfig, key + " does not name a section");
    }
    node = &(*node)[path[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) {
    throw Error(ErrorCode::kInvalidConfig, key + " does not name a section");
  }
  (*node)[path.back()] = value;
}

}  // namespace droptriple
