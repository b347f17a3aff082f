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

#include <doctest.h>

#include <string>

#include "droptriple/config.hpp"
#include "droptriple/error.hpp"
#include "test_util.hpp"

using namespace droptriple;
using nlohmann::json;

namespace {

std::string InvalidConfigMessage(const json& doc) {
  try {
    RunConfigFromJson(doc);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidConfig) return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("run config round trips through JSON") {
  RunConfig c;
  c.seed = 42;
  c.out_dir = "somewhere";
  c.corpus.num_actions = 9;
  c.corpus.pose_dim = 7;
  c.train.loss_kind = LossKind::kMaxOfHinges;
  c.train.loss.delta_hetero = 0.6;
  c.train.encoder.joint_dim = 10;
  c.eval.mode = RelevanceMode::kSemantic;
  c.Resolve();
  const RunConfig back = RunConfigFromJson(ToJson(c));
  CHECK(back == c);
  CHECK(back.train.encoder.pose_dim == 7);
  CHECK(back.corpus.seed == DeriveSeed(42, "corpus"));
  CHECK(back.train.seed == DeriveSeed(42, "train"));
}

TEST_CASE("defaults fill missing keys") {
  const RunConfig c = RunConfigFromJson(json{{"seed", 3}});
  CHECK(c.corpus.num_actions == CorpusConfig{}.num_actions);
  CHECK(c.train.total_epochs == TrainConfig{}.total_epochs);
  CHECK(c.train.loss.alpha == 0.2);
}

TEST_CASE("strict reading names the offending key") {
  CHECK(InvalidConfigMessage(json{{"trian", json::object()}}).find("trian") != std::string::npos);
  CHECK(InvalidConfigMessage(json{{"train", {{"epochs", 3}}}}).find("epochs") !=
        std::string::npos);
  CHECK(InvalidConfigMessage(json{{"train", {{"total_epochs", "many"}}}})
            .find("total_epochs") != std::string::npos);
  CHECK(InvalidConfigMessage(json{{"train", {{"total_epochs", -3}}}}).find("total_epochs") !=
        std::string::npos);
  CHECK(InvalidConfigMessage(json{{"corpus", {{"num_actions", 1}}}}).find("num_actions") !=
        std::string::npos);
  CHECK(InvalidConfigMessage(json{{"corpus", {{"seed", 5}}}}).find("seed") != std::string::npos);
  CHECK(InvalidConfigMessage(json{{"train", {{"loss", "cosine"}}}}) != "");
  CHECK(InvalidConfigMessage(json{{"train", {{"warmup_epochs", 9}, {"total_epochs", 4}}}})
            .find("warmup_epochs") != std::string::npos);
}

TEST_CASE("overrides") {
  json doc = json::object();
  ApplyOverride(doc, "train.total_epochs=7");
  ApplyOverride(doc, "train.encoder.joint_dim=12");
  ApplyOverride(doc, "train.loss=mh");
  ApplyOverride(doc, "eval.mode=\"semantic\"");
  const RunConfig c = RunConfigFromJson(doc);
  CHECK(c.train.total_epochs == 7);
  CHECK(c.train.encoder.joint_dim == 12);
  CHECK(c.train.loss_kind == LossKind::kMaxOfHinges);
  CHECK(c.eval.mode == RelevanceMode::kSemantic);
  CHECK_THROWS_AS(ApplyOverride(doc, "novalue"), Error);
  CHECK_THROWS_AS(ApplyOverride(doc, "=3"), Error);
  CHECK_THROWS_AS(ApplyOverride(doc, "train.total_epochs.x=3"), Error);
}

TEST_CASE("config files") {
  test::TempDir dir;
  test::WriteFile(dir / "good.json", R"({"seed": 9, "train": {"total_epochs": 4, "warmup_epochs": 1}})");
  const RunConfig c = LoadRunConfig(dir / "good.json");
  CHECK(c.seed == 9);
  CHECK(c.train.total_epochs == 4);
  test::WriteFile(dir / "bad.json", "{ not json");
  try {
    LoadRunConfig(dir / "bad.json");
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidConfig);
  }
  try {
    LoadRunConfig(dir / "missing.json");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIoError);
  }
}
