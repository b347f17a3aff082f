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

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "droptriple/cli.hpp"
#include "droptriple/corpus.hpp"
#include "droptriple/numeric.hpp"
#include "test_util.hpp"

using namespace droptriple;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result Run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = RunCli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// A config small enough for sub-second runs.
std::string WriteSmallConfig(const test::TempDir& dir) {
  const auto path = dir / "small.json";
  test::WriteFile(path, R"({
  "seed": 4,
  "corpus": {"train_count": 40, "test_count": 10},
  "train": {"total_epochs": 4, "warmup_epochs": 1, "lr_decay_epoch": 3,
            "batch_size": 10,
            "encoder": {"model_dim": 8, "word_dim": 8, "joint_dim": 8}}
})");
  return path.string();
}

// The six recalls and the R-sum from the summary's value line.
std::vector<double> SummaryNumbers(const std::string& out) {
  std::stringstream in(out);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  std::vector<double> v;
  std::stringstream values(last);
  for (double x; values >> x;) v.push_back(x);
  return v;
}

}  // namespace

TEST_CASE("gen-data writes a self-describing corpus") {
  test::TempDir dir;
  const std::string cfg = WriteSmallConfig(dir);
  const Result r = Run({"gen-data", "--config", cfg, "--out", (dir / "a").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("samples 50") != std::string::npos);
  CHECK(r.out.find("size 1:") != std::string::npos);
  const std::string manifest = test::ReadFile(dir / "a" / "corpus.jsonl");
  CHECK(manifest.find("\"seed\":" + std::to_string(DeriveSeed(4, "corpus"))) != std::string::npos);
  const std::string echo = test::ReadFile(dir / "a" / "config.json");
  CHECK(echo.find("\"seed\": 4") != std::string::npos);

  REQUIRE(Run({"gen-data", "--config", cfg, "--out", (dir / "b").string()}).code == 0);
  CHECK(test::ReadFile(dir / "a" / "corpus.jsonl") == test::ReadFile(dir / "b" / "corpus.jsonl"));

  // The echoed config alone reproduces the run.
  REQUIRE(Run({"gen-data", "--config", (dir / "a" / "config.json").string(), "--out",
               (dir / "c").string()})
              .code == 0);
  CHECK(test::ReadFile(dir / "a" / "corpus.jsonl") == test::ReadFile(dir / "c" / "corpus.jsonl"));

  REQUIRE(Run({"gen-data", "--config", cfg, "--seed", "5", "--out", (dir / "d").string()}).code == 0);
  CHECK(test::ReadFile(dir / "a" / "corpus.jsonl") != test::ReadFile(dir / "d" / "corpus.jsonl"));
}

TEST_CASE("configuration errors exit 2") {
  test::TempDir dir;
  const Result v1 = Run({"gen-data", "--set", "corpus.num_actions=1", "--out", (dir / "a").string()});
  CHECK(v1.code == 2);
  CHECK(v1.err.find("num_actions") != std::string::npos);
  CHECK(Run({"train", "--set", "train.warmup_epochs=50", "--out", (dir / "b").string()}).code == 2);
  CHECK(Run({"train", "--loss", "cosine", "--out", (dir / "b").string()}).code == 2);
  CHECK(Run({"frobnicate"}).code == 2);
  CHECK(Run({}).code == 2);
  CHECK(Run({"gen-data", "--config", (dir / "none.json").string(), "--out", (dir / "c").string()}).code == 3);
}

TEST_CASE("train writes checkpoint and metrics, deterministically") {
  test::TempDir dir;
  const std::string cfg = WriteSmallConfig(dir);
  const std::string out = (dir / "run").string();
  REQUIRE(Run({"gen-data", "--config", cfg, "--out", out}).code == 0);
  const Result a = Run({"train", "--config", cfg, "--out", out, "--loss", "droptriple", "--snapshots"});
  REQUIRE(a.code == 0);
  const std::string metrics = test::ReadFile(dir / "run" / "metrics.csv");
  CHECK(metrics.find("dropped_m,dropped_t,empty_negset_anchors") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "run" / "snapshots" / "epoch_000.csv"));
  CHECK(std::filesystem::exists(dir / "run" / "snapshots" / "epoch_004.csv"));

  const std::string corpus = (dir / "run" / "corpus.jsonl").string();
  REQUIRE(Run({"train", "--config", cfg, "--corpus", corpus, "--loss", "droptriple", "--out",
               (dir / "again").string()})
              .code == 0);
  CHECK(test::ReadFile(dir / "run" / "checkpoint.bin") ==
        test::ReadFile(dir / "again" / "checkpoint.bin"));
  CHECK(metrics == test::ReadFile(dir / "again" / "metrics.csv"));

  // Stop after two epochs, resume elsewhere, compare with the full run.
  REQUIRE(Run({"train", "--config", cfg, "--corpus", corpus, "--loss", "droptriple", "--out",
               (dir / "half").string(), "--stop-after", "2"})
              .code == 0);
  const Result resumed =
      Run({"train", "--config", cfg, "--corpus", corpus, "--loss", "droptriple", "--out",
           (dir / "rest").string(), "--resume", (dir / "half" / "checkpoint.bin").string()});
  REQUIRE(resumed.code == 0);
  CHECK(resumed.out.find("resuming at epoch 2") != std::string::npos);
  CHECK(test::ReadFile(dir / "run" / "checkpoint.bin") ==
        test::ReadFile(dir / "rest" / "checkpoint.bin"));
  CHECK(metrics == test::ReadFile(dir / "rest" / "metrics.csv"));

  // Resuming under a different training config is refused.
  CHECK(Run({"train", "--config", cfg, "--corpus", corpus, "--loss", "mh", "--out",
             (dir / "other").string(), "--resume", (dir / "half" / "checkpoint.bin").string()})
            .code == 2);
}

TEST_CASE("train error paths") {
  test::TempDir dir;
  const std::string cfg = WriteSmallConfig(dir);
  CHECK(Run({"train", "--config", cfg, "--out", (dir / "empty").string()}).code == 3);

  REQUIRE(Run({"gen-data", "--config", cfg, "--out", (dir / "run").string()}).code == 0);
  REQUIRE(Run({"train", "--config", cfg, "--out", (dir / "run").string(), "--stop-after", "1"}).code == 0);
  std::string bytes = test::ReadFile(dir / "run" / "checkpoint.bin");
  const auto header_end = bytes.find('\n', bytes.find('\n') + 1);
  const auto at = bytes.rfind("\"version\":1", header_end);
  REQUIRE(at != std::string::npos);
  bytes[at + 10] = '7';
  test::WriteFile(dir / "v7.bin", bytes);
  const Result r = Run({"train", "--config", cfg, "--out", (dir / "run").string(), "--resume",
                        (dir / "v7.bin").string()});
  CHECK(r.code == 4);
}

TEST_CASE("eval prints the table and checks dimensions") {
  test::TempDir dir;
  const std::string cfg = WriteSmallConfig(dir);
  const std::string out = (dir / "run").string();
  REQUIRE(Run({"gen-data", "--config", cfg, "--out", out}).code == 0);
  REQUIRE(Run({"train", "--config", cfg, "--out", out}).code == 0);
  const std::string ckpt = (dir / "run" / "checkpoint.bin").string();
  const std::string corpus = (dir / "run" / "corpus.jsonl").string();

  const Result e = Run({"eval", "--checkpoint", ckpt, "--corpus", corpus, "--mode", "semantic",
                        "--out", (dir / "eval").string()});
  REQUIRE(e.code == 0);
  CHECK(e.out.find("Motion Retrieval") != std::string::npos);
  const auto v = SummaryNumbers(e.out);
  REQUIRE(v.size() == 9);
  char sum[32];
  std::snprintf(sum, sizeof(sum), "%.1f", v[0] + v[1] + v[2] + v[4] + v[5] + v[6]);
  char printed[32];
  std::snprintf(printed, sizeof(printed), "%.1f", v[8]);
  CHECK(std::string(sum) == std::string(printed));
  CHECK(std::filesystem::exists(dir / "eval" / "report.csv"));

  // One test sample: every recall is 100.
  REQUIRE(Run({"gen-data", "--config", cfg, "--set", "corpus.test_count=1", "--out",
               (dir / "one").string()})
              .code == 0);
  const Result one =
      Run({"eval", "--checkpoint", ckpt, "--corpus", (dir / "one" / "corpus.jsonl").string()});
  REQUIRE(one.code == 0);
  const auto w = SummaryNumbers(one.out);
  REQUIRE(w.size() == 9);
  CHECK(w[0] == 100.0);
  CHECK(w[8] == 600.0);

  REQUIRE(Run({"gen-data", "--config", cfg, "--set", "corpus.pose_dim=6", "--out",
               (dir / "narrow").string()})
              .code == 0);
  const Result bad =
      Run({"eval", "--checkpoint", ckpt, "--corpus", (dir / "narrow" / "corpus.jsonl").string()});
  CHECK(bad.code == 5);
  CHECK(bad.err.find("6") != std::string::npos);
  CHECK(bad.err.find("12") != std::string::npos);
  CHECK(Run({"eval", "--checkpoint", ckpt, "--corpus", corpus, "--mode", "fuzzy"}).code == 2);
}

TEST_CASE("gradcheck") {
  const Result ok = Run({"gradcheck"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("droptriple") != std::string::npos);
  CHECK(ok.out.find("text.vocab") != std::string::npos);

  CHECK(Run({"gradcheck", "--seed", "17", "--sizes", "batch=6,model=6,joint=3"}).code == 0);

  const Result bad = Run({"gradcheck", "--perturb", "motion.w_proj"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("motion.w_proj") != std::string::npos);

  // Everything pruned: the DropTriple loss and its gradients vanish.
  const Result zero = Run({"gradcheck", "--delta-hetero", "-1", "--delta-homo", "-1"});
  CHECK(zero.code == 0);
  std::stringstream in(zero.out);
  int rows = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("droptriple", 0) != 0) continue;
    CHECK(line.find("0.000e+00") != std::string::npos);
    ++rows;
  }
  CHECK(rows == 9);
  CHECK(Run({"gradcheck", "--sizes", "batch=x"}).code == 2);
}

TEST_CASE("sweep") {
  test::TempDir dir;
  const std::string cfg = WriteSmallConfig(dir);
  const std::string out = (dir / "run").string();
  REQUIRE(Run({"gen-data", "--config", cfg, "--out", out}).code == 0);

  const Result s = Run({"sweep", "--config", cfg, "--out", out, "--grid", "0.7:0.9,1:1"});
  REQUIRE(s.code == 0);
  std::stringstream in(test::ReadFile(dir / "run" / "sweep.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "delta_hetero,delta_homo,r_sum,final_loss,mh_equivalent");
  CHECK(lines[2].rfind("1,1,", 0) == 0);

  // The (1, 1) row equals a max-of-hinges run with the same seed.
  REQUIRE(Run({"train", "--config", cfg, "--out", (dir / "mh").string(), "--corpus",
               (dir / "run" / "corpus.jsonl").string(), "--loss", "mh"})
              .code == 0);
  const Result e = Run({"eval", "--checkpoint", (dir / "mh" / "checkpoint.bin").string(),
                        "--corpus", (dir / "run" / "corpus.jsonl").string()});
  REQUIRE(e.code == 0);
  char rsum[32];
  std::snprintf(rsum, sizeof(rsum), "%.1f", SummaryNumbers(e.out)[8]);
  CHECK(lines[2].find(std::string(",") + rsum + ",") != std::string::npos);

  REQUIRE(Run({"sweep", "--config", cfg, "--out", out, "--grid", "0.5:0.5"}).code == 0);
  std::stringstream single(test::ReadFile(dir / "run" / "sweep.csv"));
  int rows = 0;
  for (std::string line; std::getline(single, line);) ++rows;
  CHECK(rows == 2);

  CHECK(Run({"sweep", "--config", cfg, "--out", out, "--grid", ""}).code == 2);
  CHECK(Run({"sweep", "--config", cfg, "--out", out, "--grid", "0.5"}).code == 2);
  CHECK(Run({"sweep", "--config", cfg, "--out", out, "--grid", "0.5:0.5:0.1"}).code == 2);
}

TEST_CASE("commands write only inside --out") {
  test::TempDir dir;
  const std::string cfg = WriteSmallConfig(dir);
  const std::string out = (dir / "only").string();
  REQUIRE(Run({"gen-data", "--config", cfg, "--out", out}).code == 0);
  REQUIRE(Run({"train", "--config", cfg, "--out", out, "--snapshots"}).code == 0);
  REQUIRE(Run({"sweep", "--config", cfg, "--out", out, "--grid", "1:1"}).code == 0);
  std::vector<std::string> entries;
  for (const auto& e : std::filesystem::directory_iterator(dir.path()))
    entries.push_back(e.path().filename().string());
  std::sort(entries.begin(), entries.end());
  CHECK(entries == std::vector<std::string>{"only", "small.json"});
}
