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

#include "droptriple/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "droptriple/config.hpp"
#include "droptriple/corpus.hpp"
#include "droptriple/error.hpp"
#include "droptriple/evaluator.hpp"
#include "droptriple/gradcheck.hpp"
#include "droptriple/trainer.hpp"

namespace droptriple {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
    case ErrorCode::kCorruptRecord:
      return kExitIoError;
    case ErrorCode::kFormatVersionMismatch:
      return kExitVersionMismatch;
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kTokenOutOfRange:
      return kExitDimensionMismatch;
    default:
      return kExitConfigError;
  }
}

// Options shared by the config-driven commands.
struct ConfigOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::string out;
};

void AddConfigOptions(CLI::App* cmd, ConfigOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON run config (defaults if omitted)");
  cmd->add_option("--seed", o.seed, "Top-level seed, overrides the config");
  cmd->add_option("--set", o.sets, "Override one key, e.g. train.total_epochs=10");
  cmd->add_option("--out", o.out, "Output directory")->required();
}

RunConfig ResolveConfig(const ConfigOptions& o) {
  json doc = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + o.config_path);
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidConfig,
                  "config " + o.config_path + " is not valid JSON: " + e.what());
    }
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::kInvalidConfig, "config must be a JSON object");
  }
  for (const std::string& s : o.sets) ApplyOverride(doc, s);
  if (o.seed) doc["seed"] = *o.seed;
  doc["out"] = o.out;
  return RunConfigFromJson(doc);
}

void PrepareOut(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create " + config.out_dir + ": " + ec.message());
  }
  std::ofstream echo(fs::path(config.out_dir) / "config.json",
                     std::ios::binary | std::ios::trunc);
  if (!echo) throw Error(ErrorCode::kIoError, "cannot write config echo");
  echo << ToJson(config).dump(2) << '\n';
}

int GenData(const ConfigOptions& o, std::ostream& out) {
  const RunConfig config = ResolveConfig(o);
  PrepareOut(config);
  const Corpus corpus = GenerateCorpus(config.corpus);
  const fs::path path = fs::path(config.out_dir) / "corpus.jsonl";
  SaveCorpus(corpus, path);
  out << "wrote " << path.string() << '\n'
      << "samples " << corpus.samples.size() << " (train "
      << corpus.manifest.train_ids.size() << ", test "
      << corpus.manifest.test_ids.size() << ")\n"
      << "equivalence classes by size:\n";
  for (const auto& [size, count] : ClassSizeHistogram(corpus)) {
    out << "  size " << size << ": " << count << '\n';
  }
  return kExitOk;
}

struct TrainOptions {
  ConfigOptions base;
  std::string loss;
  std::string resume;
  std::string corpus;
  bool snapshots = false;
  std::size_t stop_after = 0;
};

PairBatch SnapshotBatch(const Corpus& corpus, std::size_t size) {
  PairBatch batch;
  const auto& ids = corpus.manifest.train_ids;
  for (std::size_t k = 0; k < std::min(size, ids.size()); ++k) {
    batch.samples.push_back(ids[k]);
    batch.texts.push_back(0);
  }
  return batch;
}

int TrainCmd(TrainOptions& o, std::ostream& out) {
  if (!o.loss.empty()) o.base.sets.push_back("train.loss=\"" + o.loss + "\"");
  if (o.snapshots) o.base.sets.push_back("snapshots=true");
  if (!o.corpus.empty()) o.base.sets.push_back("corpus_path=\"" + o.corpus + "\"");
  const RunConfig config = ResolveConfig(o.base);
  const Corpus corpus = LoadCorpus(config.CorpusPath());

  Checkpoint state;
  if (o.resume.empty()) {
    state = StartTraining(config.train, corpus);
  } else {
    state = LoadCheckpoint(o.resume);
    if (!(state.config == config.train)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "resumed checkpoint was trained with a different train config");
    }
    out << "resuming at epoch " << state.epoch << '\n';
  }
  PrepareOut(config);

  const fs::path out_dir = config.out_dir;
  const fs::path snapshot_dir = out_dir / "snapshots";
  const PairBatch snapshot_batch =
      SnapshotBatch(corpus, config.train.batch_size);
  auto snapshot = [&](const Checkpoint& s) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%03zu.csv", s.epoch);
    ExportSimilaritySnapshot(s.params, corpus, snapshot_batch, s.epoch,
                             snapshot_dir / name);
  };
  if (config.snapshots) {
    fs::create_directories(snapshot_dir);
    if (state.epoch == 0) snapshot(state);
  }

  TrainHooks hooks;
  hooks.after_epoch = [&](const Checkpoint& s) {
    const EpochMetrics& m = s.history.back();
    char line[256];
    std::snprintf(line, sizeof(line),
                  "epoch %zu loss=%s lr=%.3g mean_loss=%.6f dropped=%zu/%zu "
                  "empty=%zu val_rsum=%.1f/%.1f\n",
                  m.epoch, std::string(LossKindName(m.loss_used)).c_str(),
                  m.learning_rate, m.mean_loss, m.dropped_m, m.dropped_t,
                  m.empty_negset_anchors, m.val_rsum_exact, m.val_rsum_semantic);
    out << line;
    if (config.snapshots) snapshot(s);
  };
  const std::size_t until =
      o.stop_after ? o.stop_after : config.train.total_epochs;
  ContinueTraining(state, corpus, until, hooks);

  SaveCheckpoint(state, out_dir / "checkpoint.bin");
  WriteMetricsCsv(state.history, out_dir / "metrics.csv");
  out << "wrote " << (out_dir / "checkpoint.bin").string() << " at epoch "
      << state.epoch << '\n';
  return kExitOk;
}

struct EvalOptionsCli {
  std::string checkpoint;
  std::string corpus;
  std::string mode = "exact";
  std::string split = "test";
  std::string out;
};

int EvalCmd(const EvalOptionsCli& o, std::ostream& out) {
  const RelevanceMode mode = ParseRelevanceMode(o.mode);
  if (o.split != "test" && o.split != "train") {
    throw Error(ErrorCode::kInvalidConfig, "split must be test or train");
  }
  const Checkpoint state = LoadCheckpoint(o.checkpoint);
  const Corpus corpus = LoadCorpus(o.corpus);
  CheckCompatible(state.params.config, corpus);
  const auto& ids =
      o.split == "test" ? corpus.manifest.test_ids : corpus.manifest.train_ids;
  const SplitEvaluation e = EvaluateSplit(state.params, corpus, ids, mode);
  out << "mode " << RelevanceModeName(mode) << ", split " << o.split << ", "
      << ids.size() << " samples\n"
      << FormatSummary(e);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    WriteReportCsv(e, fs::path(o.out) / "report.csv");
  }
  return kExitOk;
}

struct GradCheckCli {
  std::uint64_t seed = 1;
  std::string sizes;
  double alpha = 0.2;
  double delta_hetero = 0.7;
  double delta_homo = 0.9;
  std::string perturb;  // hidden self-test hook
};

// "batch=4,pose=3,model=4,word=4,joint=5,vocab=7,frames=6,tokens=5"; any
// subset of keys.
void ApplySizes(const std::string& list, GradCheckOptions& g) {
  std::stringstream items(list);
  std::string item;
  while (std::getline(items, item, ',')) {
    const auto eq = item.find('=');
    std::size_t value = 0;
    if (eq == std::string::npos ||
        std::sscanf(item.c_str() + eq + 1, "%zu", &value) != 1) {
      throw Error(ErrorCode::kInvalidConfig, "bad --sizes entry '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    if (key == "batch") g.batch_size = value;
    else if (key == "pose") g.encoder.pose_dim = value;
    else if (key == "model") g.encoder.model_dim = value;
    else if (key == "word") g.encoder.word_dim = value;
    else if (key == "joint") g.encoder.joint_dim = value;
    else if (key == "vocab") g.encoder.vocab_size = value;
    else if (key == "frames") g.encoder.max_frames = value;
    else if (key == "tokens") g.encoder.max_tokens = value;
    else throw Error(ErrorCode::kInvalidConfig, "unknown --sizes key '" + key + "'");
  }
  if (g.batch_size < 1) throw Error(ErrorCode::kInvalidConfig, "batch must be >= 1");
}

int GradCheckCmd(const GradCheckCli& o, std::ostream& out, std::ostream& err) {
  GradCheckOptions g;
  g.seed = o.seed;
  g.loss = {o.alpha, o.delta_hetero, o.delta_homo};
  ApplySizes(o.sizes, g);
  if (!o.perturb.empty()) {
    g.perturb = [name = o.perturb](LossKind, ParamGrads& grads) {
      bool found = false;
      grads.ForEachTensor([&](std::string_view n, Matrix& m) {
        if (n == name && !m.values().empty()) {
          m.values()[0] += 1e-2 * (1.0 + std::abs(m.values()[0]));
          found = true;
        }
      });
      if (!found) throw Error(ErrorCode::kInvalidConfig, "no tensor " + name);
    };
  }
  const GradCheckReport report = RunGradCheck(g);
  char line[160];
  for (const ComponentError& c : report.components) {
    std::snprintf(line, sizeof(line), "%-10s %-16s %.3e %s\n",
                  std::string(LossKindName(c.loss)).c_str(), c.tensor.c_str(),
                  c.relative_error,
                  c.relative_error <= report.tolerance ? "ok" : "FAIL");
    out << line;
  }
  if (const ComponentError* bad = report.worst_failure()) {
    err << "gradient check failed: " << LossKindName(bad->loss) << '/'
        << bad->tensor << " relative error " << bad->relative_error
        << " exceeds " << report.tolerance << '\n';
    return kExitGradCheckFailed;
  }
  out << "all components within " << report.tolerance << '\n';
  return kExitOk;
}

// "h:m,h:m,..." with each value a number.
std::vector<std::pair<double, double>> ParseGrid(const std::string& list) {
  std::vector<std::pair<double, double>> grid;
  std::stringstream items(list);
  std::string item;
  while (std::getline(items, item, ',')) {
    double h = 0.0, m = 0.0;
    char tail = 0;
    if (std::sscanf(item.c_str(), "%lf:%lf%c", &h, &m, &tail) != 2) {
      throw Error(ErrorCode::kInvalidConfig,
                  "grid entry '" + item + "' is not hetero:homo");
    }
    grid.emplace_back(h, m);
  }
  if (grid.empty()) throw Error(ErrorCode::kInvalidConfig, "grid is empty");
  return grid;
}

struct SweepOptions {
  ConfigOptions base;
  std::string grid;
  std::string corpus;
  int parallel_runs = 1;
};

int SweepCmd(SweepOptions& o, std::ostream& out) {
  const auto grid = ParseGrid(o.grid);
  if (o.parallel_runs < 1) {
    throw Error(ErrorCode::kInvalidConfig, "parallel-runs must be >= 1");
  }
  if (!o.corpus.empty()) o.base.sets.push_back("corpus_path=\"" + o.corpus + "\"");
  const RunConfig config = ResolveConfig(o.base);
  const Corpus corpus = LoadCorpus(config.CorpusPath());
  PrepareOut(config);
  const auto rows =
      ThresholdSweep(config.train, corpus, grid, config.eval.mode, o.parallel_runs);
  const fs::path path = fs::path(config.out_dir) / "sweep.csv";
  WriteSweepCsv(rows, path);
  char line[160];
  for (const SweepRow& r : rows) {
    std::snprintf(line, sizeof(line),
                  "delta_hetero=%.2f delta_homo=%.2f r_sum=%.1f final_loss=%.6f%s\n",
                  r.delta_hetero, r.delta_homo, r.r_sum, r.final_loss,
                  r.mh_equivalent ? " (max-of-hinges equivalent)" : "");
    out << line;
  }
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Cross-modal motion/text retrieval with false-negative-aware triplet losses",
               "droptriple"};
  app.require_subcommand(1);

  ConfigOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic corpus");
  AddConfigOptions(gen_cmd, gen);

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train the two encoders");
  AddConfigOptions(train_cmd, train.base);
  train_cmd->add_option("--loss", train.loss, "sh | mh | droptriple")
      ->check(CLI::IsMember({"sh", "mh", "droptriple"}));
  train_cmd->add_option("--resume", train.resume, "Checkpoint to continue from");
  train_cmd->add_option("--corpus", train.corpus,
                        "Corpus file (default <out>/corpus.jsonl)");
  train_cmd->add_flag("--snapshots", train.snapshots,
                      "Write intra-modal similarity snapshots per epoch");
  train_cmd->add_option("--stop-after", train.stop_after,
                        "Stop once this many epochs are complete");

  EvalOptionsCli eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("--corpus", eval.corpus)->required();
  eval_cmd->add_option("--mode", eval.mode, "exact | semantic");
  eval_cmd->add_option("--split", eval.split, "test | train");
  eval_cmd->add_option("--out", eval.out, "Directory for report.csv");

  GradCheckCli grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  grad_cmd->add_option("--seed", grad.seed);
  grad_cmd->add_option("--sizes", grad.sizes,
                       "e.g. batch=4,pose=3,model=4,word=4,joint=5,vocab=7,frames=6,tokens=5");
  grad_cmd->add_option("--alpha", grad.alpha);
  grad_cmd->add_option("--delta-hetero", grad.delta_hetero);
  grad_cmd->add_option("--delta-homo", grad.delta_homo);
  grad_cmd->add_option("--perturb", grad.perturb)->group("");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Threshold sweep over DropTriple runs");
  AddConfigOptions(sweep_cmd, sweep.base);
  sweep_cmd->add_option("--grid", sweep.grid, "hetero:homo pairs, e.g. 0.7:0.9,1:1")
      ->required();
  sweep_cmd->add_option("--corpus", sweep.corpus,
                        "Corpus file (default <out>/corpus.jsonl)");
  sweep_cmd->add_option("--parallel-runs", sweep.parallel_runs,
                        "Grid points trained concurrently (OpenMP)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    if (*gen_cmd) return GenData(gen, out);
    if (*train_cmd) return TrainCmd(train, out);
    if (*eval_cmd) return EvalCmd(eval, out);
    if (*grad_cmd) return GradCheckCmd(grad, out, err);
    if (*sweep_cmd) return SweepCmd(sweep, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return ExitCodeFor(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIoError;
  }
  return kExitConfigError;
}

}  // namespace droptriple
