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

#include "droptriple/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "droptriple/error.hpp"
#include "droptriple/evaluator.hpp"
#include "droptriple/kernels.hpp"

namespace droptriple {

namespace {

constexpr double kLargeGradNorm = 1e3;

[[noreturn]] void BadConfig(const char* field, const std::string& why) {
  throw Error(ErrorCode::kInvalidConfig, std::string(field) + " " + why);
}

}  // namespace

void TrainConfig::Validate() const {
  loss.Validate();
  encoder.Validate();
  if (total_epochs == 0) BadConfig("total_epochs", "must be >= 1");
  if (warmup_epochs > total_epochs) {
    BadConfig("warmup_epochs", "must be <= total_epochs");
  }
  if (batch_size < 2) BadConfig("batch_size", "must be >= 2");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    BadConfig("learning_rate", "must be > 0");
  }
  if (!(lr_decay_factor > 0.0) || !std::isfinite(lr_decay_factor)) {
    BadConfig("lr_decay_factor", "must be > 0");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    BadConfig("weight_decay", "must be >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0)) BadConfig("beta1", "must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) BadConfig("beta2", "must lie in [0, 1)");
  if (!(epsilon > 0.0)) BadConfig("epsilon", "must be > 0");
}

double TrainConfig::LearningRateAt(std::size_t epoch) const {
  return epoch >= lr_decay_epoch ? learning_rate * lr_decay_factor
                                 : learning_rate;
}

LossKind TrainConfig::LossAt(std::size_t epoch) const {
  return epoch < warmup_epochs ? LossKind::kSumOfHinges : loss_kind;
}

std::vector<PairBatch> MakeBatches(const Corpus& corpus,
                                   const std::vector<std::size_t>& split,
                                   std::size_t batch_size, Rng& rng) {
  if (split.empty()) throw Error(ErrorCode::kEmptySplit, "split has no samples");
  if (batch_size < 2) {
    throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 2");
  }
  std::vector<std::size_t> order = split;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.UniformIndex(i)]);
  }
  std::vector<PairBatch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    if (end - start < 2) break;
    PairBatch b;
    for (std::size_t k = start; k < end; ++k) {
      const std::size_t id = order[k];
      if (id >= corpus.samples.size()) {
        throw Error(ErrorCode::kEmptySplit,
                    "split names missing sample " + std::to_string(id));
      }
      b.samples.push_back(id);
      b.texts.push_back(rng.UniformIndex(corpus.samples[id].texts.size()));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

void CheckCompatible(const EncoderConfig& encoder, const Corpus& corpus) {
  for (const CorpusSample& s : corpus.samples) {
    if (s.motion.frames.cols() != encoder.pose_dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "corpus pose_dim " + std::to_string(s.motion.frames.cols()) +
                      " vs model pose_dim " + std::to_string(encoder.pose_dim));
    }
    if (s.motion.frames.rows() > encoder.max_frames) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "corpus motion of " + std::to_string(s.motion.frames.rows()) +
                      " frames vs model max_frames " +
                      std::to_string(encoder.max_frames));
    }
  }
  if (corpus.vocabulary.vocab_size > encoder.vocab_size) {
    throw Error(ErrorCode::kDimensionMismatch,
                "corpus vocab_size " +
                    std::to_string(corpus.vocabulary.vocab_size) +
                    " vs model vocab_size " +
                    std::to_string(encoder.vocab_size));
  }
  if (corpus.max_text_length() > encoder.max_tokens) {
    throw Error(ErrorCode::kDimensionMismatch,
                "corpus text length " +
                    std::to_string(corpus.max_text_length()) +
                    " vs model max_tokens " +
                    std::to_string(encoder.max_tokens));
  }
}

Checkpoint StartTraining(const TrainConfig& config, const Corpus& corpus) {
  config.Validate();
  CheckCompatible(config.encoder, corpus);
  Checkpoint state;
  state.config = config;
  state.params = InitParams(config.encoder, DeriveSeed(config.seed, "init"));
  state.optimizer = MakeOptimizerState(state.params, config.beta1,
                                       config.beta2, config.epsilon);
  state.rng = Rng(DeriveSeed(config.seed, "batches"));
  return state;
}

void RunEpoch(Checkpoint& state, const Corpus& corpus) {
  const TrainConfig& cfg = state.config;
  EpochMetrics metrics;
  metrics.epoch = state.epoch;
  metrics.learning_rate = cfg.LearningRateAt(state.epoch);
  metrics.loss_used = cfg.LossAt(state.epoch);

  const auto batches = MakeBatches(corpus, corpus.manifest.train_ids,
                                   cfg.batch_size, state.rng);
  double loss_total = 0.0;
  for (const PairBatch& batch : batches) {
    kernels::MotionRefs motions;
    kernels::TextRefs texts;
    for (std::size_t k = 0; k < batch.samples.size(); ++k) {
      const CorpusSample& s = corpus.samples[batch.samples[k]];
      motions.push_back(&s.motion);
      texts.push_back(&s.texts[batch.texts[k]]);
    }
    const auto motion_caches =
        kernels::parallel::EncodeMotions(state.params, motions);
    const auto text_caches = kernels::parallel::EncodeTexts(state.params, texts);
    const BatchEmbeddings embedded{kernels::StackEmbeddings(motion_caches),
                                   kernels::StackEmbeddings(text_caches)};
    const LossResult loss = ComputeLoss(metrics.loss_used, embedded, cfg.loss);

    ParamGrads grads;
    grads.config = state.params.config;
    grads.motion = kernels::parallel::BackwardMotions(
        state.params, motion_caches, loss.grad_motion);
    grads.text = kernels::parallel::BackwardTexts(state.params, text_caches,
                                                  loss.grad_text);
    const double norm = GlobalNorm(grads);
    metrics.max_grad_norm = std::max(metrics.max_grad_norm, norm);
    if (norm > kLargeGradNorm) ++metrics.large_grad_steps;
    AdamWStep(state.params, grads, state.optimizer, metrics.learning_rate,
              cfg.weight_decay);

    loss_total += loss.value;
    ++metrics.batches;
    metrics.anchor_slots += 2 * batch.samples.size();
    metrics.dropped_m += loss.diagnostics.dropped_count_m;
    metrics.dropped_t += loss.diagnostics.dropped_count_t;
    metrics.empty_negset_anchors += loss.diagnostics.empty_negset_anchors;
  }
  metrics.mean_loss =
      metrics.batches ? loss_total / static_cast<double>(metrics.batches) : 0.0;

  if (cfg.validate_each_epoch && !corpus.manifest.test_ids.empty()) {
    const SplitEmbeddings embedded =
        EmbedSplit(state.params, corpus, corpus.manifest.test_ids);
    metrics.val_rsum_exact =
        EvaluateEmbeddings(embedded, corpus, RelevanceMode::kExactPair).r_sum;
    metrics.val_rsum_semantic =
        EvaluateEmbeddings(embedded, corpus, RelevanceMode::kSemantic).r_sum;
  }
  state.history.push_back(metrics);
  ++state.epoch;
}

void ContinueTraining(Checkpoint& state, const Corpus& corpus,
                      std::size_t until_epoch, const TrainHooks& hooks) {
  state.config.Validate();
  CheckCompatible(state.config.encoder, corpus);
  const std::size_t stop = std::min(until_epoch, state.config.total_epochs);
  while (state.epoch < stop) {
    if (hooks.before_epoch) hooks.before_epoch(state);
    RunEpoch(state, corpus);
    if (hooks.after_epoch) hooks.after_epoch(state);
  }
}

Checkpoint Train(const TrainConfig& config, const Corpus& corpus,
                 const TrainHooks& hooks) {
  Checkpoint state = StartTraining(config, corpus);
  ContinueTraining(state, corpus, config.total_epochs, hooks);
  return state;
}

const char* const kMetricsColumns =
    "epoch,learning_rate,loss,mean_loss,batches,anchor_slots,dropped_m,"
    "dropped_t,empty_negset_anchors,max_grad_norm,large_grad_steps,"
    "val_rsum_exact,val_rsum_semantic";

void WriteMetricsCsv(const std::vector<EpochMetrics>& history,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << kMetricsColumns << '\n';
  char buf[512];
  for (const EpochMetrics& m : history) {
    std::snprintf(buf, sizeof(buf),
                  "%zu,%.17g,%s,%.17g,%zu,%zu,%zu,%zu,%zu,%.17g,%zu,%.1f,%.1f\n",
                  m.epoch, m.learning_rate,
                  std::string(LossKindName(m.loss_used)).c_str(), m.mean_loss,
                  m.batches, m.anchor_slots, m.dropped_m, m.dropped_t,
                  m.empty_negset_anchors, m.max_grad_norm, m.large_grad_steps,
                  m.val_rsum_exact, m.val_rsum_semantic);
    out << buf;
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

}  // namespace droptriple
