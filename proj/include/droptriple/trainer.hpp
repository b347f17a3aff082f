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

#ifndef DROPTRIPLE_TRAINER_HPP_
#define DROPTRIPLE_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "droptriple/corpus.hpp"
#include "droptriple/encoder.hpp"
#include "droptriple/loss.hpp"
#include "droptriple/optim.hpp"

namespace droptriple {

struct TrainConfig {
  LossKind loss_kind = LossKind::kDropTriple;
  LossConfig loss;
  std::size_t warmup_epochs = 5;  // epochs trained with sum-of-hinges first
  std::size_t total_epochs = 40;
  std::size_t batch_size = 32;
  double learning_rate = 2e-3;
  // Epochs are 0-based; from this epoch on the rate is multiplied by
  // lr_decay_factor.
  std::size_t lr_decay_epoch = 30;
  double lr_decay_factor = 0.1;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool validate_each_epoch = true;
  std::uint64_t seed = 1;
  EncoderConfig encoder;

  // Throws InvalidConfig naming the offending field.
  void Validate() const;
  double LearningRateAt(std::size_t epoch) const;
  LossKind LossAt(std::size_t epoch) const;
  bool operator==(const TrainConfig&) const = default;
};

// One aligned mini-batch: sample ids and, per sample, which of its texts
// fills the pair slot this epoch.
struct PairBatch {
  std::vector<std::size_t> samples;
  std::vector<std::size_t> texts;
};

// Shuffles `split` without replacement, cuts it into batches of batch_size,
// drops a trailing batch smaller than 2 and picks one text per sample
// uniformly. Throws EmptySplit for an empty split.
std::vector<PairBatch> MakeBatches(const Corpus& corpus,
                                   const std::vector<std::size_t>& split,
                                   std::size_t batch_size, Rng& rng);

struct EpochMetrics {
  std::size_t epoch = 0;  // 0-based
  double learning_rate = 0.0;
  LossKind loss_used = LossKind::kSumOfHinges;
  double mean_loss = 0.0;
  std::size_t batches = 0;
  std::size_t anchor_slots = 0;  // 2 x samples seen this epoch
  std::size_t dropped_m = 0;
  std::size_t dropped_t = 0;
  std::size_t empty_negset_anchors = 0;
  double max_grad_norm = 0.0;
  std::size_t large_grad_steps = 0;  // steps with gradient norm > 1e3
  double val_rsum_exact = 0.0;
  double val_rsum_semantic = 0.0;

  bool operator==(const EpochMetrics&) const = default;
};

inline constexpr int kCheckpointFormatVersion = 1;

// Full training state after `epoch` completed epochs.
struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  TrainConfig config;
  EncoderParams params;
  OptimizerState optimizer;
  std::size_t epoch = 0;
  Rng rng{0};
  std::vector<EpochMetrics> history;

  bool operator==(const Checkpoint& o) const {
    return format_version == o.format_version && config == o.config &&
           params == o.params && optimizer == o.optimizer &&
           epoch == o.epoch && rng == o.rng && history == o.history;
  }
};

struct TrainHooks {
  // Called before each epoch with the state about to be trained.
  std::function<void(const Checkpoint&)> before_epoch;
  // Called after each completed epoch.
  std::function<void(const Checkpoint&)> after_epoch;
};

// Fresh state: parameters and batching stream derived from config.seed.
Checkpoint StartTraining(const TrainConfig& config, const Corpus& corpus);

// Trains one epoch in place and appends its metrics.
void RunEpoch(Checkpoint& state, const Corpus& corpus);

// Continues until state.epoch == min(until_epoch, total_epochs).
void ContinueTraining(Checkpoint& state, const Corpus& corpus,
                      std::size_t until_epoch, const TrainHooks& hooks = {});

Checkpoint Train(const TrainConfig& config, const Corpus& corpus,
                 const TrainHooks& hooks = {});

// Checks that the corpus fits the encoder (pose_dim, vocabulary, lengths).
// Throws DimensionMismatch naming both sizes.
void CheckCompatible(const EncoderConfig& encoder, const Corpus& corpus);

// Versioned container: a text magic line, one JSON header line, then raw
// little-endian float64 blocks (parameters, first moments, second
// moments) and an 8-byte FNV-1a checksum of the blocks.
void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& path);
// Throws IoError, FormatVersionMismatch or CorruptRecord.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// CSV with one row per epoch; columns listed in kMetricsColumns.
void WriteMetricsCsv(const std::vector<EpochMetrics>& history,
                     const std::filesystem::path& path);
extern const char* const kMetricsColumns;

}  // namespace droptriple

#endif  // DROPTRIPLE_TRAINER_HPP_
