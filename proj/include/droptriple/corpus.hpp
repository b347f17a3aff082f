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

#ifndef DROPTRIPLE_CORPUS_HPP_
#define DROPTRIPLE_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "droptriple/encoder.hpp"
#include "droptriple/numeric.hpp"

namespace droptriple {

inline constexpr int kCorpusFormatVersion = 1;

// Synthetic "atomic action" corpus. Every sample is a set of 1..3 distinct
// actions; its motion concatenates one prototype segment per action and each
// of its texts spells the actions' word tokens in order, with fillers.
struct CorpusConfig {
  std::size_t num_actions = 12;
  std::size_t pose_dim = 12;
  std::size_t segment_frames_min = 6;  // per action segment
  std::size_t segment_frames_max = 12;
  std::size_t max_actions_per_sample = 3;
  double noise_sigma = 0.3;
  // Constant added to every feature, like a root-height channel. Large
  // offsets make all motions look alike to a freshly initialized encoder.
  double feature_offset = 0.0;
  std::size_t texts_min = 1;
  std::size_t texts_max = 5;
  std::size_t filler_tokens = 8;  // filler vocabulary size
  std::size_t max_fillers = 2;    // fillers between consecutive action words
  std::size_t train_count = 600;
  std::size_t test_count = 100;
  double duplicate_rate = 0.3;
  std::uint64_t seed = 7;

  // Throws InvalidConfig naming the offending field.
  void Validate() const;
  std::size_t sample_count() const { return train_count + test_count; }
  bool operator==(const CorpusConfig&) const = default;
};

struct ActionVocabulary {
  std::vector<std::vector<std::size_t>> action_tokens;  // per action, 1..3
  std::vector<std::size_t> filler_tokens;
  std::size_t vocab_size = 0;
  bool operator==(const ActionVocabulary&) const = default;
};

struct CorpusSample {
  std::size_t id = 0;
  PoseSequence motion;
  std::vector<TokenSequence> texts;
  std::vector<std::size_t> actions;  // sorted, distinct
  std::uint64_t class_id = 0;        // bit a set <=> action a present

  bool operator==(const CorpusSample& o) const {
    return id == o.id && motion.frames == o.motion.frames &&
           texts == o.texts && actions == o.actions && class_id == o.class_id;
  }
};

struct CorpusManifest {
  int format_version = kCorpusFormatVersion;
  CorpusConfig config;
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> test_ids;
  bool operator==(const CorpusManifest&) const = default;
};

struct Corpus {
  CorpusManifest manifest;
  ActionVocabulary vocabulary;
  std::vector<CorpusSample> samples;

  bool operator==(const Corpus&) const = default;
  // Checks ids, class ids, split coverage and dimensions.
  void Validate() const;
  std::size_t max_text_length() const;
};

std::uint64_t ClassIdOf(const std::vector<std::size_t>& actions);

// Deterministic in config (including config.seed).
Corpus GenerateCorpus(const CorpusConfig& config);

// Line-delimited JSON: record 0 is the manifest, record k >= 1 is sample
// k - 1. Numeric matrices are written as space-separated %.17g decimals.
void SaveCorpus(const Corpus& corpus, const std::filesystem::path& path);
// Throws IoError, FormatVersionMismatch, or CorruptRecord carrying the
// zero-based record (line) index.
Corpus LoadCorpus(const std::filesystem::path& path);

// class size -> number of classes with that size.
std::map<std::size_t, std::size_t> ClassSizeHistogram(const Corpus& corpus);

}  // namespace droptriple

#endif  // DROPTRIPLE_CORPUS_HPP_
