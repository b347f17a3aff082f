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

#include "droptriple/corpus.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "droptriple/config.hpp"
#include "droptriple/error.hpp"

namespace droptriple {

using nlohmann::json;

namespace {

constexpr const char* kCorpusMagic = "droptriple-corpus";
constexpr std::size_t kSinusoidsPerFeature = 3;

[[noreturn]] void BadConfig(const char* field, const std::string& why) {
  throw Error(ErrorCode::kInvalidConfig, std::string(field) + " " + why);
}

// Sum of three sinusoids per feature, parameters fixed by the action seed.
struct Prototype {
  std::vector<double> amplitude;  // pose_dim x 3
  std::vector<double> frequency;
  std::vector<double> phase;
};

Prototype MakePrototype(std::uint64_t corpus_seed, std::size_t action,
                        std::size_t pose_dim) {
  Rng rng(DeriveSeed(corpus_seed, "action/" + std::to_string(action)));
  Prototype p;
  const std::size_t n = pose_dim * kSinusoidsPerFeature;
  p.amplitude.resize(n);
  p.frequency.resize(n);
  p.phase.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.amplitude[i] = rng.Uniform(0.3, 1.0);
    p.frequency[i] = rng.Uniform(0.5, 2.5);
    p.phase[i] = rng.Uniform(0.0, 2.0 * std::numbers::pi);
  }
  return p;
}

std::string FormatRow(std::span<const double> row) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < row.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
    if (i) out.push_back(' ');
    out += buf;
  }
  return out;
}

std::vector<double> ParseRow(const std::string& text, std::size_t expected,
                             std::size_t record) {
  std::vector<double> out;
  out.reserve(expected);
  const char* p = text.c_str();
  while (*p) {
    while (*p == ' ') ++p;
    if (!*p) break;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(p, &end);
    if (end == p || errno == ERANGE || !std::isfinite(v)) {
      throw Error(ErrorCode::kCorruptRecord, "bad number in motion row",
                  record);
    }
    out.push_back(v);
    p = end;
  }
  if (out.size() != expected) {
    throw Error(ErrorCode::kCorruptRecord,
                "motion row has " + std::to_string(out.size()) +
                    " values, expected " + std::to_string(expected),
                record);
  }
  return out;
}

}  // namespace

void CorpusConfig::Validate() const {
  if (num_actions < 2) BadConfig("num_actions", "must be >= 2");
  if (num_actions > 63) BadConfig("num_actions", "must be <= 63");
  if (pose_dim == 0) BadConfig("pose_dim", "must be positive");
  if (segment_frames_min == 0) BadConfig("segment_frames_min", "must be >= 1");
  if (segment_frames_max < segment_frames_min) {
    BadConfig("segment_frames_max", "must be >= segment_frames_min");
  }
  if (max_actions_per_sample == 0 || max_actions_per_sample > num_actions) {
    BadConfig("max_actions_per_sample", "must be in [1, num_actions]");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    BadConfig("noise_sigma", "must be >= 0");
  }
  if (!std::isfinite(feature_offset)) BadConfig("feature_offset", "must be finite");
  if (texts_min == 0) BadConfig("texts_min", "must be >= 1");
  if (texts_max < texts_min) BadConfig("texts_max", "must be >= texts_min");
  if (train_count == 0) BadConfig("train_count", "must be >= 1");
  if (sample_count() < 2) BadConfig("train_count", "plus test_count must be >= 2");
  if (!(duplicate_rate >= 0.0 && duplicate_rate <= 1.0)) {
    BadConfig("duplicate_rate", "must lie in [0, 1]");
  }
  if (max_fillers > 0 && filler_tokens == 0) {
    BadConfig("filler_tokens", "must be positive when max_fillers > 0");
  }
}

std::uint64_t ClassIdOf(const std::vector<std::size_t>& actions) {
  std::uint64_t id = 0;
  for (std::size_t a : actions) id |= std::uint64_t{1} << a;
  return id;
}

std::size_t Corpus::max_text_length() const {
  std::size_t n = 0;
  for (const auto& s : samples)
    for (const auto& t : s.texts) n = std::max(n, t.tokens.size());
  return n;
}

void Corpus::Validate() const {
  const std::size_t n = samples.size();
  if (n == 0) throw Error(ErrorCode::kInvalidBatch, "corpus has no samples");
  std::vector<int> seen(n, 0);
  for (const auto* split : {&manifest.train_ids, &manifest.test_ids}) {
    for (std::size_t id : *split) {
      if (id >= n || seen[id]++) {
        throw Error(ErrorCode::kCorruptRecord,
                    "split assignment is not a partition of sample ids", 0);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const CorpusSample& s = samples[i];
    const std::size_t record = i + 1;
    if (!seen[i]) {
      throw Error(ErrorCode::kCorruptRecord, "sample in no split", record);
    }
    if (s.id != i) throw Error(ErrorCode::kCorruptRecord, "sample id out of order", record);
    if (s.class_id != ClassIdOf(s.actions)) {
      throw Error(ErrorCode::kCorruptRecord, "class id does not match actions", record);
    }
    if (s.texts.empty() || s.motion.frames.rows() == 0) {
      throw Error(ErrorCode::kCorruptRecord, "sample without motion or text", record);
    }
    for (const auto& t : s.texts) {
      if (t.tokens.empty()) throw Error(ErrorCode::kCorruptRecord, "empty text", record);
      for (std::size_t tok : t.tokens) {
        if (tok >= vocabulary.vocab_size) {
          throw Error(ErrorCode::kCorruptRecord, "token outside vocabulary", record);
        }
      }
    }
    if (s.motion.frames.cols() != samples.front().motion.frames.cols()) {
      throw Error(ErrorCode::kCorruptRecord, "inconsistent pose_dim", record);
    }
  }
}

Corpus GenerateCorpus(const CorpusConfig& config) {
  config.Validate();
  Corpus corpus;
  corpus.manifest.config = config;
  Rng rng(DeriveSeed(config.seed, "corpus"));

  ActionVocabulary& vocab = corpus.vocabulary;
  std::size_t next_token = 0;
  vocab.action_tokens.resize(config.num_actions);
  for (auto& tokens : vocab.action_tokens) {
    const std::size_t count = 1 + rng.UniformIndex(3);
    for (std::size_t k = 0; k < count; ++k) tokens.push_back(next_token++);
  }
  for (std::size_t k = 0; k < config.filler_tokens; ++k) {
    vocab.filler_tokens.push_back(next_token++);
  }
  vocab.vocab_size = next_token;

  std::vector<Prototype> prototypes;
  for (std::size_t a = 0; a < config.num_actions; ++a) {
    prototypes.push_back(MakePrototype(config.seed, a, config.pose_dim));
  }

  const std::size_t n = config.sample_count();
  const std::size_t max_k = config.max_actions_per_sample;
  corpus.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    CorpusSample& s = corpus.samples[i];
    s.id = i;
    const bool reuse = i > 0 && rng.NextUnit() < config.duplicate_rate;
    if (reuse) {
      s.actions = corpus.samples[rng.UniformIndex(i)].actions;
    } else {
      const std::size_t k = 1 + rng.UniformIndex(max_k);
      std::vector<std::size_t> pool(config.num_actions);
      for (std::size_t a = 0; a < pool.size(); ++a) pool[a] = a;
      for (std::size_t j = 0; j < k; ++j) {
        std::swap(pool[j], pool[j + rng.UniformIndex(pool.size() - j)]);
      }
      s.actions.assign(pool.begin(), pool.begin() + static_cast<long>(k));
      std::sort(s.actions.begin(), s.actions.end());
    }
    s.class_id = ClassIdOf(s.actions);

    std::vector<Vector> rows;
    const std::size_t span = config.segment_frames_max - config.segment_frames_min + 1;
    for (std::size_t a : s.actions) {
      const std::size_t len = config.segment_frames_min + rng.UniformIndex(span);
      const Prototype& proto = prototypes[a];
      for (std::size_t t = 0; t < len; ++t) {
        const double u = len == 1 ? 0.0
                                  : static_cast<double>(t) /
                                        static_cast<double>(len - 1);
        Vector frame(config.pose_dim);
        for (std::size_t p = 0; p < config.pose_dim; ++p) {
          double v = config.feature_offset;
          for (std::size_t r = 0; r < kSinusoidsPerFeature; ++r) {
            const std::size_t k = p * kSinusoidsPerFeature + r;
            v += proto.amplitude[k] *
                 std::sin(2.0 * std::numbers::pi * proto.frequency[k] * u +
                          proto.phase[k]);
          }
          frame[p] = v + rng.Gaussian(0.0, config.noise_sigma);
        }
        rows.push_back(std::move(frame));
      }
    }
    s.motion.frames = Matrix::FromRows(rows);

    const std::size_t text_count =
        config.texts_min + rng.UniformIndex(config.texts_max - config.texts_min + 1);
    auto add_fillers = [&](TokenSequence& text) {
      if (config.max_fillers == 0) return;
      const std::size_t count = rng.UniformIndex(config.max_fillers + 1);
      for (std::size_t f = 0; f < count; ++f) {
        text.tokens.push_back(
            vocab.filler_tokens[rng.UniformIndex(vocab.filler_tokens.size())]);
      }
    };
    for (std::size_t t = 0; t < text_count; ++t) {
      TokenSequence text;
      for (std::size_t a : s.actions) {
        add_fillers(text);
        for (std::size_t tok : vocab.action_tokens[a]) text.tokens.push_back(tok);
      }
      add_fillers(text);
      s.texts.push_back(std::move(text));
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.UniformIndex(i)]);
  }
  corpus.manifest.train_ids.assign(order.begin(),
                                   order.begin() + static_cast<long>(config.train_count));
  corpus.manifest.test_ids.assign(order.begin() + static_cast<long>(config.train_count),
                                  order.end());
  std::sort(corpus.manifest.train_ids.begin(), corpus.manifest.train_ids.end());
  std::sort(corpus.manifest.test_ids.begin(), corpus.manifest.test_ids.end());
  return corpus;
}

void SaveCorpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());

  json manifest = {
      {"format", kCorpusMagic},
      {"version", corpus.manifest.format_version},
      {"sample_count", corpus.samples.size()},
      {"config", ToJson(corpus.manifest.config)},
      {"vocabulary",
       {{"vocab_size", corpus.vocabulary.vocab_size},
        {"action_tokens", corpus.vocabulary.action_tokens},
        {"filler_tokens", corpus.vocabulary.filler_tokens}}},
      {"splits",
       {{"train", corpus.manifest.train_ids},
        {"test", corpus.manifest.test_ids}}}};
  out << manifest.dump() << '\n';

  for (const CorpusSample& s : corpus.samples) {
    json rows = json::array();
    for (std::size_t f = 0; f < s.motion.frames.rows(); ++f) {
      rows.push_back(FormatRow(s.motion.frames.row(f)));
    }
    json texts = json::array();
    for (const auto& t : s.texts) texts.push_back(t.tokens);
    json record = {{"id", s.id},
                   {"actions", s.actions},
                   {"class", s.class_id},
                   {"frames", s.motion.frames.rows()},
                   {"pose_dim", s.motion.frames.cols()},
                   {"motion", rows},
                   {"texts", texts}};
    out << record.dump() << '\n';
  }
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

Corpus LoadCorpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kCorruptRecord, "missing manifest", 0);
  }
  Corpus corpus;
  std::size_t sample_count = 0;
  try {
    const json m = json::parse(line);
    if (m.at("format").get<std::string>() != kCorpusMagic) {
      throw Error(ErrorCode::kCorruptRecord, "not a corpus file", 0);
    }
    const int version = m.at("version").get<int>();
    if (version != kCorpusFormatVersion) {
      throw Error(ErrorCode::kFormatVersionMismatch,
                  "corpus format version " + std::to_string(version) +
                      ", this build reads version " +
                      std::to_string(kCorpusFormatVersion));
    }
    corpus.manifest.format_version = version;
    corpus.manifest.config = CorpusConfigFromJson(m.at("config"));
    sample_count = m.at("sample_count").get<std::size_t>();
    const json& v = m.at("vocabulary");
    corpus.vocabulary.vocab_size = v.at("vocab_size").get<std::size_t>();
    corpus.vocabulary.action_tokens =
        v.at("action_tokens").get<std::vector<std::vector<std::size_t>>>();
    corpus.vocabulary.filler_tokens =
        v.at("filler_tokens").get<std::vector<std::size_t>>();
    corpus.manifest.train_ids =
        m.at("splits").at("train").get<std::vector<std::size_t>>();
    corpus.manifest.test_ids =
        m.at("splits").at("test").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptRecord, e.what(), 0);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidConfig) {
      throw Error(ErrorCode::kCorruptRecord, e.what(), 0);
    }
    throw;
  }

  corpus.samples.reserve(sample_count);
  for (std::size_t i = 0; i < sample_count; ++i) {
    const std::size_t record = i + 1;
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::kCorruptRecord,
                  "file ends after " + std::to_string(i) + " of " +
                      std::to_string(sample_count) + " samples",
                  record);
    }
    try {
      const json r = json::parse(line);
      CorpusSample s;
      s.id = r.at("id").get<std::size_t>();
      s.actions = r.at("actions").get<std::vector<std::size_t>>();
      s.class_id = r.at("class").get<std::uint64_t>();
      const auto frames = r.at("frames").get<std::size_t>();
      const auto dim = r.at("pose_dim").get<std::size_t>();
      const json& rows = r.at("motion");
      if (!rows.is_array() || rows.size() != frames) {
        throw Error(ErrorCode::kCorruptRecord, "motion frame count", record);
      }
      s.motion.frames = Matrix(frames, dim);
      for (std::size_t f = 0; f < frames; ++f) {
        const auto values = ParseRow(rows[f].get<std::string>(), dim, record);
        std::copy(values.begin(), values.end(), s.motion.frames.row(f).begin());
      }
      for (const auto& t : r.at("texts")) {
        s.texts.push_back({t.get<std::vector<std::size_t>>()});
      }
      corpus.samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kCorruptRecord, e.what(), record);
    }
  }
  if (std::getline(in, line) && !line.empty()) {
    throw Error(ErrorCode::kCorruptRecord, "trailing data after samples",
                sample_count + 1);
  }
  corpus.Validate();
  return corpus;
}

std::map<std::size_t, std::size_t> ClassSizeHistogram(const Corpus& corpus) {
  std::map<std::uint64_t, std::size_t> sizes;
  for (const auto& s : corpus.samples) ++sizes[s.class_id];
  std::map<std::size_t, std::size_t> histogram;
  for (const auto& [id, size] : sizes) ++histogram[size];
  return histogram;
}

}  // namespace droptriple
