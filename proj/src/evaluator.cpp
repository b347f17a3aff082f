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

#include "droptriple/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "droptriple/error.hpp"
#include "droptriple/kernels.hpp"

namespace droptriple {

std::string_view RelevanceModeName(RelevanceMode mode) {
  return mode == RelevanceMode::kExactPair ? "exact" : "semantic";
}

RelevanceMode ParseRelevanceMode(std::string_view name) {
  if (name == "exact" || name == "exact_pair") return RelevanceMode::kExactPair;
  if (name == "semantic") return RelevanceMode::kSemantic;
  throw Error(ErrorCode::kInvalidConfig,
              "mode must be exact or semantic, got '" + std::string(name) + "'");
}

std::string_view DirectionName(Direction direction) {
  return direction == Direction::kMotionRetrieval ? "motion_retrieval"
                                                  : "text_retrieval";
}

double RoundToTenth(double value) { return std::round(value * 10.0) / 10.0; }

std::vector<std::size_t> RankQueries(const Matrix& similarity,
                                     const RelevanceMap& relevance) {
  if (relevance.size() != similarity.rows()) {
    throw Error(ErrorCode::kMissingRelevance,
                std::to_string(similarity.rows()) + " queries but " +
                    std::to_string(relevance.size()) + " relevance lists");
  }
  if (!similarity.all_finite()) {
    throw Error(ErrorCode::kDimensionMismatch, "similarities must be finite");
  }
  return kernels::parallel::RankQueries(similarity, relevance);
}

double RecallAtK(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) throw Error(ErrorCode::kEmptyRanks, "no ranks");
  const auto hits = std::count_if(ranks.begin(), ranks.end(),
                                  [k](std::size_t r) { return r <= k; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double MedianRank(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw Error(ErrorCode::kEmptyRanks, "no ranks");
  std::vector<std::size_t> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return static_cast<double>(sorted[n / 2]);
  return 0.5 * (static_cast<double>(sorted[n / 2 - 1]) +
                static_cast<double>(sorted[n / 2]));
}

RetrievalReport MakeReport(Direction direction, std::vector<std::size_t> ranks) {
  RetrievalReport r;
  r.direction = direction;
  for (int k : kReportedKs) {
    r.recall_at[k] = RoundToTenth(RecallAtK(ranks, static_cast<std::size_t>(k)));
  }
  r.median_rank = RoundToTenth(MedianRank(ranks));
  r.ranks = std::move(ranks);
  return r;
}

double RSum(const RetrievalReport& motion, const RetrievalReport& text) {
  double total = 0.0;
  for (const RetrievalReport* r : {&motion, &text}) {
    for (int k : kReportedKs) {
      auto it = r->recall_at.find(k);
      if (it == r->recall_at.end()) {
        throw Error(ErrorCode::kMissingK,
                    std::string(DirectionName(r->direction)) +
                        " report lacks R@" + std::to_string(k));
      }
      total += it->second;
    }
  }
  return RoundToTenth(total);
}

SplitEmbeddings EmbedSplit(const EncoderParams& params, const Corpus& corpus,
                           const std::vector<std::size_t>& split) {
  if (split.empty()) throw Error(ErrorCode::kEmptySplit, "split has no samples");
  SplitEmbeddings e;
  kernels::MotionRefs motions;
  kernels::TextRefs texts;
  for (std::size_t id : split) {
    if (id >= corpus.samples.size()) {
      throw Error(ErrorCode::kEmptySplit,
                  "split names missing sample " + std::to_string(id));
    }
    const CorpusSample& s = corpus.samples[id];
    e.motion_ids.push_back(id);
    motions.push_back(&s.motion);
    for (std::size_t t = 0; t < s.texts.size(); ++t) {
      e.text_ids.emplace_back(id, t);
      texts.push_back(&s.texts[t]);
    }
  }
  e.motion = kernels::StackEmbeddings(kernels::parallel::EncodeMotions(params, motions));
  e.text = kernels::StackEmbeddings(kernels::parallel::EncodeTexts(params, texts));
  return e;
}

SplitEvaluation EvaluateEmbeddings(const SplitEmbeddings& embedded,
                                   const Corpus& corpus, RelevanceMode mode) {
  // Gallery positions of each sample / class.
  std::unordered_map<std::size_t, std::vector<std::size_t>> motion_by_key;
  std::unordered_map<std::size_t, std::vector<std::size_t>> text_by_key;
  auto key_of = [&](std::size_t sample) -> std::size_t {
    return mode == RelevanceMode::kExactPair
               ? sample
               : static_cast<std::size_t>(corpus.samples[sample].class_id);
  };
  for (std::size_t g = 0; g < embedded.motion_ids.size(); ++g) {
    motion_by_key[key_of(embedded.motion_ids[g])].push_back(g);
  }
  for (std::size_t q = 0; q < embedded.text_ids.size(); ++q) {
    text_by_key[key_of(embedded.text_ids[q].first)].push_back(q);
  }

  RelevanceMap motion_relevance(embedded.text_ids.size());
  for (std::size_t q = 0; q < embedded.text_ids.size(); ++q) {
    motion_relevance[q] = motion_by_key[key_of(embedded.text_ids[q].first)];
  }
  RelevanceMap text_relevance(embedded.motion_ids.size());
  for (std::size_t g = 0; g < embedded.motion_ids.size(); ++g) {
    text_relevance[g] = text_by_key[key_of(embedded.motion_ids[g])];
  }

  SplitEvaluation out;
  out.motion = MakeReport(
      Direction::kMotionRetrieval,
      RankQueries(kernels::parallel::Gram(embedded.text, embedded.motion),
                  motion_relevance));
  out.text = MakeReport(
      Direction::kTextRetrieval,
      RankQueries(kernels::parallel::Gram(embedded.motion, embedded.text),
                  text_relevance));
  out.r_sum = RSum(out.motion, out.text);
  return out;
}

SplitEvaluation EvaluateSplit(const EncoderParams& params, const Corpus& corpus,
                              const std::vector<std::size_t>& split,
                              RelevanceMode mode) {
  return EvaluateEmbeddings(EmbedSplit(params, corpus, split), corpus, mode);
}

SimilaritySnapshot ComputeSimilaritySnapshot(const EncoderParams& params,
                                             const Corpus& corpus,
                                             const PairBatch& batch,
                                             std::size_t epoch) {
  if (batch.samples.empty() || batch.samples.size() != batch.texts.size()) {
    throw Error(ErrorCode::kInvalidBatch, "snapshot batch is empty or ragged");
  }
  kernels::MotionRefs motions;
  kernels::TextRefs texts;
  for (std::size_t k = 0; k < batch.samples.size(); ++k) {
    const std::size_t id = batch.samples[k];
    if (id >= corpus.samples.size() ||
        batch.texts[k] >= corpus.samples[id].texts.size()) {
      throw Error(ErrorCode::kInvalidBatch, "snapshot batch names a missing item");
    }
    motions.push_back(&corpus.samples[id].motion);
    texts.push_back(&corpus.samples[id].texts[batch.texts[k]]);
  }
  const Matrix m = kernels::StackEmbeddings(kernels::parallel::EncodeMotions(params, motions));
  const Matrix t = kernels::StackEmbeddings(kernels::parallel::EncodeTexts(params, texts));
  return {epoch, kernels::parallel::Gram(m, m), kernels::parallel::Gram(t, t)};
}

void WriteSimilaritySnapshot(const SimilaritySnapshot& snapshot,
                             const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << "# similarity-snapshot epoch=" << snapshot.epoch
      << " size=" << snapshot.motion.rows() << '\n';
  char buf[32];
  for (const auto& [name, m] :
       {std::pair{"motion", &snapshot.motion}, std::pair{"text", &snapshot.text}}) {
    out << "# " << name << '\n';
    for (std::size_t r = 0; r < m->rows(); ++r) {
      for (std::size_t c = 0; c < m->cols(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", (*m)(r, c));
        if (c) out << ',';
        out << buf;
      }
      out << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

void ExportSimilaritySnapshot(const EncoderParams& params, const Corpus& corpus,
                              const PairBatch& batch, std::size_t epoch,
                              const std::filesystem::path& path) {
  WriteSimilaritySnapshot(ComputeSimilaritySnapshot(params, corpus, batch, epoch),
                          path);
}

SimilaritySnapshot ReadSimilaritySnapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::string line;
  SimilaritySnapshot snap;
  std::size_t size = 0;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# similarity-snapshot epoch=%zu size=%zu",
                  &snap.epoch, &size) != 2) {
    throw Error(ErrorCode::kCorruptRecord, "bad snapshot header", 0);
  }
  std::size_t record = 1;
  auto read_section = [&](const char* name) {
    if (!std::getline(in, line) || line != std::string("# ") + name) {
      throw Error(ErrorCode::kCorruptRecord,
                  std::string("missing ") + name + " section", record);
    }
    ++record;
    Matrix m(size, size);
    for (std::size_t r = 0; r < size; ++r, ++record) {
      if (!std::getline(in, line)) {
        throw Error(ErrorCode::kCorruptRecord, "truncated matrix", record);
      }
      std::stringstream cells(line);
      std::string cell;
      std::size_t c = 0;
      while (std::getline(cells, cell, ',')) {
        if (c >= size) throw Error(ErrorCode::kCorruptRecord, "row too long", record);
        m(r, c++) = std::stod(cell);
      }
      if (c != size) throw Error(ErrorCode::kCorruptRecord, "row too short", record);
    }
    return m;
  };
  snap.motion = read_section("motion");
  snap.text = read_section("text");
  return snap;
}

std::vector<SweepRow> ThresholdSweep(
    const TrainConfig& config, const Corpus& corpus,
    const std::vector<std::pair<double, double>>& grid, RelevanceMode mode,
    int parallel_runs) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidConfig, "threshold grid is empty");
  if (corpus.manifest.test_ids.empty()) {
    throw Error(ErrorCode::kEmptySplit, "sweep needs a test split");
  }
  std::vector<TrainConfig> configs;
  for (const auto& [hetero, homo] : grid) {
    TrainConfig c = config;
    c.loss_kind = LossKind::kDropTriple;
    c.loss.delta_hetero = hetero;
    c.loss.delta_homo = homo;
    c.validate_each_epoch = false;
    c.Validate();
    configs.push_back(c);
  }

  std::vector<SweepRow> rows(grid.size());
  auto run_point = [&](std::size_t i) {
    const Checkpoint done = Train(configs[i], corpus);
    SweepRow& row = rows[i];
    row.delta_hetero = grid[i].first;
    row.delta_homo = grid[i].second;
    row.r_sum = EvaluateSplit(done.params, corpus, corpus.manifest.test_ids, mode).r_sum;
    row.final_loss = done.history.back().mean_loss;
    row.mh_equivalent = grid[i].first == 1.0 && grid[i].second == 1.0;
  };

  if (parallel_runs <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) run_point(i);
    return rows;
  }
  std::exception_ptr failure;
  const long count = static_cast<long>(grid.size());
#ifdef DROPTRIPLE_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(parallel_runs)
#endif
  for (long i = 0; i < count; ++i) {
    try {
      run_point(static_cast<std::size_t>(i));
    } catch (...) {
#ifdef DROPTRIPLE_HAVE_OPENMP
#pragma omp critical(droptriple_sweep_failure)
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

void WriteSweepCsv(const std::vector<SweepRow>& rows,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << "delta_hetero,delta_homo,r_sum,final_loss,mh_equivalent\n";
  char buf[256];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.1f,%.17g,%d\n",
                  r.delta_hetero, r.delta_homo, r.r_sum, r.final_loss,
                  r.mh_equivalent ? 1 : 0);
    out << buf;
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

void WriteReportCsv(const SplitEvaluation& e, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << "motion_r1,motion_r5,motion_r10,motion_medr,"
         "text_r1,text_r5,text_r10,text_medr,r_sum\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.1f,%.1f,%.1f,%.1f,%.1f,%.1f,%.1f,%.1f,%.1f\n",
                e.motion.recall_at.at(1), e.motion.recall_at.at(5),
                e.motion.recall_at.at(10), e.motion.median_rank,
                e.text.recall_at.at(1), e.text.recall_at.at(5),
                e.text.recall_at.at(10), e.text.median_rank, e.r_sum);
  out << buf;
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

std::string FormatSummary(const SplitEvaluation& e) {
  char buf[512];
  std::string s;
  s += "               Motion Retrieval              Text Retrieval\n";
  s += "        R@1    R@5   R@10  Med R     R@1    R@5   R@10  Med R   R-sum\n";
  std::snprintf(buf, sizeof(buf),
                "     %6.1f %6.1f %6.1f %6.1f  %6.1f %6.1f %6.1f %6.1f  %6.1f\n",
                e.motion.recall_at.at(1), e.motion.recall_at.at(5),
                e.motion.recall_at.at(10), e.motion.median_rank,
                e.text.recall_at.at(1), e.text.recall_at.at(5),
                e.text.recall_at.at(10), e.text.median_rank, e.r_sum);
  s += buf;
  return s;
}

}  // namespace droptriple
