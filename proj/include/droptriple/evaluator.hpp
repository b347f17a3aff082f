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

#ifndef DROPTRIPLE_EVALUATOR_HPP_
#define DROPTRIPLE_EVALUATOR_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "droptriple/corpus.hpp"
#include "droptriple/encoder.hpp"
#include "droptriple/trainer.hpp"

namespace droptriple {

enum class RelevanceMode { kExactPair, kSemantic };
enum class Direction { kMotionRetrieval, kTextRetrieval };

std::string_view RelevanceModeName(RelevanceMode mode);  // exact|semantic
RelevanceMode ParseRelevanceMode(std::string_view name);
std::string_view DirectionName(Direction direction);

// Per query, the gallery indices counted as correct.
using RelevanceMap = std::vector<std::vector<std::size_t>>;

inline constexpr int kReportedKs[] = {1, 5, 10};

struct RetrievalReport {
  Direction direction = Direction::kMotionRetrieval;
  std::map<int, double> recall_at;  // percent, rounded to 1 decimal
  double median_rank = 0.0;         // rounded to 1 decimal
  std::vector<std::size_t> ranks;   // per query, 1-based
};

double RoundToTenth(double value);

// Rank of the best-ranked relevant item per query (similarity descending,
// ties by ascending gallery index). Throws MissingRelevance when a query
// has no relevant item or names one outside the gallery.
std::vector<std::size_t> RankQueries(const Matrix& similarity,
                                     const RelevanceMap& relevance);

// 100 * |{rank <= k}| / |ranks|, unrounded. Throws EmptyRanks.
double RecallAtK(std::span<const std::size_t> ranks, std::size_t k);
// Middle order statistic; mean of the two central values for even counts.
double MedianRank(std::span<const std::size_t> ranks);

RetrievalReport MakeReport(Direction direction, std::vector<std::size_t> ranks);

// Sum of R@1, R@5, R@10 over both directions, rounded to 1 decimal. Throws
// MissingK when either report lacks one of those K.
double RSum(const RetrievalReport& motion, const RetrievalReport& text);

struct SplitEvaluation {
  RetrievalReport motion;  // text queries over the motion gallery
  RetrievalReport text;    // motion queries over the text gallery
  double r_sum = 0.0;
};

// Embeddings of one split: motion row g is sample motion_ids[g]; text row q
// is text text_ids[q].second of sample text_ids[q].first.
struct SplitEmbeddings {
  std::vector<std::size_t> motion_ids;
  std::vector<std::pair<std::size_t, std::size_t>> text_ids;
  Matrix motion;
  Matrix text;
};

SplitEmbeddings EmbedSplit(const EncoderParams& params, const Corpus& corpus,
                           const std::vector<std::size_t>& split);
SplitEvaluation EvaluateEmbeddings(const SplitEmbeddings& embedded,
                                   const Corpus& corpus, RelevanceMode mode);

// Embeds every motion and every text of the split. exact_pair counts only
// the paired sample (all of its texts for text retrieval); semantic counts
// every sample of the same equivalence class.
SplitEvaluation EvaluateSplit(const EncoderParams& params, const Corpus& corpus,
                              const std::vector<std::size_t>& split,
                              RelevanceMode mode);

struct SimilaritySnapshot {
  std::size_t epoch = 0;
  Matrix motion;  // S_mm
  Matrix text;    // S_tt
};

SimilaritySnapshot ComputeSimilaritySnapshot(const EncoderParams& params,
                                             const Corpus& corpus,
                                             const PairBatch& batch,
                                             std::size_t epoch);
// Writes "# similarity-snapshot epoch=<n> size=<I>", then "# motion" and
// "# text" sections of comma-separated %.17g rows.
void ExportSimilaritySnapshot(const EncoderParams& params, const Corpus& corpus,
                              const PairBatch& batch, std::size_t epoch,
                              const std::filesystem::path& path);
void WriteSimilaritySnapshot(const SimilaritySnapshot& snapshot,
                             const std::filesystem::path& path);
SimilaritySnapshot ReadSimilaritySnapshot(const std::filesystem::path& path);

struct SweepRow {
  double delta_hetero = 0.0;
  double delta_homo = 0.0;
  double r_sum = 0.0;       // final-epoch validation R-sum
  double final_loss = 0.0;  // final-epoch mean loss
  bool mh_equivalent = false;
};

// One DropTriple training run per (delta_hetero, delta_homo) pair, all with
// config.seed, evaluated on the corpus test split in `mode`. With
// parallel_runs > 1 grid points train concurrently; rows stay in grid order.
std::vector<SweepRow> ThresholdSweep(
    const TrainConfig& config, const Corpus& corpus,
    const std::vector<std::pair<double, double>>& grid, RelevanceMode mode,
    int parallel_runs = 1);

void WriteSweepCsv(const std::vector<SweepRow>& rows,
                   const std::filesystem::path& path);
void WriteReportCsv(const SplitEvaluation& evaluation,
                    const std::filesystem::path& path);
// Table-style two-direction summary.
std::string FormatSummary(const SplitEvaluation& evaluation);

}  // namespace droptriple

#endif  // DROPTRIPLE_EVALUATOR_HPP_
