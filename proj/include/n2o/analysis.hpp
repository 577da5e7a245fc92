#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "n2o/corpus.hpp"
#include "n2o/embedders.hpp"
#include "n2o/knn_exact.hpp"
#include "n2o/overlap.hpp"

namespace n2o {

// ------------------------------------------------------------ token overlap

/// Jaccard ratio over lowercased token types. Throws DataError when either
/// side has no tokens.
double token_overlap(std::string_view a, std::string_view b);
double token_overlap(const Sentence& a, const Sentence& b);

struct TokenOverlapStat {
  std::string embedder;
  double mean_overlap = 0.0;
  double ci95_halfwidth = 0.0;  // 1.96 * sample std / sqrt(n)
  std::vector<double> per_query;
};

/// Per query, the mean overlap with its neighbors; then the mean over queries.
TokenOverlapStat mean_query_token_overlap(std::span<const NeighborList> lists, const Corpus& corpus);

// ------------------------------------------------------- popular / outlier

struct PopularNeighbor {
  SentenceId query_id = 0;
  SentenceId sentence_id = 0;
  std::map<std::string, std::size_t> ranks;  // 1-based, per embedder

  bool operator==(const PopularNeighbor&) const = default;
};

/// Sentences inside the k_small prefix of every embedder's list for the
/// query, ascending by id.
std::vector<PopularNeighbor> popular_neighbors(const NeighborDump& dump, SentenceId query_id,
                                               std::size_t k_small);

struct OutlierNeighbor {
  SentenceId query_id = 0;
  SentenceId sentence_id = 0;
  std::string owner;
  std::size_t owner_rank = 0;
  std::size_t k_large = 0;

  bool operator==(const OutlierNeighbor&) const = default;
};

inline constexpr std::size_t kDefaultOutlierRank = 15;

/// Entries of the owner's top r_small absent from the k_large prefix of
/// every other embedder, in owner rank order.
std::vector<OutlierNeighbor> outlier_neighbors(const NeighborDump& dump, SentenceId query_id,
                                               const std::string& owner, std::size_t r_small,
                                               std::size_t k_large);

// ------------------------------------------------------- paraphrase probe

struct StsPair {
  double score = 0.0;
  std::string first;
  std::string second;

  bool operator==(const StsPair&) const = default;
};

/// TSV rows `score<TAB>sentence1<TAB>sentence2`; blank lines skipped.
std::vector<StsPair> load_sts_pairs(const std::filesystem::path& path);

/// Keeps pairs with score >= min_score and token_overlap < max_overlap.
/// Pairs where either side has no tokens are dropped.
std::vector<StsPair> filter_sts_pairs(std::span<const StsPair> candidates, double min_score,
                                      double max_overlap);

struct RankSummary {
  double mrr = 0.0;
  std::size_t n_top = 0;
  std::size_t n_top5 = 0;
};

/// Mean of 1/rank, count of rank 1 and count of rank <= k_report.
RankSummary summarize_ranks(std::span<const std::size_t> ranks, std::size_t k_report = 5);

struct ProbeOutcome {
  std::string embedder;
  std::vector<StsPair> pairs;
  std::vector<std::size_t> ranks;
  double mrr = 0.0;
  std::size_t n_top = 0;
  std::size_t n_top5 = 0;
};

/// Rank of pair.second among the corpus rows for query pair.first, as if it
/// were appended to the corpus. The query's own row (if its text is in the
/// corpus) is skipped; ties go to the inserted row. The corpus and index are
/// never modified; each pair is scored against scratch rows.
std::size_t probe_rank(const Corpus& corpus, const SearchIndex& index, const SentenceEmbedder& embedder,
                       const std::string& query, const std::string& paraphrase);

ProbeOutcome paraphrase_probe(const Corpus& corpus, const SearchIndex& index,
                              const SentenceEmbedder& embedder, std::span<const StsPair> pairs,
                              std::size_t k_report = 5, unsigned threads = 0);

}  // namespace n2o
