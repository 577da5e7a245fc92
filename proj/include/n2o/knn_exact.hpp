#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "n2o/corpus.hpp"
#include "n2o/embedders.hpp"
#include "n2o/vectors.hpp"

namespace n2o {

struct Neighbor {
  SentenceId id = 0;
  double score = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// The search total order: higher score first, ties by ascending id.
inline bool ranks_before(const Neighbor& a, const Neighbor& b) {
  return a.score > b.score || (a.score == b.score && a.id < b.id);
}

struct NeighborList {
  SentenceId query_id = 0;
  std::string embedder;
  std::size_t k = 0;
  std::vector<Neighbor> entries;  // ranked; entries[0] is rank 1
  /// Set when fewer than k candidates existed (approximate search only).
  bool short_result = false;

  bool operator==(const NeighborList&) const = default;
};

/// Row-normalized copy of an embedding matrix. Zero rows are excluded from
/// candidacy and cannot be queried.
class SearchIndex {
 public:
  SearchIndex() = default;

  const std::string& embedder() const { return embedder_; }
  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::size_t usable_rows() const { return rows_ - excluded_.size(); }
  bool is_sparse() const { return sparse_; }

  const std::vector<SentenceId>& excluded() const { return excluded_; }
  bool is_excluded(SentenceId id) const { return excluded_mask_[id] != 0; }

  std::span<const float> dense_row(SentenceId id) const;
  SparseView sparse_row(SentenceId id) const;

  /// Cosine of every row against a unit-norm query of this index's kind.
  /// Excluded rows score 0 and must be skipped by the caller.
  std::vector<double> score_all(const EmbeddedRow& query) const;

  /// Sparse path: per-row scores accumulated through the term postings into
  /// `scores` (resized to rows(), zero-filled first).
  void accumulate_sparse(SparseView query, std::vector<double>& scores) const;

  friend SearchIndex build_index(EmbeddingMatrix matrix);

 private:
  std::string embedder_;
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  bool sparse_ = false;
  DenseRows dense_;
  SparseRows sparse_rows_;
  // Term postings (CSR by term id), rows ascending within each term.
  std::vector<std::uint64_t> post_offsets_;
  std::vector<SentenceId> post_rows_;
  std::vector<float> post_weights_;
  std::vector<SentenceId> excluded_;
  std::vector<std::uint8_t> excluded_mask_;
};

/// Normalizes every non-zero row once. Throws DataError when fewer than two
/// usable rows remain.
SearchIndex build_index(EmbeddingMatrix matrix);

/// Exact k nearest rows to row `query_id`, excluding the query itself.
NeighborList top_k(const SearchIndex& index, SentenceId query_id, std::size_t k);

/// Elementwise equal to top_k over `query_ids`, in input order, for any
/// thread count (0 = all hardware threads).
std::vector<NeighborList> batch_top_k(const SearchIndex& index, std::span<const SentenceId> query_ids,
                                      std::size_t k, unsigned threads = 0);

/// Bounded selection under the search total order.
class TopKCollector {
 public:
  explicit TopKCollector(std::size_t k) : k_(k) { heap_.reserve(k); }

  void offer(SentenceId id, double score) {
    if (heap_.size() < k_) {
      push(id, score);
    } else if (k_ > 0 && (score > worst_score_ || (score == worst_score_ && id < heap_.front().id))) {
      replace_worst(id, score);
    }
  }

  std::size_t size() const { return heap_.size(); }

  /// Ranked contents; the collector is left empty.
  std::vector<Neighbor> take_sorted();

 private:
  std::size_t k_;
  std::vector<Neighbor> heap_;  // heap front is the worst-ranked entry
  double worst_score_ = 0.0;

  void push(SentenceId id, double score);
  void replace_worst(SentenceId id, double score);
};

}  // namespace n2o
