#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "n2o/knn_exact.hpp"

namespace n2o {

struct LshParams {
  std::size_t tables = 1;  // L
  unsigned bits = 0;       // b, at most 64
  std::uint64_t seed = 0;
};

/// Random-hyperplane (sign) LSH over the usable rows of a dense index.
/// Bit i of a table signature is [hyperplane_i . x >= 0].
class LshIndex {
 public:
  const LshParams& params() const { return params_; }
  std::size_t dim() const { return dim_; }

  /// Signature of `x` in table t.
  std::uint64_t signature(std::size_t table, std::span<const float> x) const;

  /// Row ids sharing `signature` in table t (ascending), empty if none.
  std::span<const SentenceId> bucket(std::size_t table, std::uint64_t signature) const;

  std::size_t bucket_count(std::size_t table) const { return buckets_[table].size(); }

  /// Unit hyperplane `bit` of table t.
  std::span<const float> hyperplane(std::size_t table, unsigned bit) const;

  friend LshIndex build_lsh(const SearchIndex& index, LshParams params, unsigned threads);

 private:
  LshParams params_;
  std::size_t dim_ = 0;
  std::vector<float> hyperplanes_;  // [table][bit][component]
  std::vector<float> transposed_;   // [table][component][bit], for signatures
  std::vector<std::unordered_map<std::uint64_t, std::vector<SentenceId>>> buckets_;
};

/// The sign rule: true when h . x >= 0.
bool hyperplane_bit(std::span<const float> hyperplane, std::span<const float> x);

/// Hyperplanes are drawn from one mt19937_64 stream seeded with params.seed,
/// in (table, bit, component) order, so the index is reproducible from the
/// seed regardless of `threads`.
LshIndex build_lsh(const SearchIndex& index, LshParams params, unsigned threads = 0);

struct LshQueryStats {
  std::size_t candidates = 0;
};

/// Candidates are the union of the query's buckets minus the query; they are
/// re-ranked by exact cosine under the search total order. A result shorter
/// than k is marked short_result.
NeighborList query_lsh(const LshIndex& lsh, const SearchIndex& index, SentenceId query_id,
                       std::size_t k, LshQueryStats* stats = nullptr);

/// Mean over queries of |approx ∩ exact| / k. Lists must be aligned by
/// query and share the same k.
double measure_recall(std::span<const NeighborList> approx, std::span<const NeighborList> exact);

struct RecallRow {
  std::size_t tables = 0;
  unsigned bits = 0;
  std::uint64_t seed = 0;
  double recall = 0.0;
  double mean_candidates = 0.0;
  double query_time_us = 0.0;
};

/// Builds one index per (L, b) pair and measures recall@k on held-out
/// queries against exact search.
std::vector<RecallRow> sweep_lsh(const SearchIndex& index, std::span<const SentenceId> holdout,
                                 std::size_t k, std::span<const std::size_t> table_grid,
                                 std::span<const unsigned> bit_grid, std::uint64_t seed,
                                 unsigned threads = 0);

/// The smallest mean candidate set among rows reaching `min_recall`, or the
/// highest-recall row when none does.
RecallRow pick_lsh_params(std::span<const RecallRow> rows, double min_recall);

}  // namespace n2o
