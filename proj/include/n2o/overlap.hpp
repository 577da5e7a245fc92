#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "n2o/corpus.hpp"
#include "n2o/knn_exact.hpp"

namespace n2o {

/// Unordered pair of embedder names, kept with first <= second.
struct EmbedderPair {
  std::string first;
  std::string second;

  EmbedderPair() = default;
  EmbedderPair(std::string a, std::string b);

  bool operator==(const EmbedderPair&) const = default;
  auto operator<=>(const EmbedderPair&) const = default;
};

struct OverlapRecord {
  SentenceId query_id = 0;
  EmbedderPair pair;
  std::size_t k = 0;
  std::size_t overlap_count = 0;

  bool operator==(const OverlapRecord&) const = default;
};

/// |top-k(a) ∩ top-k(b)| over the first k entries of each list.
std::size_t overlap_at_k(const NeighborList& a, const NeighborList& b, std::size_t k);

struct N2OResult {
  EmbedderPair pair;
  std::size_t k = 0;
  std::size_t n = 0;
  std::vector<OverlapRecord> per_query;
  double value = 0.0;  // sum of overlap counts / (k * n)
};

/// Lists must be aligned by query. Names are taken from the lists.
N2OResult n2o_pair(std::span<const NeighborList> a, std::span<const NeighborList> b, std::size_t k);

/// embedder name -> query id -> neighbor list (one dump per embedder).
using NeighborDump = std::map<std::string, std::map<SentenceId, NeighborList>>;

/// The lists of `embedder` for `query_ids`, in that order.
std::vector<NeighborList> lists_for(const NeighborDump& dump, const std::string& embedder,
                                    std::span<const SentenceId> query_ids);

/// Square matrix indexed like `embedders`, row-major.
struct SquareMatrix {
  std::size_t size = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * size + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * size + j]; }
  bool operator==(const SquareMatrix&) const = default;
};

struct N2OMatrix {
  std::vector<std::string> embedders;  // sorted
  std::size_t k = 0;
  std::vector<QuerySample> samples;
  std::vector<SquareMatrix> per_sample;
  std::vector<std::vector<N2OResult>> pair_results;  // per sample, upper triangle in row order
  SquareMatrix mean;
  SquareMatrix std;  // population std across samples

  std::size_t index_of(const std::string& embedder) const;
};

/// Every embedder in `dump` against every other, per sample. The upper
/// triangle is computed and mirrored, so the result is symmetric to the bit.
N2OMatrix n2o_matrix(const NeighborDump& dump, std::size_t k, std::span<const QuerySample> samples);

struct StabilitySummary {
  double mean_rho = 1.0;
  double min_rho = 1.0;
  std::vector<std::vector<double>> rho;  // pairwise between grid entries
  /// Comparisons skipped because one side was constant (rho undefined);
  /// they hold NaN in `rho`. Mean and min are NaN if nothing was defined.
  std::size_t undefined = 0;
};

/// For each k in the grid, the vector of mean N2O values over embedder
/// pairs; Spearman rho between every two such vectors, summarized.
/// Fewer than two pairs, or identical vectors, count as rho = 1.
StabilitySummary k_stability(const NeighborDump& dump, std::span<const std::size_t> k_grid,
                             std::span<const QuerySample> samples);

/// The same comparison across samples instead of across k.
StabilitySummary sample_stability(const N2OMatrix& matrix);

struct StdSummary {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

StdSummary sample_variance(const N2OMatrix& matrix);

/// Mean-matrix row of `embedder` without the diagonal, paired with names.
std::vector<std::pair<std::string, double>> one_vs_rest(const N2OMatrix& matrix,
                                                        const std::string& embedder);

}  // namespace n2o
