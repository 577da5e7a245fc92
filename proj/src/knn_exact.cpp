#include "n2o/knn_exact.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "n2o/error.hpp"
#include "n2o/parallel.hpp"

namespace n2o {

// ------------------------------------------------------------ collector

void TopKCollector::push(SentenceId id, double score) {
  heap_.push_back({id, score});
  std::push_heap(heap_.begin(), heap_.end(), ranks_before);
  worst_score_ = heap_.front().score;
}

void TopKCollector::replace_worst(SentenceId id, double score) {
  std::pop_heap(heap_.begin(), heap_.end(), ranks_before);
  heap_.back() = {id, score};
  std::push_heap(heap_.begin(), heap_.end(), ranks_before);
  worst_score_ = heap_.front().score;
}

std::vector<Neighbor> TopKCollector::take_sorted() {
  std::sort_heap(heap_.begin(), heap_.end(), ranks_before);
  return std::exchange(heap_, {});
}

// ---------------------------------------------------------------- index

std::span<const float> SearchIndex::dense_row(SentenceId id) const {
  return std::span<const float>(dense_.values).subspan(static_cast<std::size_t>(id) * dim_, dim_);
}

SparseView SearchIndex::sparse_row(SentenceId id) const {
  const std::size_t begin = sparse_rows_.offsets[id];
  const std::size_t len = sparse_rows_.offsets[id + 1] - begin;
  return {std::span<const std::uint32_t>(sparse_rows_.indices).subspan(begin, len),
          std::span<const float>(sparse_rows_.weights).subspan(begin, len), dim_};
}

void SearchIndex::accumulate_sparse(SparseView query, std::vector<double>& scores) const {
  scores.assign(rows_, 0.0);
  for (std::size_t i = 0; i < query.indices.size(); ++i) {
    const std::uint32_t term = query.indices[i];
    if (term >= dim_) continue;
    const double qw = query.weights[i];
    for (std::uint64_t p = post_offsets_[term]; p < post_offsets_[term + 1]; ++p) {
      scores[post_rows_[p]] += qw * static_cast<double>(post_weights_[p]);
    }
  }
}

std::vector<double> SearchIndex::score_all(const EmbeddedRow& query) const {
  std::vector<double> scores;
  if (sparse_) {
    const auto* q = std::get_if<SparseVector>(&query);
    if (q == nullptr) throw DataError("dense query against a sparse index");
    if (q->dim != dim_) throw DataError("query dimension does not match the index");
    accumulate_sparse(q->view(), scores);
    return scores;
  }
  const auto* q = std::get_if<DenseVector>(&query);
  if (q == nullptr) throw DataError("sparse query against a dense index");
  if (q->size() != dim_) throw DataError("query dimension does not match the index");
  scores.assign(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    if (!excluded_mask_[r]) scores[r] = dot(*q, dense_row(static_cast<SentenceId>(r)));
  }
  return scores;
}

SearchIndex build_index(EmbeddingMatrix matrix) {
  SearchIndex index;
  index.embedder_ = matrix.embedder().str();
  index.rows_ = matrix.rows();
  index.dim_ = matrix.dim();
  index.sparse_ = matrix.is_sparse();
  index.excluded_ = matrix.zero_rows();
  index.excluded_mask_.assign(index.rows_, 0);
  for (SentenceId id : index.excluded_) index.excluded_mask_[id] = 1;
  if (index.usable_rows() < 2) {
    throw DataError("embedder '" + index.embedder_ + "' has fewer than 2 usable (non-zero) rows");
  }

  if (!index.sparse_) {
    index.dense_ = std::move(matrix.dense());
    const std::size_t d = index.dim_;
    for (std::size_t r = 0; r < index.rows_; ++r) {
      if (index.excluded_mask_[r]) continue;
      std::span<float> row(index.dense_.values.data() + r * d, d);
      const double n = norm(row);
      for (float& x : row) x = static_cast<float>(static_cast<double>(x) / n);
    }
    return index;
  }

  index.sparse_rows_ = matrix.sparse();
  auto& s = index.sparse_rows_;
  for (std::size_t r = 0; r < index.rows_; ++r) {
    if (index.excluded_mask_[r]) continue;
    std::span<float> w(s.weights.data() + s.offsets[r], s.offsets[r + 1] - s.offsets[r]);
    double sq = 0.0;
    for (float x : w) sq += static_cast<double>(x) * static_cast<double>(x);
    const double n = std::sqrt(sq);
    for (float& x : w) x = static_cast<float>(static_cast<double>(x) / n);
  }
  index.post_offsets_.assign(index.dim_ + 1, 0);
  for (std::size_t r = 0; r < index.rows_; ++r) {
    if (index.excluded_mask_[r]) continue;
    for (std::uint64_t p = s.offsets[r]; p < s.offsets[r + 1]; ++p) ++index.post_offsets_[s.indices[p] + 1];
  }
  for (std::size_t t = 0; t < index.dim_; ++t) index.post_offsets_[t + 1] += index.post_offsets_[t];
  index.post_rows_.resize(index.post_offsets_.back());
  index.post_weights_.resize(index.post_offsets_.back());
  std::vector<std::uint64_t> cursor(index.post_offsets_.begin(), index.post_offsets_.end() - 1);
  for (std::size_t r = 0; r < index.rows_; ++r) {
    if (index.excluded_mask_[r]) continue;
    for (std::uint64_t p = s.offsets[r]; p < s.offsets[r + 1]; ++p) {
      const auto slot = cursor[s.indices[p]]++;
      index.post_rows_[slot] = static_cast<SentenceId>(r);
      index.post_weights_[slot] = s.weights[p];
    }
  }
  return index;
}

// --------------------------------------------------------------- search

namespace {

void check_query(const SearchIndex& index, SentenceId query_id, std::size_t k) {
  if (query_id >= index.rows()) {
    throw ConfigError("query id " + std::to_string(query_id) + " out of range for "
                      + std::to_string(index.rows()) + " rows");
  }
  if (index.is_excluded(query_id)) {
    throw DataError("query " + std::to_string(query_id) + " has a zero embedding under '"
                    + index.embedder() + "'");
  }
  if (k == 0 || k > index.usable_rows() - 1) {
    throw ConfigError("k=" + std::to_string(k) + " is out of range: embedder '" + index.embedder()
                      + "' has " + std::to_string(index.usable_rows() - 1)
                      + " usable candidates per query");
  }
}

constexpr std::size_t kLanes = 8;

// Scores rows [begin, end) against every query. Queries are processed in
// blocks of kLanes with a lane-transposed layout so one row load feeds
// several independent accumulators; each (query, row) sum still runs
// sequentially over dimensions, identical to dot().
void scan_dense(const SearchIndex& index, std::span<const SentenceId> queries,
                const std::vector<float>& transposed, std::size_t begin, std::size_t end,
                std::vector<TopKCollector>& out) {
  const std::size_t d = index.dim();
  const std::size_t blocks = (queries.size() + kLanes - 1) / kLanes;
  for (std::size_t r = begin; r < end; ++r) {
    const auto id = static_cast<SentenceId>(r);
    if (index.is_excluded(id)) continue;
    const float* row = index.dense_row(id).data();
    for (std::size_t b = 0; b < blocks; ++b) {
      const float* qt = transposed.data() + b * d * kLanes;
      std::array<double, kLanes> acc{};
      for (std::size_t j = 0; j < d; ++j) {
        const double x = row[j];
        const float* lane = qt + j * kLanes;
        for (std::size_t l = 0; l < kLanes; ++l) {
          acc[l] += x * static_cast<double>(lane[l]);
        }
      }
      const std::size_t lanes = std::min(kLanes, queries.size() - b * kLanes);
      for (std::size_t l = 0; l < lanes; ++l) {
        const std::size_t q = b * kLanes + l;
        if (queries[q] != id) out[q].offer(id, acc[l]);
      }
    }
  }
}

std::vector<NeighborList> dense_batch(const SearchIndex& index, std::span<const SentenceId> queries,
                                      std::size_t k, unsigned threads) {
  const std::size_t d = index.dim();
  const std::size_t blocks = (queries.size() + kLanes - 1) / kLanes;
  std::vector<float> transposed(blocks * d * kLanes, 0.0f);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto row = index.dense_row(queries[q]);
    const std::size_t b = q / kLanes;
    const std::size_t l = q % kLanes;
    for (std::size_t j = 0; j < d; ++j) transposed[(b * d + j) * kLanes + l] = row[j];
  }

  const unsigned workers = resolve_threads(threads);
  std::vector<std::vector<TopKCollector>> partial(workers);
  parallel_chunks(index.rows(), workers, [&](std::size_t begin, std::size_t end, unsigned w) {
    partial[w].assign(queries.size(), TopKCollector(k));
    scan_dense(index, queries, transposed, begin, end, partial[w]);
  });

  // Deterministic merge: the total order is strict, so the k best of the
  // per-chunk winners are the same whatever the chunking.
  std::vector<NeighborList> lists(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<Neighbor> merged;
    for (auto& chunk : partial) {
      if (chunk.empty()) continue;
      auto part = chunk[q].take_sorted();
      merged.insert(merged.end(), part.begin(), part.end());
    }
    std::sort(merged.begin(), merged.end(), ranks_before);
    merged.resize(std::min(merged.size(), k));
    lists[q] = NeighborList{queries[q], index.embedder(), k, std::move(merged), false};
  }
  return lists;
}

std::vector<NeighborList> sparse_batch(const SearchIndex& index, std::span<const SentenceId> queries,
                                       std::size_t k, unsigned threads) {
  std::vector<NeighborList> lists(queries.size());
  parallel_chunks(queries.size(), resolve_threads(threads),
                  [&](std::size_t begin, std::size_t end, unsigned) {
                    std::vector<double> scores;
                    for (std::size_t q = begin; q < end; ++q) {
                      const SentenceId qid = queries[q];
                      index.accumulate_sparse(index.sparse_row(qid), scores);
                      TopKCollector top(k);
                      for (std::size_t r = 0; r < index.rows(); ++r) {
                        const auto id = static_cast<SentenceId>(r);
                        if (id == qid || index.is_excluded(id)) continue;
                        top.offer(id, scores[r]);
                      }
                      lists[q] = NeighborList{qid, index.embedder(), k, top.take_sorted(), false};
                    }
                  });
  return lists;
}

}  // namespace

NeighborList top_k(const SearchIndex& index, SentenceId query_id, std::size_t k) {
  const SentenceId ids[] = {query_id};
  return std::move(batch_top_k(index, ids, k, 1).front());
}

std::vector<NeighborList> batch_top_k(const SearchIndex& index, std::span<const SentenceId> query_ids,
                                      std::size_t k, unsigned threads) {
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    try {
      check_query(index, query_ids[q], k);
    } catch (const ConfigError& e) {
      throw ConfigError("batch query #" + std::to_string(q) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("batch query #" + std::to_string(q) + ": " + e.what());
    }
  }
  if (query_ids.empty()) return {};
  return index.is_sparse() ? sparse_batch(index, query_ids, k, threads)
                           : dense_batch(index, query_ids, k, threads);
}

}  // namespace n2o
