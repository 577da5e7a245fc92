#include "n2o/knn_lsh.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <random>

#include "n2o/error.hpp"
#include "n2o/parallel.hpp"

namespace n2o {

bool hyperplane_bit(std::span<const float> hyperplane, std::span<const float> x) {
  return dot(hyperplane, x) >= 0.0;
}

std::uint64_t LshIndex::signature(std::size_t table, std::span<const float> x) const {
  if (x.size() != dim_) throw DataError("LSH input dimension mismatch");
  const unsigned bits = params_.bits;
  // Same per-plane sequential sums as hyperplane_bit, computed for all
  // planes of the table in one pass over x.
  std::array<double, 64> acc{};
  const float* planes = transposed_.data() + table * dim_ * bits;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double xj = x[j];
    const float* h = planes + j * bits;
    for (unsigned bit = 0; bit < bits; ++bit) acc[bit] += xj * static_cast<double>(h[bit]);
  }
  std::uint64_t sig = 0;
  for (unsigned bit = 0; bit < bits; ++bit) {
    if (acc[bit] >= 0.0) sig |= std::uint64_t{1} << bit;
  }
  return sig;
}

std::span<const SentenceId> LshIndex::bucket(std::size_t table, std::uint64_t signature) const {
  const auto& map = buckets_.at(table);
  const auto it = map.find(signature);
  if (it == map.end()) return {};
  return it->second;
}

std::span<const float> LshIndex::hyperplane(std::size_t table, unsigned bit) const {
  const std::size_t offset = (table * params_.bits + bit) * dim_;
  return std::span<const float>(hyperplanes_).subspan(offset, dim_);
}

LshIndex build_lsh(const SearchIndex& index, LshParams params, unsigned threads) {
  if (index.is_sparse()) {
    throw ConfigError("LSH needs a dense embedder; '" + index.embedder() + "' is sparse");
  }
  if (params.tables < 1) throw ConfigError("LSH needs at least one table");
  if (params.bits > 64) throw ConfigError("LSH signatures hold at most 64 bits");

  LshIndex lsh;
  lsh.params_ = params;
  lsh.dim_ = index.dim();
  lsh.hyperplanes_.resize(params.tables * params.bits * lsh.dim_);
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> h(lsh.dim_);
  for (std::size_t p = 0; p < params.tables * params.bits; ++p) {
    double sq = 0.0;
    do {
      sq = 0.0;
      for (auto& x : h) {
        x = gauss(rng);
        sq += x * x;
      }
    } while (sq == 0.0);
    const double n = std::sqrt(sq);
    for (std::size_t j = 0; j < lsh.dim_; ++j) {
      lsh.hyperplanes_[p * lsh.dim_ + j] = static_cast<float>(h[j] / n);
    }
  }

  lsh.transposed_.resize(lsh.hyperplanes_.size());
  for (std::size_t t = 0; t < params.tables; ++t) {
    for (unsigned bit = 0; bit < params.bits; ++bit) {
      for (std::size_t j = 0; j < lsh.dim_; ++j) {
        lsh.transposed_[(t * lsh.dim_ + j) * params.bits + bit] =
            lsh.hyperplanes_[(t * params.bits + bit) * lsh.dim_ + j];
      }
    }
  }

  lsh.buckets_.resize(params.tables);
  parallel_chunks(params.tables, resolve_threads(threads),
                  [&](std::size_t begin, std::size_t end, unsigned) {
                    for (std::size_t t = begin; t < end; ++t) {
                      auto& map = lsh.buckets_[t];
                      for (std::size_t r = 0; r < index.rows(); ++r) {
                        const auto id = static_cast<SentenceId>(r);
                        if (index.is_excluded(id)) continue;
                        map[lsh.signature(t, index.dense_row(id))].push_back(id);
                      }
                    }
                  });
  return lsh;
}

NeighborList query_lsh(const LshIndex& lsh, const SearchIndex& index, SentenceId query_id,
                       std::size_t k, LshQueryStats* stats) {
  if (query_id >= index.rows()) {
    throw ConfigError("query id " + std::to_string(query_id) + " out of range");
  }
  if (index.is_excluded(query_id)) {
    throw DataError("query " + std::to_string(query_id) + " has a zero embedding under '"
                    + index.embedder() + "'");
  }
  if (k == 0 || k > index.usable_rows() - 1) {
    throw ConfigError("k=" + std::to_string(k) + " is out of range for embedder '"
                      + index.embedder() + "'");
  }
  const auto q = index.dense_row(query_id);
  std::vector<SentenceId> candidates;
  for (std::size_t t = 0; t < lsh.params().tables; ++t) {
    const auto b = lsh.bucket(t, lsh.signature(t, q));
    candidates.insert(candidates.end(), b.begin(), b.end());
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::erase(candidates, query_id);
  if (stats != nullptr) stats->candidates = candidates.size();

  TopKCollector top(k);
  for (SentenceId id : candidates) top.offer(id, dot(q, index.dense_row(id)));
  NeighborList list{query_id, index.embedder(), k, top.take_sorted(), false};
  list.short_result = list.entries.size() < k;
  return list;
}

double measure_recall(std::span<const NeighborList> approx, std::span<const NeighborList> exact) {
  if (approx.size() != exact.size() || exact.empty()) {
    throw DataError("recall needs aligned, non-empty query lists (" + std::to_string(approx.size())
                    + " vs " + std::to_string(exact.size()) + ")");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    if (approx[i].query_id != exact[i].query_id || approx[i].k != exact[i].k || exact[i].k == 0) {
      throw DataError("recall inputs misaligned at position " + std::to_string(i));
    }
    std::vector<SentenceId> a;
    std::vector<SentenceId> e;
    for (const auto& n : approx[i].entries) a.push_back(n.id);
    for (const auto& n : exact[i].entries) e.push_back(n.id);
    std::sort(a.begin(), a.end());
    std::sort(e.begin(), e.end());
    std::vector<SentenceId> common;
    std::set_intersection(a.begin(), a.end(), e.begin(), e.end(), std::back_inserter(common));
    total += static_cast<double>(common.size()) / static_cast<double>(exact[i].k);
  }
  return total / static_cast<double>(exact.size());
}

std::vector<RecallRow> sweep_lsh(const SearchIndex& index, std::span<const SentenceId> holdout,
                                 std::size_t k, std::span<const std::size_t> table_grid,
                                 std::span<const unsigned> bit_grid, std::uint64_t seed,
                                 unsigned threads) {
  if (holdout.empty()) throw ConfigError("LSH tuning needs at least one held-out query");
  const auto exact = batch_top_k(index, holdout, k, threads);
  std::vector<RecallRow> rows;
  for (std::size_t tables : table_grid) {
    for (unsigned bits : bit_grid) {
      const LshIndex lsh = build_lsh(index, {tables, bits, seed}, threads);
      std::vector<NeighborList> approx;
      approx.reserve(holdout.size());
      double candidates = 0.0;
      const auto start = std::chrono::steady_clock::now();
      for (SentenceId q : holdout) {
        LshQueryStats stats;
        approx.push_back(query_lsh(lsh, index, q, k, &stats));
        candidates += static_cast<double>(stats.candidates);
      }
      const auto elapsed = std::chrono::duration<double, std::micro>(
          std::chrono::steady_clock::now() - start).count();
      const double nq = static_cast<double>(holdout.size());
      rows.push_back({tables, bits, seed, measure_recall(approx, exact), candidates / nq, elapsed / nq});
    }
  }
  return rows;
}

RecallRow pick_lsh_params(std::span<const RecallRow> rows, double min_recall) {
  if (rows.empty()) throw ConfigError("no LSH sweep results to choose from");
  const RecallRow* best = nullptr;
  for (const auto& r : rows) {
    if (r.recall < min_recall) continue;
    if (best == nullptr || r.mean_candidates < best->mean_candidates) best = &r;
  }
  if (best != nullptr) return *best;
  return *std::max_element(rows.begin(), rows.end(),
                           [](const RecallRow& a, const RecallRow& b) { return a.recall < b.recall; });
}

}  // namespace n2o
