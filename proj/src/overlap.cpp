#include "n2o/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "n2o/error.hpp"
#include "n2o/stats.hpp"

namespace n2o {

EmbedderPair::EmbedderPair(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  first = std::move(a);
  second = std::move(b);
}

std::size_t overlap_at_k(const NeighborList& a, const NeighborList& b, std::size_t k) {
  if (a.query_id != b.query_id) {
    throw DataError("overlap across different queries (" + std::to_string(a.query_id) + " vs "
                    + std::to_string(b.query_id) + ")");
  }
  if (a.entries.size() < k || b.entries.size() < k) {
    throw DataError("neighbor list for query " + std::to_string(a.query_id) + " is shorter than k="
                    + std::to_string(k) + " ('" + a.embedder + "' has " + std::to_string(a.entries.size())
                    + ", '" + b.embedder + "' has " + std::to_string(b.entries.size()) + ")");
  }
  std::vector<SentenceId> x(k);
  std::vector<SentenceId> y(k);
  for (std::size_t i = 0; i < k; ++i) {
    x[i] = a.entries[i].id;
    y[i] = b.entries[i].id;
  }
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t count = 0;
  for (std::size_t i = 0, j = 0; i < k && j < k;) {
    if (x[i] < y[j]) {
      ++i;
    } else if (y[j] < x[i]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

N2OResult n2o_pair(std::span<const NeighborList> a, std::span<const NeighborList> b, std::size_t k) {
  if (k == 0) throw ConfigError("k must be positive");
  if (a.size() != b.size() || a.empty()) {
    throw DataError("query samples differ in size (" + std::to_string(a.size()) + " vs "
                    + std::to_string(b.size()) + ")");
  }
  N2OResult result;
  result.pair = EmbedderPair(a.front().embedder, b.front().embedder);
  result.k = k;
  result.n = a.size();
  result.per_query.reserve(a.size());
  std::size_t total = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j].query_id != b[j].query_id) {
      throw DataError("query samples differ at position " + std::to_string(j));
    }
    const std::size_t o = overlap_at_k(a[j], b[j], k);
    total += o;
    result.per_query.push_back({a[j].query_id, result.pair, k, o});
  }
  result.value = static_cast<double>(total) / (static_cast<double>(k) * static_cast<double>(a.size()));
  return result;
}

std::vector<NeighborList> lists_for(const NeighborDump& dump, const std::string& embedder,
                                    std::span<const SentenceId> query_ids) {
  const auto it = dump.find(embedder);
  if (it == dump.end()) throw DataError("no neighbor lists for embedder '" + embedder + "'");
  std::vector<NeighborList> out;
  out.reserve(query_ids.size());
  for (SentenceId q : query_ids) {
    const auto found = it->second.find(q);
    if (found == it->second.end()) {
      throw DataError("embedder '" + embedder + "' has no neighbor list for query " + std::to_string(q));
    }
    out.push_back(found->second);
  }
  return out;
}

std::size_t N2OMatrix::index_of(const std::string& embedder) const {
  const auto it = std::find(embedders.begin(), embedders.end(), embedder);
  if (it == embedders.end()) throw ConfigError("unknown embedder '" + embedder + "'");
  return static_cast<std::size_t>(it - embedders.begin());
}

N2OMatrix n2o_matrix(const NeighborDump& dump, std::size_t k, std::span<const QuerySample> samples) {
  if (dump.empty()) throw ConfigError("no embedders to compare");
  if (samples.empty()) throw ConfigError("no query samples");
  N2OMatrix m;
  for (const auto& [name, lists] : dump) m.embedders.push_back(name);
  m.k = k;
  m.samples.assign(samples.begin(), samples.end());
  const std::size_t e = m.embedders.size();

  for (const auto& sample : samples) {
    std::vector<std::vector<NeighborList>> lists;
    lists.reserve(e);
    for (const auto& name : m.embedders) lists.push_back(lists_for(dump, name, sample.query_ids));
    SquareMatrix s{e, std::vector<double>(e * e, 0.0)};
    std::vector<N2OResult> results;
    for (std::size_t i = 0; i < e; ++i) {
      // Self-overlap is 1 by definition but still checks list depth.
      s.at(i, i) = n2o_pair(lists[i], lists[i], k).value;
      for (std::size_t j = i + 1; j < e; ++j) {
        auto r = n2o_pair(lists[i], lists[j], k);
        s.at(i, j) = r.value;
        s.at(j, i) = r.value;
        results.push_back(std::move(r));
      }
    }
    m.per_sample.push_back(std::move(s));
    m.pair_results.push_back(std::move(results));
  }

  m.mean = SquareMatrix{e, std::vector<double>(e * e, 0.0)};
  m.std = SquareMatrix{e, std::vector<double>(e * e, 0.0)};
  std::vector<double> values(samples.size());
  for (std::size_t i = 0; i < e; ++i) {
    for (std::size_t j = i; j < e; ++j) {
      for (std::size_t s = 0; s < samples.size(); ++s) values[s] = m.per_sample[s].at(i, j);
      const double mu = mean(values);
      const double sd = population_std(values);
      m.mean.at(i, j) = m.mean.at(j, i) = mu;
      m.std.at(i, j) = m.std.at(j, i) = sd;
    }
  }
  return m;
}

namespace {

std::vector<double> upper_triangle(const SquareMatrix& m) {
  std::vector<double> out;
  for (std::size_t i = 0; i < m.size; ++i) {
    for (std::size_t j = i + 1; j < m.size; ++j) out.push_back(m.at(i, j));
  }
  return out;
}

bool is_constant(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

StabilitySummary compare_all(const std::vector<std::vector<double>>& vectors) {
  StabilitySummary out;
  const std::size_t g = vectors.size();
  out.rho.assign(g, std::vector<double>(g, 1.0));
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = a + 1; b < g; ++b) {
      double rho = 1.0;
      if (vectors[a].size() >= 2 && vectors[a] != vectors[b]) {
        if (is_constant(vectors[a]) || is_constant(vectors[b])) {
          out.rho[a][b] = out.rho[b][a] = std::numeric_limits<double>::quiet_NaN();
          ++out.undefined;
          continue;
        }
        rho = spearman_rho(vectors[a], vectors[b]);
      }
      out.rho[a][b] = out.rho[b][a] = rho;
      sum += rho;
      ++count;
      out.min_rho = std::min(out.min_rho, rho);
    }
  }
  if (count > 0) {
    out.mean_rho = sum / static_cast<double>(count);
  } else if (out.undefined > 0) {
    out.mean_rho = out.min_rho = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace

StabilitySummary k_stability(const NeighborDump& dump, std::span<const std::size_t> k_grid,
                             std::span<const QuerySample> samples) {
  if (k_grid.empty()) throw ConfigError("empty k grid");
  std::vector<std::vector<double>> vectors;
  for (std::size_t k : k_grid) vectors.push_back(upper_triangle(n2o_matrix(dump, k, samples).mean));
  return compare_all(vectors);
}

StabilitySummary sample_stability(const N2OMatrix& matrix) {
  std::vector<std::vector<double>> vectors;
  for (const auto& s : matrix.per_sample) vectors.push_back(upper_triangle(s));
  return compare_all(vectors);
}

StdSummary sample_variance(const N2OMatrix& matrix) {
  if (matrix.per_sample.size() < 2) {
    throw ConfigError("sample variance needs at least two samples, got "
                      + std::to_string(matrix.per_sample.size()));
  }
  const auto stds = upper_triangle(matrix.std);
  if (stds.empty()) return {};
  return {*std::min_element(stds.begin(), stds.end()), mean(stds),
          *std::max_element(stds.begin(), stds.end())};
}

std::vector<std::pair<std::string, double>> one_vs_rest(const N2OMatrix& matrix,
                                                        const std::string& embedder) {
  const std::size_t i = matrix.index_of(embedder);
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t j = 0; j < matrix.embedders.size(); ++j) {
    if (j != i) out.emplace_back(matrix.embedders[j], matrix.mean.at(i, j));
  }
  return out;
}

}  // namespace n2o
