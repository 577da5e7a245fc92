#include "n2o/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "n2o/error.hpp"
#include "n2o/parallel.hpp"
#include "n2o/stats.hpp"
#include "n2o/tokenizer.hpp"

namespace n2o {

namespace {

std::vector<std::string> token_types(std::string_view text) {
  auto tokens = tokenize(text);
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t common = 0;
  for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

const NeighborList& list_of(const NeighborDump& dump, const std::string& embedder, SentenceId query_id,
                            std::size_t depth) {
  const auto e = dump.find(embedder);
  if (e == dump.end()) throw DataError("no neighbor lists for embedder '" + embedder + "'");
  const auto it = e->second.find(query_id);
  if (it == e->second.end()) {
    throw DataError("embedder '" + embedder + "' has no list for query " + std::to_string(query_id));
  }
  if (it->second.entries.size() < depth) {
    throw DataError("list of '" + embedder + "' for query " + std::to_string(query_id)
                    + " is shorter than " + std::to_string(depth));
  }
  return it->second;
}

}  // namespace

double token_overlap(std::string_view a, std::string_view b) {
  const auto ta = token_types(a);
  const auto tb = token_types(b);
  if (ta.empty() || tb.empty()) throw DataError("token overlap of a sentence without tokens");
  return jaccard(ta, tb);
}

double token_overlap(const Sentence& a, const Sentence& b) {
  try {
    return token_overlap(a.text, b.text);
  } catch (const DataError&) {
    throw DataError("token overlap between sentences " + std::to_string(a.id) + " and "
                    + std::to_string(b.id) + ": one has no tokens");
  }
}

TokenOverlapStat mean_query_token_overlap(std::span<const NeighborList> lists, const Corpus& corpus) {
  if (lists.empty()) throw ConfigError("token overlap needs at least one query");
  TokenOverlapStat stat;
  stat.embedder = lists.front().embedder;
  for (const auto& list : lists) {
    if (list.entries.empty()) throw DataError("empty neighbor list for query " + std::to_string(list.query_id));
    const auto q = token_types(corpus[list.query_id].text);
    if (q.empty()) throw DataError("query " + std::to_string(list.query_id) + " has no tokens");
    double sum = 0.0;
    for (const auto& n : list.entries) {
      const auto t = token_types(corpus[n.id].text);
      if (t.empty()) throw DataError("neighbor " + std::to_string(n.id) + " has no tokens");
      sum += jaccard(q, t);
    }
    stat.per_query.push_back(sum / static_cast<double>(list.entries.size()));
  }
  stat.mean_overlap = mean(stat.per_query);
  stat.ci95_halfwidth = 1.96 * sample_std(stat.per_query) / std::sqrt(static_cast<double>(stat.per_query.size()));
  return stat;
}

std::vector<PopularNeighbor> popular_neighbors(const NeighborDump& dump, SentenceId query_id,
                                               std::size_t k_small) {
  if (dump.empty()) throw ConfigError("no embedders");
  if (k_small == 0) throw ConfigError("k_small must be positive");
  std::map<SentenceId, PopularNeighbor> found;
  bool first = true;
  for (const auto& [name, unused] : dump) {
    const auto& list = list_of(dump, name, query_id, k_small);
    std::map<SentenceId, PopularNeighbor> next;
    for (std::size_t r = 0; r < k_small; ++r) {
      const SentenceId id = list.entries[r].id;
      if (first) {
        next[id] = PopularNeighbor{query_id, id, {}};
      } else {
        const auto it = found.find(id);
        if (it == found.end()) continue;
        next[id] = std::move(it->second);
      }
      next[id].ranks[name] = r + 1;
    }
    found = std::move(next);
    first = false;
  }
  std::vector<PopularNeighbor> out;
  for (auto& [id, p] : found) out.push_back(std::move(p));
  return out;
}

std::vector<OutlierNeighbor> outlier_neighbors(const NeighborDump& dump, SentenceId query_id,
                                               const std::string& owner, std::size_t r_small,
                                               std::size_t k_large) {
  if (r_small == 0) throw ConfigError("r_small must be positive");
  const auto& own = list_of(dump, owner, query_id, r_small);
  std::set<SentenceId> elsewhere;
  for (const auto& [name, unused] : dump) {
    if (name == owner) continue;
    const auto& list = list_of(dump, name, query_id, k_large);
    for (std::size_t r = 0; r < k_large; ++r) elsewhere.insert(list.entries[r].id);
  }
  std::vector<OutlierNeighbor> out;
  for (std::size_t r = 0; r < r_small; ++r) {
    const SentenceId id = own.entries[r].id;
    if (!elsewhere.contains(id)) out.push_back({query_id, id, owner, r + 1, k_large});
  }
  return out;
}

std::vector<StsPair> load_sts_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open STS pairs file " + path.string());
  std::vector<StsPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw DataError(where + ": expected 3 tab-separated fields");
    }
    StsPair p;
    const char* begin = line.data();
    const auto [end, ec] = std::from_chars(begin, begin + t1, p.score);
    if (ec != std::errc{} || end != begin + t1 || !std::isfinite(p.score)) {
      throw DataError(where + ": bad score '" + line.substr(0, t1) + "'");
    }
    p.first = line.substr(t1 + 1, t2 - t1 - 1);
    p.second = line.substr(t2 + 1);
    if (!is_valid_utf8(p.first) || !is_valid_utf8(p.second)) throw DataError(where + ": invalid UTF-8");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<StsPair> filter_sts_pairs(std::span<const StsPair> candidates, double min_score,
                                      double max_overlap) {
  std::vector<StsPair> out;
  for (const auto& p : candidates) {
    if (p.score < min_score) continue;
    const auto a = token_types(p.first);
    const auto b = token_types(p.second);
    if (a.empty() || b.empty()) continue;
    if (jaccard(a, b) < max_overlap) out.push_back(p);
  }
  return out;
}

RankSummary summarize_ranks(std::span<const std::size_t> ranks, std::size_t k_report) {
  if (ranks.empty()) throw ConfigError("no ranks to summarize");
  RankSummary s;
  double sum = 0.0;
  for (std::size_t r : ranks) {
    if (r == 0) throw InvariantError("ranks start at 1");
    sum += 1.0 / static_cast<double>(r);
    if (r == 1) ++s.n_top;
    if (r <= k_report) ++s.n_top5;
  }
  s.mrr = sum / static_cast<double>(ranks.size());
  return s;
}

namespace {

constexpr double kZeroNorm = 1e-12;

EmbeddedRow unit_row(const SentenceEmbedder& embedder, const std::string& text, const char* role) {
  EmbeddedRow row = embedder.embed(text);
  return std::visit(
      [&](auto& v) -> EmbeddedRow {
        using T = std::decay_t<decltype(v)>;
        double n = 0.0;
        if constexpr (std::is_same_v<T, DenseVector>) {
          n = norm(v);
        } else {
          n = norm(v.view());
        }
        if (n < kZeroNorm) throw DataError(std::string(role) + " has a zero embedding: " + text);
        return l2_normalize(v);
      },
      row);
}

}  // namespace

std::size_t probe_rank(const Corpus& corpus, const SearchIndex& index, const SentenceEmbedder& embedder,
                       const std::string& query, const std::string& paraphrase) {
  if (index.rows() != corpus.size()) throw DataError("index does not cover the corpus");
  const EmbeddedRow q = unit_row(embedder, query, "query");
  const EmbeddedRow p = unit_row(embedder, paraphrase, "paraphrase");
  double inserted = 0.0;
  if (const auto* qd = std::get_if<DenseVector>(&q)) {
    const auto* pd = std::get_if<DenseVector>(&p);
    if (pd == nullptr || pd->size() != qd->size()) throw DataError("query and paraphrase rows differ in kind");
    inserted = dot(*qd, *pd);
  } else {
    const auto* pd = std::get_if<SparseVector>(&p);
    if (pd == nullptr) throw DataError("query and paraphrase rows differ in kind");
    inserted = sparse_dot(std::get<SparseVector>(q), *pd);
  }
  const auto scores = index.score_all(q);
  const auto self = corpus.find(query);
  std::size_t rank = 1;
  for (std::size_t r = 0; r < scores.size(); ++r) {
    const auto id = static_cast<SentenceId>(r);
    if (index.is_excluded(id) || (self && *self == id)) continue;
    if (scores[r] > inserted) ++rank;
  }
  return rank;
}

ProbeOutcome paraphrase_probe(const Corpus& corpus, const SearchIndex& index,
                              const SentenceEmbedder& embedder, std::span<const StsPair> pairs,
                              std::size_t k_report, unsigned threads) {
  if (pairs.empty()) throw ConfigError("no paraphrase pairs to probe");
  ProbeOutcome out;
  out.embedder = index.embedder();
  out.pairs.assign(pairs.begin(), pairs.end());
  out.ranks.assign(pairs.size(), 0);
  parallel_chunks(pairs.size(), resolve_threads(threads), [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        out.ranks[i] = probe_rank(corpus, index, embedder, pairs[i].first, pairs[i].second);
      } catch (const DataError& e) {
        throw DataError("pair #" + std::to_string(i) + " under '" + index.embedder() + "': " + e.what());
      }
    }
  });
  const auto s = summarize_ranks(out.ranks, k_report);
  out.mrr = s.mrr;
  out.n_top = s.n_top;
  out.n_top5 = s.n_top5;
  return out;
}

}  // namespace n2o
