#include "n2o/embedders.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "n2o/error.hpp"
#include "n2o/tokenizer.hpp"

namespace n2o {

EmbedderId::EmbedderId(std::string name) : name_(std::move(name)) {
  if (!is_valid(name_)) {
    throw ConfigError("invalid embedder name '" + name_ + "' (allowed: [a-z0-9._-]+)");
  }
}

bool EmbedderId::is_valid(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
  });
}

// ---------------------------------------------------------------- tf-idf

std::optional<std::uint32_t> TfIdfModel::term_id(std::string_view term) const {
  const auto it = vocab.find(std::string(term));
  if (it == vocab.end()) return std::nullopt;
  return it->second;
}

double TfIdfModel::idf(std::uint32_t term) const {
  return std::log(static_cast<double>(n_docs) / static_cast<double>(doc_freq.at(term)));
}

TfIdfModel fit_tfidf(const Corpus& corpus) {
  if (corpus.empty()) {
    throw ConfigError("cannot fit tf-idf on an empty corpus");
  }
  std::map<std::string, std::uint32_t> df;
  for (const auto& s : corpus.sentences()) {
    auto tokens = s.tokens();
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) {
      ++df[std::move(t)];
    }
  }
  TfIdfModel model;
  model.n_docs = corpus.size();
  model.vocab.reserve(df.size());
  model.doc_freq.reserve(df.size());
  for (auto& [term, count] : df) {
    model.vocab.emplace(term, static_cast<std::uint32_t>(model.doc_freq.size()));
    model.doc_freq.push_back(count);
  }
  return model;
}

TfIdfWeights tfidf_weights(const TfIdfModel& model, std::span<const std::string> tokens) {
  std::map<std::uint32_t, std::uint32_t> tf;
  for (const auto& t : tokens) {
    if (const auto id = model.term_id(t)) ++tf[*id];
  }
  TfIdfWeights out;
  for (const auto& [term, count] : tf) {
    const double w = static_cast<double>(count) * model.idf(term);
    if (w == 0.0) continue;
    out.indices.push_back(term);
    out.weights.push_back(w);
  }
  double sq = 0.0;
  for (double w : out.weights) sq += w * w;
  const double n = std::sqrt(sq);
  for (double& w : out.weights) w /= n;
  return out;
}

SparseVector embed_tfidf(const TfIdfModel& model, std::span<const std::string> tokens) {
  const TfIdfWeights w = tfidf_weights(model, tokens);
  SparseVector v;
  v.dim = model.vocab_size();
  v.indices = w.indices;
  v.weights.reserve(w.weights.size());
  for (double x : w.weights) v.weights.push_back(static_cast<float>(x));
  return v;
}

SparseVector embed_tfidf(const TfIdfModel& model, const Sentence& sentence) {
  return embed_tfidf(model, sentence.tokens());
}

// --------------------------------------------------------- word vectors

bool WordVectorTable::insert(std::string token, std::span<const float> values) {
  if (values.size() != dim_) {
    throw DataError("word vector for '" + token + "' has " + std::to_string(values.size())
                    + " components, table dim is " + std::to_string(dim_));
  }
  const auto [it, inserted] = index_.emplace(std::move(token), index_.size());
  if (!inserted) return false;
  values_.insert(values_.end(), values.begin(), values.end());
  return true;
}

std::optional<std::span<const float>> WordVectorTable::find(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return std::span<const float>(values_).subspan(it->second * dim_, dim_);
}

std::optional<std::span<const float>> WordVectorTable::lookup(std::string_view surface_token) const {
  if (cased_) {
    if (auto hit = find(std::string(surface_token))) return hit;
  }
  return find(to_lower(surface_token));
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

bool parse_integer(std::string_view s, std::size_t& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_float(std::string_view s, float& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

WordVectorTable load_word_vectors(const std::filesystem::path& path, bool cased) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot read word vector file: " + path.string());
  }
  std::optional<WordVectorTable> table;
  std::optional<std::size_t> header_dim;
  std::string line;
  std::size_t line_no = 0;
  std::vector<float> values;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (!table && !header_dim && fields.size() == 2) {
      std::size_t count = 0;
      std::size_t dim = 0;
      if (parse_integer(fields[0], count) && parse_integer(fields[1], dim)) {
        header_dim = dim;
        continue;
      }
    }
    const std::size_t dim = fields.size() - 1;
    if (dim == 0) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": token without components");
    }
    if (!table) {
      if (header_dim && *header_dim != dim) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": dimension "
                        + std::to_string(dim) + " disagrees with header dimension "
                        + std::to_string(*header_dim));
      }
      table.emplace(dim, cased);
    } else if (dim != table->dim()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": inconsistent dimension "
                      + std::to_string(dim) + " (expected " + std::to_string(table->dim()) + ")");
    }
    values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_float(fields[i + 1], values[i])) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric component '"
                        + std::string(fields[i + 1]) + "'");
      }
    }
    table->insert(std::string(fields[0]), values);
  }
  if (!table) {
    throw DataError("word vector file has no vectors: " + path.string());
  }
  return std::move(*table);
}

DenseVector embed_average(const WordVectorTable& table, std::span<const std::string> surface_tokens) {
  std::vector<double> sum(table.dim(), 0.0);
  std::size_t hits = 0;
  for (const auto& t : surface_tokens) {
    const auto v = table.lookup(t);
    if (!v) continue;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
    ++hits;
  }
  DenseVector out(table.dim(), 0.0f);
  if (hits == 0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(sum[i] / static_cast<double>(hits));
  }
  return out;
}

DenseVector embed_average(const WordVectorTable& table, const Sentence& sentence) {
  return embed_average(table, sentence.surface_tokens());
}

// ---------------------------------------------------------- composition

CompositionMode parse_composition_mode(std::string_view name) {
  if (name == "average") return CompositionMode::average;
  if (name == "first_token") return CompositionMode::first_token;
  if (name == "last_token") return CompositionMode::last_token;
  throw ConfigError("unknown composition mode '" + std::string(name) + "'");
}

std::string_view to_string(CompositionMode mode) {
  switch (mode) {
    case CompositionMode::average: return "average";
    case CompositionMode::first_token: return "first_token";
    case CompositionMode::last_token: return "last_token";
  }
  return "average";
}

DenseVector compose_tokens(std::span<const DenseVector> token_matrix, CompositionMode mode) {
  if (token_matrix.empty()) {
    throw DataError("cannot compose an empty token sequence");
  }
  const std::size_t dim = token_matrix.front().size();
  for (std::size_t r = 0; r < token_matrix.size(); ++r) {
    if (token_matrix[r].size() != dim) {
      throw DataError("ragged token matrix: row " + std::to_string(r) + " has dimension "
                      + std::to_string(token_matrix[r].size()) + ", expected " + std::to_string(dim));
    }
  }
  switch (mode) {
    case CompositionMode::first_token: return token_matrix.front();
    case CompositionMode::last_token: return token_matrix.back();
    case CompositionMode::average: break;
  }
  std::vector<double> sum(dim, 0.0);
  for (const auto& row : token_matrix) {
    for (std::size_t i = 0; i < dim; ++i) sum[i] += row[i];
  }
  DenseVector out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    out[i] = static_cast<float>(sum[i] / static_cast<double>(token_matrix.size()));
  }
  return out;
}

// ------------------------------------------------------ embedding matrix

void SparseRows::push_back(const SparseVector& row) {
  indices.insert(indices.end(), row.indices.begin(), row.indices.end());
  weights.insert(weights.end(), row.weights.begin(), row.weights.end());
  offsets.push_back(indices.size());
}

EmbeddingMatrix::EmbeddingMatrix(EmbedderId embedder, std::uint64_t corpus_hash, std::size_t rows,
                                 Storage storage)
    : embedder_(std::move(embedder)),
      corpus_hash_(corpus_hash),
      rows_(rows),
      storage_(std::move(storage)) {
  if (const auto* d = std::get_if<DenseRows>(&storage_)) {
    if (d->dim == 0) throw DataError("embedding dimension must be at least 1");
    if (d->values.size() != rows_ * d->dim) {
      throw DataError("dense storage holds " + std::to_string(d->values.size()) + " values, expected "
                      + std::to_string(rows_ * d->dim));
    }
    for (std::size_t r = 0; r < rows_; ++r) {
      const auto row = dense_row(r);
      for (float x : row) {
        if (!std::isfinite(x)) {
          throw DataError("non-finite value in row " + std::to_string(r));
        }
      }
      if (norm(row) < 1e-12) zero_rows_.push_back(static_cast<SentenceId>(r));
    }
  } else {
    const auto& s = std::get<SparseRows>(storage_);
    if (s.offsets.size() != rows_ + 1 || s.offsets.front() != 0
        || s.offsets.back() != s.indices.size() || s.indices.size() != s.weights.size()) {
      throw DataError("malformed sparse row offsets");
    }
    for (std::size_t r = 0; r < rows_; ++r) {
      if (s.offsets[r] > s.offsets[r + 1]) throw DataError("sparse offsets decrease at row " + std::to_string(r));
      const auto row = sparse_row(r);
      validate(row);
      if (norm(row) < 1e-12) zero_rows_.push_back(static_cast<SentenceId>(r));
    }
  }
}

std::size_t EmbeddingMatrix::dim() const {
  return std::visit([](const auto& s) { return s.dim; }, storage_);
}

std::span<const float> EmbeddingMatrix::dense_row(std::size_t r) const {
  const auto& d = dense();
  return std::span<const float>(d.values).subspan(r * d.dim, d.dim);
}

SparseView EmbeddingMatrix::sparse_row(std::size_t r) const {
  const auto& s = sparse();
  const std::size_t begin = s.offsets[r];
  const std::size_t len = s.offsets[r + 1] - begin;
  return {std::span<const std::uint32_t>(s.indices).subspan(begin, len),
          std::span<const float>(s.weights).subspan(begin, len), s.dim};
}

bool EmbeddingMatrix::is_zero_row(SentenceId id) const {
  return std::binary_search(zero_rows_.begin(), zero_rows_.end(), id);
}

namespace {

bool same_bits(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size()
         && (a.empty() || std::memcmp(a.data(), b.data(), a.size_bytes()) == 0);
}

}  // namespace

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
  if (embedder_ != other.embedder_ || corpus_hash_ != other.corpus_hash_ || rows_ != other.rows_
      || zero_rows_ != other.zero_rows_ || storage_.index() != other.storage_.index()) {
    return false;
  }
  if (is_sparse()) {
    const auto& a = sparse();
    const auto& b = other.sparse();
    return a.dim == b.dim && a.offsets == b.offsets && a.indices == b.indices
           && same_bits(a.weights, b.weights);
  }
  return dense().dim == other.dense().dim && same_bits(dense().values, other.dense().values);
}

EmbeddingMatrix embed_corpus_tfidf(const TfIdfModel& model, const Corpus& corpus, EmbedderId name) {
  SparseRows rows;
  rows.dim = model.vocab_size();
  for (const auto& s : corpus.sentences()) {
    rows.push_back(embed_tfidf(model, s));
  }
  return EmbeddingMatrix(std::move(name), corpus.content_hash(), corpus.size(), std::move(rows));
}

EmbeddingMatrix embed_corpus_average(const WordVectorTable& table, const Corpus& corpus,
                                     EmbedderId name) {
  DenseRows rows;
  rows.dim = table.dim();
  rows.values.reserve(corpus.size() * table.dim());
  for (const auto& s : corpus.sentences()) {
    const auto v = embed_average(table, s);
    rows.values.insert(rows.values.end(), v.begin(), v.end());
  }
  return EmbeddingMatrix(std::move(name), corpus.content_hash(), corpus.size(), std::move(rows));
}

EmbeddedRow TfIdfEmbedder::embed(std::string_view text) const {
  return embed_tfidf(model_, tokenize(text));
}

EmbeddedRow WordAverageEmbedder::embed(std::string_view text) const {
  return embed_average(table_, tokenize_surface(text));
}

PrecomputedEmbedder::PrecomputedEmbedder(const Corpus& texts, const EmbeddingMatrix& rows)
    : texts_(texts), rows_(rows) {
  if (rows.corpus_hash() != texts.content_hash() || rows.rows() != texts.size()) {
    throw DataError("precomputed rows for embedder '" + rows.embedder().str()
                    + "' were not built on the given text list");
  }
}

EmbeddedRow PrecomputedEmbedder::embed(std::string_view text) const {
  const auto id = texts_.find(text);
  if (!id) {
    throw DataError("no precomputed row for text: " + std::string(text));
  }
  if (rows_.is_sparse()) {
    const auto v = rows_.sparse_row(*id);
    return SparseVector{{v.indices.begin(), v.indices.end()}, {v.weights.begin(), v.weights.end()}, v.dim};
  }
  const auto v = rows_.dense_row(*id);
  return DenseVector(v.begin(), v.end());
}

}  // namespace n2o
