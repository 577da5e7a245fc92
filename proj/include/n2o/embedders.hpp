#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "n2o/corpus.hpp"
#include "n2o/vectors.hpp"

namespace n2o {

/// Short ASCII embedder name matching [a-z0-9._-]+.
class EmbedderId {
 public:
  EmbedderId() = default;
  explicit EmbedderId(std::string name);

  const std::string& str() const { return name_; }
  auto operator<=>(const EmbedderId&) const = default;

  static bool is_valid(std::string_view name);

 private:
  std::string name_;
};

// ---------------------------------------------------------------- tf-idf

/// Document frequencies with each sentence treated as one document. Term ids
/// follow lexicographic order of the term strings, so the model does not
/// depend on sentence order.
struct TfIdfModel {
  std::unordered_map<std::string, std::uint32_t> vocab;
  std::vector<std::uint32_t> doc_freq;
  std::size_t n_docs = 0;

  std::size_t vocab_size() const { return doc_freq.size(); }
  std::optional<std::uint32_t> term_id(std::string_view term) const;
  double idf(std::uint32_t term) const;
};

TfIdfModel fit_tfidf(const Corpus& corpus);

/// Normalized weights in double precision, ascending term id.
struct TfIdfWeights {
  std::vector<std::uint32_t> indices;
  std::vector<double> weights;
};

/// weight(t) = tf(t) * ln(n_docs / df(t)), zero weights dropped, then
/// L2-normalized. Out-of-vocabulary tokens are ignored. May be empty.
TfIdfWeights tfidf_weights(const TfIdfModel& model, std::span<const std::string> tokens);

/// tfidf_weights rounded to float32.
SparseVector embed_tfidf(const TfIdfModel& model, std::span<const std::string> tokens);
SparseVector embed_tfidf(const TfIdfModel& model, const Sentence& sentence);

// --------------------------------------------------------- word vectors

class WordVectorTable {
 public:
  WordVectorTable(std::size_t dim, bool cased) : dim_(dim), cased_(cased) {}

  std::size_t dim() const { return dim_; }
  bool cased() const { return cased_; }
  std::size_t size() const { return index_.size(); }

  /// Returns false (and leaves the table untouched) if `token` is present.
  bool insert(std::string token, std::span<const float> values);

  /// Cased tables try the surface form, then the lowercased form. Uncased
  /// tables look up the lowercased form only.
  std::optional<std::span<const float>> lookup(std::string_view surface_token) const;

 private:
  std::size_t dim_;
  bool cased_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> values_;

  std::optional<std::span<const float>> find(const std::string& token) const;
};

/// Text `token v1 ... vd` per line; a leading `count dim` header line is
/// detected and skipped. Duplicate tokens keep the first occurrence.
WordVectorTable load_word_vectors(const std::filesystem::path& path, bool cased);

/// Mean over in-vocabulary tokens, zero vector when every token is OOV.
DenseVector embed_average(const WordVectorTable& table, std::span<const std::string> surface_tokens);
DenseVector embed_average(const WordVectorTable& table, const Sentence& sentence);

// ---------------------------------------------------------- composition

enum class CompositionMode { average, first_token, last_token };

CompositionMode parse_composition_mode(std::string_view name);
std::string_view to_string(CompositionMode mode);

/// Collapses a per-token matrix to one sentence vector.
DenseVector compose_tokens(std::span<const DenseVector> token_matrix, CompositionMode mode);

// ------------------------------------------------------ embedding matrix

struct DenseRows {
  std::size_t dim = 0;
  std::vector<float> values;  // row-major, rows * dim
};

/// CSR layout: row r occupies [offsets[r], offsets[r+1]).
struct SparseRows {
  std::size_t dim = 0;
  std::vector<std::uint64_t> offsets{0};
  std::vector<std::uint32_t> indices;
  std::vector<float> weights;

  void push_back(const SparseVector& row);
};

class EmbeddingMatrix {
 public:
  using Storage = std::variant<DenseRows, SparseRows>;

  EmbeddingMatrix() = default;

  /// Validates shape and finiteness, then records zero rows (norm < 1e-12).
  EmbeddingMatrix(EmbedderId embedder, std::uint64_t corpus_hash, std::size_t rows, Storage storage);

  const EmbedderId& embedder() const { return embedder_; }
  std::uint64_t corpus_hash() const { return corpus_hash_; }
  std::size_t rows() const { return rows_; }
  std::size_t dim() const;
  bool is_sparse() const { return std::holds_alternative<SparseRows>(storage_); }

  const DenseRows& dense() const { return std::get<DenseRows>(storage_); }
  const SparseRows& sparse() const { return std::get<SparseRows>(storage_); }
  DenseRows& dense() { return std::get<DenseRows>(storage_); }

  std::span<const float> dense_row(std::size_t r) const;
  SparseView sparse_row(std::size_t r) const;

  /// Ascending ids of rows with norm below 1e-12.
  const std::vector<SentenceId>& zero_rows() const { return zero_rows_; }
  bool is_zero_row(SentenceId id) const;

  /// Byte-exact equality of every field.
  bool operator==(const EmbeddingMatrix& other) const;

 private:
  EmbedderId embedder_;
  std::uint64_t corpus_hash_ = 0;
  std::size_t rows_ = 0;
  Storage storage_;
  std::vector<SentenceId> zero_rows_;
};

EmbeddingMatrix embed_corpus_tfidf(const TfIdfModel& model, const Corpus& corpus, EmbedderId name);
EmbeddingMatrix embed_corpus_average(const WordVectorTable& table, const Corpus& corpus,
                                     EmbedderId name);

/// A single embedded row, dense or sparse, as produced for out-of-corpus text.
using EmbeddedRow = std::variant<DenseVector, SparseVector>;

/// Embeds arbitrary text the same way its corpus matrix was built. Used by
/// the paraphrase probe, which needs rows for sentences outside the corpus.
class SentenceEmbedder {
 public:
  virtual ~SentenceEmbedder() = default;
  virtual EmbeddedRow embed(std::string_view text) const = 0;
};

class TfIdfEmbedder final : public SentenceEmbedder {
 public:
  explicit TfIdfEmbedder(const TfIdfModel& model) : model_(model) {}
  EmbeddedRow embed(std::string_view text) const override;

 private:
  const TfIdfModel& model_;
};

class WordAverageEmbedder final : public SentenceEmbedder {
 public:
  explicit WordAverageEmbedder(const WordVectorTable& table) : table_(table) {}
  EmbeddedRow embed(std::string_view text) const override;

 private:
  const WordVectorTable& table_;
};

/// Rows computed elsewhere (e.g. by an external model) for a known set of
/// texts. Unknown text raises DataError.
class PrecomputedEmbedder final : public SentenceEmbedder {
 public:
  PrecomputedEmbedder(const Corpus& texts, const EmbeddingMatrix& rows);
  EmbeddedRow embed(std::string_view text) const override;

 private:
  const Corpus& texts_;
  const EmbeddingMatrix& rows_;
};

}  // namespace n2o
