#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace n2o {

using SentenceId = std::uint32_t;

struct Sentence {
  SentenceId id = 0;
  std::string text;

  /// Lowercased tokens, recomputed on each call (the corpus stays immutable).
  std::vector<std::string> tokens() const;
  std::vector<std::string> surface_tokens() const;
};

enum class CorpusFormat { lines, jsonl };

CorpusFormat parse_corpus_format(std::string_view name);
std::string_view to_string(CorpusFormat format);

/// FNV-1a 64 over every text followed by a 0xFF separator byte. 0xFF never
/// occurs in UTF-8, so ["ab","c"] and ["a","bc"] hash differently.
std::uint64_t content_hash(std::span<const std::string> texts);

/// Deduplicated sentence collection shared by every embedder. Immutable
/// after construction.
class Corpus {
 public:
  Corpus() = default;
  Corpus(const Corpus& other);
  Corpus& operator=(const Corpus& other);
  Corpus(Corpus&&) noexcept = default;
  Corpus& operator=(Corpus&&) noexcept = default;

  /// Keeps the first occurrence of each byte-identical text and drops texts
  /// that are empty after trimming ASCII whitespace. Throws DataError when
  /// nothing remains.
  static Corpus from_texts(std::vector<std::string> texts, std::string source_path = {});

  std::size_t size() const { return sentences_.size(); }
  bool empty() const { return sentences_.empty(); }
  const Sentence& operator[](SentenceId id) const { return sentences_[id]; }
  const std::vector<Sentence>& sentences() const { return sentences_; }
  std::uint64_t content_hash() const { return content_hash_; }
  const std::string& source_path() const { return source_path_; }

  /// Row id of a byte-identical text, if present.
  std::optional<SentenceId> find(std::string_view text) const;

  /// Ids whose token list is non-empty, ascending.
  std::vector<SentenceId> tokenizable_ids() const;

 private:
  std::vector<Sentence> sentences_;
  std::uint64_t content_hash_ = 0;
  std::string source_path_;
  // Keys view into sentences_; rebuilt on copy.
  std::unordered_map<std::string_view, SentenceId> by_text_;

  void rebuild_lookup();
};

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

/// Writes one sentence per record in the given format. Texts containing a
/// newline require jsonl.
void write_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format);

struct QuerySample {
  std::uint64_t seed = 0;
  std::vector<SentenceId> query_ids;

  bool operator==(const QuerySample&) const = default;
};

/// Uniform sample without replacement over the query-eligible sentences:
/// those with a non-empty token list that are not listed in `excluded`
/// (typically the union of every embedder's zero rows).
QuerySample sample_queries(const Corpus& corpus, std::size_t n, std::uint64_t seed,
                           std::span<const SentenceId> excluded = {});

/// Per-sample seed derived from one master seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t sample_index);

}  // namespace n2o
