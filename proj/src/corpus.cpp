#include "n2o/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_set>

#include <json.hpp>

#include "n2o/error.hpp"
#include "n2o/tokenizer.hpp"

namespace n2o {

std::vector<std::string> Sentence::tokens() const { return tokenize(text); }

std::vector<std::string> Sentence::surface_tokens() const { return tokenize_surface(text); }

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "lines") return CorpusFormat::lines;
  if (name == "jsonl") return CorpusFormat::jsonl;
  throw ConfigError("unknown corpus format '" + std::string(name) + "' (expected lines or jsonl)");
}

std::string_view to_string(CorpusFormat format) {
  return format == CorpusFormat::lines ? "lines" : "jsonl";
}

std::uint64_t content_hash(std::span<const std::string> texts) {
  constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t h = kOffset;
  for (const auto& t : texts) {
    for (unsigned char c : t) {
      h ^= c;
      h *= kPrime;
    }
    h ^= 0xFFu;
    h *= kPrime;
  }
  return h;
}

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
  });
}

}  // namespace

Corpus::Corpus(const Corpus& other)
    : sentences_(other.sentences_),
      content_hash_(other.content_hash_),
      source_path_(other.source_path_) {
  rebuild_lookup();
}

Corpus& Corpus::operator=(const Corpus& other) {
  if (this != &other) {
    sentences_ = other.sentences_;
    content_hash_ = other.content_hash_;
    source_path_ = other.source_path_;
    rebuild_lookup();
  }
  return *this;
}

void Corpus::rebuild_lookup() {
  by_text_.clear();
  by_text_.reserve(sentences_.size());
  for (const auto& s : sentences_) {
    by_text_.emplace(s.text, s.id);
  }
}

Corpus Corpus::from_texts(std::vector<std::string> texts, std::string source_path) {
  Corpus corpus;
  corpus.source_path_ = std::move(source_path);
  std::unordered_set<std::string_view> seen;
  seen.reserve(texts.size());
  std::vector<std::string> kept;
  kept.reserve(texts.size());
  for (auto& t : texts) {
    if (blank(t)) continue;
    if (seen.contains(t)) continue;
    // `kept` never reallocates (reserved above), so views into it stay valid.
    kept.push_back(std::move(t));
    seen.insert(kept.back());
  }
  if (kept.empty()) {
    throw DataError("corpus is empty after deduplication"
                    + (corpus.source_path_.empty() ? std::string() : ": " + corpus.source_path_));
  }
  if (kept.size() > std::numeric_limits<SentenceId>::max()) {
    throw DataError("corpus exceeds 2^32 sentences");
  }
  corpus.content_hash_ = n2o::content_hash(kept);
  corpus.sentences_.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    corpus.sentences_.push_back(Sentence{static_cast<SentenceId>(i), std::move(kept[i])});
  }
  corpus.rebuild_lookup();
  return corpus;
}

std::optional<SentenceId> Corpus::find(std::string_view text) const {
  const auto it = by_text_.find(text);
  if (it == by_text_.end()) return std::nullopt;
  return it->second;
}

std::vector<SentenceId> Corpus::tokenizable_ids() const {
  std::vector<SentenceId> ids;
  ids.reserve(sentences_.size());
  for (const auto& s : sentences_) {
    if (!tokenize_surface(s.text).empty()) ids.push_back(s.id);
  }
  return ids;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot read corpus file: " + path.string());
  }
  std::vector<std::string> texts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!is_valid_utf8(line)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": invalid UTF-8");
    }
    if (format == CorpusFormat::lines) {
      texts.push_back(std::move(line));
      continue;
    }
    if (blank(line)) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON record");
    }
    if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
      throw DataError(path.string() + ":" + std::to_string(line_no)
                      + ": record lacks a string \"text\" field");
    }
    texts.push_back(record["text"].get<std::string>());
  }
  return Corpus::from_texts(std::move(texts), path.string());
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write corpus file: " + path.string());
  }
  for (const auto& s : corpus.sentences()) {
    if (format == CorpusFormat::lines) {
      if (s.text.find('\n') != std::string::npos) {
        throw ConfigError("sentence " + std::to_string(s.id)
                          + " contains a newline; use the jsonl format");
      }
      out << s.text << '\n';
    } else {
      out << nlohmann::json{{"text", s.text}}.dump() << '\n';
    }
  }
}

QuerySample sample_queries(const Corpus& corpus, std::size_t n, std::uint64_t seed,
                           std::span<const SentenceId> excluded) {
  if (n == 0) {
    throw ConfigError("query sample size must be at least 1");
  }
  std::vector<SentenceId> eligible = corpus.tokenizable_ids();
  if (!excluded.empty()) {
    std::vector<SentenceId> drop(excluded.begin(), excluded.end());
    std::sort(drop.begin(), drop.end());
    std::erase_if(eligible, [&](SentenceId id) {
      return std::binary_search(drop.begin(), drop.end(), id);
    });
  }
  if (n > eligible.size()) {
    throw ConfigError("cannot sample " + std::to_string(n) + " queries from "
                      + std::to_string(eligible.size()) + " eligible sentences");
  }
  // Partial Fisher-Yates: the first n slots are a uniform draw without
  // replacement, in draw order.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
    std::swap(eligible[i], eligible[pick(rng)]);
  }
  eligible.resize(n);
  return QuerySample{seed, std::move(eligible)};
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t sample_index) {
  std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (sample_index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace n2o
