#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "n2o/corpus.hpp"
#include "n2o/embedders.hpp"
#include "n2o/report.hpp"

namespace n2o {

/// `<name>=<spec>` where spec is one of
///   tfidf | word-avg:<path> | word-avg-cased:<path> | import:<path>
struct EmbedderSpec {
  std::string name;
  std::string spec;
};

EmbedderSpec parse_embedder_arg(const std::string& arg);

/// Command-line values. Unset optionals fall back to the manifest in effect
/// (--manifest, else <out>/manifest.json), then to the defaults.
struct RunConfig {
  std::optional<std::filesystem::path> corpus;
  std::optional<std::string> format;
  std::optional<std::size_t> k;
  std::optional<std::size_t> n;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::vector<EmbedderSpec> embedders;
  std::filesystem::path out;
  std::optional<std::filesystem::path> manifest;
  unsigned threads = 0;
};

/// Resolves a RunConfig into the manifest this run will use and record.
RunManifest plan_run(const RunConfig& config);

/// Builds (or imports) the matrix for one spec. Errors carry the name.
EmbeddingMatrix build_matrix(const EmbedderSpec& spec, const Corpus& corpus);

/// Loads the corpus named by the manifest and checks its recorded hash.
Corpus load_manifest_corpus(const RunManifest& manifest);

struct RunPaths {
  std::filesystem::path out;

  std::filesystem::path manifest() const { return out / "manifest.json"; }
  std::filesystem::path samples() const { return out / "samples.json"; }
  std::filesystem::path neighbors(const std::string& embedder) const {
    return out / "neighbors" / (embedder + ".jsonl");
  }
  std::filesystem::path n2o_csv() const { return out / "n2o.csv"; }
  std::filesystem::path n2o_std_csv() const { return out / "n2o_std.csv"; }
  std::filesystem::path report_json() const { return out / "report.json"; }
  std::filesystem::path heatmap() const { return out / "n2o.svg"; }
};

/// Multiples of 5 up to k, plus k itself.
std::vector<std::size_t> default_k_grid(std::size_t k);

void cmd_embed(const RunConfig& config, std::ostream& log);
void cmd_sample(const RunConfig& config, std::ostream& log);
void cmd_search(const RunConfig& config, std::ostream& log);
void cmd_n2o(const RunConfig& config, std::ostream& log);

struct StabilityOptions {
  std::vector<std::size_t> k_grid;  // empty: default_k_grid(manifest k)
};
void cmd_stability(const RunConfig& config, const StabilityOptions& options, std::ostream& log);

void cmd_overlap_tokens(const RunConfig& config, std::ostream& log);

struct PopularOptions {
  std::size_t k_small = 5;
  std::optional<std::size_t> r_small;  // default: min(15, manifest k)
  std::optional<std::size_t> k_large;  // default: manifest k
};
void cmd_popular(const RunConfig& config, const PopularOptions& options, std::ostream& log);

struct ProbeOptions {
  std::filesystem::path pairs;
  double min_score = 4.0;
  double max_overlap = 0.6;
  std::size_t k_report = 5;
  /// Texts and rows for embedders that were imported: the probe needs rows
  /// for the query and paraphrase sentences too.
  std::optional<std::filesystem::path> probe_texts;
  std::map<std::string, std::filesystem::path> probe_matrices;
};
void cmd_probe(const RunConfig& config, const ProbeOptions& options, std::ostream& log);

struct AnnTuneOptions {
  std::string embedder;
  std::size_t holdout = 100;
  std::vector<std::size_t> tables{1, 2, 4, 8, 16, 32};
  std::vector<unsigned> bits{4, 8, 12, 16};
  double min_recall = 0.9;
};
void cmd_ann_tune(const RunConfig& config, const AnnTuneOptions& options, std::ostream& log);

struct ReportOptions {
  std::optional<std::filesystem::path> matrix;  // default <out>/n2o.csv
  std::optional<std::filesystem::path> svg;     // default <out>/n2o.svg
  bool annotate = true;
};
void cmd_report(const RunConfig& config, const ReportOptions& options, std::ostream& log);

}  // namespace n2o
