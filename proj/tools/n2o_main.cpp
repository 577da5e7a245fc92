// n2o: nearest-neighbor overlap between sentence embedders.
//
// Exit codes: 0 ok, 2 configuration error, 3 data/format error,
// 4 internal invariant violation.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "n2o/error.hpp"
#include "n2o/pipeline.hpp"

namespace {

struct Common {
  std::optional<std::string> corpus;
  std::optional<std::string> format;
  std::optional<std::size_t> k;
  std::optional<std::size_t> n;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> embedders;
  std::string out;
  std::optional<std::string> manifest;
  unsigned threads = 0;

  n2o::RunConfig config() const {
    n2o::RunConfig c;
    if (corpus) c.corpus = *corpus;
    c.format = format;
    c.k = k;
    c.n = n;
    c.samples = samples;
    c.seed = seed;
    for (const auto& e : embedders) c.embedders.push_back(n2o::parse_embedder_arg(e));
    c.out = out;
    if (manifest) c.manifest = *manifest;
    c.threads = threads;
    return c;
  }
};

void add_common(CLI::App* cmd, Common& o) {
  cmd->add_option("--corpus", o.corpus, "Corpus file");
  cmd->add_option("--format", o.format, "Corpus format: lines or jsonl (default lines)");
  cmd->add_option("--k", o.k, "Neighbors per query (default 50)");
  cmd->add_option("--n", o.n, "Queries per sample (default 100)");
  cmd->add_option("--samples", o.samples, "Number of query samples (default 5)");
  cmd->add_option("--seed", o.seed, "Master seed (default 0)");
  cmd->add_option("--embedder", o.embedders,
                  "<name>=<spec>; spec is tfidf, word-avg:<path>, word-avg-cased:<path> or import:<path>");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--manifest", o.manifest, "Rerun from a manifest.json");
  cmd->add_option("--threads", o.threads, "Worker threads, 0 = all cores");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nearest-neighbor overlap between sentence embedders"};
  app.require_subcommand(1);
  Common common;

  auto* embed = app.add_subcommand("embed", "Embed the corpus, one .n2oe file per embedder");
  auto* sample = app.add_subcommand("sample", "Draw the query samples");
  auto* search = app.add_subcommand("search", "Exact k-NN for every sampled query");
  auto* n2o_cmd = app.add_subcommand("n2o", "Full run: embed, sample, search, N2O matrix and reports");

  auto* stability = app.add_subcommand("stability", "Rank stability across k and across samples");
  n2o::StabilityOptions stability_opts;
  stability->add_option("--k-grid", stability_opts.k_grid, "k values (default 5,10,...,k)")->delimiter(',');

  auto* overlap = app.add_subcommand("overlap-tokens", "Token overlap between queries and their neighbors");

  auto* popular = app.add_subcommand("popular", "Popular and outlier neighbors");
  n2o::PopularOptions popular_opts;
  popular->add_option("--k-small", popular_opts.k_small, "Neighborhood shared by every embedder");
  popular->add_option("--r-small", popular_opts.r_small, "Owner rank limit for outliers");
  popular->add_option("--k-large", popular_opts.k_large, "Neighborhood outliers must avoid (default k)");

  auto* probe = app.add_subcommand("probe", "Paraphrase retrieval probe");
  n2o::ProbeOptions probe_opts;
  std::string pairs_path;
  std::optional<std::string> probe_texts;
  std::vector<std::string> probe_matrices;
  probe->add_option("--pairs", pairs_path, "TSV of score<TAB>sentence1<TAB>sentence2")->required();
  probe->add_option("--min-score", probe_opts.min_score, "Minimum similarity score");
  probe->add_option("--max-overlap", probe_opts.max_overlap, "Token overlap must be below this");
  probe->add_option("--k-report", probe_opts.k_report, "Rank cutoff for the top-5 count");
  probe->add_option("--probe-texts", probe_texts, "Query and paraphrase texts, one per line (imported embedders)");
  probe->add_option("--probe-matrix", probe_matrices, "<name>=<path> rows for --probe-texts");

  auto* ann = app.add_subcommand("ann-tune", "Sweep LSH tables and bits against exact search");
  n2o::AnnTuneOptions ann_opts;
  ann->add_option("--target", ann_opts.embedder, "Dense embedder to tune")->required();
  ann->add_option("--holdout", ann_opts.holdout, "Held-out queries");
  ann->add_option("--tables", ann_opts.tables, "Table counts L")->delimiter(',');
  ann->add_option("--bits", ann_opts.bits, "Bits per signature b")->delimiter(',');
  ann->add_option("--min-recall", ann_opts.min_recall, "Recall target");

  auto* report = app.add_subcommand("report", "Render the N2O matrix CSV as an SVG heatmap");
  n2o::ReportOptions report_opts;
  std::optional<std::string> report_matrix;
  std::optional<std::string> report_svg;
  bool no_annotate = false;
  report->add_option("--matrix", report_matrix, "Matrix CSV (default <out>/n2o.csv)");
  report->add_option("--svg", report_svg, "Output SVG (default <out>/n2o.svg)");
  report->add_flag("--no-annotate", no_annotate, "Leave cell values out");

  for (auto* cmd : {embed, sample, search, n2o_cmd, stability, overlap, popular, probe, ann}) add_common(cmd, common);
  report->add_option("--out", common.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const n2o::RunConfig config = common.config();
    std::ostream& log = std::cerr;
    if (embed->parsed()) n2o::cmd_embed(config, log);
    if (sample->parsed()) n2o::cmd_sample(config, log);
    if (search->parsed()) n2o::cmd_search(config, log);
    if (n2o_cmd->parsed()) n2o::cmd_n2o(config, log);
    if (stability->parsed()) n2o::cmd_stability(config, stability_opts, log);
    if (overlap->parsed()) n2o::cmd_overlap_tokens(config, log);
    if (popular->parsed()) n2o::cmd_popular(config, popular_opts, log);
    if (probe->parsed()) {
      probe_opts.pairs = pairs_path;
      if (probe_texts) probe_opts.probe_texts = *probe_texts;
      for (const auto& arg : probe_matrices) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
          throw n2o::ConfigError("--probe-matrix must be <name>=<path>, got '" + arg + "'");
        }
        probe_opts.probe_matrices[arg.substr(0, eq)] = arg.substr(eq + 1);
      }
      n2o::cmd_probe(config, probe_opts, log);
    }
    if (ann->parsed()) n2o::cmd_ann_tune(config, ann_opts, log);
    if (report->parsed()) {
      if (report_matrix) report_opts.matrix = *report_matrix;
      if (report_svg) report_opts.svg = *report_svg;
      report_opts.annotate = !no_annotate;
      n2o::cmd_report(config, report_opts, log);
    }
  } catch (const n2o::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const n2o::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const n2o::InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
