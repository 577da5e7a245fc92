#include "n2o/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <ostream>
#include <set>

#include <json.hpp>

#include "n2o/analysis.hpp"
#include "n2o/error.hpp"
#include "n2o/knn_exact.hpp"
#include "n2o/knn_lsh.hpp"
#include "n2o/n2oe_format.hpp"
#include "n2o/overlap.hpp"

namespace n2o {

namespace fs = std::filesystem;

EmbedderSpec parse_embedder_arg(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
    throw ConfigError("embedder must be given as <name>=<spec>, got '" + arg + "'");
  }
  EmbedderSpec s{arg.substr(0, eq), arg.substr(eq + 1)};
  if (!EmbedderId::is_valid(s.name)) {
    throw ConfigError("embedder name '" + s.name + "' must match [a-z0-9._-]+");
  }
  const bool known = s.spec == "tfidf" || s.spec.starts_with("word-avg:")
                     || s.spec.starts_with("word-avg-cased:") || s.spec.starts_with("import:");
  if (!known) {
    throw ConfigError("unknown embedder spec '" + s.spec
                      + "' (expected tfidf, word-avg:<path>, word-avg-cased:<path> or import:<path>)");
  }
  return s;
}

namespace {

std::string spec_path(const std::string& spec) { return spec.substr(spec.find(':') + 1); }

template <class Fn>
auto attributed(const std::string& embedder, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError("embedder '" + embedder + "': " + e.what());
  } catch (const DataError& e) {
    throw DataError("embedder '" + embedder + "': " + e.what());
  }
}

}  // namespace

RunManifest plan_run(const RunConfig& c) {
  RunManifest m;
  if (c.manifest) {
    m = read_manifest(*c.manifest);
  } else if (!c.out.empty() && fs::exists(c.out / "manifest.json")) {
    m = read_manifest(c.out / "manifest.json");
  }
  if (c.corpus) {
    if (m.corpus_path != c.corpus->string()) m.corpus_hash = 0;
    m.corpus_path = c.corpus->string();
  }
  if (c.format) m.corpus_format = *c.format;
  parse_corpus_format(m.corpus_format);
  if (m.corpus_path.empty()) throw ConfigError("no corpus given (--corpus or --manifest)");
  if (c.k) m.k = *c.k;
  if (c.n) m.n = *c.n;
  if (c.samples) m.samples = *c.samples;
  if (c.seed) m.master_seed = *c.seed;
  if (m.k == 0) throw ConfigError("--k must be positive");
  if (m.n == 0) throw ConfigError("--n must be positive");
  if (m.samples == 0) throw ConfigError("--samples must be positive");

  if (!c.out.empty()) m.out_dir = c.out.string();
  if (m.out_dir.empty()) throw ConfigError("no output directory given (--out)");

  for (const auto& e : c.embedders) {
    const auto it = std::find_if(m.embedders.begin(), m.embedders.end(),
                                 [&](const ManifestEmbedder& x) { return x.name == e.name; });
    if (it != m.embedders.end()) {
      it->spec = e.spec;
    } else {
      m.embedders.push_back({e.name, e.spec, {}});
    }
  }
  std::set<std::string> names;
  for (auto& e : m.embedders) {
    parse_embedder_arg(e.name + "=" + e.spec);
    if (!names.insert(e.name).second) throw ConfigError("duplicate embedder name '" + e.name + "'");
    e.matrix = matrix_path(fs::path(m.out_dir), EmbedderId(e.name)).string();
  }
  std::sort(m.embedders.begin(), m.embedders.end(),
            [](const ManifestEmbedder& a, const ManifestEmbedder& b) { return a.name < b.name; });
  m.sample_seeds.clear();
  for (std::size_t i = 0; i < m.samples; ++i) m.sample_seeds.push_back(derive_seed(m.master_seed, i));
  m.tool_version = kToolVersion;
  return m;
}

EmbeddingMatrix build_matrix(const EmbedderSpec& spec, const Corpus& corpus) {
  return attributed(spec.name, [&] {
    const EmbedderId id(spec.name);
    if (spec.spec == "tfidf") return embed_corpus_tfidf(fit_tfidf(corpus), corpus, id);
    if (spec.spec.starts_with("word-avg:") || spec.spec.starts_with("word-avg-cased:")) {
      const bool cased = spec.spec.starts_with("word-avg-cased:");
      return embed_corpus_average(load_word_vectors(spec_path(spec.spec), cased), corpus, id);
    }
    if (spec.spec.starts_with("import:")) return import_matrix(spec_path(spec.spec), corpus, id);
    throw ConfigError("unknown embedder spec '" + spec.spec + "'");
  });
}

Corpus load_manifest_corpus(const RunManifest& m) {
  Corpus corpus = load_corpus(m.corpus_path, parse_corpus_format(m.corpus_format));
  if (m.corpus_hash != 0 && corpus.content_hash() != m.corpus_hash) {
    throw DataError("corpus " + m.corpus_path + " has hash " + hex64(corpus.content_hash())
                    + " but the manifest records " + hex64(m.corpus_hash));
  }
  return corpus;
}

std::vector<std::size_t> default_k_grid(std::size_t k) {
  std::vector<std::size_t> grid;
  for (std::size_t v = 5; v < k; v += 5) grid.push_back(v);
  grid.push_back(k);
  return grid;
}

namespace {

EmbeddingMatrix load_matrix(const ManifestEmbedder& e, const Corpus& corpus) {
  return attributed(e.name, [&] {
    if (!fs::exists(e.matrix)) throw ConfigError("matrix " + e.matrix + " is missing; run `embed` first");
    return import_matrix(e.matrix, corpus, EmbedderId(e.name));
  });
}

std::vector<SentenceId> union_of_zero_rows(const std::vector<EmbeddingMatrix>& matrices) {
  std::set<SentenceId> all;
  for (const auto& m : matrices) all.insert(m.zero_rows().begin(), m.zero_rows().end());
  return {all.begin(), all.end()};
}

SampleSet draw_samples(const RunManifest& m, const Corpus& corpus, std::span<const SentenceId> excluded) {
  SampleSet set{m.master_seed, m.n, {}};
  for (std::uint64_t seed : m.sample_seeds) set.samples.push_back(sample_queries(corpus, m.n, seed, excluded));
  return set;
}

std::vector<SentenceId> unique_queries(const SampleSet& set) {
  std::set<SentenceId> ids;
  for (const auto& s : set.samples) ids.insert(s.query_ids.begin(), s.query_ids.end());
  return {ids.begin(), ids.end()};
}

void check_samples_match(const SampleSet& set, const RunManifest& m) {
  if (set.master_seed != m.master_seed || set.n != m.n || set.samples.size() != m.samples) {
    throw ConfigError("samples.json does not match the manifest (seed, n or sample count); rerun `sample`");
  }
}

std::vector<NeighborList> search_one(EmbeddingMatrix matrix, std::span<const SentenceId> queries,
                                     std::size_t k, unsigned threads) {
  const std::string name = matrix.embedder().str();
  return attributed(name, [&] {
    const SearchIndex index = build_index(std::move(matrix));
    return batch_top_k(index, queries, k, threads);
  });
}

NeighborDump load_dump(const RunManifest& m, const RunPaths& paths) {
  if (m.embedders.empty()) throw ConfigError("the manifest lists no embedders");
  NeighborDump dump;
  for (const auto& e : m.embedders) {
    const auto path = paths.neighbors(e.name);
    if (!fs::exists(path)) throw ConfigError("neighbor dump " + path.string() + " is missing; run `search` first");
    dump[e.name] = read_neighbor_dump(path);
  }
  return dump;
}

void write_n2o_outputs(const NeighborDump& dump, const SampleSet& set, std::size_t k, const RunPaths& paths,
                       std::ostream& log) {
  const N2OMatrix matrix = n2o_matrix(dump, k, set.samples);
  const auto grid = default_k_grid(k);
  const auto ks = k_stability(dump, grid, set.samples);
  const auto ss = sample_stability(matrix);
  N2OReportInputs in;
  in.matrix = &matrix;
  in.k_stability = &ks;
  in.k_grid = grid;
  in.sample_stability = &ss;
  if (matrix.per_sample.size() >= 2) in.std_summary = sample_variance(matrix);

  write_matrix_csv(paths.n2o_csv(), matrix.embedders, matrix.mean);
  write_matrix_csv(paths.n2o_std_csv(), matrix.embedders, matrix.std);
  write_text_file(paths.report_json(), format_n2o_report(in));
  write_text_file(paths.heatmap(), render_heatmap_svg(matrix.embedders, matrix.mean, true));
  log << "n2o: " << matrix.embedders.size() << " embedders, k=" << k << ", " << set.samples.size()
      << " samples; wrote " << paths.n2o_csv().string() << "\n";
}

}  // namespace

void cmd_embed(const RunConfig& config, std::ostream& log) {
  if (config.embedders.empty()) throw ConfigError("embed needs at least one --embedder");
  RunManifest m = plan_run(config);
  const Corpus corpus = load_manifest_corpus(m);
  m.corpus_hash = corpus.content_hash();
  const RunPaths paths{m.out_dir};
  fs::create_directories(paths.out);
  for (const auto& spec : config.embedders) {
    const auto matrix = build_matrix(spec, corpus);
    const auto path = matrix_path(paths.out, matrix.embedder());
    write_n2oe(matrix, path);
    log << "embed: " << spec.name << " -> " << path.string() << " (" << matrix.rows() << " x " << matrix.dim()
        << (matrix.is_sparse() ? ", sparse" : ", dense") << ", " << matrix.zero_rows().size()
        << " zero rows)\n";
  }
  write_manifest(paths.manifest(), m);
}

void cmd_sample(const RunConfig& config, std::ostream& log) {
  RunManifest m = plan_run(config);
  const Corpus corpus = load_manifest_corpus(m);
  m.corpus_hash = corpus.content_hash();
  std::vector<EmbeddingMatrix> matrices;
  for (const auto& e : m.embedders) matrices.push_back(load_matrix(e, corpus));
  const auto excluded = union_of_zero_rows(matrices);
  const RunPaths paths{m.out_dir};
  const SampleSet set = draw_samples(m, corpus, excluded);
  write_samples(paths.samples(), set);
  write_manifest(paths.manifest(), m);
  log << "sample: " << set.samples.size() << " samples of n=" << m.n << " (" << excluded.size()
      << " sentences excluded as zero rows)\n";
}

void cmd_search(const RunConfig& config, std::ostream& log) {
  RunManifest m = plan_run(config);
  if (m.embedders.empty()) throw ConfigError("no embedders to search; run `embed` first");
  const Corpus corpus = load_manifest_corpus(m);
  m.corpus_hash = corpus.content_hash();
  const RunPaths paths{m.out_dir};
  const SampleSet set = read_samples(paths.samples());
  check_samples_match(set, m);
  const auto queries = unique_queries(set);
  for (const auto& e : m.embedders) {
    const auto lists = search_one(load_matrix(e, corpus), queries, m.k, config.threads);
    write_neighbor_dump(paths.neighbors(e.name), lists);
    log << "search: " << e.name << ", " << queries.size() << " queries, k=" << m.k << "\n";
  }
  write_manifest(paths.manifest(), m);
}

void cmd_n2o(const RunConfig& config, std::ostream& log) {
  RunManifest m = plan_run(config);
  if (m.embedders.size() < 2) {
    throw ConfigError("n2o needs at least two embedders, got " + std::to_string(m.embedders.size()));
  }
  const Corpus corpus = load_manifest_corpus(m);
  m.corpus_hash = corpus.content_hash();
  const RunPaths paths{m.out_dir};
  fs::create_directories(paths.out);

  std::vector<EmbeddingMatrix> matrices;
  for (const auto& e : m.embedders) {
    matrices.push_back(build_matrix({e.name, e.spec}, corpus));
    write_n2oe(matrices.back(), e.matrix);
  }
  const auto excluded = union_of_zero_rows(matrices);
  const SampleSet set = draw_samples(m, corpus, excluded);
  write_samples(paths.samples(), set);

  const auto queries = unique_queries(set);
  NeighborDump dump;
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const std::string name = m.embedders[i].name;
    auto lists = search_one(std::move(matrices[i]), queries, m.k, config.threads);
    write_neighbor_dump(paths.neighbors(name), lists);
    auto& by_query = dump[name];
    for (auto& l : lists) by_query.emplace(l.query_id, std::move(l));
    log << "search: " << name << " done\n";
  }
  write_n2o_outputs(dump, set, m.k, paths, log);
  write_manifest(paths.manifest(), m);
}

void cmd_stability(const RunConfig& config, const StabilityOptions& options, std::ostream& log) {
  const RunManifest m = plan_run(config);
  const RunPaths paths{m.out_dir};
  const SampleSet set = read_samples(paths.samples());
  check_samples_match(set, m);
  const NeighborDump dump = load_dump(m, paths);
  auto grid = options.k_grid.empty() ? default_k_grid(m.k) : options.k_grid;
  for (std::size_t k : grid) {
    if (k == 0 || k > m.k) throw ConfigError("k grid values must lie in [1, " + std::to_string(m.k) + "]");
  }
  const auto ks = k_stability(dump, grid, set.samples);
  const N2OMatrix matrix = n2o_matrix(dump, m.k, set.samples);
  const auto ss = sample_stability(matrix);

  nlohmann::ordered_json j;
  j["k_grid"] = grid;
  j["k_stability"] = {{"mean_rho", ks.mean_rho}, {"min_rho", ks.min_rho}, {"undefined", ks.undefined}};
  j["sample_stability"] = {{"mean_rho", ss.mean_rho}, {"min_rho", ss.min_rho}, {"undefined", ss.undefined}};
  if (matrix.per_sample.size() >= 2) {
    const auto sv = sample_variance(matrix);
    j["sample_std"] = {{"min", sv.min}, {"mean", sv.mean}, {"max", sv.max}};
  }
  write_text_file(paths.out / "stability.json", j.dump(2) + "\n");
  log << "stability: mean rho " << ks.mean_rho << ", min rho " << ks.min_rho << " over k grid of "
      << grid.size() << "\n";
}

void cmd_overlap_tokens(const RunConfig& config, std::ostream& log) {
  const RunManifest m = plan_run(config);
  const Corpus corpus = load_manifest_corpus(m);
  const RunPaths paths{m.out_dir};
  const SampleSet set = read_samples(paths.samples());
  check_samples_match(set, m);
  const NeighborDump dump = load_dump(m, paths);
  const auto queries = unique_queries(set);
  std::string csv = "embedder,mean_overlap,ci95_halfwidth,n_queries\n";
  for (const auto& [name, unused] : dump) {
    const auto lists = lists_for(dump, name, queries);
    const auto stat = attributed(name, [&] { return mean_query_token_overlap(lists, corpus); });
    char line[256];
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%zu\n", name.c_str(), stat.mean_overlap,
                  stat.ci95_halfwidth, stat.per_query.size());
    csv += line;
  }
  write_text_file(paths.out / "token_overlap.csv", csv);
  log << "overlap-tokens: wrote " << (paths.out / "token_overlap.csv").string() << "\n";
}

void cmd_popular(const RunConfig& config, const PopularOptions& options, std::ostream& log) {
  const RunManifest m = plan_run(config);
  const RunPaths paths{m.out_dir};
  const SampleSet set = read_samples(paths.samples());
  check_samples_match(set, m);
  const NeighborDump dump = load_dump(m, paths);
  const std::size_t k_large = options.k_large.value_or(m.k);
  const std::size_t r_small = options.r_small.value_or(std::min(kDefaultOutlierRank, m.k));
  if (options.k_small > m.k || r_small > m.k || k_large > m.k) {
    throw ConfigError("k_small, r_small and k_large must not exceed the dump depth k=" + std::to_string(m.k));
  }
  std::string popular;
  std::string outliers;
  std::size_t n_popular = 0;
  std::size_t n_outliers = 0;
  for (SentenceId q : unique_queries(set)) {
    for (const auto& p : popular_neighbors(dump, q, options.k_small)) {
      nlohmann::ordered_json j{{"query_id", p.query_id}, {"sentence_id", p.sentence_id}, {"ranks", p.ranks}};
      popular += j.dump() + "\n";
      ++n_popular;
    }
    for (const auto& [owner, unused] : dump) {
      for (const auto& o : outlier_neighbors(dump, q, owner, r_small, k_large)) {
        nlohmann::ordered_json j{{"query_id", o.query_id},
                                 {"sentence_id", o.sentence_id},
                                 {"owner", o.owner},
                                 {"owner_rank", o.owner_rank},
                                 {"k_large", o.k_large}};
        outliers += j.dump() + "\n";
        ++n_outliers;
      }
    }
  }
  write_text_file(paths.out / "popular.jsonl", popular);
  write_text_file(paths.out / "outliers.jsonl", outliers);
  log << "popular: " << n_popular << " popular and " << n_outliers << " outlier neighbors\n";
}

void cmd_probe(const RunConfig& config, const ProbeOptions& options, std::ostream& log) {
  const RunManifest m = plan_run(config);
  if (m.embedders.empty()) throw ConfigError("no embedders to probe; run `embed` first");
  const Corpus corpus = load_manifest_corpus(m);
  const RunPaths paths{m.out_dir};
  const auto candidates = load_sts_pairs(options.pairs);
  const auto pairs = filter_sts_pairs(candidates, options.min_score, options.max_overlap);
  log << "probe: " << pairs.size() << " of " << candidates.size() << " pairs kept\n";
  if (pairs.empty()) throw DataError("no STS pairs survive the score and overlap filters");

  std::optional<Corpus> probe_texts;
  if (options.probe_texts) probe_texts = load_corpus(*options.probe_texts, CorpusFormat::lines);

  std::vector<ProbeOutcome> outcomes;
  std::string ranks_csv = "embedder,pair,rank\n";
  for (const auto& e : m.embedders) {
    const SearchIndex index = attributed(e.name, [&] { return build_index(load_matrix(e, corpus)); });
    std::unique_ptr<SentenceEmbedder> embedder;
    std::optional<TfIdfModel> tfidf;
    std::optional<WordVectorTable> table;
    std::optional<EmbeddingMatrix> probe_rows;
    if (e.spec == "tfidf") {
      tfidf = fit_tfidf(corpus);
      embedder = std::make_unique<TfIdfEmbedder>(*tfidf);
    } else if (e.spec.starts_with("word-avg")) {
      table = attributed(e.name, [&] {
        return load_word_vectors(spec_path(e.spec), e.spec.starts_with("word-avg-cased:"));
      });
      embedder = std::make_unique<WordAverageEmbedder>(*table);
    } else {
      const auto it = options.probe_matrices.find(e.name);
      if (it == options.probe_matrices.end() || !probe_texts) {
        log << "probe: skipping imported embedder '" << e.name
            << "' (needs --probe-texts and --probe-matrix " << e.name << "=<path>)\n";
        continue;
      }
      probe_rows = attributed(e.name, [&] { return import_matrix(it->second, *probe_texts, EmbedderId(e.name)); });
      embedder = std::make_unique<PrecomputedEmbedder>(*probe_texts, *probe_rows);
    }
    auto outcome = paraphrase_probe(corpus, index, *embedder, pairs, options.k_report, config.threads);
    for (std::size_t i = 0; i < outcome.ranks.size(); ++i) {
      ranks_csv += e.name + "," + std::to_string(i) + "," + std::to_string(outcome.ranks[i]) + "\n";
    }
    log << "probe: " << e.name << " mrr " << outcome.mrr << "\n";
    outcomes.push_back(std::move(outcome));
  }
  if (outcomes.empty()) throw ConfigError("no embedder could be probed");
  write_text_file(paths.out / "probe.csv", format_probe_csv(outcomes));
  write_text_file(paths.out / "probe_ranks.csv", ranks_csv);
}

void cmd_ann_tune(const RunConfig& config, const AnnTuneOptions& options, std::ostream& log) {
  const RunManifest m = plan_run(config);
  const Corpus corpus = load_manifest_corpus(m);
  const RunPaths paths{m.out_dir};
  const auto it = std::find_if(m.embedders.begin(), m.embedders.end(),
                               [&](const ManifestEmbedder& e) { return e.name == options.embedder; });
  if (it == m.embedders.end()) throw ConfigError("embedder '" + options.embedder + "' is not in the manifest");
  EmbeddingMatrix matrix = load_matrix(*it, corpus);
  const std::vector<SentenceId> zero(matrix.zero_rows());
  const SearchIndex index = build_index(std::move(matrix));
  const auto holdout = sample_queries(corpus, options.holdout, derive_seed(m.master_seed, 0x7e57), zero);
  const auto rows = sweep_lsh(index, holdout.query_ids, m.k, options.tables, options.bits, m.master_seed,
                              config.threads);
  std::string csv = "L,b,seed,recall,mean_candidates,query_time_us\n";
  for (const auto& r : rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%zu,%u,%llu,%.6f,%.1f,%.1f\n", r.tables, r.bits,
                  static_cast<unsigned long long>(r.seed), r.recall, r.mean_candidates, r.query_time_us);
    csv += line;
  }
  write_text_file(paths.out / ("ann_tune_" + options.embedder + ".csv"), csv);
  const auto best = pick_lsh_params(rows, options.min_recall);
  log << "ann-tune: L=" << best.tables << " b=" << best.bits << " recall " << best.recall << ", "
      << best.mean_candidates << " candidates per query"
      << (best.recall < options.min_recall ? " (target recall not reached)" : "") << "\n";
}

void cmd_report(const RunConfig& config, const ReportOptions& options, std::ostream& log) {
  const fs::path out = config.out.empty() ? fs::path(".") : config.out;
  const RunPaths paths{out};
  const auto source = options.matrix.value_or(paths.n2o_csv());
  const NamedMatrix matrix = read_matrix_csv(source);
  const auto svg = options.svg.value_or(paths.heatmap());
  write_text_file(svg, render_heatmap_svg(matrix.names, matrix.values, options.annotate));
  if (fs::weakly_canonical(source) != fs::weakly_canonical(paths.n2o_csv())) {
    write_matrix_csv(paths.n2o_csv(), matrix.names, matrix.values);
  }
  log << "report: wrote " << svg.string() << "\n";
}

}  // namespace n2o
