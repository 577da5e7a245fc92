#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>
#include <sstream>

#include "n2o/corpus.hpp"
#include "n2o/error.hpp"
#include "n2o/n2oe_format.hpp"
#include "n2o/pipeline.hpp"
#include "n2o/report.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace n2o;

namespace {

struct RunResult {
  int code;
  std::string err;
};

RunResult run_cli(const std::string& args, const support::TempDir& dir) {
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(N2O_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text_file(err)};
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

/// Corpus file plus a toy word-vector table covering its vocabulary.
struct Workspace {
  support::TempDir dir;
  std::filesystem::path corpus = dir / "corpus.txt";
  std::filesystem::path vectors = dir / "vec.txt";

  explicit Workspace(std::size_t n) {
    const Corpus c = support::synthetic_corpus(n, 31);
    write_corpus(c, corpus, CorpusFormat::lines);
    std::ostringstream v;
    const char* words[] = {"market", "stock", "price", "rose", "fell", "bank", "rate", "city",
                           "mayor", "vote", "team", "won", "game", "season", "coach", "storm",
                           "rain", "river", "flood", "oil", "gas", "trade", "deal", "court"};
    int i = 0;
    for (const char* w : words) {
      v << w << ' ' << (i % 5) * 0.3 - 0.5 << ' ' << (i % 7) * 0.2 << ' ' << ((i * 13) % 11) * 0.1 - 0.4 << '\n';
      ++i;
    }
    write_text_file(vectors, v.str());
  }
};

}  // namespace

TEST(EmbedderArg, Parsing) {
  const auto e = parse_embedder_arg("glove=word-avg:/tmp/g.txt");
  EXPECT_EQ(e.name, "glove");
  EXPECT_EQ(e.spec, "word-avg:/tmp/g.txt");
  EXPECT_THROW(parse_embedder_arg("novalue"), ConfigError);
  EXPECT_THROW(parse_embedder_arg("x=bert"), ConfigError);
  EXPECT_THROW(parse_embedder_arg("Bad=tfidf"), ConfigError);
}

TEST(KGrid, Default) {
  EXPECT_EQ(default_k_grid(50), (std::vector<std::size_t>{5, 10, 15, 20, 25, 30, 35, 40, 45, 50}));
  EXPECT_EQ(default_k_grid(12), (std::vector<std::size_t>{5, 10, 12}));
  EXPECT_EQ(default_k_grid(3), (std::vector<std::size_t>{3}));
}

TEST(Cli, EmbedTfidfAndWordAverage) {
  Workspace w(3);
  const auto out = w.dir / "out";
  const auto r = run_cli("embed --corpus " + q(w.corpus) + " --embedder t=tfidf --embedder g=word-avg:" + q(w.vectors)
                             + " --out " + q(out),
                         w.dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const Corpus c = load_corpus(w.corpus, CorpusFormat::lines);
  const auto t = import_matrix(out / "t.n2oe", c);
  EXPECT_TRUE(t.is_sparse());
  EXPECT_EQ(t.rows(), 3u);
  const auto g = import_matrix(out / "g.n2oe", c);
  EXPECT_FALSE(g.is_sparse());
  EXPECT_EQ(g.dim(), 3u);
  const auto m = read_manifest(out / "manifest.json");
  ASSERT_EQ(m.embedders.size(), 2u);
  EXPECT_EQ(m.corpus_hash, c.content_hash());
}

TEST(Cli, ImportWithWrongHashExits3) {
  Workspace w(20);
  const Corpus other = support::synthetic_corpus(20, 999);
  write_n2oe(support::dense_matrix("x", other.content_hash(), 20, 4, support::random_values(20, 4, 1)), w.dir / "x.n2oe");
  const auto r = run_cli("embed --corpus " + q(w.corpus) + " --embedder x=import:" + q(w.dir / "x.n2oe") + " --out "
                             + q(w.dir / "out"),
                         w.dir);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("hash"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("'x'"), std::string::npos) << r.err;
}

TEST(Cli, ConfigErrorsExit2) {
  Workspace w(20);
  EXPECT_EQ(run_cli("n2o --corpus " + q(w.corpus) + " --embedder t=tfidf --embedder g=word-avg:" + q(w.vectors)
                        + " --k 0 --out " + q(w.dir / "o"),
                    w.dir)
                .code,
            2);
  EXPECT_EQ(run_cli("n2o --bogus-flag", w.dir).code, 2);
  EXPECT_EQ(run_cli("", w.dir).code, 2);
  EXPECT_EQ(run_cli("n2o --corpus " + q(w.corpus) + " --embedder t=tfidf --out " + q(w.dir / "o"), w.dir).code, 2);
  EXPECT_EQ(run_cli("n2o --corpus " + q(w.corpus) + " --embedder t=tfidf --embedder g=word-avg:" + q(w.vectors)
                        + " --n 500 --k 5 --out " + q(w.dir / "o"),
                    w.dir)
                .code,
            2);
}

TEST(Cli, DataErrorsExit3) {
  Workspace w(20);
  EXPECT_EQ(run_cli("embed --corpus " + q(w.dir / "nope.txt") + " --embedder t=tfidf --out " + q(w.dir / "o"), w.dir).code, 3);
  write_text_file(w.dir / "bad.txt", "fine\n\xff\xfe\n");
  EXPECT_EQ(run_cli("embed --corpus " + q(w.dir / "bad.txt") + " --embedder t=tfidf --out " + q(w.dir / "o"), w.dir).code, 3);
}

TEST(Cli, IdenticalMatricesGiveAllOnes) {
  Workspace w(200);
  const Corpus c = load_corpus(w.corpus, CorpusFormat::lines);
  write_n2oe(support::dense_matrix("m", c.content_hash(), 200, 8, support::random_values(200, 8, 4)), w.dir / "m.n2oe");
  const auto out = w.dir / "out";
  const auto r = run_cli("n2o --corpus " + q(w.corpus) + " --embedder a=import:" + q(w.dir / "m.n2oe")
                             + " --embedder b=import:" + q(w.dir / "m.n2oe") + " --k 10 --n 20 --samples 2 --out "
                             + q(out),
                         w.dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_text_file(out / "n2o.csv"), "embedder,a,b\na,1.000000,1.000000\nb,1.000000,1.000000\n");
}

TEST(Cli, DefaultsDeterminismAndManifestRerun) {
  Workspace w(400);
  const std::string before = read_text_file(w.corpus);
  const std::string common = "--corpus " + q(w.corpus) + " --embedder t=tfidf --embedder g=word-avg:" + q(w.vectors)
                             + " --seed 11";
  const auto a = w.dir / "a";
  const auto b = w.dir / "b";
  const auto c = w.dir / "c";
  ASSERT_EQ(run_cli("n2o " + common + " --threads 1 --out " + q(a), w.dir).code, 0);
  ASSERT_EQ(run_cli("n2o " + common + " --threads 4 --out " + q(b), w.dir).code, 0);
  const auto m = read_manifest(a / "manifest.json");
  EXPECT_EQ(m.k, 50u);
  EXPECT_EQ(m.n, 100u);
  EXPECT_EQ(m.samples, 5u);
  EXPECT_EQ(m.sample_seeds.size(), 5u);
  EXPECT_EQ(m.sample_seeds[2], derive_seed(11, 2));
  for (const char* f : {"n2o.csv", "n2o_std.csv", "report.json", "n2o.svg", "samples.json", "neighbors/t.jsonl"}) {
    EXPECT_EQ(read_text_file(a / f), read_text_file(b / f)) << f;
  }
  // The manifest alone reproduces the run.
  ASSERT_EQ(run_cli("n2o --manifest " + q(a / "manifest.json") + " --out " + q(c), w.dir).code, 0);
  EXPECT_EQ(read_text_file(a / "n2o.csv"), read_text_file(c / "n2o.csv"));
  EXPECT_EQ(read_text_file(a / "report.json"), read_text_file(c / "report.json"));
  EXPECT_EQ(read_text_file(w.corpus), before);

  const auto j = nlohmann::json::parse(read_text_file(a / "report.json"));
  EXPECT_EQ(j["samples"].size(), 5u);
}

TEST(Cli, StagesRunIndependently) {
  Workspace w(300);
  const auto out = w.dir / "out";
  const std::string base = "--corpus " + q(w.corpus) + " --embedder t=tfidf --embedder g=word-avg:" + q(w.vectors)
                           + " --k 10 --n 20 --samples 3 --out " + q(out);
  ASSERT_EQ(run_cli("n2o " + base, w.dir).code, 0);
  const auto r1 = run_cli("stability --out " + q(out) + " --k-grid 5,10", w.dir);
  EXPECT_EQ(r1.code, 0) << r1.err;
  EXPECT_TRUE(std::filesystem::exists(out / "stability.json"));
  const auto r2 = run_cli("overlap-tokens --out " + q(out), w.dir);
  EXPECT_EQ(r2.code, 0) << r2.err;
  EXPECT_EQ(read_text_file(out / "token_overlap.csv").substr(0, 46), "embedder,mean_overlap,ci95_halfwidth,n_queries");
  const auto r3 = run_cli("popular --out " + q(out), w.dir);
  EXPECT_EQ(r3.code, 0) << r3.err;
  EXPECT_TRUE(std::filesystem::exists(out / "popular.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(out / "outliers.jsonl"));
  const auto r4 = run_cli("ann-tune --out " + q(out) + " --target g --holdout 10 --tables 1,4 --bits 2,4", w.dir);
  EXPECT_EQ(r4.code, 0) << r4.err;
  EXPECT_EQ(read_text_file(out / "ann_tune_g.csv").substr(0, 45), "L,b,seed,recall,mean_candidates,query_time_us");
  const auto r5 = run_cli("report --out " + q(out) + " --svg " + q(w.dir / "x.svg"), w.dir);
  EXPECT_EQ(r5.code, 0) << r5.err;
  EXPECT_NE(read_text_file(w.dir / "x.svg").find("<svg"), std::string::npos);

  const Corpus c = load_corpus(w.corpus, CorpusFormat::lines);
  write_text_file(w.dir / "pairs.tsv", "4.5\t" + c[0].text + "\tmarket rose sharply today\n3.0\ta\tb\n");
  const auto r6 = run_cli("probe --out " + q(out) + " --pairs " + q(w.dir / "pairs.tsv"), w.dir);
  EXPECT_EQ(r6.code, 0) << r6.err;
  EXPECT_EQ(read_text_file(out / "probe.csv").substr(0, 25), "embedder,mrr,n_top,n_top5");

  // Search from a fresh directory with the sample stage run separately.
  const auto s = w.dir / "staged";
  const std::string staged = "--corpus " + q(w.corpus) + " --embedder t=tfidf --k 10 --n 20 --samples 3 --out " + q(s);
  ASSERT_EQ(run_cli("embed " + staged, w.dir).code, 0);
  ASSERT_EQ(run_cli("sample " + staged, w.dir).code, 0);
  ASSERT_EQ(run_cli("search " + staged, w.dir).code, 0);
  EXPECT_EQ(read_text_file(s / "neighbors/t.jsonl"), read_text_file(out / "neighbors/t.jsonl"));
}

TEST(Cli, ManifestWithWrongCorpusHashExits3) {
  Workspace w(120);
  const auto out = w.dir / "out";
  ASSERT_EQ(run_cli("embed --corpus " + q(w.corpus) + " --embedder t=tfidf --out " + q(out), w.dir).code, 0);
  write_text_file(w.corpus, read_text_file(w.corpus) + "a brand new line\n");
  const auto r = run_cli("n2o --manifest " + q(out / "manifest.json") + " --embedder t=tfidf --embedder u=tfidf --k 5 --n 10 --samples 2 --out " + q(w.dir / "o2"), w.dir);
  EXPECT_EQ(r.code, 3) << r.err;
}
