#include <gtest/gtest.h>

#include <json.hpp>
#include <regex>

#include "n2o/error.hpp"
#include "n2o/report.hpp"
#include "support/tempdir.hpp"

using namespace n2o;

namespace {

struct Cell {
  double value;
  double luminance;
};

/// Pulls every heatmap cell out of the SVG text.
std::vector<Cell> parse_cells(const std::string& svg) {
  std::vector<Cell> cells;
  const std::regex re(R"re(<rect class="cell"[^>]*fill="#([0-9a-f]{2})([0-9a-f]{2})([0-9a-f]{2})" data-value="([0-9.]+)")re");
  for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it) {
    const auto ch = [&](int i) { return std::stoi((*it)[i].str(), nullptr, 16) / 255.0; };
    cells.push_back({std::stod((*it)[4].str()), 0.2126 * ch(1) + 0.7152 * ch(2) + 0.0722 * ch(3)});
  }
  return cells;
}

NeighborList list_of(const std::string& emb, SentenceId q, std::vector<Neighbor> entries, std::size_t k) {
  return NeighborList{q, emb, k, std::move(entries), false};
}

}  // namespace

TEST(NeighborDump, RoundTrip) {
  support::TempDir dir;
  std::vector<NeighborList> lists{list_of("tfidf", 3, {{7, 0.75}, {1, 0.5}, {9, 0.5}}, 3),
                                  list_of("tfidf", 0, {{2, 1.0}, {5, -0.1234567890123}}, 2)};
  lists[1].short_result = false;
  write_neighbor_dump(dir / "n.jsonl", lists);
  const auto back = read_neighbor_dump(dir / "n.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at(3), lists[0]);
  EXPECT_EQ(back.at(0), lists[1]);

  const auto first = nlohmann::json::parse(format_neighbor_dump(std::span(lists).first(1)));
  EXPECT_EQ(first["embedder"], "tfidf");
  EXPECT_EQ(first["query_id"], 3);
  EXPECT_EQ(first["k"], 3);
  EXPECT_EQ(first["neighbors"][2]["rank"], 3);
  EXPECT_EQ(first["neighbors"][2]["id"], 9);
}

TEST(NeighborDump, RejectsMalformedFiles) {
  support::TempDir dir;
  const auto check = [&](const std::string& body) {
    write_text_file(dir / "bad.jsonl", body);
    EXPECT_THROW(read_neighbor_dump(dir / "bad.jsonl"), DataError) << body;
  };
  check(R"({"embedder":"a","query_id":0,"k":1,"neighbors":[{"id":1,"score":0.5,"rank":2}]})");
  check(R"({"embedder":"a","query_id":0,"k":2,"neighbors":[{"id":1,"score":0.5,"rank":1},{"id":2,"score":0.9,"rank":2}]})");
  check("{\"embedder\":\"a\",\"query_id\":0,\"k\":0,\"neighbors\":[]}\n{\"embedder\":\"b\",\"query_id\":1,\"k\":0,\"neighbors\":[]}");
  check("{\"embedder\":\"a\",\"query_id\":0,\"k\":0,\"neighbors\":[]}\n{\"embedder\":\"a\",\"query_id\":0,\"k\":0,\"neighbors\":[]}");
  check(R"({"embedder":"a","k":1,"neighbors":[]})");
  check("not json");
  EXPECT_THROW(read_neighbor_dump(dir / "missing.jsonl"), DataError);
}

TEST(MatrixCsv, FormatAndRoundTrip) {
  const std::vector<std::string> names{"a", "b"};
  const SquareMatrix m{2, {1.0, 0.123456789, 0.123456789, 1.0}};
  EXPECT_EQ(format_matrix_csv(names, m), "embedder,a,b\na,1.000000,0.123457\nb,0.123457,1.000000\n");
  support::TempDir dir;
  write_matrix_csv(dir / "m.csv", names, m);
  const auto back = read_matrix_csv(dir / "m.csv");
  EXPECT_EQ(back.names, names);
  EXPECT_NEAR(back.values.at(0, 1), 0.123457, 1e-12);
  write_text_file(dir / "bad.csv", "embedder,a\na,zz\n");
  EXPECT_THROW(read_matrix_csv(dir / "bad.csv"), DataError);
}

TEST(Samples, RoundTrip) {
  support::TempDir dir;
  const SampleSet s{0xffffffffffffffffull, 3, {{11, {4, 1, 2}}, {12, {0, 9, 3}}}};
  write_samples(dir / "s.json", s);
  EXPECT_EQ(read_samples(dir / "s.json"), s);
}

TEST(Manifest, RoundTripAndNoTimestamps) {
  support::TempDir dir;
  RunManifest m;
  m.corpus_path = "/data/corpus.txt";
  m.corpus_hash = 0x00ab00cd00ef0012ull;
  m.embedders = {{"glove", "word-avg:/v/glove.txt", "/out/glove.n2oe"}, {"tfidf", "tfidf", "/out/tfidf.n2oe"}};
  m.master_seed = 7;
  m.sample_seeds = {1, 2, 3, 4, 5};
  m.out_dir = "/out";
  write_manifest(dir / "m.json", m);
  EXPECT_EQ(read_manifest(dir / "m.json"), m);
  const auto text = read_text_file(dir / "m.json");
  EXPECT_NE(text.find("00ab00cd00ef0012"), std::string::npos);
  write_manifest(dir / "m2.json", m);
  EXPECT_EQ(read_text_file(dir / "m2.json"), text);
  EXPECT_EQ(hex64(255), "00000000000000ff");
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["k"], 50);
  EXPECT_EQ(j["n"], 100);
  EXPECT_EQ(j["samples"], 5);
}

TEST(Heatmap, SingleCellAnnotated) {
  const std::vector<std::string> names{"solo"};
  const auto svg = render_heatmap_svg(names, SquareMatrix{1, {1.0}}, true);
  EXPECT_EQ(parse_cells(svg).size(), 1u);
  EXPECT_NE(svg.find(">1.00<"), std::string::npos);
  EXPECT_NE(svg.find("row-label"), std::string::npos);
  EXPECT_NE(svg.find("col-label"), std::string::npos);
  EXPECT_EQ(render_heatmap_svg(names, SquareMatrix{1, {1.0}}, false).find(">1.00<"), std::string::npos);
}

TEST(Heatmap, DarkestCellIsMax) {
  const std::vector<std::string> names{"a", "b", "c"};
  const SquareMatrix m{3, {1.0, 0.2, 0.5, 0.2, 1.0, 0.7, 0.5, 0.7, 1.0}};
  auto cells = parse_cells(render_heatmap_svg(names, m, true));
  ASSERT_EQ(cells.size(), 9u);
  const auto darkest = std::min_element(cells.begin(), cells.end(), [](auto& a, auto& b) { return a.luminance < b.luminance; });
  EXPECT_EQ(darkest->value, 1.0);
}

TEST(Heatmap, LuminanceStrictlyDecreasingOnRamp) {
  std::vector<std::string> names;
  SquareMatrix m{21, std::vector<double>(21 * 21, 0.0)};
  for (std::size_t i = 0; i < 21; ++i) {
    names.push_back("e" + std::to_string(i));
    m.at(0, i) = static_cast<double>(i) / 20;
  }
  const auto cells = parse_cells(render_heatmap_svg(names, m, false));
  ASSERT_EQ(cells.size(), 21u * 21u);
  for (std::size_t i = 1; i < 21; ++i) {
    EXPECT_LT(cells[i].luminance, cells[i - 1].luminance) << "value " << cells[i].value;
  }
  EXPECT_EQ(heatmap_color(0.0), "#ffffff");
  EXPECT_EQ(heatmap_color(1.0), "#08306b");
  EXPECT_EQ(heatmap_color(-1.0), heatmap_color(0.0));
  EXPECT_EQ(heatmap_color(2.0), heatmap_color(1.0));
}

TEST(ProbeCsv, SortedByDecreasingMrr) {
  std::vector<ProbeOutcome> out(3);
  out[0].embedder = "b";
  out[0].mrr = 0.5;
  out[1].embedder = "a";
  out[1].mrr = 0.91;
  out[1].n_top = 67;
  out[1].n_top5 = 70;
  out[2].embedder = "c";
  out[2].mrr = 0.5;
  EXPECT_EQ(format_probe_csv(out),
            "embedder,mrr,n_top,n_top5\na,0.910000,67,70\nb,0.500000,0,0\nc,0.500000,0,0\n");
}

TEST(Report, JsonHoldsSamplesAndStability) {
  N2OMatrix m;
  m.embedders = {"a", "b"};
  m.k = 2;
  m.samples = {{5, {0}}};
  m.per_sample = {SquareMatrix{2, {1, 0.5, 0.5, 1}}};
  N2OResult r{EmbedderPair("a", "b"), 2, 1, {{0, EmbedderPair("a", "b"), 2, 1}}, 0.5};
  m.pair_results = {{r}};
  m.mean = m.per_sample[0];
  m.std = SquareMatrix{2, {0, 0, 0, 0}};
  StabilitySummary st;
  N2OReportInputs in{&m, &st, {1, 2}, nullptr, std::nullopt};
  const auto j = nlohmann::json::parse(format_n2o_report(in));
  EXPECT_EQ(j["embedders"], (nlohmann::json{"a", "b"}));
  EXPECT_EQ(j["samples"][0]["pairs"][0]["overlaps"][0], (nlohmann::json{0, 1}));
  EXPECT_EQ(j["samples"][0]["seed"], 5);
  EXPECT_EQ(j["k_stability"]["mean_rho"], 1.0);
  EXPECT_EQ(j["k_stability"]["k_grid"], (nlohmann::json{1, 2}));
}
