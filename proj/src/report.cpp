#include "n2o/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "n2o/error.hpp"

namespace n2o {

using ojson = nlohmann::ordered_json;

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

template <class T>
T get_field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw DataError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(where + ": field '" + std::string(key) + "' has the wrong type");
  }
}

nlohmann::json parse_json(const std::string& text, const std::string& where) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(where + ": " + e.what());
  }
}

}  // namespace

// ------------------------------------------------------------ neighbor dumps

std::string format_neighbor_dump(std::span<const NeighborList> lists) {
  std::string out;
  for (const auto& list : lists) {
    ojson j;
    j["embedder"] = list.embedder;
    j["query_id"] = list.query_id;
    j["k"] = list.k;
    ojson neighbors = ojson::array();
    for (std::size_t r = 0; r < list.entries.size(); ++r) {
      neighbors.push_back({{"id", list.entries[r].id}, {"score", list.entries[r].score}, {"rank", r + 1}});
    }
    j["neighbors"] = std::move(neighbors);
    if (list.short_result) j["short_result"] = true;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_neighbor_dump(const std::filesystem::path& path, std::span<const NeighborList> lists) {
  write_text_file(path, format_neighbor_dump(lists));
}

std::map<SentenceId, NeighborList> read_neighbor_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open neighbor dump " + path.string());
  std::map<SentenceId, NeighborList> out;
  std::string embedder;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    const auto j = parse_json(line, where);
    NeighborList list;
    list.embedder = get_field<std::string>(j, "embedder", where);
    list.query_id = get_field<SentenceId>(j, "query_id", where);
    list.k = get_field<std::size_t>(j, "k", where);
    list.short_result = j.value("short_result", false);
    if (embedder.empty()) embedder = list.embedder;
    if (list.embedder != embedder) throw DataError(where + ": mixed embedders in one dump");
    const auto& ns = j.at("neighbors");
    if (!ns.is_array()) throw DataError(where + ": 'neighbors' must be an array");
    for (std::size_t r = 0; r < ns.size(); ++r) {
      const Neighbor n{get_field<SentenceId>(ns[r], "id", where), get_field<double>(ns[r], "score", where)};
      if (get_field<std::size_t>(ns[r], "rank", where) != r + 1) {
        throw DataError(where + ": ranks must run 1..len");
      }
      if (!list.entries.empty() && !ranks_before(list.entries.back(), n)) {
        throw DataError(where + ": neighbors are not in rank order");
      }
      list.entries.push_back(n);
    }
    if (list.entries.size() > list.k) throw DataError(where + ": more neighbors than k");
    if (!out.emplace(list.query_id, std::move(list)).second) {
      throw DataError(where + ": duplicate query id");
    }
  }
  return out;
}

// ----------------------------------------------------------------- matrices

std::string format_matrix_csv(std::span<const std::string> names, const SquareMatrix& m) {
  if (names.size() != m.size) throw InvariantError("matrix and name list differ in size");
  std::string out = "embedder";
  for (const auto& n : names) out += "," + n;
  out += '\n';
  for (std::size_t i = 0; i < m.size; ++i) {
    out += names[i];
    for (std::size_t j = 0; j < m.size; ++j) out += "," + fixed6(m.at(i, j));
    out += '\n';
  }
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, std::span<const std::string> names,
                      const SquareMatrix& m) {
  write_text_file(path, format_matrix_csv(names, m));
}

NamedMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty matrix file");
  auto header = split(line);
  if (header.size() < 2) throw DataError(path.string() + ":1: header needs at least one embedder");
  NamedMatrix m;
  m.names.assign(header.begin() + 1, header.end());
  const std::size_t e = m.names.size();
  m.values = SquareMatrix{e, std::vector<double>(e * e, 0.0)};
  for (std::size_t i = 0; i < e; ++i) {
    const auto where = path.string() + ":" + std::to_string(i + 2);
    if (!std::getline(in, line)) throw DataError(where + ": missing row");
    const auto cells = split(line);
    if (cells.size() != e + 1 || cells[0] != m.names[i]) throw DataError(where + ": malformed row");
    for (std::size_t j = 0; j < e; ++j) {
      try {
        std::size_t used = 0;
        m.values.at(i, j) = std::stod(cells[j + 1], &used);
        if (used != cells[j + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::logic_error&) {
        throw DataError(where + ": bad value '" + cells[j + 1] + "'");
      }
    }
  }
  return m;
}

// ------------------------------------------------------------------ samples

void write_samples(const std::filesystem::path& path, const SampleSet& set) {
  ojson j;
  j["master_seed"] = set.master_seed;
  j["n"] = set.n;
  ojson samples = ojson::array();
  for (const auto& s : set.samples) samples.push_back({{"seed", s.seed}, {"query_ids", s.query_ids}});
  j["samples"] = std::move(samples);
  write_text_file(path, j.dump(2) + "\n");
}

SampleSet read_samples(const std::filesystem::path& path) {
  const auto where = path.string();
  const auto j = parse_json(read_text_file(path), where);
  SampleSet set;
  set.master_seed = get_field<std::uint64_t>(j, "master_seed", where);
  set.n = get_field<std::size_t>(j, "n", where);
  if (!j.contains("samples") || !j["samples"].is_array()) throw DataError(where + ": missing 'samples'");
  for (const auto& s : j["samples"]) {
    QuerySample q;
    q.seed = get_field<std::uint64_t>(s, "seed", where);
    q.query_ids = get_field<std::vector<SentenceId>>(s, "query_ids", where);
    set.samples.push_back(std::move(q));
  }
  return set;
}

// ----------------------------------------------------------------- manifest

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  ojson j;
  j["tool_version"] = m.tool_version;
  j["corpus"] = {{"path", m.corpus_path}, {"format", m.corpus_format}, {"hash", hex64(m.corpus_hash)}};
  ojson embedders = ojson::array();
  for (const auto& e : m.embedders) {
    embedders.push_back({{"name", e.name}, {"spec", e.spec}, {"matrix", e.matrix}});
  }
  j["embedders"] = std::move(embedders);
  j["k"] = m.k;
  j["n"] = m.n;
  j["samples"] = m.samples;
  j["master_seed"] = m.master_seed;
  j["sample_seeds"] = m.sample_seeds;
  j["out_dir"] = m.out_dir;
  write_text_file(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  const auto where = path.string();
  const auto j = parse_json(read_text_file(path), where);
  RunManifest m;
  m.tool_version = get_field<std::string>(j, "tool_version", where);
  if (!j.contains("corpus")) throw DataError(where + ": missing 'corpus'");
  const auto& c = j["corpus"];
  m.corpus_path = get_field<std::string>(c, "path", where);
  m.corpus_format = get_field<std::string>(c, "format", where);
  const auto hash = get_field<std::string>(c, "hash", where);
  if (hash.size() != 16 || hash.find_first_not_of("0123456789abcdef") != std::string::npos) {
    throw DataError(where + ": corpus hash must be 16 hex digits");
  }
  m.corpus_hash = std::stoull(hash, nullptr, 16);
  if (!j.contains("embedders") || !j["embedders"].is_array()) throw DataError(where + ": missing 'embedders'");
  for (const auto& e : j["embedders"]) {
    m.embedders.push_back({get_field<std::string>(e, "name", where), get_field<std::string>(e, "spec", where),
                           get_field<std::string>(e, "matrix", where)});
  }
  m.k = get_field<std::size_t>(j, "k", where);
  m.n = get_field<std::size_t>(j, "n", where);
  m.samples = get_field<std::size_t>(j, "samples", where);
  m.master_seed = get_field<std::uint64_t>(j, "master_seed", where);
  m.sample_seeds = get_field<std::vector<std::uint64_t>>(j, "sample_seeds", where);
  m.out_dir = get_field<std::string>(j, "out_dir", where);
  return m;
}

// ------------------------------------------------------------------ reports

namespace {

ojson matrix_json(const SquareMatrix& m) {
  ojson rows = ojson::array();
  for (std::size_t i = 0; i < m.size; ++i) {
    ojson row = ojson::array();
    for (std::size_t j = 0; j < m.size; ++j) row.push_back(m.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ojson stability_json(const StabilitySummary& s) {
  ojson rho = ojson::array();
  for (const auto& row : s.rho) rho.push_back(row);
  return {{"mean_rho", s.mean_rho}, {"min_rho", s.min_rho}, {"rho", std::move(rho)}};
}

}  // namespace

std::string format_n2o_report(const N2OReportInputs& in) {
  if (in.matrix == nullptr) throw InvariantError("report without a matrix");
  const N2OMatrix& m = *in.matrix;
  ojson j;
  j["tool_version"] = kToolVersion;
  j["k"] = m.k;
  j["embedders"] = m.embedders;
  j["mean"] = matrix_json(m.mean);
  j["std"] = matrix_json(m.std);
  ojson samples = ojson::array();
  for (std::size_t s = 0; s < m.samples.size(); ++s) {
    ojson pairs = ojson::array();
    for (const auto& r : m.pair_results[s]) {
      ojson per_query = ojson::array();
      for (const auto& rec : r.per_query) per_query.push_back({rec.query_id, rec.overlap_count});
      pairs.push_back({{"pair", {r.pair.first, r.pair.second}},
                       {"value", r.value},
                       {"n", r.n},
                       {"overlaps", std::move(per_query)}});
    }
    samples.push_back({{"seed", m.samples[s].seed},
                       {"query_ids", m.samples[s].query_ids},
                       {"matrix", matrix_json(m.per_sample[s])},
                       {"pairs", std::move(pairs)}});
  }
  j["samples"] = std::move(samples);
  if (in.std_summary) {
    j["sample_std"] = {{"min", in.std_summary->min}, {"mean", in.std_summary->mean}, {"max", in.std_summary->max}};
  }
  if (in.sample_stability != nullptr) j["sample_stability"] = stability_json(*in.sample_stability);
  if (in.k_stability != nullptr) {
    auto ks = stability_json(*in.k_stability);
    ks["k_grid"] = in.k_grid;
    j["k_stability"] = std::move(ks);
  }
  return j.dump(2) + "\n";
}

std::string heatmap_color(double value) {
  const double t = std::isfinite(value) ? std::clamp(value, 0.0, 1.0) : 0.0;
  auto channel = [t](int hi) { return static_cast<int>(std::lround(255.0 + (hi - 255.0) * t)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", channel(8), channel(48), channel(107));
  return buf;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_heatmap_svg(std::span<const std::string> names, const SquareMatrix& m, bool annotate) {
  if (names.size() != m.size) throw InvariantError("matrix and name list differ in size");
  constexpr int cell = 48;
  std::size_t longest = 0;
  for (const auto& n : names) longest = std::max(longest, n.size());
  const int margin = 16 + static_cast<int>(longest) * 7;
  const int side = margin + cell * static_cast<int>(m.size) + 8;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << side << "\" height=\"" << side
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"" << side << "\" height=\"" << side << "\" fill=\"#ffffff\"/>\n";
  for (std::size_t i = 0; i < m.size; ++i) {
    const int y = margin + cell * static_cast<int>(i);
    const int x = margin + cell * static_cast<int>(i);
    svg << "<text class=\"row-label\" x=\"" << margin - 4 << "\" y=\"" << y + cell / 2 + 4
        << "\" text-anchor=\"end\">" << xml_escape(names[i]) << "</text>\n";
    svg << "<text class=\"col-label\" transform=\"translate(" << x + cell / 2 + 4 << "," << margin - 4
        << ") rotate(-90)\">" << xml_escape(names[i]) << "</text>\n";
  }
  for (std::size_t i = 0; i < m.size; ++i) {
    for (std::size_t j = 0; j < m.size; ++j) {
      const double v = m.at(i, j);
      const int x = margin + cell * static_cast<int>(j);
      const int y = margin + cell * static_cast<int>(i);
      svg << "<rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
          << cell << "\" fill=\"" << heatmap_color(v) << "\" data-value=\"" << fixed6(v) << "\"/>\n";
      if (annotate) {
        char label[32];
        std::snprintf(label, sizeof label, "%.2f", v);
        svg << "<text class=\"value\" x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
            << "\" text-anchor=\"middle\" fill=\"" << (v > 0.5 ? "#ffffff" : "#000000") << "\">" << label
            << "</text>\n";
      }
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string format_probe_csv(std::span<const ProbeOutcome> outcomes) {
  std::vector<const ProbeOutcome*> sorted;
  for (const auto& o : outcomes) sorted.push_back(&o);
  std::stable_sort(sorted.begin(), sorted.end(), [](const ProbeOutcome* a, const ProbeOutcome* b) {
    return a->mrr > b->mrr || (a->mrr == b->mrr && a->embedder < b->embedder);
  });
  std::string out = "embedder,mrr,n_top,n_top5\n";
  for (const auto* o : sorted) {
    out += o->embedder + "," + fixed6(o->mrr) + "," + std::to_string(o->n_top) + ","
           + std::to_string(o->n_top5) + "\n";
  }
  return out;
}

}  // namespace n2o
