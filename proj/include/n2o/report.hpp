#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "n2o/analysis.hpp"
#include "n2o/corpus.hpp"
#include "n2o/knn_exact.hpp"
#include "n2o/overlap.hpp"

namespace n2o {

inline constexpr const char* kToolVersion = "0.3.0";

/// Writes the whole file at once, failing with DataError if it cannot.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// ------------------------------------------------------------ neighbor dumps

/// One JSON object per line:
/// {"embedder":..,"query_id":..,"k":..,"neighbors":[{"id":..,"score":..,"rank":..}]}
std::string format_neighbor_dump(std::span<const NeighborList> lists);
void write_neighbor_dump(const std::filesystem::path& path, std::span<const NeighborList> lists);

/// Checks ranks are 1..len, the list is ordered under the search total
/// order, and every line names the same embedder.
std::map<SentenceId, NeighborList> read_neighbor_dump(const std::filesystem::path& path);

// ----------------------------------------------------------------- matrices

/// Header row and first column hold embedder names; values use %.6f.
std::string format_matrix_csv(std::span<const std::string> names, const SquareMatrix& m);
void write_matrix_csv(const std::filesystem::path& path, std::span<const std::string> names,
                      const SquareMatrix& m);

struct NamedMatrix {
  std::vector<std::string> names;
  SquareMatrix values;
};

NamedMatrix read_matrix_csv(const std::filesystem::path& path);

// ------------------------------------------------------------------ samples

struct SampleSet {
  std::uint64_t master_seed = 0;
  std::size_t n = 0;
  std::vector<QuerySample> samples;

  bool operator==(const SampleSet&) const = default;
};

void write_samples(const std::filesystem::path& path, const SampleSet& set);
SampleSet read_samples(const std::filesystem::path& path);

// ----------------------------------------------------------------- manifest

struct ManifestEmbedder {
  std::string name;
  std::string spec;
  std::string matrix;  // path of the .n2oe file

  bool operator==(const ManifestEmbedder&) const = default;
};

struct RunManifest {
  std::string corpus_path;
  std::string corpus_format = "lines";
  std::uint64_t corpus_hash = 0;
  std::vector<ManifestEmbedder> embedders;
  std::size_t k = 50;
  std::size_t n = 100;
  std::size_t samples = 5;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> sample_seeds;
  std::string out_dir;
  std::string tool_version = kToolVersion;

  bool operator==(const RunManifest&) const = default;
};

/// The corpus hash is stored as 16 lowercase hex digits. No timestamps, so
/// identical runs produce identical manifests.
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

std::string hex64(std::uint64_t value);

// ------------------------------------------------------------------ reports

struct N2OReportInputs {
  const N2OMatrix* matrix = nullptr;
  const StabilitySummary* k_stability = nullptr;
  std::vector<std::size_t> k_grid;
  const StabilitySummary* sample_stability = nullptr;
  std::optional<StdSummary> std_summary;
};

/// Per-sample matrices, per-query overlap records and the stability summaries.
std::string format_n2o_report(const N2OReportInputs& in);

/// Heatmap with a white to dark-blue ramp (higher is darker), names on both
/// axes and, optionally, the value printed in each cell.
std::string render_heatmap_svg(std::span<const std::string> names, const SquareMatrix& m, bool annotate);

/// Fill color of a value in [0, 1] on the heatmap ramp, as #rrggbb.
std::string heatmap_color(double value);

std::string format_probe_csv(std::span<const ProbeOutcome> outcomes);

}  // namespace n2o
