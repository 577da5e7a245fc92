#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "n2o/corpus.hpp"
#include "n2o/embedders.hpp"

namespace n2o {

// N2OE binary layout, little-endian throughout:
//
//   offset  size  field
//   0       4     magic "N2OE"
//   4       2     u16 version (1)
//   6       1     u8 dtype: 1 = float32 dense, 2 = float32 sparse (CSR)
//   7       1     u8 reserved (0)
//   8       8     u64 corpus content hash
//   16      8     u64 row count N
//   24      4     u32 dimension d
//   28            payload
//
// dtype 1 payload: N*d float32, row-major.
// dtype 2 payload: u64 nnz; (N+1) u64 row offsets; nnz u32 term ids;
//                  nnz float32 weights.
//
// The embedder name is not stored; it travels in the file name
// (`<embedder>.n2oe`).

inline constexpr std::uint16_t kN2oeVersion = 1;
inline constexpr std::uint8_t kDtypeDense = 1;
inline constexpr std::uint8_t kDtypeSparse = 2;
inline constexpr std::size_t kN2oeHeaderSize = 28;

struct N2oeHeader {
  std::uint16_t version = kN2oeVersion;
  std::uint8_t dtype = kDtypeDense;
  std::uint64_t corpus_hash = 0;
  std::uint64_t rows = 0;
  std::uint32_t dim = 0;
};

void write_n2oe(const EmbeddingMatrix& matrix, std::ostream& out);
void write_n2oe(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

N2oeHeader read_n2oe_header(std::istream& in);

/// Reads a whole file without provenance checks. The embedder id is `name`
/// when given, else the file stem.
EmbeddingMatrix read_n2oe(const std::filesystem::path& path, std::optional<EmbedderId> name = {});

/// read_n2oe plus the provenance checks: row count equals |corpus| and the
/// header hash equals the corpus content hash.
EmbeddingMatrix import_matrix(const std::filesystem::path& path, const Corpus& corpus,
                              std::optional<EmbedderId> name = {});

/// `<dir>/<embedder>.n2oe`
std::filesystem::path matrix_path(const std::filesystem::path& dir, const EmbedderId& embedder);

}  // namespace n2o
