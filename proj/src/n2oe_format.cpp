#include "n2o/n2oe_format.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>

#include "n2o/error.hpp"

namespace n2o {
namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

constexpr std::array<char, 4> kMagic{'N', '2', 'O', 'E'};

template <typename T>
T byteswap(T v) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <typename T>
void put(std::ostream& out, T v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void put_array(std::ostream& out, std::span<const T> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (T v : values) put(out, v);
  }
}

class Reader {
 public:
  Reader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  void read_bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) {
      throw DataError(name_ + ": truncated at byte offset " + std::to_string(offset_ + got)
                      + " (needed " + std::to_string(n - got) + " more bytes)");
    }
    offset_ += n;
  }

  template <typename T>
  T get() {
    T v{};
    read_bytes(&v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) v = byteswap(v);
    return v;
  }

  template <typename T>
  std::vector<T> get_array(std::size_t count) {
    std::vector<T> values(count);
    read_bytes(values.data(), count * sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& v : values) v = byteswap(v);
    }
    return values;
  }

  void expect_eof() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw DataError(name_ + ": trailing bytes after payload at offset " + std::to_string(offset_));
    }
  }

  const std::string& name() const { return name_; }

 private:
  std::istream& in_;
  std::string name_;
  std::size_t offset_ = 0;
};

N2oeHeader read_header(Reader& r) {
  std::array<char, 4> magic{};
  r.read_bytes(magic.data(), magic.size());
  if (magic != kMagic) {
    throw DataError(r.name() + ": bad magic (not an N2OE file)");
  }
  N2oeHeader h;
  h.version = r.get<std::uint16_t>();
  if (h.version != kN2oeVersion) {
    throw DataError(r.name() + ": unsupported N2OE version " + std::to_string(h.version));
  }
  h.dtype = r.get<std::uint8_t>();
  if (h.dtype != kDtypeDense && h.dtype != kDtypeSparse) {
    throw DataError(r.name() + ": unknown dtype code " + std::to_string(h.dtype));
  }
  r.get<std::uint8_t>();  // reserved
  h.corpus_hash = r.get<std::uint64_t>();
  h.rows = r.get<std::uint64_t>();
  h.dim = r.get<std::uint32_t>();
  if (h.dim == 0) {
    throw DataError(r.name() + ": dimension must be at least 1");
  }
  return h;
}

EmbeddingMatrix read_matrix(std::istream& in, const std::string& name, EmbedderId embedder,
                            std::uintmax_t file_size) {
  Reader r(in, name);
  const N2oeHeader h = read_header(r);
  // Reject impossible counts before allocating for them.
  const std::uintmax_t minimum_payload =
      h.dtype == kDtypeDense ? static_cast<std::uintmax_t>(h.rows) * h.dim * sizeof(float)
                             : 8 + (static_cast<std::uintmax_t>(h.rows) + 1) * 8;
  if (h.rows > file_size || (h.dtype == kDtypeDense && h.rows > file_size / h.dim)
      || kN2oeHeaderSize + minimum_payload > file_size) {
    throw DataError(name + ": truncated at byte offset " + std::to_string(file_size) + " (header declares "
                    + std::to_string(h.rows) + " rows of dimension " + std::to_string(h.dim) + ")");
  }
  EmbeddingMatrix::Storage storage;
  if (h.dtype == kDtypeDense) {
    DenseRows d;
    d.dim = h.dim;
    d.values = r.get_array<float>(h.rows * h.dim);
    storage = std::move(d);
  } else {
    SparseRows s;
    s.dim = h.dim;
    const auto nnz = r.get<std::uint64_t>();
    if (nnz > file_size) {
      throw DataError(name + ": sparse nnz " + std::to_string(nnz) + " exceeds file size");
    }
    s.offsets = r.get_array<std::uint64_t>(h.rows + 1);
    s.indices = r.get_array<std::uint32_t>(nnz);
    s.weights = r.get_array<float>(nnz);
    storage = std::move(s);
  }
  r.expect_eof();
  try {
    return EmbeddingMatrix(std::move(embedder), h.corpus_hash, h.rows, std::move(storage));
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  }
}

}  // namespace

void write_n2oe(const EmbeddingMatrix& matrix, std::ostream& out) {
  if (matrix.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError("dimension does not fit the N2OE u32 field");
  }
  out.write(kMagic.data(), kMagic.size());
  put<std::uint16_t>(out, kN2oeVersion);
  put<std::uint8_t>(out, matrix.is_sparse() ? kDtypeSparse : kDtypeDense);
  put<std::uint8_t>(out, 0);
  put<std::uint64_t>(out, matrix.corpus_hash());
  put<std::uint64_t>(out, matrix.rows());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.dim()));
  if (matrix.is_sparse()) {
    const auto& s = matrix.sparse();
    put<std::uint64_t>(out, s.indices.size());
    put_array<std::uint64_t>(out, s.offsets);
    put_array<std::uint32_t>(out, s.indices);
    put_array<float>(out, s.weights);
  } else {
    put_array<float>(out, matrix.dense().values);
  }
}

void write_n2oe(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  write_n2oe(matrix, out);
  out.flush();
  if (!out) {
    throw DataError("write failed: " + path.string());
  }
}

N2oeHeader read_n2oe_header(std::istream& in) {
  Reader r(in, "<stream>");
  return read_header(r);
}

EmbeddingMatrix read_n2oe(const std::filesystem::path& path, std::optional<EmbedderId> name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot read embedding file: " + path.string());
  }
  return read_matrix(in, path.string(), name ? std::move(*name) : EmbedderId(path.stem().string()),
                     std::filesystem::file_size(path));
}

EmbeddingMatrix import_matrix(const std::filesystem::path& path, const Corpus& corpus,
                              std::optional<EmbedderId> name) {
  // Check the header before reading a potentially large payload.
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw DataError("cannot read embedding file: " + path.string());
    }
    Reader r(in, path.string());
    const N2oeHeader h = read_header(r);
    if (h.rows != corpus.size()) {
      throw DataError(path.string() + ": row count " + std::to_string(h.rows)
                      + " does not match corpus size " + std::to_string(corpus.size()));
    }
    if (h.corpus_hash != corpus.content_hash()) {
      std::ostringstream msg;
      msg << path.string() << ": corpus hash mismatch (file " << std::hex << h.corpus_hash
          << ", corpus " << corpus.content_hash() << "); embeddings were built on a different corpus";
      throw DataError(msg.str());
    }
  }
  return read_n2oe(path, std::move(name));
}

std::filesystem::path matrix_path(const std::filesystem::path& dir, const EmbedderId& embedder) {
  return dir / (embedder.str() + ".n2oe");
}

}  // namespace n2o
