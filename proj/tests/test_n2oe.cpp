#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "n2o/embedders.hpp"
#include "n2o/error.hpp"
#include "n2o/n2oe_format.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace n2o;

namespace {

// Little-endian byte builder, independent of the library writer.
struct Bytes {
  std::string b;
  void raw(const char* s, std::size_t n) { b.append(s, n); }
  template <class T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) b.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
  void f32(float f) { le(std::bit_cast<std::uint32_t>(f)); }
};

std::string header(std::uint16_t version, std::uint8_t dtype, std::uint64_t hash, std::uint64_t rows,
                   std::uint32_t dim) {
  Bytes h;
  h.raw("N2OE", 4);
  h.le(version);
  h.le(dtype);
  h.le(std::uint8_t{0});
  h.le(hash);
  h.le(rows);
  h.le(dim);
  return h.b;
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::filesystem::path& p, const Corpus& c) {
  try {
    import_matrix(p, c);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(N2oe, ReadsHandWrittenDenseFile) {
  support::TempDir dir;
  const Corpus c = Corpus::from_texts({"a", "b"});
  Bytes body;
  for (float f : {1.0f, -2.5f, 0.0f, 0.0f, 3.25f, 1e-30f}) body.f32(f);
  write_bytes(dir / "ext.n2oe", header(1, 1, c.content_hash(), 2, 3) + body.b);
  const auto m = import_matrix(dir / "ext.n2oe", c);
  EXPECT_EQ(m.embedder().str(), "ext");
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.dim(), 3u);
  EXPECT_EQ(m.dense().values, (std::vector<float>{1.0f, -2.5f, 0.0f, 0.0f, 3.25f, 1e-30f}));
}

TEST(N2oe, WriterMatchesHandLayout) {
  support::TempDir dir;
  const auto m = support::dense_matrix("w", 0x0102030405060708ull, 1, 2, {0.5f, -1.0f});
  write_n2oe(m, dir / "w.n2oe");
  Bytes body;
  body.f32(0.5f);
  body.f32(-1.0f);
  EXPECT_EQ(read_bytes(dir / "w.n2oe"), header(1, 1, 0x0102030405060708ull, 1, 2) + body.b);
  EXPECT_EQ(kN2oeHeaderSize, 28u);
}

TEST(N2oe, ReadsHandWrittenSparseFile) {
  support::TempDir dir;
  const Corpus c = Corpus::from_texts({"a", "b", "c"});
  Bytes body;
  body.le(std::uint64_t{3});
  for (std::uint64_t off : {0, 2, 2, 3}) body.le(off);
  for (std::uint32_t id : {1u, 4u, 0u}) body.le(id);
  for (float f : {0.6f, 0.8f, 1.0f}) body.f32(f);
  write_bytes(dir / "sp.n2oe", header(1, 2, c.content_hash(), 3, 5) + body.b);
  const auto m = import_matrix(dir / "sp.n2oe", c);
  ASSERT_TRUE(m.is_sparse());
  EXPECT_EQ(m.zero_rows(), (std::vector<SentenceId>{1}));
  const auto r0 = m.sparse_row(0);
  EXPECT_EQ(std::vector<std::uint32_t>(r0.indices.begin(), r0.indices.end()), (std::vector<std::uint32_t>{1, 4}));
}

TEST(N2oe, RoundTripIsBitExact) {
  support::TempDir dir;
  const Corpus c = support::synthetic_corpus(200, 5);
  auto values = support::random_values(200, 17, 3);
  values[5] = -0.0f;
  values[6] = 1e-40f;  // subnormal
  const auto dense = support::dense_matrix("d", c.content_hash(), 200, 17, values);
  write_n2oe(dense, matrix_path(dir.path(), dense.embedder()));
  const auto back = import_matrix(dir / "d.n2oe", c);
  EXPECT_TRUE(back == dense);
  EXPECT_EQ(std::memcmp(back.dense().values.data(), values.data(), values.size() * sizeof(float)), 0);

  const auto sparse = embed_corpus_tfidf(fit_tfidf(c), c, EmbedderId("t"));
  write_n2oe(sparse, dir / "t.n2oe");
  EXPECT_TRUE(import_matrix(dir / "t.n2oe", c) == sparse);
  EXPECT_EQ(read_n2oe(dir / "t.n2oe", EmbedderId("other")).embedder().str(), "other");
}

TEST(N2oe, ProvenanceErrors) {
  support::TempDir dir;
  const Corpus c = support::synthetic_corpus(10, 1);
  const auto short_m = support::dense_matrix("m", c.content_hash(), 9, 2, support::random_values(9, 2, 1));
  write_n2oe(short_m, dir / "short.n2oe");
  EXPECT_NE(error_of(dir / "short.n2oe", c).find("row count"), std::string::npos);

  const auto other = support::dense_matrix("m", c.content_hash() ^ 1, 10, 2, support::random_values(10, 2, 1));
  write_n2oe(other, dir / "hash.n2oe");
  EXPECT_NE(error_of(dir / "hash.n2oe", c).find("hash"), std::string::npos);
  EXPECT_NO_THROW(read_n2oe(dir / "hash.n2oe"));
}

TEST(N2oe, FormatErrors) {
  support::TempDir dir;
  const Corpus c = Corpus::from_texts({"a"});
  Bytes one;
  one.f32(1.0f);
  auto bad_magic = header(1, 1, c.content_hash(), 1, 1) + one.b;
  bad_magic[0] = 'X';
  write_bytes(dir / "magic.n2oe", bad_magic);
  EXPECT_NE(error_of(dir / "magic.n2oe", c).find("magic"), std::string::npos);

  write_bytes(dir / "ver.n2oe", header(2, 1, c.content_hash(), 1, 1) + one.b);
  EXPECT_NE(error_of(dir / "ver.n2oe", c).find("version"), std::string::npos);

  write_bytes(dir / "dtype.n2oe", header(1, 7, c.content_hash(), 1, 1) + one.b);
  EXPECT_NE(error_of(dir / "dtype.n2oe", c).find("dtype"), std::string::npos);

  write_bytes(dir / "trunc.n2oe", header(1, 1, c.content_hash(), 1, 2) + one.b);
  EXPECT_NE(error_of(dir / "trunc.n2oe", c).find("truncated at byte offset"), std::string::npos);

  write_bytes(dir / "hdr.n2oe", header(1, 1, c.content_hash(), 1, 1).substr(0, 20));
  EXPECT_NE(error_of(dir / "hdr.n2oe", c).find("truncated"), std::string::npos);

  write_bytes(dir / "tail.n2oe", header(1, 1, c.content_hash(), 1, 1) + one.b + "zz");
  EXPECT_NE(error_of(dir / "tail.n2oe", c).find("trailing"), std::string::npos);

  Bytes nan;
  nan.f32(NAN);
  write_bytes(dir / "nan.n2oe", header(1, 1, c.content_hash(), 1, 1) + nan.b);
  EXPECT_THROW(import_matrix(dir / "nan.n2oe", c), DataError);
  EXPECT_THROW(import_matrix(dir / "missing.n2oe", c), DataError);
}

TEST(N2oe, HeaderFromStream) {
  std::istringstream in(header(1, 2, 99, 7, 300));
  const auto h = read_n2oe_header(in);
  EXPECT_EQ(h.version, 1);
  EXPECT_EQ(h.dtype, kDtypeSparse);
  EXPECT_EQ(h.corpus_hash, 99u);
  EXPECT_EQ(h.rows, 7u);
  EXPECT_EQ(h.dim, 300u);
}
