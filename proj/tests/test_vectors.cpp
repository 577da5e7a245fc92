#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "n2o/error.hpp"
#include "n2o/vectors.hpp"

using namespace n2o;

TEST(Cosine, Examples) {
  const DenseVector a{1, 0};
  const DenseVector b{0, 1};
  EXPECT_DOUBLE_EQ(cosine(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine(a, b), 0.0);
  const DenseVector x{1, 2, 3};
  const DenseVector y{4, 5, 6};
  EXPECT_NEAR(cosine(x, y), 32.0 / std::sqrt(14.0 * 77.0), 1e-12);
  EXPECT_NEAR(cosine(x, y), 0.974632, 1e-6);
}

TEST(Cosine, Errors) {
  const DenseVector a{1, 0};
  const DenseVector z{0, 0};
  const DenseVector c{1, 0, 0};
  EXPECT_THROW(cosine(a, z), DataError);
  EXPECT_THROW(cosine(a, c), DataError);
  const SparseVector s{{0}, {1.0f}, 3};
  const SparseVector t{{0}, {1.0f}, 4};
  EXPECT_THROW(cosine(s, t), DataError);
  EXPECT_THROW(cosine(s, SparseVector{{}, {}, 3}), DataError);
}

TEST(Cosine, SelfAndScaleInvariance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> g;
  std::uniform_real_distribution<float> scale(0.01f, 100.0f);
  for (int t = 0; t < 1000; ++t) {
    DenseVector a(50);
    for (auto& x : a) x = g(rng);
    EXPECT_NEAR(cosine(a, a), 1.0, 1e-6);
    const float c = scale(rng);
    DenseVector b(a);
    for (auto& x : b) x *= c;
    EXPECT_NEAR(cosine(a, b), 1.0, 1e-6);
  }
}

TEST(Normalize, Examples) {
  const auto v = l2_normalize(DenseVector{3, 4});
  EXPECT_FLOAT_EQ(v[0], 0.6f);
  EXPECT_FLOAT_EQ(v[1], 0.8f);
  const DenseVector unit{0, 1, 0};
  EXPECT_EQ(l2_normalize(unit), unit);
  EXPECT_THROW(l2_normalize(DenseVector{0, 0}), DataError);
}

TEST(Normalize, RandomVectorsHaveUnitNorm) {
  std::mt19937_64 rng(11);
  std::normal_distribution<float> g(0.0f, 3.0f);
  for (int t = 0; t < 1000; ++t) {
    DenseVector a(300);
    DenseVector b(300);
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng);
    const auto na = l2_normalize(a);
    EXPECT_NEAR(norm(na), 1.0, 1e-6);
    EXPECT_NEAR(dot(na, l2_normalize(b)), cosine(a, b), 1e-6);
  }
}

TEST(SparseDot, Examples) {
  const SparseVector a{{0, 3}, {1, 2}, 8};
  const SparseVector b{{3, 7}, {4, 1}, 8};
  EXPECT_DOUBLE_EQ(sparse_dot(a, b), 8.0);
  const SparseVector c{{1, 2}, {1, 1}, 8};
  const SparseVector d{{4, 5}, {1, 1}, 8};
  EXPECT_DOUBLE_EQ(sparse_dot(c, d), 0.0);
  const SparseVector e{{2}, {1.0f}, 3};
  EXPECT_DOUBLE_EQ(sparse_dot(e, e), 1.0);
  EXPECT_THROW(sparse_dot(e, SparseVector{{2}, {1.0f}, 4}), DataError);
}

TEST(SparseDot, MatchesDensifiedDot) {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution keep(0.1);
  std::normal_distribution<float> g;
  const std::size_t dim = 500;
  for (int t = 0; t < 500; ++t) {
    SparseVector a{{}, {}, dim};
    SparseVector b{{}, {}, dim};
    DenseVector da(dim, 0.0f);
    DenseVector db(dim, 0.0f);
    for (std::uint32_t i = 0; i < dim; ++i) {
      if (keep(rng)) {
        a.indices.push_back(i);
        a.weights.push_back(da[i] = g(rng));
      }
      if (keep(rng)) {
        b.indices.push_back(i);
        b.weights.push_back(db[i] = g(rng));
      }
    }
    EXPECT_NEAR(sparse_dot(a, b), dot(da, db), 1e-6);
    if (!a.empty() && !b.empty()) EXPECT_NEAR(cosine(a, b), cosine(da, db), 1e-6);
  }
}

TEST(SparseVector, Validation) {
  EXPECT_THROW((SparseVector{{2, 1}, {1, 1}, 5}.validate()), DataError);
  EXPECT_THROW((SparseVector{{1, 1}, {1, 1}, 5}.validate()), DataError);
  EXPECT_THROW((SparseVector{{5}, {1}, 5}.validate()), DataError);
  EXPECT_THROW((SparseVector{{1}, {1, 2}, 5}.validate()), DataError);
  EXPECT_THROW((SparseVector{{1}, {NAN}, 5}.validate()), DataError);
  EXPECT_NO_THROW((SparseVector{{0, 4}, {1, 2}, 5}.validate()));
}

TEST(Dense, CheckFinite) {
  EXPECT_THROW(check_finite(DenseVector{1, INFINITY}), DataError);
  EXPECT_NO_THROW(check_finite(DenseVector{1, 2}));
}

TEST(Dense, DotAccumulatesInDouble) {
  // 1 + many tiny terms: float accumulation would lose them entirely.
  DenseVector a(10001, 1e-8f);
  a[0] = 1.0f;
  DenseVector ones(10001, 1.0f);
  EXPECT_NEAR(dot(a, ones), 1.0 + 10000 * static_cast<double>(1e-8f), 1e-12);
}
