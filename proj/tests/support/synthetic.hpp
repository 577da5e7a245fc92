#pragma once

// Synthetic corpora and embedders for tests and the acceptance suite.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "n2o/corpus.hpp"
#include "n2o/embedders.hpp"

namespace n2o::support {

/// `n` distinct sentences over a small vocabulary, "s<i>" suffix keeps them
/// unique.
inline std::vector<std::string> synthetic_texts(std::size_t n, std::uint64_t seed) {
  static const char* words[] = {"market", "stock", "price", "rose", "fell", "bank",   "rate",  "city",
                                "mayor",  "vote",  "team",  "won",  "game",  "season", "coach", "storm",
                                "rain",   "river", "flood", "oil",  "gas",   "trade",  "deal",  "court"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(3, 10);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(words) - 1);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    const int l = len(rng);
    for (int w = 0; w < l; ++w) {
      s += words[pick(rng)];
      s += ' ';
    }
    s += "s" + std::to_string(i);
    out.push_back(std::move(s));
  }
  return out;
}

inline Corpus synthetic_corpus(std::size_t n, std::uint64_t seed) {
  return Corpus::from_texts(synthetic_texts(n, seed));
}

inline EmbeddingMatrix dense_matrix(const std::string& name, std::uint64_t hash, std::size_t rows,
                                    std::size_t dim, std::vector<float> values) {
  return EmbeddingMatrix(EmbedderId(name), hash, rows, DenseRows{dim, std::move(values)});
}

/// i.i.d. standard normal rows.
inline std::vector<float> random_values(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> v(rows * dim);
  for (auto& x : v) x = g(rng);
  return v;
}

/// Rows drawn around `clusters` random centers: center + spread * noise.
inline std::vector<float> clustered_values(std::size_t rows, std::size_t dim, std::size_t clusters,
                                           float spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> centers(clusters * dim);
  for (auto& x : centers) x = g(rng);
  std::uniform_int_distribution<std::size_t> pick(0, clusters - 1);
  std::vector<float> v(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t c = pick(rng);
    for (std::size_t j = 0; j < dim; ++j) v[r * dim + j] = centers[c * dim + j] + spread * g(rng);
  }
  return v;
}

/// Shared latent factors Z (rows x latent), one per corpus sentence.
inline std::vector<double> latent_factors(std::size_t rows, std::size_t latent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> z(rows * latent);
  for (auto& x : z) x = g(rng);
  return z;
}

/// Z W + noise * E for a random latent x dim map W.
inline std::vector<float> project_latent(const std::vector<double>& z, std::size_t rows, std::size_t latent,
                                         std::size_t dim, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> w(latent * dim);
  for (auto& x : w) x = g(rng) / std::sqrt(static_cast<double>(latent));
  std::vector<float> out(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < dim; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < latent; ++l) s += z[r * latent + l] * w[l * dim + j];
      out[r * dim + j] = static_cast<float>(s + noise * g(rng));
    }
  }
  return out;
}

struct LatentEmbedderSpec {
  std::string name;
  std::size_t dim;
  double noise;
};

/// Embedders sharing one latent space, each through its own random map.
inline std::vector<EmbeddingMatrix> latent_embedders(const Corpus& corpus, std::size_t latent,
                                                     const std::vector<LatentEmbedderSpec>& specs,
                                                     std::uint64_t seed) {
  const auto z = latent_factors(corpus.size(), latent, seed);
  std::vector<EmbeddingMatrix> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto values = project_latent(z, corpus.size(), latent, specs[i].dim, specs[i].noise, seed * 1000 + i + 1);
    out.push_back(dense_matrix(specs[i].name, corpus.content_hash(), corpus.size(), specs[i].dim, std::move(values)));
  }
  return out;
}

}  // namespace n2o::support
