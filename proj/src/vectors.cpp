#include "n2o/vectors.hpp"

#include <cmath>
#include <string>

#include "n2o/error.hpp"

namespace n2o {

void SparseVector::validate() const { n2o::validate(view()); }

void validate(SparseView v) {
  const auto& indices = v.indices;
  const auto& weights = v.weights;
  const auto dim = v.dim;
  if (indices.size() != weights.size()) {
    throw DataError("sparse vector has " + std::to_string(indices.size()) + " indices but "
                    + std::to_string(weights.size()) + " weights");
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= dim) {
      throw DataError("sparse index " + std::to_string(indices[i]) + " out of range for dim "
                      + std::to_string(dim));
    }
    if (i > 0 && indices[i] <= indices[i - 1]) {
      throw DataError("sparse indices not strictly increasing at position " + std::to_string(i));
    }
    if (!std::isfinite(weights[i])) {
      throw DataError("non-finite sparse weight at position " + std::to_string(i));
    }
  }
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw DataError("dimension mismatch: " + std::to_string(a.size()) + " vs "
                    + std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return sum;
}

double norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

double norm(SparseView a) {
  double sum = 0.0;
  for (float w : a.weights) {
    sum += static_cast<double>(w) * static_cast<double>(w);
  }
  return std::sqrt(sum);
}

double sparse_dot(SparseView a, SparseView b) {
  if (a.dim != b.dim) {
    throw DataError("sparse dimension mismatch: " + std::to_string(a.dim) + " vs "
                    + std::to_string(b.dim));
  }
  double sum = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (b.indices[j] < a.indices[i]) {
      ++j;
    } else {
      sum += static_cast<double>(a.weights[i]) * static_cast<double>(b.weights[j]);
      ++i;
      ++j;
    }
  }
  return sum;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  const double ab = dot(a, b);
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw DataError("cosine of a zero-norm vector is undefined");
  }
  return ab / (na * nb);
}

double cosine(const SparseVector& a, const SparseVector& b) {
  const double ab = sparse_dot(a, b);
  const double na = norm(a.view());
  const double nb = norm(b.view());
  if (na == 0.0 || nb == 0.0) {
    throw DataError("cosine of a zero-norm vector is undefined");
  }
  return ab / (na * nb);
}

DenseVector l2_normalize(std::span<const float> a) {
  const double n = norm(a);
  if (n == 0.0) {
    throw DataError("cannot normalize a zero-norm vector");
  }
  DenseVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(a[i]) / n);
  }
  return out;
}

SparseVector l2_normalize(const SparseVector& a) {
  const double n = norm(a.view());
  if (n == 0.0) {
    throw DataError("cannot normalize a zero-norm vector");
  }
  SparseVector out = a;
  for (auto& w : out.weights) {
    w = static_cast<float>(static_cast<double>(w) / n);
  }
  return out;
}

void check_finite(std::span<const float> a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i])) {
      throw DataError("non-finite component at index " + std::to_string(i));
    }
  }
}

}  // namespace n2o
