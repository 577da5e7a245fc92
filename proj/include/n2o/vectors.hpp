#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace n2o {

/// Storage is 32-bit; every reduction accumulates in double.
using DenseVector = std::vector<float>;

/// Non-owning view of a sparse vector: strictly increasing indices with one
/// weight each.
struct SparseView {
  std::span<const std::uint32_t> indices;
  std::span<const float> weights;
  std::size_t dim = 0;
};

struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<float> weights;
  std::size_t dim = 0;

  SparseView view() const { return {indices, weights, dim}; }
  bool empty() const { return indices.empty(); }

  void validate() const;
};

/// Throws DataError unless indices are strictly increasing and < dim,
/// sizes match, and every weight is finite.
void validate(SparseView v);

/// Sequential double-precision sum of a[i]*b[i], i = 0..d-1. Every search
/// path uses this exact accumulation order.
double dot(std::span<const float> a, std::span<const float> b);

double norm(std::span<const float> a);
double norm(SparseView a);

/// Merge-join over the shared indices in ascending order.
double sparse_dot(SparseView a, SparseView b);
inline double sparse_dot(const SparseVector& a, const SparseVector& b) {
  return sparse_dot(a.view(), b.view());
}

/// Cosine similarity. Throws DataError on a dimension mismatch or a
/// zero-norm operand.
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(const SparseVector& a, const SparseVector& b);

/// Unit-norm copy (scaled in double, stored as float). Throws DataError on a
/// zero-norm input.
DenseVector l2_normalize(std::span<const float> a);
SparseVector l2_normalize(const SparseVector& a);

/// Throws DataError naming the first non-finite component.
void check_finite(std::span<const float> a);

}  // namespace n2o
