#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace powerset {

using Vector = std::vector<double>;

/// A subset A of the M region masks of one image; bit m set means mask m is
/// in A. bits == 0 is the empty subset.
struct SubsetId {
  std::uint64_t bits = 0;
  bool contains(std::size_t m) const { return (bits >> m) & 1u; }
  bool operator==(const SubsetId&) const = default;
};

/// Raised when an input makes a quantity undefined (zero-norm embedding,
/// empty mask, zero-variance sequence).
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for shape mismatches between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles.
///
/// Used for embedding matrices (rows = patches or tokens, cols = D), for the
/// per-(i,j) blocks of the similarity tensor and for C x C similarity
/// matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Matrix transposed() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Embeddings of one sample: one row per patch (image) or token (text).
using EmbeddingMatrix = Matrix;

// Accumulates in ascending index order; results are bit-reproducible.
double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Unit vector in the direction of `v`. Throws DegenerateInput on a zero
/// (or non-finite) norm.
Vector l2_normalize(std::span<const double> v);

/// Sum of the rows of `m` selected by a 0/1 mask, normalized to unit length.
/// This is the masked-pooling encoder shared by the region and phrase sides.
Vector masked_unit_sum(const EmbeddingMatrix& m, std::span<const unsigned char> mask);

/// Derives an independent stream seed from a base seed (SplitMix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

void check_finite(const Matrix& m, const char* what);

}  // namespace powerset
