#include "powerset/core.hpp"

#include <cmath>

namespace powerset {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data has " + std::to_string(data_.size()) + " values, expected " +
                     std::to_string(rows * cols));
  }
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  Matrix out(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw ShapeError("ragged matrix: row " + std::to_string(r) + " has " +
                       std::to_string(rows[r].size()) + " columns, expected " +
                       std::to_string(cols));
    }
    std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
  }
  return out;
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector l2_normalize(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateInput("zero-norm embedding");
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

Vector masked_unit_sum(const EmbeddingMatrix& m, std::span<const unsigned char> mask) {
  if (mask.size() != m.rows()) {
    throw ShapeError("mask length " + std::to_string(mask.size()) + " does not match " +
                     std::to_string(m.rows()) + " embedding rows");
  }
  Vector sum(m.cols(), 0.0);
  bool any = false;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (!mask[r]) continue;
    any = true;
    auto row = m.row(r);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += row[k];
  }
  if (!any) throw DegenerateInput("empty mask");
  return l2_normalize(sum);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void check_finite(const Matrix& m, const char* what) {
  for (double x : m.data()) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " contains non-finite values");
  }
}

}  // namespace powerset
