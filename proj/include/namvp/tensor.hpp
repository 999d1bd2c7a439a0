#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "namvp/error.hpp"

namespace namvp {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Shape is fixed after construction.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of `data`; throws DimensionMismatch on a length
  /// mismatch and NonFinite on NaN/Inf entries.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Vector row_sums() const;
  Vector col_sums() const;
  double sum() const;
  Matrix transposed() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

void require_finite(std::span<const double> values, const char* what);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Frobenius inner product; DimensionMismatch on shape disagreement.
double frobenius(const Matrix& a, const Matrix& b);

/// Minimum row norm accepted by the normalizing kernels.
inline constexpr double kMinRowNorm = 1e-12;

Matrix l2_normalize_rows(const Matrix& m);
Vector l2_normalize(std::span<const double> v);

/// output(l, n) = cos(a_l, b_n).
Matrix cosine_similarity(const Matrix& a, const Matrix& b);

/// softmax(v / tau) with max-subtraction.
Vector tempered_softmax(std::span<const double> v, double tau);

/// Two-way softmax weight of `second` against `first`:
/// exp(second/tau) / (exp(first/tau) + exp(second/tau)).
double pairwise_softmax(double first, double second, double tau);

}  // namespace namvp
