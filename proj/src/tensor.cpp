#include "namvp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace namvp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroRow: return "ZeroRow";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorKind::UnbalancedMarginals: return "UnbalancedMarginals";
    case ErrorKind::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::IndexMismatch: return "IndexMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::MissingTruth: return "MissingTruth";
    case ErrorKind::RejectionFailure: return "RejectionFailure";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::BlobLengthMismatch: return "BlobLengthMismatch";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
  }
  return "Unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require_finite(data_, "matrix fill");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorKind::DimensionMismatch,
                "matrix data length " + std::to_string(data_.size()) + " != " +
                    std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  require_finite(data_, "matrix data");
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw Error(ErrorKind::DimensionMismatch, "ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(rows.size(), cols, std::move(data));
}

Vector Matrix::row_sums() const {
  Vector out(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto rr = row(r);
    out[r] = std::accumulate(rr.begin(), rr.end(), 0.0);
  }
  return out;
}

Vector Matrix::col_sums() const {
  Vector out(cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out[c] += (*this)(r, c);
  return out;
}

double Matrix::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, std::string(what) + " has a non-finite entry");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double frobenius(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "frobenius product of differently shaped matrices");
  }
  return dot(a.data(), b.data());
}

Vector l2_normalize(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n > kMinRowNorm)) throw Error(ErrorKind::ZeroRow, "vector norm below 1e-12");
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

Matrix l2_normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double n = l2_norm(row);
    if (!(n > kMinRowNorm)) {
      throw Error(ErrorKind::ZeroRow, "row " + std::to_string(r) + " has norm below 1e-12");
    }
    for (double& x : row) x /= n;
  }
  return out;
}

Matrix cosine_similarity(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "cosine_similarity: column counts " +
                                                  std::to_string(a.cols()) + " and " +
                                                  std::to_string(b.cols()));
  }
  const Matrix an = l2_normalize_rows(a);
  const Matrix bn = l2_normalize_rows(b);
  Matrix out(a.rows(), b.rows());
  for (std::size_t l = 0; l < a.rows(); ++l) {
    for (std::size_t n = 0; n < b.rows(); ++n) {
      out(l, n) = std::clamp(dot(an.row(l), bn.row(n)), -1.0, 1.0);
    }
  }
  return out;
}

Vector tempered_softmax(std::span<const double> v, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorKind::NonPositiveTemperature, "tau must be positive");
  require_finite(v, "softmax input");
  if (v.empty()) return {};
  const double mx = *std::max_element(v.begin(), v.end());
  Vector out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp((v[i] - mx) / tau);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

double pairwise_softmax(double first, double second, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorKind::NonPositiveTemperature, "tau must be positive");
  const double mx = std::max(first, second);
  const double a = std::exp((first - mx) / tau);
  const double b = std::exp((second - mx) / tau);
  return b / (a + b);
}

}  // namespace namvp
