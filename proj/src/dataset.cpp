#include "namvp/dataset.hpp"

#include <cmath>
#include <string>

namespace namvp {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::ValidationError, what); }

void check_labels(const Labels& labels, std::size_t n, std::size_t classes, const char* which) {
  if (labels.size() != n) invalid(std::string(which) + " length does not match sample count");
  for (ClassIndex y : labels) {
    if (y >= classes) invalid(std::string(which) + " entry " + std::to_string(y) + " out of range");
  }
}

}  // namespace

Matrix EmbeddingDataset::global_matrix() const {
  Matrix out(samples.size(), dim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto row = out.row(i);
    std::copy(samples[i].global.begin(), samples[i].global.end(), row.begin());
  }
  return out;
}

void EmbeddingDataset::validate() const {
  if (dim == 0) invalid("dim must be positive");
  if (patches == 0) invalid("patches must be positive");
  if (num_classes == 0) invalid("num_classes must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const std::string at = "sample " + std::to_string(i);
    if (s.global.size() != dim) invalid(at + ": global feature length mismatch");
    if (s.local.rows() != patches || s.local.cols() != dim) invalid(at + ": local feature shape mismatch");
    for (double x : s.global)
      if (!std::isfinite(x)) invalid(at + ": non-finite global feature");
    for (double x : s.local.data())
      if (!std::isfinite(x)) invalid(at + ": non-finite local feature");
    if (!(l2_norm(s.global) > kMinRowNorm)) invalid(at + ": global feature not normalizable");
    for (std::size_t l = 0; l < s.local.rows(); ++l) {
      if (!(l2_norm(s.local.row(l)) > kMinRowNorm)) invalid(at + ": patch row not normalizable");
    }
  }
  check_labels(labels, samples.size(), num_classes, "labels");
  if (truth) check_labels(*truth, samples.size(), num_classes, "truth labels");
}

double noise_ratio(const Labels& labels, const Labels& truth) {
  if (labels.size() != truth.size()) throw Error(ErrorKind::LengthMismatch, "noise_ratio: length mismatch");
  if (labels.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) wrong += labels[i] != truth[i];
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

}  // namespace namvp
