#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "namvp/tensor.hpp"

namespace namvp {

using ClassIndex = std::size_t;
using Labels = std::vector<ClassIndex>;

/// Frozen encoder output for one sample: a global d-vector and an L x d
/// map of local (patch) features.
struct SampleFeatures {
  Vector global;
  Matrix local;

  bool operator==(const SampleFeatures&) const = default;
};

struct EmbeddingDataset {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::size_t patches = 0;
  std::vector<SampleFeatures> samples;
  Labels labels;                      // observed, possibly noisy
  std::optional<Labels> truth;        // evaluation only
  std::string provenance;

  std::size_t size() const noexcept { return samples.size(); }

  /// D x d matrix of global features.
  Matrix global_matrix() const;

  /// Throws ValidationError on shape, label range, finiteness or
  /// normalizability violations.
  void validate() const;

  bool operator==(const EmbeddingDataset&) const = default;
};

/// Fraction of positions where `labels` differs from `truth`.
double noise_ratio(const Labels& labels, const Labels& truth);

}  // namespace namvp
