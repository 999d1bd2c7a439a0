#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "namvp/dataset.hpp"

namespace namvp::synth {

enum class NoiseKind { Symmetric, Asymmetric };

NoiseKind parse_noise_kind(std::string_view s);
std::string_view to_string(NoiseKind kind);

struct SynthConfig {
  std::size_t num_classes = 10;
  std::size_t shots = 16;
  std::size_t dim = 32;
  std::size_t patches = 16;
  double separation = 20.0;
  double background_fraction = 0.25;
  double noise_rate = 0.0;
  NoiseKind noise_kind = NoiseKind::Symmetric;
  std::uint64_t seed = 0;
  /// Prototypes depend on `seed` only; samples and noise also depend on the
  /// split, so train/test sets drawn with one seed share their classes.
  std::uint64_t split = 0;

  void validate() const;
};

/// Largest pairwise prototype cosine admitted at a given separation.
double prototype_cosine_bound(double separation);

/// Unit prototypes, one per class, with pairwise cosine below the bound.
/// RejectionFailure after 10^4 rejected draws for a single prototype.
Matrix draw_prototypes(std::size_t num_classes, std::size_t dim, double separation, std::uint64_t seed);

/// shots samples per class around the prototypes; global feature
/// normalize(proto + sigma * gaussian) with sigma = 1/separation, patches
/// normalize(global + sigma * gaussian), floor(background_fraction * L) of
/// them replaced by pure noise. Label noise per noise_rate / noise_kind.
EmbeddingDataset gen_dataset(const SynthConfig& cfg);

struct NoisyLabels {
  Labels labels;
  std::vector<bool> flip_mask;
};

/// Exactly floor(rate * D) samples move to a uniformly drawn other class.
NoisyLabels inject_symmetric_noise(const Labels& labels, double rate, std::size_t num_classes, std::uint64_t seed);

/// Exactly floor(rate * D) samples move from k to (k + 1) mod C.
NoisyLabels inject_asymmetric_noise(const Labels& labels, double rate, std::size_t num_classes, std::uint64_t seed);

}  // namespace namvp::synth
