#include "namvp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace namvp::synth {

namespace {

constexpr std::size_t kMaxRejections = 10000;

std::mt19937_64 stream(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  for (std::uint64_t k : key) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

Vector gaussian(std::size_t dim, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Vector v(dim);
  for (double& x : v) x = normal(rng);
  return v;
}

/// Normalizes, redrawing in the (measure-zero) event of a zero vector.
Vector unit_gaussian(std::size_t dim, std::mt19937_64& rng) {
  for (;;) {
    Vector v = gaussian(dim, 1.0, rng);
    if (l2_norm(v) > kMinRowNorm) return l2_normalize(v);
  }
}

std::vector<std::size_t> choose_flips(std::size_t n, double rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorKind::DomainError, "noise rate must lie in [0, 1)");
  const auto count = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void require_flippable(std::size_t num_classes, const std::vector<std::size_t>& flips) {
  if (!flips.empty() && num_classes < 2) {
    throw Error(ErrorKind::DomainError, "label noise needs at least two classes");
  }
}

}  // namespace

NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "symmetric" || s == "sym") return NoiseKind::Symmetric;
  if (s == "asymmetric" || s == "asym") return NoiseKind::Asymmetric;
  throw Error(ErrorKind::InvalidConfig, "unknown noise kind '" + std::string(s) + "'");
}

std::string_view to_string(NoiseKind kind) {
  return kind == NoiseKind::Symmetric ? "symmetric" : "asymmetric";
}

void SynthConfig::validate() const {
  if (num_classes == 0) throw Error(ErrorKind::InvalidConfig, "num_classes must be positive");
  if (shots == 0) throw Error(ErrorKind::InvalidConfig, "shots must be positive");
  if (dim == 0 || patches == 0) throw Error(ErrorKind::InvalidConfig, "dim and patches must be positive");
  if (!(separation > 0.0) || !std::isfinite(separation)) throw Error(ErrorKind::InvalidConfig, "separation must be positive");
  if (!(background_fraction >= 0.0 && background_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "background_fraction must lie in [0, 1)");
  }
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) throw Error(ErrorKind::InvalidConfig, "noise_rate must lie in [0, 1)");
}

double prototype_cosine_bound(double separation) { return 1.0 / (1.0 + separation / 10.0); }

Matrix draw_prototypes(std::size_t num_classes, std::size_t dim, double separation, std::uint64_t seed) {
  auto rng = stream({seed, 0x70726f746fULL});
  const double bound = prototype_cosine_bound(separation);
  Matrix protos(num_classes, dim);
  for (std::size_t k = 0; k < num_classes; ++k) {
    std::size_t attempts = 0;
    for (;;) {
      if (++attempts > kMaxRejections) {
        throw Error(ErrorKind::RejectionFailure,
                    "could not place prototype " + std::to_string(k) + " with pairwise cosine < " +
                        std::to_string(bound));
      }
      const Vector cand = unit_gaussian(dim, rng);
      bool ok = true;
      for (std::size_t j = 0; j < k && ok; ++j) ok = dot(cand, protos.row(j)) < bound;
      if (ok) {
        std::copy(cand.begin(), cand.end(), protos.row(k).begin());
        break;
      }
    }
  }
  return protos;
}

EmbeddingDataset gen_dataset(const SynthConfig& cfg) {
  cfg.validate();
  const Matrix protos = draw_prototypes(cfg.num_classes, cfg.dim, cfg.separation, cfg.seed);
  auto rng = stream({cfg.seed, cfg.split, 1});
  const double sigma = 1.0 / cfg.separation;
  const auto background =
      static_cast<std::size_t>(std::floor(cfg.background_fraction * static_cast<double>(cfg.patches)));

  EmbeddingDataset ds;
  ds.num_classes = cfg.num_classes;
  ds.dim = cfg.dim;
  ds.patches = cfg.patches;
  Labels truth;
  for (std::size_t k = 0; k < cfg.num_classes; ++k) {
    for (std::size_t s = 0; s < cfg.shots; ++s) {
      SampleFeatures sample;
      Vector g = gaussian(cfg.dim, sigma, rng);
      for (std::size_t d = 0; d < cfg.dim; ++d) g[d] += protos(k, d);
      sample.global = l2_normalize(g);

      std::vector<std::size_t> order(cfg.patches);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      sample.local = Matrix(cfg.patches, cfg.dim);
      for (std::size_t pos = 0; pos < cfg.patches; ++pos) {
        const std::size_t l = order[pos];
        Vector patch;
        if (pos < background) {
          patch = unit_gaussian(cfg.dim, rng);
        } else {
          patch = gaussian(cfg.dim, sigma, rng);
          for (std::size_t d = 0; d < cfg.dim; ++d) patch[d] += sample.global[d];
          patch = l2_normalize(patch);
        }
        std::copy(patch.begin(), patch.end(), sample.local.row(l).begin());
      }
      ds.samples.push_back(std::move(sample));
      truth.push_back(k);
    }
  }

  ds.labels = truth;
  if (cfg.noise_rate > 0.0) {
    auto noise_rng = stream({cfg.seed, cfg.split, 2});
    const std::uint64_t noise_seed = noise_rng();
    ds.labels = cfg.noise_kind == NoiseKind::Symmetric
                    ? inject_symmetric_noise(truth, cfg.noise_rate, cfg.num_classes, noise_seed).labels
                    : inject_asymmetric_noise(truth, cfg.noise_rate, cfg.num_classes, noise_seed).labels;
  }
  ds.truth = std::move(truth);
  ds.provenance = "synthetic: classes=" + std::to_string(cfg.num_classes) + " shots=" + std::to_string(cfg.shots) +
                  " dim=" + std::to_string(cfg.dim) + " patches=" + std::to_string(cfg.patches) +
                  " separation=" + std::to_string(cfg.separation) +
                  " background=" + std::to_string(cfg.background_fraction) +
                  " noise=" + std::string(to_string(cfg.noise_kind)) + ":" + std::to_string(cfg.noise_rate) +
                  " seed=" + std::to_string(cfg.seed) + " split=" + std::to_string(cfg.split);
  return ds;
}

NoisyLabels inject_symmetric_noise(const Labels& labels, double rate, std::size_t num_classes, std::uint64_t seed) {
  auto rng = stream({seed, 0x73796dULL});
  const auto flips = choose_flips(labels.size(), rate, rng);
  require_flippable(num_classes, flips);
  NoisyLabels out{labels, std::vector<bool>(labels.size(), false)};
  for (std::size_t i : flips) {
    std::uniform_int_distribution<std::size_t> other(0, num_classes - 2);
    const std::size_t r = other(rng);
    out.labels[i] = r < labels[i] ? r : r + 1;
    out.flip_mask[i] = true;
  }
  return out;
}

NoisyLabels inject_asymmetric_noise(const Labels& labels, double rate, std::size_t num_classes, std::uint64_t seed) {
  auto rng = stream({seed, 0x6173796dULL});
  const auto flips = choose_flips(labels.size(), rate, rng);
  require_flippable(num_classes, flips);
  NoisyLabels out{labels, std::vector<bool>(labels.size(), false)};
  for (std::size_t i : flips) {
    out.labels[i] = (labels[i] + 1) % num_classes;
    out.flip_mask[i] = true;
  }
  return out;
}

}  // namespace namvp::synth
