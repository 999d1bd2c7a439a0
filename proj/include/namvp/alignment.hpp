#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "namvp/dataset.hpp"
#include "namvp/ot.hpp"
#include "namvp/tensor.hpp"

namespace namvp {

struct AlignmentConfig {
  double epsilon = 0.1;   // entropic weight of the patch/prompt UOT
  double theta = 0.9;     // transported mass, |nu|_1
  std::size_t max_iter = 100;
  double stop_delta = 1e-3;

  void validate() const;
  ot::SolverOptions solver() const { return {max_iter, stop_delta}; }
};

inline constexpr double kDefaultTau = 0.07;
inline const double kLogTauMin = std::log(1e-3);
inline const double kLogTauMax = std::log(10.0);

/// Per-class clean-oriented and noise-aware prompt embeddings (views x dim
/// each) plus a shared log-temperature.
struct PromptBank {
  std::size_t num_classes = 0;
  std::size_t views = 0;
  std::size_t dim = 0;
  std::vector<Matrix> clean;
  std::vector<Matrix> noisy;
  double log_tau = std::log(kDefaultTau);

  /// exp(log_tau) clamped to [1e-3, 10].
  double tau() const;

  /// Entries i.i.d. N(0, stddev^2).
  static PromptBank random(std::size_t num_classes, std::size_t views, std::size_t dim,
                           std::mt19937_64& rng, double stddev = 0.02);

  /// ShapeMismatch / ZeroRow / NonFinite on a malformed bank.
  void validate() const;

  /// C x d: per class, the row-normalized mean of the clean views.
  Matrix clean_class_features() const;

  bool operator==(const PromptBank&) const = default;
};

struct UotDistance {
  double distance = 0.0;     // <C, T*>
  ot::TransportPlan transport;
};

/// Cost 1 - cos(F, G), mu = 1/L, nu = theta/N, solved by dykstra_uot.
UotDistance uot_distance(const Matrix& local, const Matrix& prompts, const AlignmentConfig& cfg);

/// 1 - <1 - cos(F, G), T> for a fixed plan T.
double similarity_under_plan(const Matrix& local, const Matrix& prompts, const Matrix& plan);

/// Transport plans of one sample against every class, both prompt sides.
struct SamplePlans {
  std::vector<Matrix> clean;
  std::vector<Matrix> noisy;
  bool converged_all = true;
};

SamplePlans solve_sample_plans(const Matrix& local, const PromptBank& bank, const AlignmentConfig& cfg);

struct AlignmentResult {
  Vector s_clean;
  Vector s_noisy;
  Vector p_clean;   // softmax over classes of s_clean / tau
  Vector p_noisy;   // pairwise noisy-vs-clean probability per class
  Vector phi;       // adaptive threshold; same formula as p_noisy
  bool converged_all = true;
};

/// Probabilities and thresholds from already computed similarities.
AlignmentResult scores_to_result(Vector s_clean, Vector s_noisy, double tau);

AlignmentResult align_sample(const SampleFeatures& sample, const PromptBank& bank,
                             const AlignmentConfig& cfg);

/// p_clean[y] > phi[y]; ties are noisy. LabelOutOfRange if y >= C.
bool is_clean(const AlignmentResult& r, ClassIndex observed_label);

/// argmax_k (1 - p_noisy[k]) * p_clean[k], lowest index on ties.
ClassIndex predict(const AlignmentResult& r);

}  // namespace namvp
