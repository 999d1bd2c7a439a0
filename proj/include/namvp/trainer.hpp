#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "namvp/alignment.hpp"
#include "namvp/objectives.hpp"
#include "namvp/refinement.hpp"

namespace namvp {

struct SgdConfig {
  double learning_rate = 0.002;
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t sup_epochs = 20;
  SgdConfig sgd;
  std::size_t batch_size = 32;
  std::size_t views = 4;
  double lambda_i = 0.1;
  double q = 0.5;
  AlignmentConfig alignment;
  /// Entropic weight and solver limits of the global pseudo-labelling OT.
  double refine_epsilon = 0.1;
  std::size_t refine_max_iter = 2000;
  double refine_tol = 1e-7;
  /// Rebuild the denoised labels before every mini-batch instead of once
  /// per epoch.
  bool refine_per_batch = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Momentum buffers, lazily shaped on the first step.
struct SgdState {
  std::optional<GradientSet> velocity;
};

/// v = momentum * v + (g + weight_decay * param); param -= lr * v.
/// log_tau gets no weight decay and is clamped to [ln 1e-3, ln 10].
void sgd_step(PromptBank& bank, const GradientSet& grads, SgdState& state, const SgdConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  bool denoising = false;
  double loss_total = 0.0;  // mean over mini-batches
  double loss_gce = 0.0;
  double loss_itbp = 0.0;
  double tau = 0.0;
  std::optional<double> noise_ratio;  // training labels vs truth
  std::optional<std::size_t> clean_count;
  std::optional<std::size_t> noisy_count;
  std::optional<RefinementReport> report;
  bool solver_converged = true;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  PromptBank bank;
  TrainHistory history;
  std::optional<DenoisedDataset> denoised;  // last rebuilt denoised labels
  std::optional<RefinementReport> final_report;
};

/// Partition + pseudo-label + selective refinement of `ds` (observed labels)
/// under `bank`.
struct RefinementPass {
  DatasetPartition partition;
  PseudoLabels pseudo;
  DenoisedDataset denoised;
  bool converged_all = true;
};
RefinementPass run_refinement(const EmbeddingDataset& ds, const PromptBank& bank, const TrainConfig& cfg);

/// Supervised phase on observed labels (GCE + lambda_i * ITBP) for
/// sup_epochs, then denoising epochs trained with GCE alone on labels
/// rebuilt by run_refinement. Deterministic in cfg.seed.
TrainResult train(const EmbeddingDataset& ds, const TrainConfig& cfg);

/// Fraction of test samples whose prediction matches the truth labels.
/// MissingTruth when the set is empty or has no truth labels.
double evaluate(const PromptBank& bank, const EmbeddingDataset& test, const AlignmentConfig& cfg);

}  // namespace namvp
