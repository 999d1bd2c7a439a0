#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "namvp/alignment.hpp"
#include "namvp/dataset.hpp"

namespace namvp {

struct LossValue {
  double total = 0.0;
  double gce = 0.0;
  double itbp = 0.0;
};

/// Gradients mirroring the PromptBank layout.
struct GradientSet {
  std::vector<Matrix> d_clean;
  std::vector<Matrix> d_noisy;
  double d_log_tau = 0.0;

  static GradientSet zeros_like(const PromptBank& bank);
};

/// Mini-batch of local feature maps with the labels to train against.
struct Batch {
  std::vector<std::reference_wrapper<const Matrix>> locals;
  Labels labels;

  std::size_t size() const noexcept { return labels.size(); }

  /// Batch over `indices` of `ds`, labelled from `labels` (full length).
  static Batch select(const EmbeddingDataset& ds, std::span<const std::size_t> indices, const Labels& labels);
};

/// Bounds applied to pairwise noisy probabilities before the ITBP logs.
inline constexpr double kItbpClampLo = 1e-7;
inline constexpr double kItbpClampHi = 1.0 - 1e-7;

/// (1 - p^q) / q. DomainError unless p in (0, 1] and q in (0, 1].
double gce_loss(double p_y, double q);

/// Bi-directional prompt loss over a B x B matrix whose (i, j) entry is the
/// noisy probability of sample i against the class labelled on sample j.
/// The diagonal (own class) is pushed down, the off-diagonal pushed up.
/// DomainError on entries outside (0, 1).
double itbp_loss(const Matrix& batch_pn);

/// Transport plans for every sample of a batch, held fixed for gradients.
using BatchPlans = std::vector<SamplePlans>;

BatchPlans solve_batch_plans(const Batch& batch, const PromptBank& bank, const AlignmentConfig& cfg);

struct ObjectiveWeights {
  double lambda_i = 0.1;  // ITBP weight; 0 disables the auxiliary term
  double q = 0.5;         // GCE exponent
};

/// Loss with plans frozen to `plans`.
LossValue loss_with_plans(const Batch& batch, const PromptBank& bank, const BatchPlans& plans,
                          ObjectiveWeights w);

/// gce mean + lambda_i * itbp, plans solved from the current bank.
LossValue supervised_loss(const Batch& batch, const PromptBank& bank, ObjectiveWeights w,
                          const AlignmentConfig& cfg);

struct LossAndGradients {
  LossValue loss;
  GradientSet grads;
};

/// Analytic gradients with the transport plans treated as constants.
LossAndGradients gradients_with_plans(const Batch& batch, const PromptBank& bank, const BatchPlans& plans,
                                      ObjectiveWeights w);

GradientSet loss_gradients(const Batch& batch, const PromptBank& bank, ObjectiveWeights w,
                           const AlignmentConfig& cfg);

}  // namespace namvp
