#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "namvp/alignment.hpp"
#include "namvp/dataset.hpp"
#include "namvp/ot.hpp"

namespace namvp {

struct DatasetPartition {
  std::vector<std::size_t> clean_indices;  // sorted
  std::vector<std::size_t> noisy_indices;  // sorted
};

struct DenoisedDataset {
  Labels labels;
  std::vector<bool> refined_mask;
};

struct RefinementReport {
  std::optional<double> noise_ratio_before;
  std::optional<double> noise_ratio_after;
  std::optional<double> correct_correction_rate;  // absent when nothing wrong was refined
  std::size_t num_refined = 0;
  std::size_t num_clean_kept = 0;
};

/// Sample i is clean iff p_clean[y_i] > phi[y_i] under `bank`.
DatasetPartition partition_dataset(const EmbeddingDataset& ds, const PromptBank& bank,
                                   const AlignmentConfig& cfg);

/// Same rule, reusing alignments already computed for every sample.
DatasetPartition partition_from_alignments(const std::vector<AlignmentResult>& alignments,
                                           const Labels& labels);

struct PseudoLabels {
  Labels labels;
  ot::TransportPlan transport;  // C x D, uniform marginals
};

/// Classical-OT pseudo-labels over global features: cost
/// -log(clamp((1 + cos)/2, 1e-6, 1)), class marginal 1/C, sample marginal
/// 1/D, label = argmax over classes of the plan column.
PseudoLabels global_ot_pseudolabels(const EmbeddingDataset& ds, const Matrix& class_features, double epsilon,
                                    ot::SolverOptions opts = {});

/// Clean samples keep their label; noisy ones take the pseudo-label.
DenoisedDataset refine(const EmbeddingDataset& ds, const DatasetPartition& part, const Labels& pseudo);

RefinementReport refinement_metrics(const Labels& before, const DenoisedDataset& after, const Labels& truth);

/// Counts only; used when no truth labels are available.
RefinementReport refinement_counts(const DenoisedDataset& after);

}  // namespace namvp
