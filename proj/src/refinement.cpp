#include "namvp/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace namvp {

DatasetPartition partition_from_alignments(const std::vector<AlignmentResult>& alignments,
                                           const Labels& labels) {
  if (alignments.size() != labels.size()) throw Error(ErrorKind::IndexMismatch, "alignments vs labels");
  DatasetPartition part;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (is_clean(alignments[i], labels[i]) ? part.clean_indices : part.noisy_indices).push_back(i);
  }
  return part;
}

DatasetPartition partition_dataset(const EmbeddingDataset& ds, const PromptBank& bank,
                                   const AlignmentConfig& cfg) {
  std::vector<AlignmentResult> alignments;
  alignments.reserve(ds.size());
  for (const auto& s : ds.samples) alignments.push_back(align_sample(s, bank, cfg));
  return partition_from_alignments(alignments, ds.labels);
}

PseudoLabels global_ot_pseudolabels(const EmbeddingDataset& ds, const Matrix& class_features, double epsilon,
                                    ot::SolverOptions opts) {
  const std::size_t n = ds.size();
  const std::size_t classes = class_features.rows();
  if (n == 0) throw Error(ErrorKind::DomainError, "global_ot_pseudolabels needs at least one sample");
  if (classes < 2) throw Error(ErrorKind::DomainError, "global_ot_pseudolabels needs at least two classes");

  const Matrix cos = cosine_similarity(class_features, ds.global_matrix());  // C x D
  ot::TransportProblem problem;
  problem.cost = Matrix(classes, n);
  for (std::size_t k = 0; k < cos.size(); ++k) {
    const double sim = std::clamp((1.0 + cos.data()[k]) / 2.0, 1e-6, 1.0);
    problem.cost.data()[k] = -std::log(sim);
  }
  problem.mu.assign(classes, 1.0 / static_cast<double>(classes));
  problem.nu.assign(n, 1.0 / static_cast<double>(n));
  problem.epsilon = epsilon;

  PseudoLabels out;
  out.transport = ot::sinkhorn_ot(problem, opts);
  out.labels.resize(n);
  const Matrix& t = out.transport.plan;
  for (std::size_t i = 0; i < n; ++i) {
    ClassIndex best = 0;
    for (std::size_t k = 1; k < classes; ++k)
      if (t(k, i) > t(best, i)) best = k;
    out.labels[i] = best;
  }
  return out;
}

DenoisedDataset refine(const EmbeddingDataset& ds, const DatasetPartition& part, const Labels& pseudo) {
  const std::size_t n = ds.size();
  if (pseudo.size() != n) throw Error(ErrorKind::IndexMismatch, "pseudo-labels do not cover the dataset");
  if (part.clean_indices.size() + part.noisy_indices.size() != n) {
    throw Error(ErrorKind::IndexMismatch, "partition does not cover the dataset");
  }
  DenoisedDataset out{ds.labels, std::vector<bool>(n, false)};
  for (std::size_t i : part.noisy_indices) {
    if (i >= n) throw Error(ErrorKind::IndexMismatch, "noisy index " + std::to_string(i) + " out of range");
    out.labels[i] = pseudo[i];
    out.refined_mask[i] = true;
  }
  return out;
}

RefinementReport refinement_counts(const DenoisedDataset& after) {
  RefinementReport r;
  r.num_refined = static_cast<std::size_t>(std::count(after.refined_mask.begin(), after.refined_mask.end(), true));
  r.num_clean_kept = after.refined_mask.size() - r.num_refined;
  return r;
}

RefinementReport refinement_metrics(const Labels& before, const DenoisedDataset& after, const Labels& truth) {
  if (before.size() != truth.size() || after.labels.size() != truth.size() ||
      after.refined_mask.size() != truth.size()) {
    throw Error(ErrorKind::LengthMismatch, "refinement_metrics: label vectors differ in length");
  }
  RefinementReport r = refinement_counts(after);
  r.noise_ratio_before = noise_ratio(before, truth);
  r.noise_ratio_after = noise_ratio(after.labels, truth);
  std::size_t wrong_refined = 0;
  std::size_t fixed = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!after.refined_mask[i] || before[i] == truth[i]) continue;
    ++wrong_refined;
    fixed += after.labels[i] == truth[i];
  }
  if (wrong_refined > 0) r.correct_correction_rate = static_cast<double>(fixed) / static_cast<double>(wrong_refined);
  return r;
}

}  // namespace namvp
