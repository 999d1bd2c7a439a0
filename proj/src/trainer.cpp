#include "namvp/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace namvp {

void TrainConfig::validate() const {
  if (sup_epochs > epochs) throw Error(ErrorKind::InvalidConfig, "sup_epochs must not exceed epochs");
  if (batch_size == 0) throw Error(ErrorKind::InvalidConfig, "batch_size must be positive");
  if (views == 0) throw Error(ErrorKind::InvalidConfig, "views must be positive");
  if (!(sgd.learning_rate >= 0.0)) throw Error(ErrorKind::InvalidConfig, "learning_rate must be non-negative");
  if (!(sgd.momentum >= 0.0 && sgd.momentum < 1.0)) throw Error(ErrorKind::InvalidConfig, "momentum must lie in [0, 1)");
  if (!(sgd.weight_decay >= 0.0)) throw Error(ErrorKind::InvalidConfig, "weight_decay must be non-negative");
  if (!(lambda_i >= 0.0)) throw Error(ErrorKind::InvalidConfig, "lambda_i must be non-negative");
  if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorKind::InvalidConfig, "q must lie in (0, 1]");
  if (!(refine_epsilon > 0.0)) throw Error(ErrorKind::InvalidConfig, "refine_epsilon must be positive");
  alignment.validate();
}

void sgd_step(PromptBank& bank, const GradientSet& grads, SgdState& state, const SgdConfig& cfg) {
  auto same_shape = [&](const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[k].rows() != b[k].rows() || a[k].cols() != b[k].cols()) return false;
    return true;
  };
  if (!same_shape(bank.clean, grads.d_clean) || !same_shape(bank.noisy, grads.d_noisy)) {
    throw Error(ErrorKind::ShapeMismatch, "gradient shapes do not match the prompt bank");
  }
  if (!state.velocity) state.velocity = GradientSet::zeros_like(bank);
  GradientSet& vel = *state.velocity;
  if (!same_shape(bank.clean, vel.d_clean) || !same_shape(bank.noisy, vel.d_noisy)) {
    throw Error(ErrorKind::ShapeMismatch, "optimizer state does not match the prompt bank");
  }

  auto update = [&](std::vector<Matrix>& params, const std::vector<Matrix>& g, std::vector<Matrix>& v) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto p = params[k].data();
      const auto gk = g[k].data();
      auto vk = v[k].data();
      for (std::size_t i = 0; i < p.size(); ++i) {
        vk[i] = cfg.momentum * vk[i] + (gk[i] + cfg.weight_decay * p[i]);
        p[i] -= cfg.learning_rate * vk[i];
      }
    }
  };
  update(bank.clean, grads.d_clean, vel.d_clean);
  update(bank.noisy, grads.d_noisy, vel.d_noisy);
  vel.d_log_tau = cfg.momentum * vel.d_log_tau + grads.d_log_tau;
  bank.log_tau = std::clamp(bank.log_tau - cfg.learning_rate * vel.d_log_tau, kLogTauMin, kLogTauMax);
}

RefinementPass run_refinement(const EmbeddingDataset& ds, const PromptBank& bank, const TrainConfig& cfg) {
  RefinementPass pass;
  std::vector<AlignmentResult> alignments;
  alignments.reserve(ds.size());
  for (const auto& s : ds.samples) {
    alignments.push_back(align_sample(s, bank, cfg.alignment));
    pass.converged_all = pass.converged_all && alignments.back().converged_all;
  }
  pass.partition = partition_from_alignments(alignments, ds.labels);
  pass.pseudo = global_ot_pseudolabels(ds, bank.clean_class_features(), cfg.refine_epsilon,
                                       {cfg.refine_max_iter, cfg.refine_tol});
  pass.converged_all = pass.converged_all && pass.pseudo.transport.converged;
  pass.denoised = refine(ds, pass.partition, pass.pseudo.labels);
  return pass;
}

namespace {

RefinementReport report_for(const EmbeddingDataset& ds, const DenoisedDataset& denoised) {
  return ds.truth ? refinement_metrics(ds.labels, denoised, *ds.truth) : refinement_counts(denoised);
}

}  // namespace

TrainResult train(const EmbeddingDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (ds.num_classes < 2) throw Error(ErrorKind::InvalidConfig, "training needs at least two classes");

  std::mt19937_64 rng(cfg.seed);
  TrainResult result{PromptBank::random(ds.num_classes, cfg.views, ds.dim, rng), {}, std::nullopt, std::nullopt};
  PromptBank& bank = result.bank;
  SgdState opt;
  const ObjectiveWeights sup_weights{cfg.lambda_i, cfg.q};
  const ObjectiveWeights denoise_weights{0.0, cfg.q};

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.denoising = epoch > cfg.sup_epochs;
    Labels train_labels = ds.labels;

    auto rebuild = [&] {
      RefinementPass pass = run_refinement(ds, bank, cfg);
      rec.solver_converged = rec.solver_converged && pass.converged_all;
      rec.clean_count = pass.partition.clean_indices.size();
      rec.noisy_count = pass.partition.noisy_indices.size();
      rec.report = report_for(ds, pass.denoised);
      train_labels = pass.denoised.labels;
      result.denoised = std::move(pass.denoised);
    };
    if (rec.denoising && !cfg.refine_per_batch) rebuild();

    std::shuffle(order.begin(), order.end(), rng);
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      if (rec.denoising && cfg.refine_per_batch) rebuild();
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const Batch batch =
          Batch::select(ds, std::span<const std::size_t>(order.data() + start, stop - start), train_labels);
      const BatchPlans plans = solve_batch_plans(batch, bank, cfg.alignment);
      for (const auto& sp : plans) rec.solver_converged = rec.solver_converged && sp.converged_all;
      const auto lg = gradients_with_plans(batch, bank, plans, rec.denoising ? denoise_weights : sup_weights);
      sgd_step(bank, lg.grads, opt, cfg.sgd);
      rec.loss_total += lg.loss.total;
      rec.loss_gce += lg.loss.gce;
      rec.loss_itbp += lg.loss.itbp;
      ++batches;
    }
    if (batches > 0) {
      rec.loss_total /= static_cast<double>(batches);
      rec.loss_gce /= static_cast<double>(batches);
      rec.loss_itbp /= static_cast<double>(batches);
    }
    rec.tau = bank.tau();
    if (ds.truth) rec.noise_ratio = noise_ratio(train_labels, *ds.truth);
    result.history.epochs.push_back(std::move(rec));
  }
  if (result.denoised) result.final_report = report_for(ds, *result.denoised);
  return result;
}

double evaluate(const PromptBank& bank, const EmbeddingDataset& test, const AlignmentConfig& cfg) {
  if (!test.truth || test.size() == 0) throw Error(ErrorKind::MissingTruth, "evaluation needs a non-empty labelled test set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    correct += predict(align_sample(test.samples[i], bank, cfg)) == (*test.truth)[i];
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace namvp
