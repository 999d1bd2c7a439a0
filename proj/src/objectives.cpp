#include "namvp/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace namvp {

GradientSet GradientSet::zeros_like(const PromptBank& bank) {
  GradientSet g;
  g.d_clean.assign(bank.num_classes, Matrix(bank.views, bank.dim));
  g.d_noisy.assign(bank.num_classes, Matrix(bank.views, bank.dim));
  return g;
}

Batch Batch::select(const EmbeddingDataset& ds, std::span<const std::size_t> indices, const Labels& labels) {
  if (labels.size() != ds.size()) throw Error(ErrorKind::IndexMismatch, "labels do not cover the dataset");
  Batch b;
  for (std::size_t i : indices) {
    if (i >= ds.size()) throw Error(ErrorKind::IndexMismatch, "batch index out of range");
    b.locals.emplace_back(ds.samples[i].local);
    b.labels.push_back(labels[i]);
  }
  return b;
}

double gce_loss(double p_y, double q) {
  if (!(p_y > 0.0 && p_y <= 1.0)) throw Error(ErrorKind::DomainError, "gce_loss: p_y must lie in (0, 1]");
  if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorKind::DomainError, "gce_loss: q must lie in (0, 1]");
  return (1.0 - std::pow(p_y, q)) / q;
}

double itbp_loss(const Matrix& batch_pn) {
  const std::size_t b = batch_pn.rows();
  if (b == 0 || batch_pn.cols() != b) throw Error(ErrorKind::DimensionMismatch, "itbp_loss needs a square non-empty matrix");
  for (double p : batch_pn.data()) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::DomainError, "itbp_loss entries must lie in (0, 1)");
  }
  double reversed = 0.0;
  double unrelated = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (i == j) {
        reversed += std::log(1.0 - batch_pn(i, i));
      } else {
        unrelated += std::log(batch_pn(i, j));
      }
    }
  }
  const double bd = static_cast<double>(b);
  double loss = -reversed / bd;
  if (b > 1) loss -= unrelated / (bd * (bd - 1.0));
  return loss;
}

BatchPlans solve_batch_plans(const Batch& batch, const PromptBank& bank, const AlignmentConfig& cfg) {
  BatchPlans plans;
  plans.reserve(batch.size());
  for (const Matrix& local : batch.locals) plans.push_back(solve_sample_plans(local, bank, cfg));
  return plans;
}

namespace {

void check_batch(const Batch& batch, const PromptBank& bank, const BatchPlans& plans) {
  if (batch.size() == 0) throw Error(ErrorKind::DomainError, "empty batch");
  if (batch.locals.size() != batch.size() || plans.size() != batch.size()) {
    throw Error(ErrorKind::IndexMismatch, "batch features, labels and plans differ in length");
  }
  for (ClassIndex y : batch.labels)
    if (y >= bank.num_classes) throw Error(ErrorKind::LabelOutOfRange, "batch label out of range");
}

/// Everything downstream of the per-class similarities.
struct ScoreStage {
  Matrix s_clean;  // B x C
  Matrix s_noisy;
  LossValue loss;
  // Filled only when gradients are requested.
  Matrix d_clean;
  Matrix d_noisy;
  double d_log_tau = 0.0;
};

ScoreStage score_stage(const Batch& batch, const PromptBank& bank, const BatchPlans& plans, ObjectiveWeights w,
                       bool with_grad) {
  const std::size_t b = batch.size();
  const std::size_t classes = bank.num_classes;
  const double tau = bank.tau();
  // d tau / d log_tau vanishes outside the clamp.
  const bool tau_free = bank.log_tau > kLogTauMin && bank.log_tau < kLogTauMax;

  ScoreStage st{Matrix(b, classes), Matrix(b, classes), {}, Matrix(b, classes), Matrix(b, classes), 0.0};
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t k = 0; k < classes; ++k) {
      st.s_clean(i, k) = similarity_under_plan(batch.locals[i], bank.clean[k], plans[i].clean[k]);
      st.s_noisy(i, k) = similarity_under_plan(batch.locals[i], bank.noisy[k], plans[i].noisy[k]);
    }
  }

  const double bd = static_cast<double>(b);
  double gce_sum = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const ClassIndex y = batch.labels[i];
    const Vector p = tempered_softmax(st.s_clean.row(i), tau);
    const double p_y = std::max(p[y], std::numeric_limits<double>::min());
    gce_sum += gce_loss(p_y, w.q);
    if (!with_grad) continue;
    const double pq = std::pow(p_y, w.q);
    for (std::size_t j = 0; j < classes; ++j) {
      const double dz = -(pq * ((j == y ? 1.0 : 0.0) - p[j])) / bd;
      st.d_clean(i, j) += dz / tau;
      if (tau_free) st.d_log_tau -= dz * st.s_clean(i, j) / tau;
    }
  }
  st.loss.gce = gce_sum / bd;

  Matrix pn(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const ClassIndex k = batch.labels[j];
      const double raw = pairwise_softmax(st.s_clean(i, k), st.s_noisy(i, k), tau);
      const double p = std::clamp(raw, kItbpClampLo, kItbpClampHi);
      pn(i, j) = p;
      if (!with_grad || w.lambda_i == 0.0 || p != raw) continue;
      double weight = 0.0;
      double dterm_du = 0.0;
      if (i == j) {
        weight = w.lambda_i / bd;
        dterm_du = p;
      } else {
        weight = w.lambda_i / (bd * (bd - 1.0));
        dterm_du = -(1.0 - p);
      }
      const double g = weight * dterm_du;
      st.d_noisy(i, k) += g / tau;
      st.d_clean(i, k) -= g / tau;
      if (tau_free) st.d_log_tau -= g * (st.s_noisy(i, k) - st.s_clean(i, k)) / tau;
    }
  }
  st.loss.itbp = itbp_loss(pn);
  st.loss.total = st.loss.gce + w.lambda_i * st.loss.itbp;
  return st;
}

/// Adds coeff * d s / d G to `grad`, where s = 1 - <1 - cos(F, G), T>.
void accumulate_prompt_grad(const Matrix& local_unit, const Matrix& prompts, const Matrix& plan, double coeff,
                            Matrix& grad) {
  if (coeff == 0.0) return;
  const std::size_t dim = prompts.cols();
  for (std::size_t n = 0; n < prompts.rows(); ++n) {
    const auto g = prompts.row(n);
    const double norm = l2_norm(g);
    auto out = grad.row(n);
    for (std::size_t l = 0; l < local_unit.rows(); ++l) {
      const double t = plan(l, n);
      if (t == 0.0) continue;
      const auto f = local_unit.row(l);
      const double c = dot(f, g) / norm;
      const double scale = coeff * t / norm;
      for (std::size_t d = 0; d < dim; ++d) out[d] += scale * (f[d] - c * g[d] / norm);
    }
  }
}

}  // namespace

LossValue loss_with_plans(const Batch& batch, const PromptBank& bank, const BatchPlans& plans, ObjectiveWeights w) {
  check_batch(batch, bank, plans);
  return score_stage(batch, bank, plans, w, false).loss;
}

LossValue supervised_loss(const Batch& batch, const PromptBank& bank, ObjectiveWeights w,
                          const AlignmentConfig& cfg) {
  return loss_with_plans(batch, bank, solve_batch_plans(batch, bank, cfg), w);
}

LossAndGradients gradients_with_plans(const Batch& batch, const PromptBank& bank, const BatchPlans& plans,
                                      ObjectiveWeights w) {
  check_batch(batch, bank, plans);
  const ScoreStage st = score_stage(batch, bank, plans, w, true);
  LossAndGradients out{st.loss, GradientSet::zeros_like(bank)};
  out.grads.d_log_tau = st.d_log_tau;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Matrix local_unit = l2_normalize_rows(batch.locals[i]);
    for (std::size_t k = 0; k < bank.num_classes; ++k) {
      accumulate_prompt_grad(local_unit, bank.clean[k], plans[i].clean[k], st.d_clean(i, k), out.grads.d_clean[k]);
      accumulate_prompt_grad(local_unit, bank.noisy[k], plans[i].noisy[k], st.d_noisy(i, k), out.grads.d_noisy[k]);
    }
  }
  return out;
}

GradientSet loss_gradients(const Batch& batch, const PromptBank& bank, ObjectiveWeights w,
                           const AlignmentConfig& cfg) {
  return gradients_with_plans(batch, bank, solve_batch_plans(batch, bank, cfg), w).grads;
}

}  // namespace namvp
