#include "namvp/alignment.hpp"

#include <algorithm>
#include <string>

namespace namvp {

void AlignmentConfig::validate() const {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidConfig, "alignment epsilon must be positive");
  if (!(theta > 0.0 && theta <= 1.0)) throw Error(ErrorKind::InvalidConfig, "theta must lie in (0, 1]");
  if (max_iter == 0) throw Error(ErrorKind::InvalidConfig, "max_iter must be positive");
  if (!(stop_delta > 0.0)) throw Error(ErrorKind::InvalidConfig, "stop_delta must be positive");
}

double PromptBank::tau() const { return std::exp(std::clamp(log_tau, kLogTauMin, kLogTauMax)); }

PromptBank PromptBank::random(std::size_t num_classes, std::size_t views, std::size_t dim,
                              std::mt19937_64& rng, double stddev) {
  PromptBank bank;
  bank.num_classes = num_classes;
  bank.views = views;
  bank.dim = dim;
  std::normal_distribution<double> normal(0.0, stddev);
  auto draw = [&] {
    Matrix m(views, dim);
    for (double& x : m.data()) x = normal(rng);
    return m;
  };
  for (std::size_t k = 0; k < num_classes; ++k) bank.clean.push_back(draw());
  for (std::size_t k = 0; k < num_classes; ++k) bank.noisy.push_back(draw());
  return bank;
}

void PromptBank::validate() const {
  if (num_classes == 0 || views == 0 || dim == 0) throw Error(ErrorKind::ShapeMismatch, "empty prompt bank");
  if (clean.size() != num_classes || noisy.size() != num_classes) {
    throw Error(ErrorKind::ShapeMismatch, "prompt bank class count mismatch");
  }
  for (const auto* side : {&clean, &noisy}) {
    for (const Matrix& g : *side) {
      if (g.rows() != views || g.cols() != dim) throw Error(ErrorKind::ShapeMismatch, "prompt matrix shape");
      require_finite(g.data(), "prompt bank");
      for (std::size_t n = 0; n < g.rows(); ++n) {
        if (!(l2_norm(g.row(n)) > kMinRowNorm)) throw Error(ErrorKind::ZeroRow, "prompt row not normalizable");
      }
    }
  }
  if (!std::isfinite(log_tau)) throw Error(ErrorKind::NonFinite, "log_tau");
}

Matrix PromptBank::clean_class_features() const {
  Matrix out(num_classes, dim);
  for (std::size_t k = 0; k < num_classes; ++k) {
    auto row = out.row(k);
    for (std::size_t n = 0; n < views; ++n) {
      const auto g = clean[k].row(n);
      for (std::size_t c = 0; c < dim; ++c) row[c] += g[c];
    }
    for (double& x : row) x /= static_cast<double>(views);
  }
  return l2_normalize_rows(out);
}

namespace {

Matrix alignment_cost(const Matrix& local, const Matrix& prompts) {
  Matrix cost = cosine_similarity(local, prompts);
  for (double& x : cost.data()) x = 1.0 - x;
  return cost;
}

}  // namespace

UotDistance uot_distance(const Matrix& local, const Matrix& prompts, const AlignmentConfig& cfg) {
  if (local.rows() == 0 || prompts.rows() == 0) {
    throw Error(ErrorKind::DimensionMismatch, "uot_distance needs at least one patch and one view");
  }
  ot::TransportProblem problem;
  problem.cost = alignment_cost(local, prompts);
  problem.mu.assign(local.rows(), 1.0 / static_cast<double>(local.rows()));
  problem.nu.assign(prompts.rows(), cfg.theta / static_cast<double>(prompts.rows()));
  problem.epsilon = cfg.epsilon;
  UotDistance out;
  out.transport = ot::dykstra_uot(problem, cfg.solver());
  out.distance = out.transport.objective;
  return out;
}

double similarity_under_plan(const Matrix& local, const Matrix& prompts, const Matrix& plan) {
  return 1.0 - frobenius(alignment_cost(local, prompts), plan);
}

SamplePlans solve_sample_plans(const Matrix& local, const PromptBank& bank, const AlignmentConfig& cfg) {
  SamplePlans out;
  out.clean.reserve(bank.num_classes);
  out.noisy.reserve(bank.num_classes);
  for (std::size_t k = 0; k < bank.num_classes; ++k) {
    auto c = uot_distance(local, bank.clean[k], cfg);
    auto n = uot_distance(local, bank.noisy[k], cfg);
    out.converged_all = out.converged_all && c.transport.converged && n.transport.converged;
    out.clean.push_back(std::move(c.transport.plan));
    out.noisy.push_back(std::move(n.transport.plan));
  }
  return out;
}

AlignmentResult scores_to_result(Vector s_clean, Vector s_noisy, double tau) {
  if (s_clean.size() != s_noisy.size()) throw Error(ErrorKind::DimensionMismatch, "score vectors differ in length");
  AlignmentResult r;
  r.p_clean = tempered_softmax(s_clean, tau);
  r.p_noisy.resize(s_clean.size());
  for (std::size_t k = 0; k < s_clean.size(); ++k) r.p_noisy[k] = pairwise_softmax(s_clean[k], s_noisy[k], tau);
  r.phi = r.p_noisy;
  r.s_clean = std::move(s_clean);
  r.s_noisy = std::move(s_noisy);
  return r;
}

AlignmentResult align_sample(const SampleFeatures& sample, const PromptBank& bank, const AlignmentConfig& cfg) {
  if (sample.local.cols() != bank.dim) {
    throw Error(ErrorKind::DimensionMismatch, "sample and prompt bank dimensions differ");
  }
  Vector s_clean(bank.num_classes);
  Vector s_noisy(bank.num_classes);
  bool converged = true;
  for (std::size_t k = 0; k < bank.num_classes; ++k) {
    const auto c = uot_distance(sample.local, bank.clean[k], cfg);
    const auto n = uot_distance(sample.local, bank.noisy[k], cfg);
    s_clean[k] = 1.0 - c.distance;
    s_noisy[k] = 1.0 - n.distance;
    converged = converged && c.transport.converged && n.transport.converged;
  }
  AlignmentResult r = scores_to_result(std::move(s_clean), std::move(s_noisy), bank.tau());
  r.converged_all = converged;
  return r;
}

bool is_clean(const AlignmentResult& r, ClassIndex observed_label) {
  if (observed_label >= r.p_clean.size()) {
    throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(observed_label) + " out of range");
  }
  return r.p_clean[observed_label] > r.phi[observed_label];
}

ClassIndex predict(const AlignmentResult& r) {
  ClassIndex best = 0;
  double best_score = -1.0;
  for (std::size_t k = 0; k < r.p_clean.size(); ++k) {
    const double score = (1.0 - r.p_noisy[k]) * r.p_clean[k];
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }
  return best;
}

}  // namespace namvp
