#include "namvp/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace namvp::ot {

namespace {

void validate_problem(const TransportProblem& p) {
  if (p.cost.rows() != p.mu.size() || p.cost.cols() != p.nu.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "cost is " + std::to_string(p.cost.rows()) + "x" + std::to_string(p.cost.cols()) +
                    " but marginals have lengths " + std::to_string(p.mu.size()) + " and " +
                    std::to_string(p.nu.size()));
  }
  if (p.cost.empty()) throw Error(ErrorKind::DimensionMismatch, "empty transport problem");
  if (!(p.epsilon > 0.0)) throw Error(ErrorKind::DomainError, "epsilon must be positive");
  require_finite(p.cost.data(), "cost");
  require_finite(p.mu, "mu");
  require_finite(p.nu, "nu");
  for (double x : p.mu)
    if (!(x > 0.0)) throw Error(ErrorKind::DomainError, "mu must be entrywise positive");
  for (double x : p.nu)
    if (!(x > 0.0)) throw Error(ErrorKind::DomainError, "nu must be entrywise positive");
}

double sum(const Vector& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

Matrix scaled_plan(const Vector& u, const Matrix& kernel, const Vector& v) {
  Matrix t(kernel.rows(), kernel.cols());
  for (std::size_t i = 0; i < kernel.rows(); ++i)
    for (std::size_t j = 0; j < kernel.cols(); ++j) t(i, j) = u[i] * kernel(i, j) * v[j];
  require_finite(t.data(), "transport plan");
  return t;
}

[[noreturn]] void underflow(const char* side, std::size_t index) {
  throw Error(ErrorKind::NumericalUnderflow,
              std::string("scaling denominator underflowed for ") + side + " " + std::to_string(index));
}

}  // namespace

TransportPlan sinkhorn_ot(const TransportProblem& p, SolverOptions opts) {
  validate_problem(p);
  if (std::abs(sum(p.mu) - sum(p.nu)) > 1e-9) {
    throw Error(ErrorKind::UnbalancedMarginals, "sinkhorn_ot needs |mu|_1 == |nu|_1");
  }
  const std::size_t m = p.cost.rows();
  const std::size_t n = p.cost.cols();

  // Row then column translation of the cost leaves the balanced optimum
  // unchanged and puts a unit entry in every kernel row and column.
  Matrix shifted = p.cost;
  for (std::size_t i = 0; i < m; ++i) {
    auto r = shifted.row(i);
    const double lo = *std::min_element(r.begin(), r.end());
    for (double& x : r) x -= lo;
  }
  for (std::size_t j = 0; j < n; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) lo = std::min(lo, shifted(i, j));
    for (std::size_t i = 0; i < m; ++i) shifted(i, j) -= lo;
  }
  Matrix kernel(m, n);
  for (std::size_t k = 0; k < kernel.size(); ++k)
    kernel.data()[k] = std::exp(-shifted.data()[k] / p.epsilon);

  Vector u(m, 1.0);
  Vector v(n, 1.0);
  Vector kv(m);
  Vector ktu(n);
  TransportPlan out;
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      kv[i] = dot(kernel.row(i), v);
      if (!(kv[i] >= kUnderflowFloor)) underflow("row", i);
      u[i] = p.mu[i] / kv[i];
    }
    std::fill(ktu.begin(), ktu.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ktu[j] += kernel(i, j) * u[i];
    double delta = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(ktu[j] >= kUnderflowFloor)) underflow("column", j);
      const double next = p.nu[j] / ktu[j];
      delta += std::abs(next - v[j]);
      v[j] = next;
    }
    out.iterations = it;
    if (delta < opts.tol) {
      double row_err = 0.0;
      for (std::size_t i = 0; i < m; ++i) row_err += std::abs(u[i] * dot(kernel.row(i), v) - p.mu[i]);
      if (row_err < opts.tol) {
        out.converged = true;
        break;
      }
    }
  }
  out.plan = scaled_plan(u, kernel, v);
  out.objective = frobenius(p.cost, out.plan);
  return out;
}

TransportPlan dykstra_uot(const TransportProblem& p, SolverOptions opts) {
  validate_problem(p);
  if (sum(p.mu) < sum(p.nu) - 1e-12) {
    throw Error(ErrorKind::UnbalancedMarginals, "dykstra_uot needs |mu|_1 >= |nu|_1");
  }
  const std::size_t rows = p.cost.rows();
  const std::size_t cols = p.cost.cols();

  Matrix q(rows, cols);
  for (std::size_t k = 0; k < q.size(); ++k) q.data()[k] = std::exp(-p.cost.data()[k] / p.epsilon);
  // Kernels pre-divided by the marginals, so both updates are 1 / (K x).
  Matrix q_mu(rows, cols);
  Matrix q_nu_t(cols, rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      q_mu(i, j) = q(i, j) / p.mu[i];
      q_nu_t(j, i) = q(i, j) / p.nu[j];
    }
  }

  Vector mu_scale(rows, 1.0);
  Vector nu_scale(cols, 1.0);
  TransportPlan out;
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    for (std::size_t i = 0; i < rows; ++i) {
      const double denom = dot(q_mu.row(i), nu_scale);
      // A row whose kernel vanished carries no mass; the cap alone binds.
      mu_scale[i] = denom > 0.0 ? std::min(1.0 / denom, 1.0) : 1.0;
    }
    double delta = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double denom = dot(q_nu_t.row(j), mu_scale);
      if (!(denom * p.nu[j] >= kUnderflowFloor)) underflow("column", j);
      const double next = 1.0 / denom;
      delta += std::abs(next - nu_scale[j]);
      nu_scale[j] = next;
    }
    out.iterations = it;
    if (delta < opts.tol) {
      out.converged = true;
      break;
    }
  }
  out.plan = scaled_plan(mu_scale, q, nu_scale);
  out.objective = frobenius(p.cost, out.plan);
  return out;
}

double entropic_objective(const Matrix& cost, const Matrix& plan, double epsilon) {
  if (cost.rows() != plan.rows() || cost.cols() != plan.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "entropic_objective: cost and plan shapes differ");
  }
  double total = frobenius(cost, plan);
  if (epsilon != 0.0) {
    double ent = 0.0;
    for (double t : plan.data()) {
      if (t < 0.0) throw Error(ErrorKind::DomainError, "plan has a negative entry");
      if (t > 0.0) ent += t * std::log(t);
    }
    total += epsilon * ent;
  }
  return total;
}

double exact_ot_oracle(const Matrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) throw Error(ErrorKind::DimensionMismatch, "exact_ot_oracle needs a square cost");
  if (n > 7) throw Error(ErrorKind::TooLarge, "exact_ot_oracle enumerates n! permutations; n <= 7");
  if (n == 0) return 0.0;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cost(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

}  // namespace namvp::ot
