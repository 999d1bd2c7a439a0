#pragma once

#include <cstddef>

#include "namvp/tensor.hpp"

namespace namvp::ot {

/// Entropic transport problem: cost C (m x n), source marginal mu (m),
/// target marginal nu (n), entropic weight epsilon.
struct TransportProblem {
  Matrix cost;
  Vector mu;
  Vector nu;
  double epsilon = 0.1;
};

struct TransportPlan {
  Matrix plan;
  double objective = 0.0;  // <C, T>
  std::size_t iterations = 0;
  bool converged = false;
};

struct SolverOptions {
  std::size_t max_iter = 100;
  double tol = 1e-3;
};

/// Any scaling denominator below this raises NumericalUnderflow.
inline constexpr double kUnderflowFloor = 1e-300;

/// Balanced entropic OT by Sinkhorn scaling. Requires |mu|_1 == |nu|_1
/// within 1e-9. A run is reported converged once the L1 change of the
/// column scaling and the L1 row-marginal error both drop below `tol`.
/// Hitting max_iter returns the current plan with converged = false.
TransportPlan sinkhorn_ot(const TransportProblem& p, SolverOptions opts = {});

/// Unbalanced OT with the capped row constraint T 1 <= mu and the exact
/// column constraint T^T 1 = nu, solved by fast Dykstra scaling. Requires
/// |mu|_1 >= |nu|_1. Stops when the L1 change of the nu-scaling drops
/// below `opts.tol`.
TransportPlan dykstra_uot(const TransportProblem& p, SolverOptions opts = {});

/// <C, T> + epsilon <T, log T>, with 0 log 0 = 0.
double entropic_objective(const Matrix& cost, const Matrix& plan, double epsilon);

/// Exact OT cost for square n x n cost with uniform marginals 1/n, by
/// enumerating all permutations. TooLarge for n > 7. Test oracle.
double exact_ot_oracle(const Matrix& cost);

}  // namespace namvp::ot
