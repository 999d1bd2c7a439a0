#pragma once

// Test-only reference implementations, independent of the solver code paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "namvp/tensor.hpp"

namespace oracle {

using namvp::Matrix;
using namvp::Vector;

inline double entropic_value(const Matrix& cost, const Matrix& t, double eps) {
  double v = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double x = t.data()[k];
    v += cost.data()[k] * x;
    if (x > 0.0) v += eps * x * std::log(x);
  }
  return v;
}

/// Minimizes <C,T> + eps <T, log T> over {T >= 0, T^T 1 = nu, T 1 <= mu} by
/// lattice pattern search: single-column mass moves and 2x2 cycles (which
/// keep every row sum fixed), on a step grid halved from 0.1 * max(nu)
/// through 1e-3 down to 1e-9. Starts from the feasible product plan.
inline Matrix uot_pattern_search(const Matrix& cost, const Vector& mu, const Vector& nu, double eps) {
  const std::size_t rows = mu.size();
  const std::size_t cols = nu.size();
  const double mass_mu = std::accumulate(mu.begin(), mu.end(), 0.0);
  Matrix t(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t(i, j) = nu[j] * mu[i] / mass_mu;
  Vector row_sum = t.row_sums();

  auto cell = [&](std::size_t i, std::size_t j, double x) {
    return cost(i, j) * x + (x > 0.0 ? eps * x * std::log(x) : 0.0);
  };

  double step = 0.1 * *std::max_element(nu.begin(), nu.end());
  while (step > 1e-9) {
    bool improved = true;
    while (improved) {
      improved = false;
      // Column moves: row a -> row b within column j.
      for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t a = 0; a < rows; ++a) {
          for (std::size_t b = 0; b < rows; ++b) {
            if (a == b) continue;
            const double ta = t(a, j) - step;
            const double tb = t(b, j) + step;
            if (ta < 0.0 || row_sum[b] + step > mu[b] + 1e-15) continue;
            const double delta = cell(a, j, ta) + cell(b, j, tb) - cell(a, j, t(a, j)) - cell(b, j, t(b, j));
            if (delta < -1e-16) {
              t(a, j) = ta;
              t(b, j) = tb;
              row_sum[a] -= step;
              row_sum[b] += step;
              improved = true;
            }
          }
        }
      }
      // Cycles: +(a,j) -(b,j) +(b,k) -(a,k); row and column sums unchanged.
      for (std::size_t a = 0; a < rows; ++a) {
        for (std::size_t b = 0; b < rows; ++b) {
          if (a == b) continue;
          for (std::size_t j = 0; j < cols; ++j) {
            for (std::size_t k = 0; k < cols; ++k) {
              if (j == k) continue;
              const double aj = t(a, j) + step, bj = t(b, j) - step;
              const double bk = t(b, k) + step, ak = t(a, k) - step;
              if (bj < 0.0 || ak < 0.0) continue;
              const double delta = cell(a, j, aj) + cell(b, j, bj) + cell(b, k, bk) + cell(a, k, ak) -
                                   cell(a, j, t(a, j)) - cell(b, j, t(b, j)) - cell(b, k, t(b, k)) -
                                   cell(a, k, t(a, k));
              if (delta < -1e-16) {
                t(a, j) = aj;
                t(b, j) = bj;
                t(b, k) = bk;
                t(a, k) = ak;
                improved = true;
              }
            }
          }
        }
      }
    }
    step /= 2.0;
  }
  return t;
}

/// Central difference of f at x along coordinate `slot` (written through
/// the reference), step h.
inline double central_difference(const std::function<double()>& f, double& slot, double h) {
  const double orig = slot;
  slot = orig + h;
  const double up = f();
  slot = orig - h;
  const double down = f();
  slot = orig;
  return (up - down) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

/// Every assignment of D samples to C classes with exactly D/C per class,
/// minimizing total cost. Exponential; tiny instances only.
inline std::vector<std::size_t> balanced_assignment(const Matrix& cost_class_by_sample) {
  const std::size_t classes = cost_class_by_sample.rows();
  const std::size_t n = cost_class_by_sample.cols();
  const std::size_t per = n / classes;
  std::vector<std::size_t> best, cur(n);
  std::vector<std::size_t> used(classes, 0);
  double best_cost = INFINITY;
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double acc) {
    if (acc >= best_cost) return;
    if (i == n) {
      best_cost = acc;
      best = cur;
      return;
    }
    for (std::size_t k = 0; k < classes; ++k) {
      if (used[k] == per) continue;
      ++used[k];
      cur[i] = k;
      rec(i + 1, acc + cost_class_by_sample(k, i));
      --used[k];
    }
  };
  rec(0, 0.0);
  return best;
}

}  // namespace oracle
