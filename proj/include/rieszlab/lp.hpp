#pragma once

#include <cstddef>
#include <vector>

namespace rieszlab::lp {

/// min c^T x subject to A x = b, x >= 0, with A stored column-wise.
struct Problem {
  int rows = 0;
  std::vector<double> b;
  std::vector<std::size_t> col_start{0};
  std::vector<int> row_index;
  std::vector<double> value;
  std::vector<double> cost;

  std::size_t cols() const { return cost.size(); }
  void add_column(double c, const std::vector<int>& r, const std::vector<double>& v);
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
  Status status = Status::IterationLimit;
  double objective = 0.0;
  std::vector<double> x;
  std::vector<double> duals;
  double primal_residual = 0.0;      ///< max |A x - b|
  double dual_infeasibility = 0.0;   ///< max(0, -min reduced cost)
  double complementarity = 0.0;      ///< max x_j |reduced cost_j|
  long iterations = 0;

  double certificate() const;
};

/// Two-phase revised simplex (dense basis inverse, periodic LU refactorization,
/// Dantzig pricing with a Bland fallback under degeneracy).
Solution solve(const Problem& p);

}  // namespace rieszlab::lp
