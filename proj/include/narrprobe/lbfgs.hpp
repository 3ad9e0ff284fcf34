#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace narrprobe {

// Returns f(x) and writes the gradient into `grad` (pre-sized to x.size()).
// May return +inf to reject a trial point during a line search.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  std::size_t max_iterations = 500;
  double grad_tolerance = 1e-4;  // on the infinity norm
  std::size_t memory = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  std::size_t max_line_search_evals = 40;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  std::size_t iterations = 0;
  bool converged = false;
  // The last line search found no acceptable point; x is the best iterate.
  bool line_search_failed = false;
  // Objective value after each accepted step, starting with f(x0).
  std::vector<double> trace;
};

// Limited-memory BFGS with the two-loop recursion and a strong-Wolfe
// bracketing line search. Throws NonFiniteLoss if f(x0) is not finite.
LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& options);

}  // namespace narrprobe
