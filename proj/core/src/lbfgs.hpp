#pragma once

#include <functional>
#include <vector>

namespace heislab::detail {

// f(x, grad) -> value; grad is resized by the caller to x.size().
using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct LbfgsOptions {
  int memory = 8;
  int max_iterations = 500;
  // Stop when the step in x (max norm) falls below this.
  double step_tolerance = 1e-10;
  double gradient_tolerance = 1e-10;
};

struct LbfgsResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Limited-memory BFGS with a backtracking Armijo line search. x is updated in
// place.
LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double>& x, const LbfgsOptions& opt);

}  // namespace heislab::detail
