#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace ladderopt::ccsa {

// f(x) with its gradient written into `grad` (same length as x).
using Function = std::function<double(std::span<const double> x, std::span<double> grad)>;

// minimize f(x) s.t. g(x) <= 0 (optional), lb <= x <= ub.
struct Problem {
  Function objective;
  Function constraint;  // empty: unconstrained
  std::vector<double> lb;
  std::vector<double> ub;
};

struct Options {
  std::size_t max_iters = 500;
  double ftol_rel = 1e-6;
  std::size_t stall_iters = 5;  // consecutive iterations under ftol_rel before stopping
  double xtol_rel = 1e-12;      // relative to ub - lb
  std::size_t max_inner = 60;
  // Stop as soon as a feasible point with f <= stop_value is found.
  std::optional<double> stop_value;
  bool record_history = false;
};

struct Result {
  std::vector<double> x;  // best feasible point seen, else the least infeasible
  double f = 0.0;
  double g = 0.0;  // 0 when unconstrained
  bool feasible = false;
  bool converged = false;  // stopped by a tolerance or stop_value rather than the budget
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::vector<double> history;  // objective at each outer iterate
};

// Conservative convex separable approximation method in the MMA family:
// each outer step minimizes a separable convex model with moving asymptotes
// inside a trust box, and inner steps raise the model's curvature until it
// overestimates the true functions at the trial point.
Result minimize(const Problem& problem, std::span<const double> x0, const Options& options = {});

}  // namespace ladderopt::ccsa
