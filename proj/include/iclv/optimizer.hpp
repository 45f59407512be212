#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace iclv {

struct BfgsOptions {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-5;
  double relative_tolerance = 1e-9;
  // Row-major n x n starting approximation of the inverse of the negative
  // Hessian; identity (scaled after the first step) when empty.
  std::vector<double> initial_inverse_hessian;
};

struct BfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
  std::vector<double> history;  // accepted objective values, starting point first
};

// Objective returning f(x) and writing its gradient.
using ValueAndGradient = std::function<double(std::span<const double>, std::span<double>)>;

// Quasi-Newton (BFGS) ascent with backtracking Armijo line search. Every
// accepted step strictly increases f. Stops when max|grad| < gradient_tolerance
// or the relative improvement of f falls below relative_tolerance.
BfgsResult maximize_bfgs(const ValueAndGradient& fg, std::vector<double> x0, const BfgsOptions& options);

}  // namespace iclv
