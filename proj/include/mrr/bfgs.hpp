#pragma once

#include <functional>
#include <vector>

namespace mrr {

enum class OptStatus { Converged, MaxIterations, LineSearchFail };

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tol = 1e-5;   // inf-norm of the gradient
  double f_tol = 1e-9;          // relative objective change
  double fd_rel_step = 1e-6;    // central-difference step, relative
  int n_threads = 1;            // parallel finite-difference evaluations
};

struct BfgsResult {
  std::vector<double> x;
  double f = 0;
  std::vector<double> gradient;
  OptStatus status = OptStatus::MaxIterations;
  int iterations = 0;
  int n_evaluations = 0;
};

using Objective = std::function<double(const std::vector<double>&)>;

// Central-difference gradient with per-component step h_i = rel*max(1,|x_i|).
std::vector<double> finite_difference_gradient(const Objective& f, const std::vector<double>& x,
                                               double rel_step, int n_threads = 1);

// Minimizes f by BFGS (dense inverse-Hessian update) with a backtracking
// Armijo line search and numerical gradients.
BfgsResult minimize_bfgs(const Objective& f, std::vector<double> x0,
                         const BfgsOptions& opts = {});

}  // namespace mrr
