#include "mrr/bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrr/parallel.hpp"

namespace mrr {

std::vector<double> finite_difference_gradient(const Objective& f, const std::vector<double>& x,
                                               double rel_step, int n_threads) {
  const std::size_t n = x.size();
  std::vector<double> grad(n);
  parallel_for(n, n_threads, [&](std::size_t i) {
    double h = rel_step * std::max(1.0, std::abs(x[i]));
    std::vector<double> xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    grad[i] = (f(xp) - f(xm)) / (2.0 * h);
  });
  return grad;
}

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

BfgsResult minimize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& opts) {
  const std::size_t n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);

  int n_evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++n_evals;
    return f(x);
  };
  auto grad_of = [&](const std::vector<double>& x) {
    n_evals += 2 * static_cast<int>(n);
    return finite_difference_gradient(f, x, opts.fd_rel_step, opts.n_threads);
  };

  double fx = eval(res.x);
  if (!std::isfinite(fx)) {
    throw std::invalid_argument("bfgs: objective not finite at the starting point");
  }
  std::vector<double> g = grad_of(res.x);

  // Inverse Hessian approximation, started at the identity.
  std::vector<double> H(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;

  std::vector<double> d(n), x_new(n), g_new(n), s(n), y(n), Hy(n);
  res.status = OptStatus::MaxIterations;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    res.iterations = iter + 1;
    if (inf_norm(g) < opts.gradient_tol) {
      res.status = OptStatus::Converged;
      break;
    }
    // d = -H g
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0;
      for (std::size_t j = 0; j < n; ++j) acc += H[i * n + j] * g[j];
      d[i] = -acc;
    }
    double slope = dot(g, d);
    if (!(slope < 0)) {
      // Reset to steepest descent when the approximation degenerates.
      std::fill(H.begin(), H.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        H[i * n + i] = 1.0;
        d[i] = -g[i];
      }
      slope = dot(g, d);
      if (!(slope < 0)) {
        res.status = OptStatus::Converged;  // zero gradient
        break;
      }
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    const double c1 = 1e-4;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * d[i];
      f_new = eval(x_new);
      if (std::isfinite(f_new) && f_new <= fx + c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.status = OptStatus::LineSearchFail;
      break;
    }

    g_new = grad_of(x_new);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = g_new[i] - g[i];
    }
    double sy = dot(s, y);
    double f_prev = fx;
    res.x = x_new;
    fx = f_new;
    g = g_new;

    if (sy > 1e-12 * std::sqrt(dot(s, s)) * std::sqrt(dot(y, y)) && sy > 0) {
      // BFGS inverse update: H <- (I - r s y')H(I - r y s') + r s s'
      double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0;
        for (std::size_t j = 0; j < n; ++j) acc += H[i * n + j] * y[j];
        Hy[i] = acc;
      }
      double yHy = dot(y, Hy);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          H[i * n + j] += rho * rho * yHy * s[i] * s[j] + rho * s[i] * s[j] -
                          rho * (Hy[i] * s[j] + s[i] * Hy[j]);
        }
      }
    }

    double denom = std::max(1.0, std::abs(f_prev));
    if (std::abs(f_prev - fx) / denom < opts.f_tol && inf_norm(g) < 1e3 * opts.gradient_tol) {
      res.status = OptStatus::Converged;
      break;
    }
  }

  res.f = fx;
  res.gradient = g;
  res.n_evaluations = n_evals;
  return res;
}

}  // namespace mrr
