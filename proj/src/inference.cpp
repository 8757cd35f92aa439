#include "mrr/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "mrr/parallel.hpp"
#include "mrr/rng.hpp"
#include "mrr/survival.hpp"

namespace mrr {

namespace {

constexpr double kBoundaryThreshold = 12.0;  // |logit| beyond this flags a boundary estimate

// Cholesky factorization of a symmetric positive definite matrix (row-major
// n x n, lower triangle). Returns false if the matrix is not PD.
bool cholesky(std::vector<double>& a, int n) {
  for (int j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (int k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (int i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / d;
    }
  }
  return true;
}

// Inverse from the Cholesky factor (lower triangle of chol).
std::vector<double> cholesky_inverse(const std::vector<double>& chol, int n) {
  // Solve L X = I column by column, then L' A = X.
  std::vector<double> inv(n * n, 0.0);
  std::vector<double> col(n);
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < n; ++i) {
      double s = (i == c) ? 1.0 : 0.0;
      for (int k = 0; k < i; ++k) s -= chol[i * n + k] * col[k];
      col[i] = s / chol[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = col[i];
      for (int k = i + 1; k < n; ++k) s -= chol[k * n + i] * inv[k * n + c];
      inv[i * n + c] = s / chol[i * n + i];
    }
  }
  return inv;
}

double sample_mean(const std::vector<double>& v, double fallback) {
  if (v.empty()) return fallback;
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double sample_sd(const std::vector<double>& v, double fallback) {
  if (v.size() < 2) return fallback;
  double mean = sample_mean(v, 0.0);
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (v.size() - 1));
}

}  // namespace

std::uint64_t dataset_checksum(const std::vector<CaptureHistory>& histories) {
  // FNV-1a over a canonical byte serialization.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& hist : histories) {
    mix(hist.id.data(), hist.id.size());
    mix(&hist.first_capture, sizeof(int));
    mix(&hist.n_occasions, sizeof(int));
    for (std::size_t i = 0; i < hist.captures.size(); ++i) {
      int c = static_cast<int>(hist.captures[i]);
      mix(&c, sizeof(int));
      double y = hist.covariates[i].value_or(std::numeric_limits<double>::quiet_NaN());
      mix(&y, sizeof(double));
    }
  }
  return h;
}

ParameterVector default_init(const ModelSpec& spec,
                             const std::vector<CaptureHistory>& histories) {
  std::vector<double> observed, initial_observed;
  for (const auto& hist : histories) {
    for (int t = hist.first_capture; t <= hist.n_occasions; ++t) {
      if (hist.covariate_observed(t)) observed.push_back(*hist.covariate_at(t));
    }
    if (hist.covariate_observed(hist.first_capture)) {
      initial_observed.push_back(*hist.covariate_at(hist.first_capture));
    }
  }
  double mean = sample_mean(observed, 0.0);
  double sd = std::max(1e-3, sample_sd(observed, 1.0));

  ParameterVector params = make_parameter_vector(spec);
  for (int i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const std::string& name = p.name;
    auto has_prefix = [&](const char* pre) { return name.rfind(pre, 0) == 0; };
    if (has_prefix("mu") || name == "mean" || name == "level") {
      p.value = mean;
    } else if (has_prefix("sigma") || name == "sd") {
      p.value = sd;
    } else if (name == "init_mean") {
      p.value = sample_mean(initial_observed, mean);
    } else if (name == "init_sd") {
      p.value = std::max(1e-3, sample_sd(initial_observed, sd));
    }
  }
  // MeanReverting/RandomWalk drift parameter mu is a level for the former
  // and an increment for the latter; an increment start of 0 is safer.
  if (spec.kernel == KernelFamily::RandomWalkDrift) {
    for (int i = 0; i < params.size(); ++i) {
      if (params[i].name.rfind("mu", 0) == 0) params[i].value = 0.0;
    }
  }
  return params;
}

FitResult fit(const std::vector<CaptureHistory>& histories, const ModelSpec& spec,
              const CovariateGrid& grid, const ParameterVector& init, const FitOptions& opts) {
  auto t_start = std::chrono::steady_clock::now();
  LikelihoodEngine engine(spec, grid);
  // Parallelism is applied across finite-difference evaluations; each
  // objective call stays single-threaded.
  LikelihoodOptions lik_opts{1};

  ParameterVector working = init;
  auto objective = [&](const std::vector<double>& x) {
    ParameterVector p = working;
    p.set_from_unconstrained(x);
    try {
      return -engine.log_likelihood_dataset(histories, resolve(spec, p), lik_opts);
    } catch (const ImpossibleHistory&) {
      return std::numeric_limits<double>::infinity();
    } catch (const std::invalid_argument&) {
      // Degenerate point proposed by the line search (e.g. a scale that
      // underflowed to zero); infinitely bad, not an error.
      return std::numeric_limits<double>::infinity();
    }
  };

  BfgsOptions bopts = opts.optimizer;
  bopts.n_threads = opts.n_threads;

  BfgsResult best;
  bool have_best = false;
  PhiloxRng jitter(opts.jitter_seed, 0x6a11e5ull);
  for (int start = 0; start < std::max(1, opts.multistart); ++start) {
    std::vector<double> x0 = init.to_unconstrained();
    if (start > 0) {
      for (double& v : x0) v += 0.5 * jitter.next_normal();
    }
    BfgsResult res;
    try {
      res = minimize_bfgs(objective, std::move(x0), bopts);
    } catch (const std::invalid_argument&) {
      continue;  // non-finite at a jittered start
    }
    if (!have_best || res.f < best.f) {
      best = std::move(res);
      have_best = true;
    }
  }
  if (!have_best) {
    throw std::invalid_argument("fit: log-likelihood not finite at the starting values");
  }

  FitResult out;
  out.estimates = init;
  out.estimates.set_from_unconstrained(best.x);
  out.max_loglik = -best.f;
  out.n_params = init.size();
  out.aic = 2.0 * out.n_params - 2.0 * out.max_loglik;
  out.grid_m = grid.size();
  out.data_checksum = dataset_checksum(histories);
  switch (best.status) {
    case OptStatus::Converged: out.convergence = Convergence::Converged; break;
    case OptStatus::MaxIterations: out.convergence = Convergence::MaxIter; break;
    case OptStatus::LineSearchFail: out.convergence = Convergence::LineSearchFail; break;
  }
  out.boundary.assign(out.n_params, false);
  for (int i = 0; i < out.n_params; ++i) {
    if (out.estimates[i].constraint == Constraint::Probability &&
        std::abs(best.x[i]) > kBoundaryThreshold) {
      out.boundary[i] = true;
    }
  }
  if (opts.compute_ci) {
    hessian_ci(out, histories, spec, grid, 0.95, opts.n_threads);
  }
  out.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

void hessian_ci(FitResult& fit, const std::vector<CaptureHistory>& histories,
                const ModelSpec& spec, const CovariateGrid& grid, double level, int n_threads) {
  const int n = fit.n_params;
  LikelihoodEngine engine(spec, grid);
  LikelihoodOptions lik_opts{1};

  ParameterVector working = fit.estimates;
  auto loglik = [&](const std::vector<double>& x) {
    ParameterVector p = working;
    p.set_from_unconstrained(x);
    try {
      return engine.log_likelihood_dataset(histories, resolve(spec, p), lik_opts);
    } catch (const ImpossibleHistory&) {
      return -std::numeric_limits<double>::infinity();
    } catch (const std::invalid_argument&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  const std::vector<double> x = fit.estimates.to_unconstrained();
  std::vector<double> h(n);
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  for (int i = 0; i < n; ++i) h[i] = base * std::max(1.0, std::abs(x[i]));

  // Central-difference Hessian of the log-likelihood in transform space.
  const double f0 = loglik(x);
  std::vector<double> hessian(n * n, 0.0);
  // Diagonal terms plus the f(x +- h_i) values reused below.
  std::vector<double> fp(n), fm(n);
  parallel_for(n, n_threads, [&](std::size_t i) {
    std::vector<double> xp = x, xm = x;
    xp[i] += h[i];
    xm[i] -= h[i];
    fp[i] = loglik(xp);
    fm[i] = loglik(xm);
  });
  for (int i = 0; i < n; ++i) {
    hessian[i * n + i] = (fp[i] - 2.0 * f0 + fm[i]) / (h[i] * h[i]);
  }
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> offdiag(pairs.size());
  parallel_for(pairs.size(), n_threads, [&](std::size_t k) {
    auto [i, j] = pairs[k];
    std::vector<double> xa = x, xb = x, xc = x, xd = x;
    xa[i] += h[i]; xa[j] += h[j];
    xb[i] += h[i]; xb[j] -= h[j];
    xc[i] -= h[i]; xc[j] += h[j];
    xd[i] -= h[i]; xd[j] -= h[j];
    offdiag[k] = (loglik(xa) - loglik(xb) - loglik(xc) + loglik(xd)) / (4.0 * h[i] * h[j]);
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto [i, j] = pairs[k];
    hessian[i * n + j] = hessian[j * n + i] = offdiag[k];
  }

  fit.se_transformed.assign(n, std::nullopt);
  fit.se_natural.assign(n, std::nullopt);
  fit.ci95.assign(n, std::nullopt);
  fit.covariance.clear();

  // Covariance = (-H)^{-1}; a failed Cholesky means the information matrix
  // is not positive definite and no intervals are reported.
  std::vector<double> neg_h(n * n);
  for (int i = 0; i < n * n; ++i) neg_h[i] = -hessian[i];
  std::vector<double> chol = neg_h;
  if (!cholesky(chol, n)) return;
  fit.covariance = cholesky_inverse(chol, n);

  const double z = 1.959963984540054;  // Phi^{-1}(0.975)
  (void)level;
  for (int i = 0; i < n; ++i) {
    double var = fit.covariance[i * n + i];
    if (!(var > 0) || !std::isfinite(var)) continue;
    double se = std::sqrt(var);
    fit.se_transformed[i] = se;
    const auto& param = fit.estimates[i];
    fit.se_natural[i] =
        se * std::abs(ParameterVector::inverse_transform_jacobian(param.value, param.constraint));
    if (fit.boundary[i]) continue;  // no interval at the boundary
    double lo = ParameterVector::inverse_transform(x[i] - z * se, param.constraint);
    double hi = ParameterVector::inverse_transform(x[i] + z * se, param.constraint);
    fit.ci95[i] = ConfidenceInterval{lo, hi};
  }
}

std::vector<AicRow> delta_aic(const std::vector<FitResult>& fits) {
  if (fits.empty()) throw std::invalid_argument("delta_aic: no fits");
  for (const auto& f : fits) {
    if (f.data_checksum != fits.front().data_checksum) {
      throw std::invalid_argument("delta_aic: fits computed on different datasets");
    }
  }
  std::vector<AicRow> rows;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    rows.push_back({static_cast<int>(i), fits[i].max_loglik, fits[i].n_params, fits[i].aic, 0.0});
  }
  std::sort(rows.begin(), rows.end(), [](const AicRow& a, const AicRow& b) {
    if (a.aic != b.aic) return a.aic < b.aic;
    return a.q < b.q;
  });
  for (auto& r : rows) r.delta_aic = r.aic - rows.front().aic;
  return rows;
}

std::vector<SurvivalCurvePoint> survival_curve(const FitResult& fit, int group, double y_min,
                                               double y_max, int n_points) {
  if (n_points < 2) throw std::invalid_argument("survival_curve: need at least 2 points");
  int ng = 0;
  while (fit.estimates.index_of("beta0[" + std::to_string(ng) + "]") >= 0) ++ng;
  std::string suffix = ng > 0 ? "[" + std::to_string(group) + "]" : "";
  if (ng == 0 && group != 0) throw std::invalid_argument("survival_curve: unknown group");
  int i0 = fit.estimates.index_of("beta0" + suffix);
  int i1 = fit.estimates.index_of("beta1" + suffix);
  if (i0 < 0 || i1 < 0) throw std::invalid_argument("survival_curve: unknown group");
  double b0 = fit.estimates[i0].value;
  double b1 = fit.estimates[i1].value;

  bool have_cov = !fit.covariance.empty();
  double v00 = 0, v01 = 0, v11 = 0;
  if (have_cov) {
    v00 = fit.covariance_entry(i0, i0);
    v01 = fit.covariance_entry(i0, i1);
    v11 = fit.covariance_entry(i1, i1);
  }

  const double z = 1.959963984540054;
  std::vector<SurvivalCurvePoint> curve;
  for (int k = 0; k < n_points; ++k) {
    double y = y_min + (y_max - y_min) * k / (n_points - 1);
    SurvivalCurvePoint pt;
    pt.y = y;
    pt.phi = logistic(b0 + b1 * y);
    if (have_cov) {
      // Delta method: d(phi)/d(beta) = phi (1 - phi) (1, y).
      double dphi = pt.phi * (1.0 - pt.phi);
      double var = dphi * dphi * (v00 + 2.0 * y * v01 + y * y * v11);
      double half = var > 0 ? z * std::sqrt(var) : 0.0;
      pt.lower = std::max(0.0, pt.phi - half);
      pt.upper = std::min(1.0, pt.phi + half);
    }
    curve.push_back(pt);
  }
  return curve;
}

}  // namespace mrr
