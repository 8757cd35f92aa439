#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mrr/bfgs.hpp"
#include "mrr/likelihood.hpp"
#include "mrr/parameters.hpp"

namespace mrr {

enum class Convergence { Converged, MaxIter, LineSearchFail };

struct ConfidenceInterval {
  double lower = 0, upper = 0;
};

struct FitResult {
  ParameterVector estimates;
  double max_loglik = 0;
  double aic = 0;
  int n_params = 0;  // q
  int grid_m = 0;
  Convergence convergence = Convergence::MaxIter;
  double runtime_seconds = 0;
  std::uint64_t data_checksum = 0;

  // Per-parameter inference output; empty until hessian_ci has run.
  std::vector<bool> boundary;                       // transformed estimate beyond +-12
  std::vector<std::optional<double>> se_transformed;
  std::vector<std::optional<double>> se_natural;
  std::vector<std::optional<ConfidenceInterval>> ci95;  // natural scale
  std::vector<double> covariance;  // transform space, q*q row-major; empty if unavailable
  double covariance_entry(int i, int j) const { return covariance[i * n_params + j]; }
};

struct FitOptions {
  BfgsOptions optimizer;
  int multistart = 1;         // extra starts are jittered from init
  std::uint64_t jitter_seed = 1;
  bool compute_ci = true;
  int n_threads = 1;
};

// FNV-1a over a canonical serialization; identifies the dataset a fit was
// computed on so model comparisons cannot silently mix datasets.
std::uint64_t dataset_checksum(const std::vector<CaptureHistory>& histories);

// Scale-aware neutral starting values: beta0 = logit(0.7), beta1 = 0,
// p = lambda = 0.5, kernel location/scale from the observed covariates.
ParameterVector default_init(const ModelSpec& spec,
                             const std::vector<CaptureHistory>& histories);

FitResult fit(const std::vector<CaptureHistory>& histories, const ModelSpec& spec,
              const CovariateGrid& grid, const ParameterVector& init,
              const FitOptions& opts = {});

// Wald intervals from a central-difference Hessian of the log-likelihood in
// transform space, mapped through the inverse transform. Parameters at the
// boundary, or any parameter when the Hessian is not negative definite, get
// empty intervals.
void hessian_ci(FitResult& fit, const std::vector<CaptureHistory>& histories,
                const ModelSpec& spec, const CovariateGrid& grid, double level = 0.95,
                int n_threads = 1);

struct AicRow {
  int fit_index = 0;
  double loglik = 0;
  int q = 0;
  double aic = 0;
  double delta_aic = 0;
};

// AIC differences from the best model, ascending; ties broken by fewer
// parameters. Rejects fits carrying different dataset checksums.
std::vector<AicRow> delta_aic(const std::vector<FitResult>& fits);

struct SurvivalCurvePoint {
  double y = 0;
  double phi = 0;
  std::optional<double> lower, upper;  // pointwise 95% band (delta method)
};

std::vector<SurvivalCurvePoint> survival_curve(const FitResult& fit, int group,
                                               double y_min, double y_max, int n_points);

}  // namespace mrr
