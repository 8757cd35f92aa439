#pragma once

#include <map>
#include <string>
#include <vector>

#include "mrr/capture.hpp"
#include "mrr/grid.hpp"
#include "mrr/kernels.hpp"
#include "mrr/model_spec.hpp"
#include "mrr/parameters.hpp"

namespace mrr {

// Raised when a history has zero probability under the model (forward mass
// underflows to zero), as opposed to a numerical failure.
class ImpossibleHistory : public std::runtime_error {
 public:
  explicit ImpossibleHistory(const std::string& id)
      : std::runtime_error("history has zero likelihood: " + id), id(id) {}
  std::string id;
};

// Sparsity pattern of the alive block of the system matrix Gamma_t, decided
// by covariate observedness at t and t+1.
enum class StepPattern { Dense, Row, Column, Scalar };

// System process matrix for the step t -> t+1 of one individual. Alive-block
// entry (i,j) is phi_t(i) * Psi_t(i,j); the death column holds 1 - phi_t(i);
// the two dead states map to long-dead with probability 1.
struct SystemMatrix {
  StepPattern pattern = StepPattern::Dense;
  int m = 0;
  int row_index = 0;  // observed interval at t (Row/Scalar)
  int col_index = 0;  // observed interval at t+1 (Column/Scalar)
  // Alive-block storage: Dense m*m row-major; Row m entries (row row_index);
  // Column m entries (column col_index); Scalar 1 entry.
  std::vector<double> alive;
  // Survival probabilities phi_t(i) backing the death column. Dense/Column:
  // m entries (midpoints); Row/Scalar: 1 entry (observed covariate value).
  std::vector<double> phi;

  // Literal (m+2)x(m+2) materialization, row-major. phi_t(i) is zero off the
  // observed interval when the covariate at t is observed.
  std::vector<double> to_dense() const;
};

SystemMatrix build_system_matrix(const CaptureHistory& hist, int t, const ResolvedParams& params,
                                 const ModelSpec& spec, const CovariateGrid& grid);

// Diagonal of the (m+2) observation matrix Q(x).
std::vector<double> build_observation_matrix(CaptureCode x, double p, double lambda, int m);

struct LikelihoodOptions {
  int n_threads = 1;
};

// Evaluates per-individual and joint log-likelihoods for a fixed model
// structure and grid. Per-parameter-vector caches (dense transition blocks,
// midpoint survival probabilities) are built once and shared read-only
// across individuals.
class LikelihoodEngine {
 public:
  LikelihoodEngine(const ModelSpec& spec, CovariateGrid grid)
      : spec_(spec), grid_(std::move(grid)) {}

  const CovariateGrid& grid() const { return grid_; }
  const ModelSpec& spec() const { return spec_; }

  double log_likelihood_individual(const CaptureHistory& hist,
                                   const ResolvedParams& params) const;
  // Sum over individuals, fixed-order reduction (deterministic under any
  // thread count).
  double log_likelihood_dataset(const std::vector<CaptureHistory>& histories,
                                const ResolvedParams& params,
                                const LikelihoodOptions& opts = {}) const;

  // Reference path: literal (m+2) row-vector x matrix product with the same
  // rescaling scheme. Used to validate the block-structured recursion.
  double log_likelihood_individual_dense(const CaptureHistory& hist,
                                         const ResolvedParams& params) const;

 private:
  struct Caches;
  double forward(const CaptureHistory& hist, const ResolvedParams& params,
                 const Caches& caches) const;

  ModelSpec spec_;
  CovariateGrid grid_;
};

// Direct nested summation of the discretized likelihood: enumerates every
// survival-state assignment on the unknown occasions and every interval
// assignment for unobserved covariates of alive occasions. Small instances
// only (term count capped at 1e7); returns the likelihood itself.
double brute_force_likelihood(const CaptureHistory& hist, const ResolvedParams& params,
                              const ModelSpec& spec, const CovariateGrid& grid);

// No-covariate closed form: 3-state forward product with constant survival
// probability phi and per-occasion p/lambda taken from params.
double log_likelihood_nocovariate(const CaptureHistory& hist, double phi,
                                  const ResolvedParams& params);

}  // namespace mrr
