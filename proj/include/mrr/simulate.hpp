#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mrr/capture.hpp"
#include "mrr/kernels.hpp"
#include "mrr/model_spec.hpp"

namespace mrr {

// Generative configuration for synthetic MRR datasets. First capture is
// uniform on {1,...,T-1} and always observed; survival from t to t+1 is
// Bernoulli with logit(phi) = beta0 + beta1 * y_t; an individual dying in
// (t-1, t] is recoverable only at occasion t.
struct SimConfig {
  int n_individuals = 500;
  int n_occasions = 10;
  std::vector<int> age_boundaries;       // empty: one group
  std::vector<double> beta0{-3.0}, beta1{0.2};  // per group
  KernelParams kernel = KernelParams::sine_trend(0.6, 25.0, 2.0, 1.2, 10.0);
  InitialDistribution initial{false, 15.0, 2.0};
  std::vector<double> p{0.95}, lambda{0.95};  // size 1 or T (indexed by occasion)
  double missingness = 0;  // P(covariate not recorded | captured alive)
  std::uint64_t seed = 0;

  int group_of_age(int age) const;
  double p_at(int t) const { return p.size() == 1 ? p[0] : p.at(t - 1); }
  double lambda_at(int t) const { return lambda.size() == 1 ? lambda[0] : lambda.at(t - 1); }
};

// Latent path kept alongside each simulated history.
struct SimTruth {
  std::vector<double> covariates;       // y_g..y_death (alive occasions)
  std::vector<SurvivalState> states;    // s_g..s_T
};

CaptureHistory simulate_individual(const SimConfig& cfg, std::uint64_t individual_index,
                                   SimTruth* truth = nullptr);

struct SimulatedDataset {
  std::vector<CaptureHistory> histories;
  std::vector<SimTruth> truths;
};

// Deterministic function of cfg.seed: individual i uses the Philox
// substream (seed, i) so ordering and threading cannot change the output.
SimulatedDataset simulate_dataset(const SimConfig& cfg);

struct QuantileRow {
  int age = 0;
  int n_alive = 0;
  std::optional<double> q05, q50, q95;  // empty when no survivors
};

// Model-derived covariate quantiles among survivors at each age, by
// simulating covariate + survival paths from age 0.
std::vector<QuantileRow> covariate_quantiles(const KernelParams& kernel,
                                             const InitialDistribution& initial,
                                             const std::vector<double>& beta0,
                                             const std::vector<double>& beta1,
                                             const std::vector<int>& age_boundaries,
                                             const std::vector<int>& ages, int n_paths,
                                             std::uint64_t seed);

}  // namespace mrr
