#pragma once

#include <optional>
#include <vector>

#include "mrr/grid.hpp"
#include "mrr/model_spec.hpp"

namespace mrr {

// Standard normal CDF via erfc; absolute error at machine level.
double normal_cdf(double x);
// P(a <= Z < b) for standard normal, computed as a difference of
// complementary CDFs on the side away from zero so far tails do not cancel.
double normal_interval(double a, double b);
double normal_pdf(double x);

// Parameters of one covariate-process family. Vectors hold one entry per
// age group, or a single shared entry.
struct KernelParams {
  KernelFamily family = KernelFamily::MeanRevertingAR;
  std::vector<double> eta, mu, sigma;
  double level = 0, gamma = 0, period = 1;  // SineTrendAR

  double sd(int group) const;
  static KernelParams mean_reverting(double eta, double mu, double sigma);
  static KernelParams random_walk(double mu, double sigma);
  static KernelParams sine_trend(double eta, double level, double gamma, double sigma,
                                 double period);
  static KernelParams iid_normal(double mean, double sd);
};

// E[y_t | y_{t-1} = y_prev] where t is the occasion of the generated value
// and group the age group at t.
double conditional_mean(const KernelParams& kernel, double y_prev, int t, int group);

// Normal transition density f(y_next | y_prev).
double transition_density(const KernelParams& kernel, double y_next, double y_prev, int t,
                          int group);

// f(y_t in B_j | y_prev): exact Phi-difference for the Gaussian families.
double interval_prob(const KernelParams& kernel, int j, const CovariateGrid& grid,
                     double y_prev, int t, int group);

// Midpoint-rule approximation (b_j - b_{j-1}) * f(b_j* | y_prev), the
// fallback for kernels without a closed-form interval probability.
double interval_prob_midpoint(const KernelParams& kernel, int j, const CovariateGrid& grid,
                              double y_prev, int t, int group);

// Distribution of the covariate at the first capture occasion.
struct InitialDistribution {
  bool condition = false;  // delta entry 1 at the observed interval
  double mean = 0, sd = 1;
};

// Row vector delta of length m+2: f_0 mass per interval when the initial
// covariate is missing, a point density (or 1 under conditioning) at the
// observed interval otherwise. Dead-state entries are always zero.
std::vector<double> initial_vector(const InitialDistribution& dist, const CovariateGrid& grid,
                                   const std::optional<double>& y_g);

}  // namespace mrr
