#include "mrr/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mrr {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

int clamp_group(const std::vector<double>& v, int group) {
  if (v.empty()) throw std::invalid_argument("kernel: missing parameter vector");
  if (v.size() == 1) return 0;
  if (group < 0 || group >= static_cast<int>(v.size())) {
    throw std::invalid_argument("kernel: unknown age group");
  }
  return group;
}
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_interval(double a, double b) {
  if (b <= a) return 0.0;
  if (a >= 0.0) {
    // Right tail: difference of complementary CDFs keeps relative accuracy.
    return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
  }
  if (b <= 0.0) {
    return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
  }
  return normal_cdf(b) - normal_cdf(a);
}

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double KernelParams::sd(int group) const { return sigma[clamp_group(sigma, group)]; }

KernelParams KernelParams::mean_reverting(double eta, double mu, double sigma) {
  KernelParams k;
  k.family = KernelFamily::MeanRevertingAR;
  k.eta = {eta};
  k.mu = {mu};
  k.sigma = {sigma};
  return k;
}

KernelParams KernelParams::random_walk(double mu, double sigma) {
  KernelParams k;
  k.family = KernelFamily::RandomWalkDrift;
  k.mu = {mu};
  k.sigma = {sigma};
  return k;
}

KernelParams KernelParams::sine_trend(double eta, double level, double gamma, double sigma,
                                      double period) {
  KernelParams k;
  k.family = KernelFamily::SineTrendAR;
  k.eta = {eta};
  k.level = level;
  k.gamma = gamma;
  k.sigma = {sigma};
  k.period = period;
  return k;
}

KernelParams KernelParams::iid_normal(double mean, double sd) {
  KernelParams k;
  k.family = KernelFamily::IidNormal;
  k.mu = {mean};
  k.sigma = {sd};
  return k;
}

double conditional_mean(const KernelParams& kernel, double y_prev, int t, int group) {
  switch (kernel.family) {
    case KernelFamily::MeanRevertingAR: {
      int a = clamp_group(kernel.eta, group);
      return y_prev + kernel.eta[a] * (kernel.mu[clamp_group(kernel.mu, group)] - y_prev);
    }
    case KernelFamily::RandomWalkDrift:
      return y_prev + kernel.mu[clamp_group(kernel.mu, group)];
    case KernelFamily::SineTrendAR:
      return kernel.level + kernel.eta[0] * (y_prev - kernel.level) +
             kernel.gamma * std::sin(2.0 * std::numbers::pi * t / kernel.period);
    case KernelFamily::IidNormal:
      return kernel.mu[0];
  }
  throw std::logic_error("unreachable kernel family");
}

double transition_density(const KernelParams& kernel, double y_next, double y_prev, int t,
                          int group) {
  double s = kernel.sd(group);
  if (!(s > 0)) throw std::invalid_argument("kernel: sigma must be positive");
  double z = (y_next - conditional_mean(kernel, y_prev, t, group)) / s;
  return normal_pdf(z) / s;
}

double interval_prob(const KernelParams& kernel, int j, const CovariateGrid& grid,
                     double y_prev, int t, int group) {
  if (j < 1 || j > grid.size()) throw std::out_of_range("interval index out of range");
  double s = kernel.sd(group);
  if (!(s > 0)) throw std::invalid_argument("kernel: sigma must be positive");
  double mean = conditional_mean(kernel, y_prev, t, group);
  return normal_interval((grid.boundary(j - 1) - mean) / s, (grid.boundary(j) - mean) / s);
}

double interval_prob_midpoint(const KernelParams& kernel, int j, const CovariateGrid& grid,
                              double y_prev, int t, int group) {
  if (j < 1 || j > grid.size()) throw std::out_of_range("interval index out of range");
  return grid.width() * transition_density(kernel, grid.midpoint(j), y_prev, t, group);
}

std::vector<double> initial_vector(const InitialDistribution& dist, const CovariateGrid& grid,
                                   const std::optional<double>& y_g) {
  const int m = grid.size();
  std::vector<double> delta(m + 2, 0.0);
  if (y_g) {
    if (!grid.contains(*y_g)) {
      throw std::out_of_range("initial covariate value outside essential range");
    }
    int j = grid.index_of(*y_g);
    if (dist.condition) {
      delta[j - 1] = 1.0;
    } else {
      if (!(dist.sd > 0)) throw std::invalid_argument("initial distribution: sd must be positive");
      delta[j - 1] = normal_pdf((*y_g - dist.mean) / dist.sd) / dist.sd;
    }
    return delta;
  }
  if (dist.condition) {
    throw std::invalid_argument("conditioning on the initial covariate requires it to be observed");
  }
  if (!(dist.sd > 0)) throw std::invalid_argument("initial distribution: sd must be positive");
  for (int j = 1; j <= m; ++j) {
    delta[j - 1] = normal_interval((grid.boundary(j - 1) - dist.mean) / dist.sd,
                                   (grid.boundary(j) - dist.mean) / dist.sd);
  }
  return delta;
}

}  // namespace mrr
