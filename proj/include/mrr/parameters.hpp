#pragma once

#include <span>
#include <string>
#include <vector>

#include "mrr/model_spec.hpp"

namespace mrr {

// Constraint tag deciding the bijection to the unconstrained optimization
// space: logit for probabilities, log for positive scales, identity
// otherwise.
enum class Constraint { Probability, Positive, Unconstrained };

struct Parameter {
  std::string name;
  Constraint constraint = Constraint::Unconstrained;
  double value = 0.0;
};

class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(std::vector<Parameter> params) : params_(std::move(params)) {}

  int size() const { return static_cast<int>(params_.size()); }
  const Parameter& operator[](int i) const { return params_[i]; }
  Parameter& operator[](int i) { return params_[i]; }
  const std::vector<Parameter>& entries() const { return params_; }

  int index_of(const std::string& name) const;  // -1 if absent
  double value_of(const std::string& name) const;
  void set(const std::string& name, double value);

  std::vector<double> values() const;
  std::vector<double> to_unconstrained() const;
  void set_from_unconstrained(std::span<const double> x);

  static double transform(double value, Constraint c);
  static double inverse_transform(double x, Constraint c);
  // d(natural)/d(unconstrained) evaluated at the natural value.
  static double inverse_transform_jacobian(double value, Constraint c);

 private:
  std::vector<Parameter> params_;
};

// Parameter layout implied by a ModelSpec, with neutral default values.
// Names: beta0[g]/beta1[g] per group; kernel parameters (eta, mu, sigma,
// level, gamma, mean, sd) optionally suffixed by group; p / p[t] and
// lambda / lambda[t] for t = 2..T; init_mean / init_sd when the initial
// covariate distribution is estimated.
ParameterVector make_parameter_vector(const ModelSpec& spec);

// Resolved per-occasion / per-group view of a ParameterVector, used by the
// likelihood and simulation code.
struct ResolvedParams {
  std::vector<double> beta0, beta1;             // per group
  KernelFamily family = KernelFamily::MeanRevertingAR;
  std::vector<double> eta, mu, sigma;           // per group (or size 1, shared)
  double level = 0, gamma = 0, sine_period = 0; // SineTrendAR extras
  std::vector<double> p, lambda;                // index t = 1..T ([0] unused)
  bool condition_initial = false;
  double init_mean = 0, init_sd = 1;

  double survival(int group, double y) const;
  double p_at(int t) const { return p[t]; }
  double lambda_at(int t) const { return lambda[t]; }
};

ResolvedParams resolve(const ModelSpec& spec, const ParameterVector& params);

}  // namespace mrr
