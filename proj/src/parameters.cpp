#include "mrr/parameters.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mrr/survival.hpp"

namespace mrr {

int ParameterVector::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return -1;
}

double ParameterVector::value_of(const std::string& name) const {
  int i = index_of(name);
  if (i < 0) throw std::invalid_argument("no parameter named " + name);
  return params_[i].value;
}

void ParameterVector::set(const std::string& name, double value) {
  int i = index_of(name);
  if (i < 0) throw std::invalid_argument("no parameter named " + name);
  params_[i].value = value;
}

std::vector<double> ParameterVector::values() const {
  std::vector<double> v(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) v[i] = params_[i].value;
  return v;
}

double ParameterVector::transform(double value, Constraint c) {
  switch (c) {
    case Constraint::Probability: return logit(value);
    case Constraint::Positive: return std::log(value);
    case Constraint::Unconstrained: return value;
  }
  return value;
}

double ParameterVector::inverse_transform(double x, Constraint c) {
  switch (c) {
    case Constraint::Probability: return logistic(x);
    case Constraint::Positive: return std::exp(x);
    case Constraint::Unconstrained: return x;
  }
  return x;
}

double ParameterVector::inverse_transform_jacobian(double value, Constraint c) {
  switch (c) {
    case Constraint::Probability: return value * (1.0 - value);
    case Constraint::Positive: return value;
    case Constraint::Unconstrained: return 1.0;
  }
  return 1.0;
}

std::vector<double> ParameterVector::to_unconstrained() const {
  std::vector<double> x(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    x[i] = transform(params_[i].value, params_[i].constraint);
  }
  return x;
}

void ParameterVector::set_from_unconstrained(std::span<const double> x) {
  if (x.size() != params_.size()) {
    throw std::invalid_argument("unconstrained vector length mismatch");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    params_[i].value = inverse_transform(x[i], params_[i].constraint);
  }
}

namespace {

std::string indexed(const std::string& base, int i, int n) {
  return n > 1 ? base + "[" + std::to_string(i) + "]" : base;
}

void push_kernel_params(std::vector<Parameter>& out, const ModelSpec& spec) {
  int nk = spec.kernel_per_group ? spec.n_groups() : 1;
  switch (spec.kernel) {
    case KernelFamily::MeanRevertingAR:
      for (int a = 0; a < nk; ++a) {
        out.push_back({indexed("eta", a, nk), Constraint::Probability, 0.5});
        out.push_back({indexed("mu", a, nk), Constraint::Unconstrained, 0.0});
        out.push_back({indexed("sigma", a, nk), Constraint::Positive, 1.0});
      }
      break;
    case KernelFamily::RandomWalkDrift:
      for (int a = 0; a < nk; ++a) {
        out.push_back({indexed("mu", a, nk), Constraint::Unconstrained, 0.0});
        out.push_back({indexed("sigma", a, nk), Constraint::Positive, 1.0});
      }
      break;
    case KernelFamily::SineTrendAR:
      if (spec.kernel_per_group) {
        throw std::invalid_argument("sine-trend kernel supports shared parameters only");
      }
      out.push_back({"eta", Constraint::Probability, 0.5});
      out.push_back({"level", Constraint::Unconstrained, 0.0});
      out.push_back({"gamma", Constraint::Unconstrained, 0.0});
      out.push_back({"sigma", Constraint::Positive, 1.0});
      break;
    case KernelFamily::IidNormal:
      if (spec.kernel_per_group) {
        throw std::invalid_argument("iid-normal kernel supports shared parameters only");
      }
      out.push_back({"mean", Constraint::Unconstrained, 0.0});
      out.push_back({"sd", Constraint::Positive, 1.0});
      break;
  }
}

}  // namespace

ParameterVector make_parameter_vector(const ModelSpec& spec) {
  if (spec.n_occasions < 2) throw std::invalid_argument("model spec: need T >= 2");
  std::vector<Parameter> out;
  int ng = spec.n_groups();
  for (int a = 0; a < ng; ++a) {
    out.push_back({indexed("beta0", a, ng), Constraint::Unconstrained, logit(0.7)});
    out.push_back({indexed("beta1", a, ng), Constraint::Unconstrained, 0.0});
  }
  push_kernel_params(out, spec);
  if (spec.p_structure == TimeStructure::Constant) {
    out.push_back({"p", Constraint::Probability, 0.5});
  } else {
    for (int t = 2; t <= spec.n_occasions; ++t) {
      out.push_back({"p[" + std::to_string(t) + "]", Constraint::Probability, 0.5});
    }
  }
  if (spec.lambda_structure == TimeStructure::Constant) {
    out.push_back({"lambda", Constraint::Probability, 0.5});
  } else {
    for (int t = 2; t <= spec.n_occasions; ++t) {
      out.push_back({"lambda[" + std::to_string(t) + "]", Constraint::Probability, 0.5});
    }
  }
  if (spec.initial_mode == InitialMode::EstimatedNormal) {
    out.push_back({"init_mean", Constraint::Unconstrained, 0.0});
    out.push_back({"init_sd", Constraint::Positive, 1.0});
  }
  return ParameterVector(std::move(out));
}

double ResolvedParams::survival(int group, double y) const {
  return logistic(beta0[group] + beta1[group] * y);
}

ResolvedParams resolve(const ModelSpec& spec, const ParameterVector& params) {
  ResolvedParams r;
  r.family = spec.kernel;
  r.sine_period = spec.sine_period;
  int ng = spec.n_groups();
  for (int a = 0; a < ng; ++a) {
    r.beta0.push_back(params.value_of(indexed("beta0", a, ng)));
    r.beta1.push_back(params.value_of(indexed("beta1", a, ng)));
  }
  int nk = spec.kernel_per_group ? ng : 1;
  switch (spec.kernel) {
    case KernelFamily::MeanRevertingAR:
      for (int a = 0; a < nk; ++a) {
        r.eta.push_back(params.value_of(indexed("eta", a, nk)));
        r.mu.push_back(params.value_of(indexed("mu", a, nk)));
        r.sigma.push_back(params.value_of(indexed("sigma", a, nk)));
      }
      break;
    case KernelFamily::RandomWalkDrift:
      for (int a = 0; a < nk; ++a) {
        r.mu.push_back(params.value_of(indexed("mu", a, nk)));
        r.sigma.push_back(params.value_of(indexed("sigma", a, nk)));
      }
      break;
    case KernelFamily::SineTrendAR:
      r.eta.push_back(params.value_of("eta"));
      r.level = params.value_of("level");
      r.gamma = params.value_of("gamma");
      r.sigma.push_back(params.value_of("sigma"));
      break;
    case KernelFamily::IidNormal:
      r.mu.push_back(params.value_of("mean"));
      r.sigma.push_back(params.value_of("sd"));
      break;
  }
  const double not_used = std::numeric_limits<double>::quiet_NaN();
  r.p.assign(spec.n_occasions + 1, not_used);
  r.lambda.assign(spec.n_occasions + 1, not_used);
  for (int t = 2; t <= spec.n_occasions; ++t) {
    r.p[t] = spec.p_structure == TimeStructure::Constant
                 ? params.value_of("p")
                 : params.value_of("p[" + std::to_string(t) + "]");
    r.lambda[t] = spec.lambda_structure == TimeStructure::Constant
                      ? params.value_of("lambda")
                      : params.value_of("lambda[" + std::to_string(t) + "]");
  }
  if (spec.initial_mode == InitialMode::EstimatedNormal) {
    r.condition_initial = false;
    r.init_mean = params.value_of("init_mean");
    r.init_sd = params.value_of("init_sd");
  } else {
    r.condition_initial = true;
  }
  return r;
}

}  // namespace mrr
