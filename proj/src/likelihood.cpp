#include "mrr/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <numeric>
#include <set>
#include <tuple>

#include "mrr/parallel.hpp"
#include "mrr/survival.hpp"

namespace mrr {

namespace {

constexpr double kUnderflow = 1e-300;

KernelParams kernel_view(const ResolvedParams& params) {
  KernelParams k;
  k.family = params.family;
  k.eta = params.eta;
  k.mu = params.mu;
  k.sigma = params.sigma;
  k.level = params.level;
  k.gamma = params.gamma;
  k.period = params.sine_period;
  return k;
}

InitialDistribution initial_view(const ResolvedParams& params) {
  return InitialDistribution{params.condition_initial, params.init_mean, params.init_sd};
}

}  // namespace

std::vector<double> SystemMatrix::to_dense() const {
  const int n = m + 2;
  std::vector<double> out(n * n, 0.0);
  auto at = [&](int i, int j) -> double& { return out[(i - 1) * n + (j - 1)]; };
  switch (pattern) {
    case StepPattern::Dense:
      for (int i = 1; i <= m; ++i) {
        for (int j = 1; j <= m; ++j) at(i, j) = alive[(i - 1) * m + (j - 1)];
        at(i, m + 1) = 1.0 - phi[i - 1];
      }
      break;
    case StepPattern::Row:
      for (int j = 1; j <= m; ++j) at(row_index, j) = alive[j - 1];
      // phi_t(i) is zero away from the observed interval, so the death
      // column is 1 on every other alive row.
      for (int i = 1; i <= m; ++i) at(i, m + 1) = i == row_index ? 1.0 - phi[0] : 1.0;
      break;
    case StepPattern::Column:
      for (int i = 1; i <= m; ++i) {
        at(i, col_index) = alive[i - 1];
        at(i, m + 1) = 1.0 - phi[i - 1];
      }
      break;
    case StepPattern::Scalar:
      at(row_index, col_index) = alive[0];
      for (int i = 1; i <= m; ++i) at(i, m + 1) = i == row_index ? 1.0 - phi[0] : 1.0;
      break;
  }
  at(m + 1, m + 2) = 1.0;
  at(m + 2, m + 2) = 1.0;
  return out;
}

SystemMatrix build_system_matrix(const CaptureHistory& hist, int t, const ResolvedParams& params,
                                 const ModelSpec& spec, const CovariateGrid& grid) {
  if (t < hist.first_capture || t >= hist.n_occasions) {
    throw std::invalid_argument("system matrix: occasion out of range");
  }
  const int m = grid.size();
  const KernelParams kernel = kernel_view(params);
  const int group_t = age_group(t, hist, spec);
  const int group_next = age_group(t + 1, hist, spec);
  const bool obs_t = hist.covariate_observed(t);
  const bool obs_next = hist.covariate_observed(t + 1);

  SystemMatrix sm;
  sm.m = m;
  if (obs_t && obs_next) {
    sm.pattern = StepPattern::Scalar;
    double y_t = *hist.covariate_at(t);
    double y_next = *hist.covariate_at(t + 1);
    sm.row_index = grid.index_of(y_t);
    sm.col_index = grid.index_of(y_next);
    double phi = params.survival(group_t, y_t);
    sm.phi = {phi};
    sm.alive = {phi * transition_density(kernel, y_next, y_t, t + 1, group_next)};
  } else if (obs_t) {
    sm.pattern = StepPattern::Row;
    double y_t = *hist.covariate_at(t);
    sm.row_index = grid.index_of(y_t);
    double phi = params.survival(group_t, y_t);
    sm.phi = {phi};
    sm.alive.resize(m);
    for (int j = 1; j <= m; ++j) {
      sm.alive[j - 1] = phi * interval_prob(kernel, j, grid, y_t, t + 1, group_next);
    }
  } else if (obs_next) {
    sm.pattern = StepPattern::Column;
    double y_next = *hist.covariate_at(t + 1);
    sm.col_index = grid.index_of(y_next);
    sm.phi.resize(m);
    sm.alive.resize(m);
    for (int i = 1; i <= m; ++i) {
      double phi = params.survival(group_t, grid.midpoint(i));
      sm.phi[i - 1] = phi;
      sm.alive[i - 1] =
          phi * transition_density(kernel, y_next, grid.midpoint(i), t + 1, group_next);
    }
  } else {
    sm.pattern = StepPattern::Dense;
    sm.phi.resize(m);
    sm.alive.resize(m * m);
    for (int i = 1; i <= m; ++i) {
      double phi = params.survival(group_t, grid.midpoint(i));
      sm.phi[i - 1] = phi;
      for (int j = 1; j <= m; ++j) {
        sm.alive[(i - 1) * m + (j - 1)] =
            phi * interval_prob(kernel, j, grid, grid.midpoint(i), t + 1, group_next);
      }
    }
  }
  return sm;
}

std::vector<double> build_observation_matrix(CaptureCode x, double p, double lambda, int m) {
  std::vector<double> q(m + 2, 0.0);
  switch (x) {
    case CaptureCode::NotSeen:
      std::fill(q.begin(), q.begin() + m, 1.0 - p);
      q[m] = 1.0 - lambda;
      q[m + 1] = 1.0;
      break;
    case CaptureCode::SeenAlive:
      std::fill(q.begin(), q.begin() + m, p);
      break;
    case CaptureCode::RecoveredDead:
      q[m] = lambda;
      break;
  }
  return q;
}

// Per-parameter-vector caches shared read-only across individuals. The
// expensive dense alive blocks depend only on (phi group at t, kernel group
// at t+1) and, for the sine-trend kernel, on the target occasion; they do
// not depend on the individual.
struct LikelihoodEngine::Caches {
  KernelParams kernel;
  InitialDistribution initial;
  // phi at interval midpoints, per age group.
  std::vector<std::vector<double>> phi_mid;
  // Dense blocks keyed by (time_key, group_t, group_next): entry (i,j) is
  // phi_t(i) * interval_prob(j | midpoint i). time_key is the target
  // occasion for the sine-trend family and 0 otherwise.
  std::map<std::tuple<int, int, int>, std::vector<double>> dense;

  int time_key(int t_next) const {
    return kernel.family == KernelFamily::SineTrendAR ? t_next : 0;
  }
};

double LikelihoodEngine::forward(const CaptureHistory& hist, const ResolvedParams& params,
                                 const Caches& caches) const {
  const int m = grid_.size();
  const int g = hist.first_capture;
  const int T = hist.n_occasions;

  std::vector<double> alive(initial_vector(caches.initial, grid_, hist.covariate_at(g)));
  alive.resize(m);  // dead entries of delta are structurally zero
  double recent_dead = 0.0, long_dead = 0.0;
  double log_scale = 0.0;

  double total = std::accumulate(alive.begin(), alive.end(), 0.0);
  if (total < kUnderflow) throw ImpossibleHistory(hist.id);
  if (g == T) return std::log(total);
  // Rescale so per-step products stay in range.
  for (double& a : alive) a /= total;
  log_scale += std::log(total);

  std::vector<double> next(m);
  for (int t = g; t < T; ++t) {
    const bool obs_t = hist.covariate_observed(t);
    const bool obs_next = hist.covariate_observed(t + 1);
    const int group_t = spec_.group_of_age(hist.age_at(t));
    const int group_next = spec_.group_of_age(hist.age_at(t + 1));
    double alive_sum = std::accumulate(alive.begin(), alive.end(), 0.0);

    std::fill(next.begin(), next.end(), 0.0);
    double new_recent = 0.0;
    if (alive_sum > 0.0) {
      if (obs_t && obs_next) {
        double y_t = *hist.covariate_at(t);
        int i = grid_.index_of(y_t);
        int j = grid_.index_of(*hist.covariate_at(t + 1));
        double phi = params.survival(group_t, y_t);
        next[j - 1] = alive[i - 1] * phi *
                      transition_density(caches.kernel, *hist.covariate_at(t + 1), y_t, t + 1,
                                         group_next);
        // phi_t(i') = 0 off the observed interval, so all other alive mass
        // flows to the death column.
        new_recent = alive_sum - alive[i - 1] * phi;
      } else if (obs_t) {
        double y_t = *hist.covariate_at(t);
        int i = grid_.index_of(y_t);
        double phi = params.survival(group_t, y_t);
        double mass = alive[i - 1] * phi;
        for (int j = 1; j <= m; ++j) {
          next[j - 1] = mass * interval_prob(caches.kernel, j, grid_, y_t, t + 1, group_next);
        }
        new_recent = alive_sum - mass;
      } else if (obs_next) {
        double y_next = *hist.covariate_at(t + 1);
        int j = grid_.index_of(y_next);
        const std::vector<double>& phi_mid = caches.phi_mid[group_t];
        double acc = 0.0, surv = 0.0;
        for (int i = 1; i <= m; ++i) {
          double flow = alive[i - 1] * phi_mid[i - 1];
          surv += flow;
          acc += flow * transition_density(caches.kernel, y_next, grid_.midpoint(i), t + 1,
                                           group_next);
        }
        next[j - 1] = acc;
        new_recent = alive_sum - surv;
      } else {
        const auto& block =
            caches.dense.at({caches.time_key(t + 1), group_t, group_next});
        const std::vector<double>& phi_mid = caches.phi_mid[group_t];
        double surv = 0.0;
        for (int i = 0; i < m; ++i) {
          double a = alive[i];
          if (a == 0.0) continue;
          surv += a * phi_mid[i];
          const double* row = &block[i * m];
          for (int j = 0; j < m; ++j) next[j] += a * row[j];
        }
        new_recent = alive_sum - surv;
      }
    }
    double new_long = recent_dead + long_dead;

    // Observation matrix Q(x_{t+1}).
    double p = params.p_at(t + 1);
    double lambda = params.lambda_at(t + 1);
    switch (hist.capture_at(t + 1)) {
      case CaptureCode::NotSeen:
        for (double& v : next) v *= 1.0 - p;
        new_recent *= 1.0 - lambda;
        break;
      case CaptureCode::SeenAlive:
        for (double& v : next) v *= p;
        new_recent = 0.0;
        new_long = 0.0;
        break;
      case CaptureCode::RecoveredDead:
        std::fill(next.begin(), next.end(), 0.0);
        new_recent *= lambda;
        new_long = 0.0;
        break;
    }

    double step_total = std::accumulate(next.begin(), next.end(), 0.0) + new_recent + new_long;
    if (!(step_total >= kUnderflow)) throw ImpossibleHistory(hist.id);
    for (int j = 0; j < m; ++j) alive[j] = next[j] / step_total;
    recent_dead = new_recent / step_total;
    long_dead = new_long / step_total;
    log_scale += std::log(step_total);
  }
  return log_scale;
}

double LikelihoodEngine::log_likelihood_individual(const CaptureHistory& hist,
                                                   const ResolvedParams& params) const {
  std::vector<CaptureHistory> one{hist};
  return log_likelihood_dataset(one, params);
}

double LikelihoodEngine::log_likelihood_dataset(const std::vector<CaptureHistory>& histories,
                                                const ResolvedParams& params,
                                                const LikelihoodOptions& opts) const {
  if (histories.empty()) throw std::invalid_argument("log-likelihood: empty dataset");
  const int m = grid_.size();

  Caches caches;
  caches.kernel = kernel_view(params);
  caches.initial = initial_view(params);
  caches.phi_mid.resize(spec_.n_groups());
  for (int a = 0; a < spec_.n_groups(); ++a) {
    caches.phi_mid[a].resize(m);
    for (int i = 1; i <= m; ++i) {
      caches.phi_mid[a][i - 1] = params.survival(a, grid_.midpoint(i));
    }
  }
  // Collect the dense-step keys actually present before building blocks.
  std::set<std::tuple<int, int, int>> keys;
  for (const auto& hist : histories) {
    for (int t = hist.first_capture; t < hist.n_occasions; ++t) {
      if (!hist.covariate_observed(t) && !hist.covariate_observed(t + 1)) {
        keys.insert({caches.time_key(t + 1), spec_.group_of_age(hist.age_at(t)),
                     spec_.group_of_age(hist.age_at(t + 1))});
      }
    }
  }
  for (const auto& key : keys) {
    auto [tk, group_t, group_next] = key;
    std::vector<double> block(m * m);
    for (int i = 1; i <= m; ++i) {
      double phi = caches.phi_mid[group_t][i - 1];
      for (int j = 1; j <= m; ++j) {
        block[(i - 1) * m + (j - 1)] =
            phi * interval_prob(caches.kernel, j, grid_, grid_.midpoint(i), tk, group_next);
      }
    }
    caches.dense.emplace(key, std::move(block));
  }

  std::vector<double> logliks(histories.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_for(histories.size(), opts.n_threads, [&](std::size_t i) {
    try {
      logliks[i] = forward(histories[i], params, caches);
    } catch (...) {
      std::scoped_lock lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  // Fixed-order reduction: summing in sorted-value order makes the result
  // bitwise deterministic under any thread count and any history ordering.
  std::sort(logliks.begin(), logliks.end());
  double total = 0.0;
  for (double v : logliks) total += v;
  return total;
}

double LikelihoodEngine::log_likelihood_individual_dense(const CaptureHistory& hist,
                                                         const ResolvedParams& params) const {
  const int m = grid_.size();
  const int g = hist.first_capture;
  const int T = hist.n_occasions;
  const int n = m + 2;

  std::vector<double> v = initial_vector(initial_view(params), grid_, hist.covariate_at(g));
  double log_scale = 0.0;
  auto rescale = [&](std::vector<double>& vec) {
    double s = std::accumulate(vec.begin(), vec.end(), 0.0);
    if (!(s >= kUnderflow)) throw ImpossibleHistory(hist.id);
    for (double& x : vec) x /= s;
    log_scale += std::log(s);
  };
  rescale(v);
  for (int t = g; t < T; ++t) {
    std::vector<double> gamma = build_system_matrix(hist, t, params, spec_, grid_).to_dense();
    std::vector<double> q = build_observation_matrix(
        hist.capture_at(t + 1), params.p_at(t + 1), params.lambda_at(t + 1), m);
    std::vector<double> next(n, 0.0);
    for (int i = 0; i < n; ++i) {
      if (v[i] == 0.0) continue;
      for (int j = 0; j < n; ++j) next[j] += v[i] * gamma[i * n + j];
    }
    for (int j = 0; j < n; ++j) next[j] *= q[j];
    v = std::move(next);
    rescale(v);
  }
  return log_scale;
}

double brute_force_likelihood(const CaptureHistory& hist, const ResolvedParams& params,
                              const ModelSpec& spec, const CovariateGrid& grid) {
  const int g = hist.first_capture;
  const int T = hist.n_occasions;
  const int m = grid.size();
  const KernelParams kernel = kernel_view(params);
  const InitialDistribution initial = initial_view(params);

  // Occasions with unknown survival state and occasions whose covariate is
  // integrated over (all unobserved occasions; the interval sum is applied
  // only while the enumerated path is alive).
  std::vector<int> unknown_state;
  for (int t = g; t <= T; ++t) {
    if (!hist.known_state(t)) unknown_state.push_back(t);
  }
  double terms = std::pow(3.0, unknown_state.size());
  int n_unobserved = 0;
  for (int t = g; t <= T; ++t) {
    if (!hist.covariate_observed(t)) ++n_unobserved;
  }
  terms *= std::pow(static_cast<double>(m), n_unobserved);
  if (terms > 1e7) throw std::invalid_argument("brute force: instance too large");

  std::vector<SurvivalState> state(T + 1, SurvivalState::Alive);
  for (int t = g; t <= T; ++t) {
    if (auto s = hist.known_state(t)) state[t] = *s;
  }

  // y value representative per occasion under the current interval
  // assignment; only meaningful when the path is alive at that occasion.
  std::vector<double> y_rep(T + 1, 0.0);
  for (int t = g; t <= T; ++t) {
    if (hist.covariate_observed(t)) y_rep[t] = *hist.covariate_at(t);
  }

  double total = 0.0;

  // Innermost evaluation for a fully assigned survival path and interval
  // assignment: straight product of the likelihood factors.
  auto evaluate = [&]() {
    double term;
    if (hist.covariate_observed(g)) {
      term = initial.condition ? 1.0 : normal_pdf((y_rep[g] - initial.mean) / initial.sd) /
                                           initial.sd;
    } else {
      int j = grid.index_of(y_rep[g]);
      term = normal_interval((grid.boundary(j - 1) - initial.mean) / initial.sd,
                             (grid.boundary(j) - initial.mean) / initial.sd);
    }
    for (int t = g + 1; t <= T && term != 0.0; ++t) {
      SurvivalState s_prev = state[t - 1];
      SurvivalState s = state[t];
      double phi = 0.0;
      if (s_prev == SurvivalState::Alive) {
        phi = params.survival(spec.group_of_age(hist.age_at(t - 1)), y_rep[t - 1]);
      }
      term *= survival_transition(s_prev, s, phi);
      term *= observation_prob(hist.capture_at(t), s, params.p_at(t), params.lambda_at(t));
      if (term == 0.0) break;
      if (s == SurvivalState::Alive) {
        int group = spec.group_of_age(hist.age_at(t));
        if (hist.covariate_observed(t)) {
          term *= transition_density(kernel, y_rep[t], y_rep[t - 1], t, group);
        } else {
          int j = grid.index_of(y_rep[t]);
          term *= interval_prob(kernel, j, grid, y_rep[t - 1], t, group);
        }
      }
    }
    total += term;
  };

  // Recurse over interval assignments for unobserved covariates at alive
  // occasions (dead occasions carry no covariate factor).
  std::function<void(int)> assign_intervals = [&](int t) {
    if (t > T) {
      evaluate();
      return;
    }
    if (state[t] != SurvivalState::Alive || hist.covariate_observed(t)) {
      assign_intervals(t + 1);
      return;
    }
    for (int j = 1; j <= m; ++j) {
      y_rep[t] = grid.midpoint(j);
      assign_intervals(t + 1);
    }
  };

  std::function<void(std::size_t)> assign_states = [&](std::size_t k) {
    if (k == unknown_state.size()) {
      assign_intervals(g);
      return;
    }
    int t = unknown_state[k];
    for (SurvivalState s :
         {SurvivalState::Alive, SurvivalState::RecentDead, SurvivalState::LongDead}) {
      state[t] = s;
      assign_states(k + 1);
    }
  };
  assign_states(0);
  return total;
}

double log_likelihood_nocovariate(const CaptureHistory& hist, double phi,
                                  const ResolvedParams& params) {
  const int g = hist.first_capture;
  const int T = hist.n_occasions;
  double v0 = 1.0, v1 = 0.0, v2 = 0.0;  // alive / recent dead / long dead
  double log_scale = 0.0;
  for (int t = g + 1; t <= T; ++t) {
    double a = v0 * phi;
    double rd = v0 * (1.0 - phi);
    double ld = v1 + v2;
    double p = params.p_at(t), lambda = params.lambda_at(t);
    switch (hist.capture_at(t)) {
      case CaptureCode::NotSeen:
        a *= 1.0 - p;
        rd *= 1.0 - lambda;
        break;
      case CaptureCode::SeenAlive:
        a *= p;
        rd = 0.0;
        ld = 0.0;
        break;
      case CaptureCode::RecoveredDead:
        a = 0.0;
        rd *= lambda;
        ld = 0.0;
        break;
    }
    double s = a + rd + ld;
    if (!(s >= kUnderflow)) throw ImpossibleHistory(hist.id);
    v0 = a / s;
    v1 = rd / s;
    v2 = ld / s;
    log_scale += std::log(s);
  }
  return log_scale;
}

}  // namespace mrr
