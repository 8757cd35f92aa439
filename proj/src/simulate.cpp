#include "mrr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrr/rng.hpp"
#include "mrr/survival.hpp"

namespace mrr {

int SimConfig::group_of_age(int age) const {
  int g = 0;
  for (int b : age_boundaries) {
    if (age >= b) ++g;
  }
  return g;
}

namespace {

double kernel_step(const KernelParams& kernel, double y_prev, int t, int group, PhiloxRng& rng) {
  return conditional_mean(kernel, y_prev, t, group) + kernel.sd(group) * rng.next_normal();
}

}  // namespace

CaptureHistory simulate_individual(const SimConfig& cfg, std::uint64_t individual_index,
                                   SimTruth* truth) {
  if (cfg.n_individuals < 1 || cfg.n_occasions < 2) {
    throw std::invalid_argument("simulation: need N >= 1 and T >= 2");
  }
  PhiloxRng rng(cfg.seed, individual_index);
  const int T = cfg.n_occasions;

  CaptureHistory hist;
  hist.id = "sim" + std::to_string(individual_index);
  hist.n_occasions = T;
  hist.first_capture = rng.next_int(1, T - 1);
  const int g = hist.first_capture;

  double y = cfg.initial.mean + cfg.initial.sd * rng.next_normal();
  SurvivalState state = SurvivalState::Alive;

  // Initial capture is observed by construction; the covariate is recorded
  // unless thinned by the missingness mechanism.
  hist.captures.push_back(CaptureCode::SeenAlive);
  bool record = !rng.next_bernoulli(cfg.missingness);
  hist.covariates.emplace_back(record ? std::optional<double>(y) : std::nullopt);
  if (truth) {
    truth->covariates = {y};
    truth->states = {state};
  }

  for (int t = g + 1; t <= T; ++t) {
    // Latent step t-1 -> t.
    if (state == SurvivalState::Alive) {
      int group_prev = cfg.group_of_age(t - 1 - g);
      double phi = survival_prob(cfg.beta0[std::min<std::size_t>(group_prev, cfg.beta0.size() - 1)],
                                 cfg.beta1[std::min<std::size_t>(group_prev, cfg.beta1.size() - 1)],
                                 y);
      if (rng.next_bernoulli(phi)) {
        y = kernel_step(cfg.kernel, y, t, cfg.group_of_age(t - g), rng);
      } else {
        state = SurvivalState::RecentDead;
      }
    } else {
      state = SurvivalState::LongDead;
    }
    if (truth) {
      truth->states.push_back(state);
      if (state == SurvivalState::Alive) truth->covariates.push_back(y);
    }

    // Observation at t.
    if (state == SurvivalState::Alive) {
      if (rng.next_bernoulli(cfg.p_at(t))) {
        hist.captures.push_back(CaptureCode::SeenAlive);
        bool rec = !rng.next_bernoulli(cfg.missingness);
        hist.covariates.emplace_back(rec ? std::optional<double>(y) : std::nullopt);
      } else {
        hist.captures.push_back(CaptureCode::NotSeen);
        hist.covariates.emplace_back(std::nullopt);
      }
    } else if (state == SurvivalState::RecentDead && rng.next_bernoulli(cfg.lambda_at(t))) {
      hist.captures.push_back(CaptureCode::RecoveredDead);
      hist.covariates.emplace_back(std::nullopt);
    } else {
      hist.captures.push_back(CaptureCode::NotSeen);
      hist.covariates.emplace_back(std::nullopt);
    }
  }
  return hist;
}

SimulatedDataset simulate_dataset(const SimConfig& cfg) {
  SimulatedDataset out;
  out.histories.resize(cfg.n_individuals);
  out.truths.resize(cfg.n_individuals);
  for (int i = 0; i < cfg.n_individuals; ++i) {
    out.histories[i] = simulate_individual(cfg, i, &out.truths[i]);
  }
  return out;
}

namespace {

double quantile(std::vector<double>& values, double q) {
  // Linear interpolation between order statistics.
  std::sort(values.begin(), values.end());
  double pos = q * (values.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, values.size() - 1);
  double frac = pos - lo;
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace

std::vector<QuantileRow> covariate_quantiles(const KernelParams& kernel,
                                             const InitialDistribution& initial,
                                             const std::vector<double>& beta0,
                                             const std::vector<double>& beta1,
                                             const std::vector<int>& age_boundaries,
                                             const std::vector<int>& ages, int n_paths,
                                             std::uint64_t seed) {
  if (n_paths < 1) throw std::invalid_argument("quantiles: need at least one path");
  if (ages.empty()) throw std::invalid_argument("quantiles: no ages requested");
  const int max_age = *std::max_element(ages.begin(), ages.end());

  auto group_of = [&](int age) {
    int g = 0;
    for (int b : age_boundaries) {
      if (age >= b) ++g;
    }
    return std::min<std::size_t>(g, beta0.size() - 1);
  };

  // values[a] collects covariate values of paths still alive at age a.
  std::vector<std::vector<double>> values(max_age + 1);
  for (int path = 0; path < n_paths; ++path) {
    PhiloxRng rng(seed, static_cast<std::uint64_t>(path) + 0x71a9u);
    double y = initial.mean + initial.sd * rng.next_normal();
    for (int age = 0; age <= max_age; ++age) {
      values[age].push_back(y);
      std::size_t g = group_of(age);
      double phi = survival_prob(beta0[g], beta1[g], y);
      if (!rng.next_bernoulli(phi)) break;
      y = kernel_step(kernel, y, age + 1, static_cast<int>(group_of(age + 1)), rng);
    }
  }

  std::vector<QuantileRow> rows;
  for (int age : ages) {
    QuantileRow row;
    row.age = age;
    auto& v = values[age];
    row.n_alive = static_cast<int>(v.size());
    if (!v.empty()) {
      row.q05 = quantile(v, 0.05);
      row.q50 = quantile(v, 0.50);
      row.q95 = quantile(v, 0.95);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mrr
