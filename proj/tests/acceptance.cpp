// Acceptance gate: eight criteria, one pass/fail line each. Exit status is
// the number of failed criteria. Scales follow the reference study design
// (scenario replicates at N=500, T=10, m=40); set MRR_ACCEPTANCE_SMOKE=1
// for a reduced variant of the replicate-heavy criteria (10 replicates,
// m=20) when a quick end-to-end check is all that is needed.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "mrr/inference.hpp"
#include "mrr/likelihood.hpp"
#include "mrr/rng.hpp"
#include "mrr/simulate.hpp"
#include "mrr/survival.hpp"

using namespace mrr;
using Clock = std::chrono::steady_clock;

namespace {

bool smoke_mode() {
  const char* env = std::getenv("MRR_ACCEPTANCE_SMOKE");
  return env != nullptr && std::strcmp(env, "0") != 0;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
  std::printf("criterion %d (%s): %s — %s\n", criterion, name, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared fixtures: the simulation-study design (N=500, T=10, sine-trend AR
// covariate, logistic survival beta0=-3, beta1=0.2, initial N(15, 2^2)).

SimConfig scenario_config(double p, double lambda, std::uint64_t seed) {
  SimConfig cfg;
  cfg.p = {p};
  cfg.lambda = {lambda};
  cfg.seed = seed;
  return cfg;
}

ModelSpec spec_hmm_c() {
  ModelSpec spec;
  spec.n_occasions = 10;
  spec.kernel = KernelFamily::SineTrendAR;
  spec.sine_period = 10;
  return spec;
}

ModelSpec spec_hmm_m1() {
  ModelSpec spec;
  spec.n_occasions = 10;
  spec.kernel = KernelFamily::MeanRevertingAR;
  return spec;
}

ModelSpec spec_hmm_m2() {
  ModelSpec spec;
  spec.n_occasions = 10;
  spec.kernel = KernelFamily::IidNormal;
  return spec;
}

CovariateGrid data_grid(const std::vector<CaptureHistory>& data, int m) {
  std::vector<double> obs;
  for (const auto& h : data) {
    for (int t = h.first_capture; t <= h.n_occasions; ++t) {
      if (h.covariate_observed(t)) obs.push_back(*h.covariate_at(t));
    }
  }
  return CovariateGrid::from_data_range(obs, m);
}

FitResult fit_scenario(const std::vector<CaptureHistory>& data, const ModelSpec& spec, int m,
                       bool with_ci) {
  FitOptions opts;
  opts.compute_ci = with_ci;
  return fit(data, spec, data_grid(data, m), default_init(spec, data), opts);
}

// ---------------------------------------------------------------------------
// Criterion 1: matrix-product likelihood vs direct enumeration.

CaptureHistory random_tiny_history(PhiloxRng& rng, int g, int T, const CovariateGrid& grid) {
  CaptureHistory h;
  h.id = "rand";
  h.first_capture = g;
  h.n_occasions = T;
  bool dead = false;
  for (int t = g; t <= T; ++t) {
    int code;
    if (t == g) {
      code = 1;
    } else if (dead) {
      code = 0;
    } else {
      code = rng.next_int(0, 2);
      if (code == 2) dead = true;
    }
    h.captures.push_back(static_cast<CaptureCode>(code));
    if (code == 1 && rng.next_bernoulli(0.5)) {
      h.covariates.emplace_back(grid.lower() +
                                0.999 * rng.next_uniform() * (grid.upper() - grid.lower()));
    } else {
      h.covariates.emplace_back(std::nullopt);
    }
  }
  h.validate();
  return h;
}

void criterion_1() {
  auto start = Clock::now();
  PhiloxRng rng(314159, 0);
  double worst = 0;
  int n = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    int g = rng.next_int(1, 2);
    int T = std::max(2, g + rng.next_int(0, 3));
    ModelSpec spec;
    spec.n_occasions = T;
    spec.kernel = static_cast<KernelFamily>(rng.next_int(0, 3));
    if (spec.kernel == KernelFamily::SineTrendAR) spec.sine_period = 10;
    ParameterVector pv = make_parameter_vector(spec);
    auto maybe_set = [&](const char* name, double value) {
      if (pv.index_of(name) >= 0) pv.set(name, value);
    };
    pv.set("beta0", -1.0 + 2.0 * rng.next_uniform());
    pv.set("beta1", 0.3 * rng.next_uniform());
    pv.set("p", 0.2 + 0.7 * rng.next_uniform());
    pv.set("lambda", 0.2 + 0.7 * rng.next_uniform());
    maybe_set("eta", 0.2 + 0.6 * rng.next_uniform());
    // mu is a level for the mean-reverting family but a per-step drift for
    // the random walk; keep the drift small so the process stays on-grid.
    if (spec.kernel == KernelFamily::RandomWalkDrift) {
      maybe_set("mu", -0.5 + rng.next_uniform());
    } else {
      maybe_set("mu", 12.0 + 6.0 * rng.next_uniform());
    }
    maybe_set("sigma", 0.8 + rng.next_uniform());
    maybe_set("level", 14.0 + 2.0 * rng.next_uniform());
    maybe_set("gamma", rng.next_uniform());
    maybe_set("mean", 13.0 + 4.0 * rng.next_uniform());
    maybe_set("sd", 1.0 + rng.next_uniform());
    maybe_set("init_mean", 14.0 + 2.0 * rng.next_uniform());
    maybe_set("init_sd", 1.5 + rng.next_uniform());
    CovariateGrid grid(8.0 + rng.next_uniform(), 22.0 + rng.next_uniform(), rng.next_int(2, 4));
    CaptureHistory h = random_tiny_history(rng, g, T, grid);

    ResolvedParams params = resolve(spec, pv);
    double brute = brute_force_likelihood(h, params, spec, grid);
    LikelihoodEngine engine(spec, grid);
    double matrix = std::exp(engine.log_likelihood_individual(h, params));
    worst = std::max(worst, std::abs(matrix - brute) / brute);
    ++n;
  }
  double elapsed = seconds_since(start);
  bool pass = worst < 1e-10 && elapsed < 60.0;
  report(1, "oracle equivalence", pass,
         fmt("%d instances, worst relative gap %.2e, %.1f s", n, worst, elapsed));
}

// ---------------------------------------------------------------------------
// Criterion 2: collapse to the no-covariate closed form when beta1 = 0.

void criterion_2() {
  ModelSpec spec;
  spec.n_occasions = 2;
  spec.kernel = KernelFamily::MeanRevertingAR;
  ParameterVector pv = make_parameter_vector(spec);
  pv.set("beta0", logit(0.8));
  pv.set("beta1", 0.0);
  pv.set("p", 0.9);
  pv.set("lambda", 0.5);
  pv.set("eta", 0.5);
  pv.set("mu", 15.0);
  pv.set("sigma", 1.0);
  pv.set("init_mean", 15.0);
  pv.set("init_sd", 2.0);
  ResolvedParams params = resolve(spec, pv);
  // +-10 sigma of every reachable value of the covariate process.
  CovariateGrid grid(15.0 - 25.0, 15.0 + 25.0, 64);
  LikelihoodEngine engine(spec, grid);

  auto make = [](std::vector<int> codes) {
    CaptureHistory h;
    h.id = "h";
    h.first_capture = 1;
    h.n_occasions = 2;
    for (int c : codes) h.captures.push_back(static_cast<CaptureCode>(c));
    h.covariates.assign(2, std::nullopt);
    h.validate();
    return h;
  };

  double worst = 0;
  const std::pair<std::vector<int>, double> cases[] = {
      {{1, 1}, 0.72}, {{1, 0}, 0.18}, {{1, 2}, 0.10}};
  for (const auto& [codes, value] : cases) {
    double got = engine.log_likelihood_individual(make(codes), params);
    worst = std::max(worst, std::abs(got - std::log(value)));
  }
  report(2, "closed-form collapse", worst < 1e-6,
         fmt("worst |log-likelihood gap| %.2e on the 0.72 / 0.18 / 0.10 histories", worst));
}

// ---------------------------------------------------------------------------
// Criterion 3: simulation-study reproduction (scenarios 1 and 4).

struct ReplicateStats {
  double rb0_sum = 0, rb1_sum = 0;
  int n = 0;
  int covered0 = 0, covered1 = 0, with_ci = 0;
  double width0_sum = 0;
};

ReplicateStats run_replicates(double p, double lambda, int n_reps, int m, bool with_ci,
                              const ModelSpec& spec, std::uint64_t seed_base) {
  ReplicateStats stats;
  for (int rep = 0; rep < n_reps; ++rep) {
    auto data = simulate_dataset(scenario_config(p, lambda, seed_base + rep)).histories;
    FitResult res = fit_scenario(data, spec, m, with_ci);
    double b0 = res.estimates.value_of("beta0");
    double b1 = res.estimates.value_of("beta1");
    // Signed bias normalized by the parameter magnitude, so a negative
    // value always means underestimation.
    stats.rb0_sum += (b0 - (-3.0)) / 3.0;
    stats.rb1_sum += (b1 - 0.2) / 0.2;
    ++stats.n;
    if (with_ci) {
      int i0 = res.estimates.index_of("beta0");
      int i1 = res.estimates.index_of("beta1");
      if (res.ci95[i0] && res.ci95[i1]) {
        ++stats.with_ci;
        if (res.ci95[i0]->lower <= -3.0 && -3.0 <= res.ci95[i0]->upper) ++stats.covered0;
        if (res.ci95[i1]->lower <= 0.2 && 0.2 <= res.ci95[i1]->upper) ++stats.covered1;
        stats.width0_sum += res.ci95[i0]->upper - res.ci95[i0]->lower;
      }
    }
  }
  return stats;
}

void criterion_3(bool smoke) {
  auto start = Clock::now();
  int n_reps = smoke ? 10 : 100;
  int m = smoke ? 20 : 40;
  // Reference targets: zero mean relative bias, coverage 0.93-0.95, and a
  // scenario-4 mean CI width of 1.92 for beta0. Replicate-count-aware
  // tolerances; the smoke variant uses proportionally looser ones.
  double bias_tol = smoke ? 0.15 : 0.05;
  double cov_lo = smoke ? 0.70 : 0.88, cov_hi = smoke ? 1.00 : 0.99;
  double width_rel_tol = smoke ? 0.35 : 0.25;

  ModelSpec spec = spec_hmm_c();
  ReplicateStats s1 = run_replicates(0.95, 0.95, n_reps, m, true, spec, 1000);
  ReplicateStats s4 = run_replicates(0.30, 0.30, n_reps, m, true, spec, 2000);

  auto mean = [](double sum, int n) { return sum / n; };
  double rb0_1 = mean(s1.rb0_sum, s1.n), rb1_1 = mean(s1.rb1_sum, s1.n);
  double rb0_4 = mean(s4.rb0_sum, s4.n), rb1_4 = mean(s4.rb1_sum, s4.n);
  double cov0_1 = double(s1.covered0) / s1.with_ci, cov1_1 = double(s1.covered1) / s1.with_ci;
  double cov0_4 = double(s4.covered0) / s4.with_ci, cov1_4 = double(s4.covered1) / s4.with_ci;
  double width0_4 = s4.width0_sum / s4.with_ci;

  bool pass = std::abs(rb0_1) <= bias_tol && std::abs(rb1_1) <= bias_tol &&
              std::abs(rb0_4) <= bias_tol && std::abs(rb1_4) <= bias_tol &&
              cov0_1 >= cov_lo && cov0_1 <= cov_hi && cov1_1 >= cov_lo && cov1_1 <= cov_hi &&
              cov0_4 >= cov_lo && cov0_4 <= cov_hi && cov1_4 >= cov_lo && cov1_4 <= cov_hi &&
              std::abs(width0_4 - 1.92) <= width_rel_tol * 1.92 &&
              s1.with_ci >= (9 * n_reps) / 10 && s4.with_ci >= (9 * n_reps) / 10;

  report(3, "simulation study", pass,
         fmt("%d reps, m=%d | scen1: RB(b0)=%.3f RB(b1)=%.3f cov=(%.2f,%.2f) | "
             "scen4: RB(b0)=%.3f RB(b1)=%.3f cov=(%.2f,%.2f) CW(b0)=%.2f (target 1.92) | %.0f s",
             n_reps, m, rb0_1, rb1_1, cov0_1, cov1_1, rb0_4, rb1_4, cov0_4, cov1_4, width0_4,
             seconds_since(start)));
}

// ---------------------------------------------------------------------------
// Criterion 4: misspecified iid-normal covariate model on sparse data.

void criterion_4(bool smoke) {
  auto start = Clock::now();
  int n_reps = smoke ? 10 : 100;
  int m = smoke ? 20 : 40;
  ModelSpec spec = spec_hmm_m2();
  ReplicateStats s = run_replicates(0.30, 0.30, n_reps, m, false, spec, 3000);
  double rb0 = s.rb0_sum / s.n;
  // Reference value: mean relative bias of beta0 around -0.09 under this
  // misspecification. Accept a clearly negative bias of that order.
  bool pass = rb0 >= -0.21 && rb0 <= -0.01;
  report(4, "misspecification bias", pass,
         fmt("%d reps, m=%d, mean RB(b0) = %.3f (target about -0.09) | %.0f s", n_reps, m, rb0,
             seconds_since(start)));
}

// ---------------------------------------------------------------------------
// Criterion 5: AIC prefers the correctly specified covariate process.

void criterion_5(bool smoke) {
  auto start = Clock::now();
  int n_reps = smoke ? 10 : 50;
  int need = smoke ? 9 : 48;
  int m = smoke ? 20 : 40;
  int correct_first = 0;
  for (int rep = 0; rep < n_reps; ++rep) {
    auto data = simulate_dataset(scenario_config(0.95, 0.95, 4000 + rep)).histories;
    FitResult c = fit_scenario(data, spec_hmm_c(), m, false);
    FitResult m1 = fit_scenario(data, spec_hmm_m1(), m, false);
    FitResult m2 = fit_scenario(data, spec_hmm_m2(), m, false);
    if (c.aic < m1.aic && c.aic < m2.aic) ++correct_first;
  }
  bool pass = correct_first >= need;
  report(5, "AIC model selection", pass,
         fmt("correct covariate model ranked first in %d/%d runs (need >= %d) | %.0f s",
             correct_first, n_reps, need, seconds_since(start)));
}

// ---------------------------------------------------------------------------
// Criterion 6: grid refinement converges and coarse estimates agree.

void criterion_6() {
  auto start = Clock::now();
  auto data = simulate_dataset(scenario_config(0.95, 0.95, 5000)).histories;
  ModelSpec spec = spec_hmm_c();

  std::vector<int> ms{10, 20, 40, 80, 150};
  std::vector<double> lls;
  FitResult fit20, fit150;
  for (int m : ms) {
    FitResult res = fit_scenario(data, spec, m, m == 150);
    lls.push_back(res.max_loglik);
    if (m == 20) fit20 = res;
    if (m == 150) fit150 = res;
  }
  double ll150 = lls.back();
  bool decreasing = true;
  for (std::size_t i = 0; i + 2 < lls.size(); ++i) {
    if (!(std::abs(lls[i] - ll150) > std::abs(lls[i + 1] - ll150))) decreasing = false;
  }
  bool close = true;
  int compared = 0;
  for (int i = 0; i < fit150.n_params; ++i) {
    if (!fit150.se_natural[i]) continue;
    ++compared;
    double gap = std::abs(fit20.estimates[i].value - fit150.estimates[i].value);
    if (gap > 2.0 * *fit150.se_natural[i]) close = false;
  }
  bool pass = decreasing && close && compared >= 8;
  report(6, "grid convergence", pass,
         fmt("|llk(m)-llk(150)| = %.3g/%.3g/%.3g/%.3g decreasing=%s; m=20 estimates within "
             "2 SE of m=150 for all %d comparable parameters: %s | %.0f s",
             std::abs(lls[0] - ll150), std::abs(lls[1] - ll150), std::abs(lls[2] - ll150),
             std::abs(lls[3] - ll150), decreasing ? "yes" : "no", compared,
             close ? "yes" : "no", seconds_since(start)));
}

// ---------------------------------------------------------------------------
// Criterion 7: diffusive vs nondiffusive quantile bands.

void criterion_7() {
  auto start = Clock::now();
  std::vector<int> ages;
  for (int a = 0; a <= 12; ++a) ages.push_back(a);
  // Survival independent of the covariate so the survivor filter does not
  // bias the covariate distribution.
  std::vector<double> beta0{logit(0.95)}, beta1{0.0};
  InitialDistribution init{false, 20.0, 0.5};

  auto rw = covariate_quantiles(KernelParams::random_walk(0.0, 1.0), init, beta0, beta1, {},
                                ages, 200000, 71);
  auto width = [](const QuantileRow& r) { return *r.q95 - *r.q05; };
  bool grows = width(rw[12]) > width(rw[6]) && width(rw[6]) > width(rw[2]) &&
               width(rw[12]) > 1.25 * width(rw[6]);

  double eta = 0.4, sigma = 1.0;
  auto ar = covariate_quantiles(KernelParams::mean_reverting(eta, 20.0, sigma), init, beta0,
                                beta1, {}, ages, 200000, 72);
  double stationary_sd = sigma / std::sqrt(1.0 - (1.0 - eta) * (1.0 - eta));
  double z95 = 1.6448536269514722;
  double stationary_width = 2.0 * z95 * stationary_sd;
  double rel_gap = std::abs(width(ar[12]) - stationary_width) / stationary_width;

  bool pass = grows && rel_gap < 0.05;
  report(7, "diffusive vs nondiffusive quantiles", pass,
         fmt("random-walk widths %.2f -> %.2f -> %.2f; AR width at age 12 = %.3f vs analytic "
             "%.3f (gap %.1f%%) | %.0f s",
             width(rw[2]), width(rw[6]), width(rw[12]), width(ar[12]), stationary_width,
             100 * rel_gap, seconds_since(start)));
}

// ---------------------------------------------------------------------------
// Criterion 8: end-to-end run at the scale of the field application.

void criterion_8() {
  auto start = Clock::now();
  SimConfig cfg;
  cfg.n_individuals = 1344;
  cfg.n_occasions = 25;
  cfg.age_boundaries = {1, 2, 7};
  cfg.beta0 = {-1.2, 0.2, 1.2, 0.0};
  cfg.beta1 = {0.05, 0.05, 0.05, 0.05};
  cfg.kernel = KernelParams::mean_reverting(0.5, 20.0, 1.5);
  cfg.kernel.eta = {0.6, 0.5, 0.4, 0.4};
  cfg.kernel.mu = {16.0, 22.0, 26.0, 24.0};
  cfg.kernel.sigma = {2.0, 1.5, 1.2, 1.2};
  cfg.initial = {false, 14.0, 2.0};
  cfg.p = {0.5};
  cfg.lambda = {0.4};
  cfg.missingness = 0.38;
  cfg.seed = 8080;

  auto data = simulate_dataset(cfg).histories;
  for (const auto& h : data) h.validate();

  ModelSpec spec;
  spec.n_occasions = 25;
  spec.age_boundaries = {1, 2, 7};
  spec.kernel = KernelFamily::MeanRevertingAR;
  spec.kernel_per_group = true;
  spec.p_structure = TimeStructure::TimeDependent;
  spec.lambda_structure = TimeStructure::TimeDependent;

  CovariateGrid grid = data_grid(data, 50);
  FitOptions opts;
  opts.compute_ci = false;
  opts.optimizer.max_iterations = 300;

  bool pass = false;
  std::string detail;
  try {
    FitResult res = fit(data, spec, grid, default_init(spec, data), opts);
    double elapsed = seconds_since(start);
    LikelihoodEngine engine(spec, grid);
    double recheck = engine.log_likelihood_dataset(data, resolve(spec, res.estimates));
    bool invariants = res.n_params == 70 && std::isfinite(res.max_loglik) &&
                      std::abs(res.aic - (2.0 * res.n_params - 2.0 * res.max_loglik)) < 1e-9 &&
                      std::abs(recheck - res.max_loglik) < 1e-9 &&
                      res.convergence != Convergence::LineSearchFail && elapsed < 8 * 3600;
    pass = invariants;
    detail = fmt("1344 individuals, T=25, 38%% missingness, q=%d, m=50: loglik %.2f, %s, %.0f s",
                 res.n_params, res.max_loglik,
                 res.convergence == Convergence::Converged ? "converged" : "iteration cap",
                 elapsed);
  } catch (const std::exception& e) {
    detail = std::string("failed: ") + e.what();
  }
  report(8, "application-scale end-to-end", pass, detail);
}

}  // namespace

int main() {
  bool smoke = smoke_mode();
  std::printf("acceptance suite (%s scale)\n", smoke ? "smoke" : "full");
  std::fflush(stdout);
  criterion_1();
  criterion_2();
  criterion_3(smoke);
  criterion_4(smoke);
  criterion_5(smoke);
  criterion_6();
  criterion_7();
  criterion_8();
  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}
