#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrr/inference.hpp"
#include "mrr/io.hpp"
#include "mrr/simulate.hpp"

namespace mrr {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitOptimization = 4;
constexpr int kExitInternal = 5;

std::string f17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string f4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  return out;
}

// Dataset occasions are authoritative; a config that disagrees is an error
// rather than a silent truncation.
void reconcile_occasions(ModelSpec& spec, int data_T, bool config_set_occasions) {
  if (config_set_occasions && spec.n_occasions != data_T) {
    throw ValidationError("config declares " + std::to_string(spec.n_occasions) +
                          " occasions but the dataset has " + std::to_string(data_T));
  }
  spec.n_occasions = data_T;
}

struct CommonFitArgs {
  std::string data_path;
  std::string config_path;
  int m_override = 0;
  int threads = 1;
};

void add_common_fit_args(CLI::App* cmd, CommonFitArgs& args) {
  cmd->add_option("data", args.data_path, "dataset CSV (id,occasion,capture,covariate)")
      ->required();
  cmd->add_option("--config", args.config_path, "JSON model/grid/optimizer config");
  cmd->add_option("--m", args.m_override, "override the number of grid intervals")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
}

struct LoadedProblem {
  Config config;
  std::string config_text;  // echoed into result files
  std::vector<CaptureHistory> histories;
  CovariateGrid grid{0.0, 1.0, 2};
};

LoadedProblem load_problem(const CommonFitArgs& args) {
  LoadedProblem p;
  if (!args.config_path.empty()) {
    p.config_text = read_text_file(args.config_path);
    p.config = parse_config(p.config_text);
  }
  p.histories = read_dataset_file(args.data_path);
  int data_T = summarize(p.histories).n_occasions;
  reconcile_occasions(p.config.model, data_T, p.config.model.n_occasions > 0);
  if (args.m_override > 0) p.config.grid.m = args.m_override;
  p.grid = p.config.grid.build(p.histories);
  p.config.fit.n_threads = args.threads;
  p.config.fit.optimizer.n_threads = args.threads;
  return p;
}

int cmd_fit(const CommonFitArgs& args, const std::string& out_path, bool no_ci) {
  LoadedProblem p = load_problem(args);
  p.config.fit.compute_ci = !no_ci;
  ParameterVector init = default_init(p.config.model, p.histories);
  FitResult result = fit(p.histories, p.config.model, p.grid, init, p.config.fit);
  std::cout << format_human_summary(result, p.config.model);
  if (!out_path.empty()) write_fit_result(out_path, result, p.config.model, p.config_text);
  return result.convergence == Convergence::LineSearchFail ? kExitOptimization : kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 std::uint64_t seed, bool seed_set) {
  Config cfg = load_config(config_path);
  if (!cfg.has_simulation) {
    throw ParseError("config " + config_path + " has no 'simulation' section");
  }
  if (seed_set) cfg.simulation.seed = seed;
  SimulatedDataset ds = simulate_dataset(cfg.simulation);
  write_dataset_file(out_path, ds.histories);
  std::cout << format_summary(summarize(ds.histories));
  return kExitOk;
}

int cmd_summary(const std::string& data_path) {
  std::cout << format_summary(summarize(read_dataset_file(data_path)));
  return kExitOk;
}

int cmd_grid_study(const CommonFitArgs& args, const std::vector<int>& m_list,
                   const std::string& out_path) {
  std::ostringstream csv;
  csv << "m,loglik,aic,runtime_seconds\n";
  bool any_failed = false;
  for (int m : m_list) {
    CommonFitArgs a = args;
    a.m_override = m;
    LoadedProblem p = load_problem(a);
    p.config.fit.compute_ci = false;
    ParameterVector init = default_init(p.config.model, p.histories);
    FitResult r = fit(p.histories, p.config.model, p.grid, init, p.config.fit);
    if (r.convergence == Convergence::LineSearchFail) any_failed = true;
    csv << m << ',' << f17(r.max_loglik) << ',' << f17(r.aic) << ','
        << f17(r.runtime_seconds) << '\n';
    std::cout << "m=" << m << "  loglik=" << f4(r.max_loglik) << "  aic=" << f4(r.aic)
              << "  runtime=" << f4(r.runtime_seconds) << "s\n";
  }
  if (!out_path.empty()) open_output(out_path) << csv.str();
  return any_failed ? kExitOptimization : kExitOk;
}

int cmd_select(const std::vector<std::string>& result_paths) {
  std::vector<FitResult> fits;
  for (const auto& path : result_paths) fits.push_back(read_fit_result(path).fit);
  std::vector<AicRow> rows = delta_aic(fits);
  std::cout << "model\tloglik\tq\taic\tdelta_aic\n";
  for (const auto& r : rows) {
    std::cout << result_paths[r.fit_index] << '\t' << f4(r.loglik) << '\t' << r.q << '\t'
              << f4(r.aic) << '\t' << f4(r.delta_aic) << '\n';
  }
  return kExitOk;
}

int cmd_curves(const std::string& result_path, int group, double y_min, double y_max,
               int n_points, const std::string& out_path) {
  LoadedFit loaded = read_fit_result(result_path);
  if (group < 0 || group >= loaded.spec.n_groups()) {
    throw ValidationError("group index out of range (model has " +
                          std::to_string(loaded.spec.n_groups()) + " age groups)");
  }
  auto points = survival_curve(loaded.fit, group, y_min, y_max, n_points);
  std::ostringstream csv;
  csv << "y,phi,lower,upper\n";
  for (const auto& pt : points) {
    csv << f17(pt.y) << ',' << f17(pt.phi) << ',' << (pt.lower ? f17(*pt.lower) : "NA") << ','
        << (pt.upper ? f17(*pt.upper) : "NA") << '\n';
  }
  if (!out_path.empty()) {
    open_output(out_path) << csv.str();
    std::cout << "wrote " << points.size() << " curve points to " << out_path << '\n';
  } else {
    std::cout << csv.str();
  }
  return kExitOk;
}

int cmd_quantiles(const std::string& result_path, int max_age, int n_paths, std::uint64_t seed,
                  const std::string& out_path) {
  LoadedFit loaded = read_fit_result(result_path);
  ResolvedParams rp = resolve(loaded.spec, loaded.fit.estimates);
  if (rp.condition_initial) {
    throw ValidationError(
        "covariate quantiles need an estimated initial distribution; this fit conditioned on "
        "the observed initial covariate");
  }
  KernelParams kernel;
  kernel.family = rp.family;
  kernel.eta = rp.eta;
  kernel.mu = rp.mu;
  kernel.sigma = rp.sigma;
  kernel.level = rp.level;
  kernel.gamma = rp.gamma;
  kernel.period = rp.sine_period;
  InitialDistribution initial{false, rp.init_mean, rp.init_sd};
  std::vector<int> ages(max_age + 1);
  for (int a = 0; a <= max_age; ++a) ages[a] = a;
  auto rows = covariate_quantiles(kernel, initial, rp.beta0, rp.beta1,
                                  loaded.spec.age_boundaries, ages, n_paths, seed);
  std::ostringstream csv;
  csv << "age,n_alive,q05,q50,q95\n";
  for (const auto& r : rows) {
    csv << r.age << ',' << r.n_alive << ',' << (r.q05 ? f17(*r.q05) : "NA") << ','
        << (r.q50 ? f17(*r.q50) : "NA") << ',' << (r.q95 ? f17(*r.q95) : "NA") << '\n';
  }
  if (!out_path.empty()) {
    open_output(out_path) << csv.str();
    std::cout << "wrote " << rows.size() << " quantile rows to " << out_path << '\n';
  } else {
    std::cout << csv.str();
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{
      "Mark-recapture-recovery models with a continuous individual covariate,\n"
      "fitted by a discretized hidden Markov likelihood."};
  app.require_subcommand(1);

  CommonFitArgs fit_args;
  std::string fit_out;
  bool fit_no_ci = false;
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model to a dataset");
  add_common_fit_args(fit_cmd, fit_args);
  fit_cmd->add_option("--out", fit_out, "write the fit result as JSON");
  fit_cmd->add_flag("--no-ci", fit_no_ci, "skip Hessian-based confidence intervals");

  std::string sim_config, sim_out;
  std::uint64_t sim_seed = 0;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "generate a synthetic dataset");
  sim_cmd->add_option("--config", sim_config, "config with a 'simulation' section")->required();
  sim_cmd->add_option("--out", sim_out, "output dataset CSV")->required();
  CLI::Option* sim_seed_opt = sim_cmd->add_option("--seed", sim_seed, "override the config seed");

  std::string summary_data;
  CLI::App* summary_cmd = app.add_subcommand("summary", "describe a dataset");
  summary_cmd->add_option("data", summary_data, "dataset CSV")->required();

  CommonFitArgs grid_args;
  std::vector<int> grid_m_list;
  std::string grid_out;
  CLI::App* grid_cmd =
      app.add_subcommand("grid-study", "refit across grid resolutions to check convergence");
  add_common_fit_args(grid_cmd, grid_args);
  grid_cmd->add_option("--m-list", grid_m_list, "grid interval counts to try")
      ->required()
      ->delimiter(',');

  grid_cmd->add_option("--out", grid_out, "write the study as CSV");

  std::vector<std::string> select_paths;
  CLI::App* select_cmd = app.add_subcommand("select", "rank fit results by AIC");
  select_cmd->add_option("results", select_paths, "fit result JSON files")
      ->required()
      ->expected(-2);

  std::string curves_result, curves_out;
  int curves_group = 0, curves_points = 101;
  double curves_ymin = 0, curves_ymax = 1;
  CLI::App* curves_cmd =
      app.add_subcommand("curves", "survival probability vs covariate with 95% bands");
  curves_cmd->add_option("result", curves_result, "fit result JSON")->required();
  curves_cmd->add_option("--group", curves_group, "age group index");
  curves_cmd->add_option("--y-min", curves_ymin, "covariate range start")->required();
  curves_cmd->add_option("--y-max", curves_ymax, "covariate range end")->required();
  curves_cmd->add_option("--points", curves_points, "number of curve points")
      ->check(CLI::PositiveNumber);
  curves_cmd->add_option("--out", curves_out, "write the curve as CSV");

  std::string quant_result, quant_out;
  int quant_max_age = 10, quant_paths = 100000;
  std::uint64_t quant_seed = 0;
  CLI::App* quant_cmd =
      app.add_subcommand("quantiles", "model-derived covariate quantiles among survivors by age");
  quant_cmd->add_option("result", quant_result, "fit result JSON")->required();
  quant_cmd->add_option("--max-age", quant_max_age, "last age to report")
      ->check(CLI::NonNegativeNumber);
  quant_cmd->add_option("--paths", quant_paths, "simulated paths")->check(CLI::PositiveNumber);
  quant_cmd->add_option("--seed", quant_seed, "simulation seed");
  quant_cmd->add_option("--out", quant_out, "write the quantiles as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit_args, fit_out, fit_no_ci);
    if (sim_cmd->parsed()) {
      return cmd_simulate(sim_config, sim_out, sim_seed, sim_seed_opt->count() > 0);
    }
    if (summary_cmd->parsed()) return cmd_summary(summary_data);
    if (grid_cmd->parsed()) return cmd_grid_study(grid_args, grid_m_list, grid_out);
    if (select_cmd->parsed()) return cmd_select(select_paths);
    if (curves_cmd->parsed()) {
      return cmd_curves(curves_result, curves_group, curves_ymin, curves_ymax, curves_points,
                        curves_out);
    }
    if (quant_cmd->parsed()) {
      return cmd_quantiles(quant_result, quant_max_age, quant_paths, quant_seed, quant_out);
    }
    return kExitInternal;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ImpossibleHistory& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace mrr
