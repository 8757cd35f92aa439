#include "mrr/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace mrr {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<CaptureHistory> read_dataset(std::istream& in) {
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw ParseError("dataset: empty file");
  ++line_no;
  if (split_csv(line) != std::vector<std::string>{"id", "occasion", "capture", "covariate"}) {
    throw ParseError("dataset line 1: expected header 'id,occasion,capture,covariate'");
  }

  struct Row {
    int occasion;
    CaptureCode capture;
    std::optional<double> covariate;
  };
  std::map<std::string, std::vector<Row>> rows;  // insertion order handled below
  std::vector<std::string> order;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    const std::string where = "dataset line " + std::to_string(line_no);
    if (fields.size() != 4) throw ParseError(where + ": expected 4 columns");
    Row row;
    try {
      std::size_t pos = 0;
      row.occasion = std::stoi(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParseError(where + ": bad occasion '" + fields[1] + "'");
    }
    if (fields[2] != "0" && fields[2] != "1" && fields[2] != "2") {
      throw ParseError(where + ": capture code must be 0, 1 or 2");
    }
    row.capture = static_cast<CaptureCode>(fields[2][0] - '0');
    if (fields[3] == "NA" || fields[3].empty()) {
      row.covariate = std::nullopt;
    } else {
      try {
        std::size_t pos = 0;
        row.covariate = std::stod(fields[3], &pos);
        if (pos != fields[3].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ParseError(where + ": bad covariate '" + fields[3] + "'");
      }
    }
    auto [it, inserted] = rows.try_emplace(fields[0]);
    if (inserted) order.push_back(fields[0]);
    for (const auto& r : it->second) {
      if (r.occasion == row.occasion) {
        throw ParseError(where + ": duplicate (id, occasion) for '" + fields[0] + "'");
      }
    }
    it->second.push_back(row);
  }
  if (order.empty()) throw ParseError("dataset: no data rows");

  int T = 0;
  for (const auto& [id, rs] : rows) {
    for (const auto& r : rs) T = std::max(T, r.occasion);
  }

  std::vector<CaptureHistory> histories;
  for (const auto& id : order) {
    auto rs = rows[id];
    std::sort(rs.begin(), rs.end(), [](const Row& a, const Row& b) { return a.occasion < b.occasion; });
    CaptureHistory h;
    h.id = id;
    h.n_occasions = T;
    h.first_capture = rs.front().occasion;
    int expected = h.first_capture;
    for (const auto& r : rs) {
      if (r.occasion != expected) {
        throw ValidationError("history " + id + ": missing row for occasion " +
                              std::to_string(expected));
      }
      ++expected;
      h.captures.push_back(r.capture);
      h.covariates.push_back(r.covariate);
    }
    if (expected != T + 1) {
      throw ValidationError("history " + id + ": rows end before occasion " + std::to_string(T));
    }
    h.validate();
    histories.push_back(std::move(h));
  }
  return histories;
}

std::vector<CaptureHistory> read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const std::vector<CaptureHistory>& histories) {
  out << "id,occasion,capture,covariate\n";
  for (const auto& h : histories) {
    for (int t = h.first_capture; t <= h.n_occasions; ++t) {
      out << h.id << ',' << t << ',' << static_cast<int>(h.capture_at(t)) << ',';
      if (h.covariate_observed(t)) {
        out << fmt17(*h.covariate_at(t));
      } else {
        out << "NA";
      }
      out << '\n';
    }
  }
}

void write_dataset_file(const std::string& path, const std::vector<CaptureHistory>& histories) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  write_dataset(out, histories);
}

DatasetSummary summarize(const std::vector<CaptureHistory>& histories) {
  DatasetSummary s;
  s.n_individuals = static_cast<int>(histories.size());
  long observations = 0, live_captures = 0, missing = 0;
  for (const auto& h : histories) {
    s.n_occasions = std::max(s.n_occasions, h.n_occasions);
    for (int t = h.first_capture; t <= h.n_occasions; ++t) {
      CaptureCode x = h.capture_at(t);
      if (x != CaptureCode::NotSeen) ++observations;
      if (x == CaptureCode::SeenAlive) {
        ++live_captures;
        if (!h.covariate_observed(t)) ++missing;
      }
      if (x == CaptureCode::RecoveredDead) ++s.recovered_dead;
    }
  }
  if (s.n_individuals > 0) s.mean_observations = double(observations) / s.n_individuals;
  if (live_captures > 0) s.missing_covariate_fraction = double(missing) / live_captures;
  return s;
}

std::string format_summary(const DatasetSummary& s) {
  std::ostringstream out;
  out << "individuals: " << s.n_individuals << "\n"
      << "occasions: " << s.n_occasions << "\n"
      << "mean observations per individual: " << fmt4(s.mean_observations) << "\n"
      << "recovered dead: " << s.recovered_dead << "\n"
      << "missing covariate fraction (live captures): " << fmt4(s.missing_covariate_fraction)
      << "\n";
  return out.str();
}

CovariateGrid GridConfig::build(const std::vector<CaptureHistory>& histories) const {
  if (explicit_range) return CovariateGrid(lower, upper, m);
  std::vector<double> observed;
  for (const auto& h : histories) {
    for (int t = h.first_capture; t <= h.n_occasions; ++t) {
      if (h.covariate_observed(t)) observed.push_back(*h.covariate_at(t));
    }
  }
  return CovariateGrid::from_data_range(observed, m);
}

namespace {

[[noreturn]] void bad_config(const std::string& path, const std::string& what) {
  throw ParseError("config " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; }) == allowed.end()) {
      bad_config(path, "unknown key '" + it.key() + "'");
    }
  }
}

KernelFamily parse_family(const std::string& s, const std::string& path) {
  if (s == "mean_reverting_ar") return KernelFamily::MeanRevertingAR;
  if (s == "random_walk_drift") return KernelFamily::RandomWalkDrift;
  if (s == "sine_trend_ar") return KernelFamily::SineTrendAR;
  if (s == "iid_normal") return KernelFamily::IidNormal;
  bad_config(path, "unknown kernel family '" + s + "'");
}

std::string family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::MeanRevertingAR: return "mean_reverting_ar";
    case KernelFamily::RandomWalkDrift: return "random_walk_drift";
    case KernelFamily::SineTrendAR: return "sine_trend_ar";
    case KernelFamily::IidNormal: return "iid_normal";
  }
  return "?";
}

std::vector<double> number_or_array(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) bad_config(path, "expected numbers");
      out.push_back(x.get<double>());
    }
    if (out.empty()) bad_config(path, "empty array");
    return out;
  }
  bad_config(path, "expected a number or array of numbers");
}

ModelSpec parse_model(const json& m) {
  check_keys(m, "model",
             {"occasions", "kernel", "kernel_per_group", "age_boundaries", "group_names",
              "sine_period", "p", "lambda", "initial"});
  ModelSpec spec;
  if (m.contains("occasions")) spec.n_occasions = m.at("occasions").get<int>();
  if (m.contains("kernel")) spec.kernel = parse_family(m.at("kernel").get<std::string>(), "model.kernel");
  if (m.contains("kernel_per_group")) spec.kernel_per_group = m.at("kernel_per_group").get<bool>();
  if (m.contains("age_boundaries")) {
    spec.age_boundaries = m.at("age_boundaries").get<std::vector<int>>();
    if (!std::is_sorted(spec.age_boundaries.begin(), spec.age_boundaries.end()) ||
        std::adjacent_find(spec.age_boundaries.begin(), spec.age_boundaries.end()) !=
            spec.age_boundaries.end()) {
      bad_config("model.age_boundaries", "must be strictly increasing");
    }
  }
  if (m.contains("group_names")) {
    spec.group_names = m.at("group_names").get<std::vector<std::string>>();
    if (static_cast<int>(spec.group_names.size()) != spec.n_groups()) {
      bad_config("model.group_names", "size must match number of age groups");
    }
  }
  if (m.contains("sine_period")) spec.sine_period = m.at("sine_period").get<double>();
  auto structure = [&](const char* key, TimeStructure& out) {
    if (!m.contains(key)) return;
    std::string s = m.at(key).get<std::string>();
    if (s == "constant") out = TimeStructure::Constant;
    else if (s == "time_dependent") out = TimeStructure::TimeDependent;
    else bad_config(std::string("model.") + key, "expected 'constant' or 'time_dependent'");
  };
  structure("p", spec.p_structure);
  structure("lambda", spec.lambda_structure);
  if (m.contains("initial")) {
    std::string s = m.at("initial").get<std::string>();
    if (s == "estimated_normal") spec.initial_mode = InitialMode::EstimatedNormal;
    else if (s == "condition") spec.initial_mode = InitialMode::ConditionOnObserved;
    else bad_config("model.initial", "expected 'estimated_normal' or 'condition'");
  }
  if (spec.kernel == KernelFamily::SineTrendAR && !(spec.sine_period > 0)) {
    bad_config("model.sine_period", "required (and positive) for the sine-trend kernel");
  }
  return spec;
}

json model_to_json(const ModelSpec& spec) {
  json m;
  m["occasions"] = spec.n_occasions;
  m["kernel"] = family_name(spec.kernel);
  m["kernel_per_group"] = spec.kernel_per_group;
  m["age_boundaries"] = spec.age_boundaries;
  if (!spec.group_names.empty()) m["group_names"] = spec.group_names;
  if (spec.kernel == KernelFamily::SineTrendAR) m["sine_period"] = spec.sine_period;
  m["p"] = spec.p_structure == TimeStructure::Constant ? "constant" : "time_dependent";
  m["lambda"] = spec.lambda_structure == TimeStructure::Constant ? "constant" : "time_dependent";
  m["initial"] =
      spec.initial_mode == InitialMode::EstimatedNormal ? "estimated_normal" : "condition";
  return m;
}

KernelParams parse_kernel_params(const json& k) {
  check_keys(k, "simulation.kernel",
             {"family", "eta", "mu", "sigma", "level", "gamma", "period", "mean", "sd"});
  KernelParams out;
  out.family = parse_family(k.at("family").get<std::string>(), "simulation.kernel.family");
  if (k.contains("eta")) out.eta = number_or_array(k.at("eta"), "simulation.kernel.eta");
  if (k.contains("mu")) out.mu = number_or_array(k.at("mu"), "simulation.kernel.mu");
  if (k.contains("mean")) out.mu = number_or_array(k.at("mean"), "simulation.kernel.mean");
  if (k.contains("sigma")) out.sigma = number_or_array(k.at("sigma"), "simulation.kernel.sigma");
  if (k.contains("sd")) out.sigma = number_or_array(k.at("sd"), "simulation.kernel.sd");
  if (k.contains("level")) out.level = k.at("level").get<double>();
  if (k.contains("gamma")) out.gamma = k.at("gamma").get<double>();
  if (k.contains("period")) out.period = k.at("period").get<double>();
  if (out.sigma.empty()) bad_config("simulation.kernel", "sigma (or sd) is required");
  for (double s : out.sigma) {
    if (!(s > 0)) bad_config("simulation.kernel.sigma", "must be positive");
  }
  for (double e : out.eta) {
    if (!(e > 0 && e < 1)) bad_config("simulation.kernel.eta", "must lie in (0,1)");
  }
  if (out.family == KernelFamily::SineTrendAR && !(out.period > 0)) {
    bad_config("simulation.kernel.period", "must be positive");
  }
  return out;
}

SimConfig parse_simulation(const json& s) {
  check_keys(s, "simulation",
             {"individuals", "occasions", "age_boundaries", "beta0", "beta1", "kernel", "initial",
              "p", "lambda", "missingness", "seed"});
  SimConfig cfg;
  if (s.contains("individuals")) cfg.n_individuals = s.at("individuals").get<int>();
  if (s.contains("occasions")) cfg.n_occasions = s.at("occasions").get<int>();
  if (s.contains("age_boundaries")) cfg.age_boundaries = s.at("age_boundaries").get<std::vector<int>>();
  if (s.contains("beta0")) cfg.beta0 = number_or_array(s.at("beta0"), "simulation.beta0");
  if (s.contains("beta1")) cfg.beta1 = number_or_array(s.at("beta1"), "simulation.beta1");
  if (s.contains("kernel")) cfg.kernel = parse_kernel_params(s.at("kernel"));
  if (s.contains("initial")) {
    const json& init = s.at("initial");
    check_keys(init, "simulation.initial", {"mean", "sd"});
    cfg.initial.mean = init.at("mean").get<double>();
    cfg.initial.sd = init.at("sd").get<double>();
    if (!(cfg.initial.sd > 0)) bad_config("simulation.initial.sd", "must be positive");
  }
  if (s.contains("p")) cfg.p = number_or_array(s.at("p"), "simulation.p");
  if (s.contains("lambda")) cfg.lambda = number_or_array(s.at("lambda"), "simulation.lambda");
  for (double v : cfg.p) {
    if (v < 0 || v > 1) bad_config("simulation.p", "probabilities must lie in [0,1]");
  }
  for (double v : cfg.lambda) {
    if (v < 0 || v > 1) bad_config("simulation.lambda", "probabilities must lie in [0,1]");
  }
  if (s.contains("missingness")) {
    cfg.missingness = s.at("missingness").get<double>();
    if (cfg.missingness < 0 || cfg.missingness > 1) {
      bad_config("simulation.missingness", "must lie in [0,1]");
    }
  }
  if (s.contains("seed")) cfg.seed = s.at("seed").get<std::uint64_t>();
  if (cfg.n_individuals < 1 || cfg.n_occasions < 2) {
    bad_config("simulation", "need individuals >= 1 and occasions >= 2");
  }
  return cfg;
}

}  // namespace

Config parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  check_keys(root, "(top level)", {"model", "grid", "optimizer", "simulation"});
  Config cfg;
  if (root.contains("model")) cfg.model = parse_model(root.at("model"));
  if (root.contains("grid")) {
    const json& g = root.at("grid");
    check_keys(g, "grid", {"m", "range"});
    if (g.contains("m")) cfg.grid.m = g.at("m").get<int>();
    if (cfg.grid.m < 2) bad_config("grid.m", "need at least 2 intervals");
    if (g.contains("range")) {
      auto r = g.at("range").get<std::vector<double>>();
      if (r.size() != 2 || !(r[0] < r[1])) bad_config("grid.range", "expected [lower, upper]");
      cfg.grid.explicit_range = true;
      cfg.grid.lower = r[0];
      cfg.grid.upper = r[1];
    }
  }
  if (root.contains("optimizer")) {
    const json& o = root.at("optimizer");
    check_keys(o, "optimizer", {"tolerance", "max_iterations", "multistart"});
    if (o.contains("tolerance")) cfg.fit.optimizer.gradient_tol = o.at("tolerance").get<double>();
    if (o.contains("max_iterations")) {
      cfg.fit.optimizer.max_iterations = o.at("max_iterations").get<int>();
    }
    if (o.contains("multistart")) cfg.fit.multistart = o.at("multistart").get<int>();
  }
  if (root.contains("simulation")) {
    cfg.simulation = parse_simulation(root.at("simulation"));
    cfg.has_simulation = true;
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void write_fit_result(const std::string& path, const FitResult& fit, const ModelSpec& spec,
                      const std::string& config_echo) {
  json out;
  out["format_version"] = 1;
  out["model"] = model_to_json(spec);
  out["config"] = config_echo;
  out["loglik"] = fit.max_loglik;
  out["aic"] = fit.aic;
  out["q"] = fit.n_params;
  out["m"] = fit.grid_m;
  char checksum[20];
  std::snprintf(checksum, sizeof checksum, "%016llx",
                static_cast<unsigned long long>(fit.data_checksum));
  out["data_checksum"] = checksum;
  out["runtime_seconds"] = fit.runtime_seconds;
  switch (fit.convergence) {
    case Convergence::Converged: out["convergence"] = "converged"; break;
    case Convergence::MaxIter: out["convergence"] = "max_iterations"; break;
    case Convergence::LineSearchFail: out["convergence"] = "line_search_fail"; break;
  }
  json params = json::array();
  for (int i = 0; i < fit.n_params; ++i) {
    const auto& p = fit.estimates[i];
    json e;
    e["name"] = p.name;
    switch (p.constraint) {
      case Constraint::Probability: e["constraint"] = "probability"; break;
      case Constraint::Positive: e["constraint"] = "positive"; break;
      case Constraint::Unconstrained: e["constraint"] = "unconstrained"; break;
    }
    e["estimate"] = p.value;
    if (!fit.boundary.empty()) e["boundary"] = static_cast<bool>(fit.boundary[i]);
    if (i < static_cast<int>(fit.se_natural.size()) && fit.se_natural[i]) {
      e["se"] = *fit.se_natural[i];
    }
    if (i < static_cast<int>(fit.ci95.size()) && fit.ci95[i]) {
      e["ci95"] = {fit.ci95[i]->lower, fit.ci95[i]->upper};
    }
    params.push_back(e);
  }
  out["parameters"] = params;
  if (!fit.covariance.empty()) out["covariance"] = fit.covariance;

  std::ofstream f(path);
  if (!f) throw ParseError("cannot open output file: " + path);
  f << out.dump(1) << "\n";
}

LoadedFit read_fit_result(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open fit result file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("fit result: ") + e.what());
  }
  if (!root.contains("format_version") || root.at("format_version").get<int>() != 1) {
    throw ParseError("fit result: unsupported format version");
  }
  LoadedFit out;
  out.spec = parse_model(root.at("model"));
  FitResult& fit = out.fit;
  fit.max_loglik = root.at("loglik").get<double>();
  fit.aic = root.at("aic").get<double>();
  fit.n_params = root.at("q").get<int>();
  fit.grid_m = root.at("m").get<int>();
  fit.data_checksum = std::stoull(root.at("data_checksum").get<std::string>(), nullptr, 16);
  std::vector<Parameter> params;
  fit.boundary.clear();
  for (const auto& e : root.at("parameters")) {
    Parameter p;
    p.name = e.at("name").get<std::string>();
    std::string c = e.at("constraint").get<std::string>();
    p.constraint = c == "probability" ? Constraint::Probability
                   : c == "positive"  ? Constraint::Positive
                                      : Constraint::Unconstrained;
    p.value = e.at("estimate").get<double>();
    params.push_back(p);
    fit.boundary.push_back(e.contains("boundary") && e.at("boundary").get<bool>());
  }
  fit.estimates = ParameterVector(std::move(params));
  if (root.contains("covariance")) {
    fit.covariance = root.at("covariance").get<std::vector<double>>();
  }
  return out;
}

std::string format_human_summary(const FitResult& fit, const ModelSpec& spec) {
  (void)spec;
  std::ostringstream out;
  out << "log-likelihood: " << fmt4(fit.max_loglik) << "  q: " << fit.n_params
      << "  AIC: " << fmt4(fit.aic) << "  m: " << fit.grid_m << "\n";
  out << "convergence: "
      << (fit.convergence == Convergence::Converged       ? "converged"
          : fit.convergence == Convergence::MaxIter       ? "max iterations"
                                                          : "line search failed")
      << "  runtime: " << fmt4(fit.runtime_seconds) << " s\n";
  for (int i = 0; i < fit.n_params; ++i) {
    const auto& p = fit.estimates[i];
    out << "  " << p.name << " = " << fmt4(p.value);
    if (i < static_cast<int>(fit.se_natural.size()) && fit.se_natural[i]) {
      out << " (se " << fmt4(*fit.se_natural[i]) << ")";
    }
    if (i < static_cast<int>(fit.ci95.size()) && fit.ci95[i]) {
      out << " [" << fmt4(fit.ci95[i]->lower) << ", " << fmt4(fit.ci95[i]->upper) << "]";
    }
    if (!fit.boundary.empty() && fit.boundary[i]) out << " (boundary)";
    out << "\n";
  }
  return out.str();
}

}  // namespace mrr
