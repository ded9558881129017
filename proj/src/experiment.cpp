#include "mfsel/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

#include "mfsel/control.hpp"
#include "mfsel/ensemble.hpp"
#include "mfsel/error.hpp"
#include "mfsel/ode.hpp"
#include "mfsel/potential.hpp"
#include "mfsel/rng.hpp"
#include "mfsel/stats.hpp"

namespace mfsel {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorKind::kConfig, what);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& raw, const std::string& key) {
  const std::string s = trim(raw);
  if (s == "inf" || s == "+inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double x = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, x);
  if (ec != std::errc() || ptr != end) {
    config_error("'" + key + "': expected a number, got '" + s + "'");
  }
  return x;
}

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number(item, key));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- config

ScenarioConfig ScenarioConfig::parse(const std::string& text) {
  ScenarioConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      config_error("line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) config_error("line " + std::to_string(number) + ": empty key");
    cfg.set(key, trim(t.substr(eq + 1)));
  }
  return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

void ScenarioConfig::set(const std::string& key, const std::string& value) {
  entries_[trim(key)] = trim(value);
}

void ScenarioConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) config_error("expected key=value, got " + assignment);
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

bool ScenarioConfig::has(const std::string& key) const {
  return entries_.count(key) != 0;
}

std::string ScenarioConfig::get(const std::string& key,
                                const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double ScenarioConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_number(get(key), key) : fallback;
}

std::size_t ScenarioConfig::get_size(const std::string& key,
                                     std::size_t fallback) const {
  if (!has(key)) return fallback;
  const double x = parse_number(get(key), key);
  if (!(x >= 0.0) || x != std::floor(x) || x > 1e15) {
    config_error("'" + key + "': expected a non-negative integer");
  }
  return static_cast<std::size_t>(x);
}

std::uint64_t ScenarioConfig::get_u64(const std::string& key,
                                      std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get(key);
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    config_error("'" + key + "': expected an unsigned integer");
  }
  return x;
}

bool ScenarioConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  config_error("'" + key + "': expected true or false");
}

std::vector<double> ScenarioConfig::get_list(const std::string& key,
                                             const std::vector<double>& fallback) const {
  return has(key) ? parse_list(get(key), key) : fallback;
}

std::string ScenarioConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t ScenarioConfig::hash() const {
  const std::string c = canonical();
  return fnv1a64(c.data(), c.size());
}

// ---------------------------------------------------------------- catalogue

namespace {

struct CatalogueEntry {
  std::string name;
  std::vector<double> args;
};

CatalogueEntry parse_entry(const std::string& text) {
  static const std::regex re(R"(^\s*([a-z_]+)\s*(?:\(([^)]*)\))?\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) config_error("bad model expression '" + text + "'");
  CatalogueEntry e{m[1], {}};
  if (m[2].matched) e.args = parse_list(m[2], "model");
  return e;
}

void expect_args(const CatalogueEntry& e, std::size_t lo, std::size_t hi) {
  if (e.args.size() < lo || e.args.size() > hi) {
    config_error("model " + e.name + " takes " + std::to_string(lo) + " to " +
                 std::to_string(hi) + " arguments");
  }
}

PotentialPtr quadratic_from(const CatalogueEntry& e, std::size_t dim) {
  expect_args(e, 1, 2);
  Vec k = Vec::Zero(static_cast<Eigen::Index>(dim));
  if (e.args.size() == 2) k.setConstant(e.args[1]);
  return make_quadratic(dim, e.args[0], k);
}

}  // namespace

ModelSpec model_from_config(const ScenarioConfig& cfg) {
  const std::string expr = cfg.get("model");
  if (expr.empty()) config_error("missing 'model'");
  const auto e = parse_entry(expr);
  const double T = cfg.get_double("model.T", 1.0);
  const double b = cfg.get_double("model.b", 0.0);
  const double sigma = cfg.get_double("model.sigma", 1.0);

  PotentialPtr g;
  RunningCost running = RunningCost::kFull;
  std::size_t dim = static_cast<std::size_t>(cfg.get_size("model.dim", 1));
  try {
    if (e.name == "quadratic") {
      g = quadratic_from(e, dim);
    } else if (e.name == "logcosh") {
      expect_args(e, 1, 1);
      g = make_logcosh_terminal(e.args[0]);
      running = RunningCost::kControlOnly;
    } else if (e.name == "delarue") {
      expect_args(e, 1, 2);
      g = make_delarue_terminal(b, T, e.args[0], e.args.size() == 2 ? e.args[1] : -1.0);
    } else if (e.name == "radial_logcosh") {
      expect_args(e, 1, 2);
      const double d = e.args.size() == 2 ? e.args[1] : 2.0;
      if (d != 1.0 && d != 2.0) config_error("radial_logcosh supports d = 1 or 2");
      g = make_radial_terminal(logcosh_profile(e.args[0]), static_cast<std::size_t>(d));
      running = RunningCost::kControlOnly;
    } else {
      config_error("unknown model '" + e.name + "'");
    }
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::kConfig) throw;
    config_error("model " + expr + ": " + err.what());
  }
  if (cfg.has("model.running_cost")) {
    const std::string r = cfg.get("model.running_cost");
    if (r == "full") {
      running = RunningCost::kFull;
    } else if (r == "control_only") {
      running = RunningCost::kControlOnly;
    } else {
      config_error("model.running_cost must be full or control_only");
    }
  }
  ModelSpec spec;
  try {
    spec = make_model(expr, g, running, sigma, T, b);
    if (cfg.has("model.f")) {
      const auto fe = parse_entry(cfg.get("model.f"));
      if (fe.name != "quadratic") config_error("model.f supports quadratic(c[, k])");
      spec.f = quadratic_from(fe, spec.dim);
    }
    const auto nu = cfg.get_list("model.nu0", {});
    if (!nu.empty()) {
      if (nu.size() != spec.dim) config_error("model.nu0 must have d entries");
      for (std::size_t i = 0; i < nu.size(); ++i) {
        spec.nu0(static_cast<Eigen::Index>(i)) = nu[i];
      }
    }
    spec.xi.stddev = cfg.get_double("model.xi_stddev", 1.0);
    spec.validate();
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::kConfig) throw;
    config_error(std::string("model: ") + err.what());
  }
  return spec;
}

SpaceGrid grid_from_config(const ScenarioConfig& cfg, const ModelSpec& spec) {
  const double L = cfg.has("grid.L") ? cfg.get_double("grid.L", 0.0)
                                     : default_half_width(spec);
  const std::size_t nodes = cfg.get_size("grid.nodes", spec.dim == 2 ? 201 : 601);
  if (!(L > 0.0) || nodes < 3 || nodes % 2 == 0) {
    config_error("grid needs L > 0 and an odd node count >= 3");
  }
  return SpaceGrid::symmetric(spec.dim, L, nodes);
}

// ---------------------------------------------------------------- scenarios

namespace {

// Fills scenario defaults for keys the user did not set.
ScenarioConfig with_defaults(const ScenarioConfig& in) {
  ScenarioConfig cfg = in;
  const std::string s = cfg.get("scenario");
  auto def = [&cfg](const std::string& k, const std::string& v) {
    if (!cfg.has(k)) cfg.set(k, v);
  };
  if (s == "E1") {
    def("model", "quadratic(1)");
    def("model.nu0", "1");
    def("grid.L", "4");
    def("grid.nodes", "401");
    def("run.N", "10,100,1000");
    def("run.M", "500");
    def("run.noiseless", "true");
  } else if (s == "E2") {
    def("model", "logcosh(4)");
    def("grid.L", "3");
    def("run.N", "25,100,400");
  } else if (s == "E3") {
    def("model", "delarue(0.1)");
    def("grid.nodes", "801");
    def("run.N", "25,100,400");
  } else if (s == "E4") {
    def("model", "radial_logcosh(4,2)");
    def("grid.L", "3");
    def("grid.nodes", "201");
    def("time.steps", "200");
    def("time.substeps", "5");
    def("run.N", "200,400");
  } else if (s == "E5") {
    def("model", "logcosh(4)");
    def("grid.L", "3.5");
    def("grid.nodes", "701");
    def("run.eps", "0.5,0.25,0.1,0.05");
    def("run.probes", "0,0.5");
  } else if (s == "E6") {
    def("model", "logcosh(4)");
    def("grid.L", "3");
    def("run.N", "25,100,400");
    def("run.probes", "0,0.5");
  } else {
    config_error("unknown scenario '" + s + "' (expected E1 to E6)");
  }
  def("run.M", "2000");
  def("seed", "20240501");
  return cfg;
}

std::size_t paths_of(const ScenarioConfig& cfg) {
  const std::size_t m = cfg.get_size("run.M", 2000);
  if (m < 100) config_error("run.M must be >= 100 for statistical scenarios");
  return m;
}

std::vector<double> increasing_list(const ScenarioConfig& cfg, const std::string& key) {
  auto v = cfg.get_list(key, {});
  if (v.empty()) config_error("'" + key + "' must list at least one value");
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) config_error("'" + key + "' must be strictly increasing");
  }
  for (double x : v) {
    if (!(x >= 1.0) || std::isinf(x)) config_error("'" + key + "' needs finite N >= 1");
  }
  return v;
}

std::vector<double> eps_list(const ScenarioConfig& cfg) {
  auto v = cfg.get_list("run.eps", {});
  if (v.empty()) config_error("'run.eps' must list at least one value");
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) config_error("'run.eps' must be strictly decreasing");
  }
  for (double x : v) {
    if (!(x > 0.0) || std::isinf(x)) config_error("'run.eps' values must be > 0");
  }
  return v;
}

TimeGrid time_grid(const ScenarioConfig& cfg, const ModelSpec& spec) {
  const std::size_t steps = cfg.get_size("time.steps", spec.dim == 2 ? 200 : 1000);
  if (steps == 0) config_error("time.steps must be >= 1");
  return TimeGrid(0.0, spec.T, steps);
}

FieldSolverOptions solver_options(const ScenarioConfig& cfg, const RunOptions& run) {
  FieldSolverOptions o;
  o.threads = run.threads;
  o.substeps = cfg.get_size("solver.substeps", 0);
  const std::string t = cfg.get("solver.transport", "isotropic");
  if (t == "isotropic") {
    o.transport = Transport::kIsotropic;
  } else if (t == "upwind") {
    o.transport = Transport::kAxisUpwind;
  } else {
    config_error("solver.transport must be isotropic or upwind");
  }
  return o;
}

EnsembleOptions ensemble_options(const ScenarioConfig& cfg, const RunOptions& run,
                                 std::uint64_t stream_base) {
  EnsembleOptions o;
  o.paths = paths_of(cfg);
  o.seed = cfg.get_u64("seed", 0);
  o.stream_base = stream_base;
  o.threads = run.threads;
  o.substeps = cfg.get_size("time.substeps", 1);
  if (o.substeps == 0) config_error("time.substeps must be >= 1");
  return o;
}

Vec probe_point(const ModelSpec& spec, double probe) {
  Vec nu = Vec::Zero(static_cast<Eigen::Index>(spec.dim));
  nu(0) = probe;
  return nu;
}

// Terminal positions of the deterministic minimizers, equally weighted.
DiscreteLaw minimizer_law(const ModelSpec& spec, const Vec& nu0) {
  const auto set = enumerate_stationary(spec, 0.0, nu0);
  DiscreteLaw law;
  for (const auto& s : set.solutions) {
    if (s.classification != Classification::kMinimizer) continue;
    law.atoms.push_back(s.m.back()(0));
  }
  std::sort(law.atoms.begin(), law.atoms.end());
  law.weights.assign(law.atoms.size(), 1.0 / static_cast<double>(law.atoms.size()));
  return law;
}

struct Metrics {
  std::vector<std::string> columns;
  std::vector<double> values;

  explicit Metrics(std::vector<std::string> cols)
      : columns(std::move(cols)), values(columns.size(), kNaN) {}
  void set(const std::string& name, double v) {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::logic_error("unknown column " + name);
    values[static_cast<std::size_t>(it - columns.begin())] = v;
  }
};

void sign_statistics(Metrics& out, const std::vector<double>& x) {
  std::size_t pos = 0;
  for (double v : x) pos += v > 0.0 ? 1 : 0;
  const double n = static_cast<double>(x.size());
  const double half = 3.0 * std::sqrt(0.25 / n);
  out.set("positive_fraction", static_cast<double>(pos) / n);
  out.set("band_low", 0.5 - half);
  out.set("band_high", 0.5 + half);
}

void moment_statistics(Metrics& out, const std::vector<double>& x) {
  const auto mv = mean_variance(x);
  out.set("mean_mT", mv.mean);
  out.set("var_mT", mv.variance);
  if (std::find(out.columns.begin(), out.columns.end(), "se_mT") != out.columns.end()) {
    out.set("se_mT", std::sqrt(mv.variance / static_cast<double>(x.size())));
  }
}

DecouplingField field_for(const ScenarioConfig& cfg, const ModelSpec& spec,
                          const RunOptions& run, double n_players) {
  return solve_field_N(spec, n_players, grid_from_config(cfg, spec),
                       time_grid(cfg, spec), solver_options(cfg, run));
}

// Mean and covariance of the linear SDE dm = ((b - P) m - r) dt + s dB
// (first component), RK4 with the oracle sampled on a doubled grid.
std::pair<double, double> gaussian_oracle(const ModelSpec& spec, double n_players,
                                          double noise, const TimeGrid& grid) {
  const TimeGrid fine(grid.t0(), grid.T(), 2 * grid.steps());
  const auto o = riccati_field_oracle(spec, n_players, fine);
  const auto d = static_cast<Eigen::Index>(spec.dim);
  Vec mu = spec.nu0;
  Mat cov = Mat::Zero(d, d);
  const Mat noise_cov = noise * noise * Mat::Identity(d, d);
  auto mean_rhs = [&](std::size_t k, const Vec& m) -> Vec {
    return (spec.b - o.P[k]) * m - o.r[k];
  };
  auto cov_rhs = [&](std::size_t k, const Mat& c) -> Mat {
    const Mat a = spec.b - o.P[k];
    return a * c + c * a.transpose() + noise_cov;
  };
  const double h = grid.dt();
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const std::size_t lo = 2 * k;
    const std::size_t mid = lo + 1;
    const std::size_t hi = lo + 2;
    const Vec a1 = mean_rhs(lo, mu);
    const Vec a2 = mean_rhs(mid, mu + 0.5 * h * a1);
    const Vec a3 = mean_rhs(mid, mu + 0.5 * h * a2);
    const Vec a4 = mean_rhs(hi, mu + h * a3);
    mu += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    const Mat c1 = cov_rhs(lo, cov);
    const Mat c2 = cov_rhs(mid, cov + 0.5 * h * c1);
    const Mat c3 = cov_rhs(mid, cov + 0.5 * h * c2);
    const Mat c4 = cov_rhs(hi, cov + h * c3);
    cov += (h / 6.0) * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
  }
  return {mu(0), cov(0, 0)};
}

// Deterministic limit flow m' = (b - P) m - r on the ensemble grid.
std::vector<double> oracle_flow(const ModelSpec& spec, const TimeGrid& grid) {
  const TimeGrid fine(grid.t0(), grid.T(), 2 * grid.steps());
  const auto o = riccati_field_oracle(spec, INFINITY, fine);
  Vec m = spec.nu0;
  std::vector<double> out{m(0)};
  auto rhs = [&](std::size_t k, const Vec& x) -> Vec {
    return (spec.b - o.P[k]) * x - o.r[k];
  };
  const double h = grid.dt();
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const Vec a1 = rhs(2 * k, m);
    const Vec a2 = rhs(2 * k + 1, m + 0.5 * h * a1);
    const Vec a3 = rhs(2 * k + 1, m + 0.5 * h * a2);
    const Vec a4 = rhs(2 * k + 2, m + h * a3);
    m += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    out.push_back(m(0));
  }
  return out;
}

bool is_quadratic(const ModelSpec& spec) {
  return spec.g->quadratic_form().has_value() && spec.f->quadratic_form().has_value();
}

// ---- per-scenario rows

ReportRow finish(const RowSpec& rs, std::size_t index, const ScenarioConfig& cfg,
                 Metrics&& m) {
  ReportRow r;
  r.index = index;
  r.kind = rs.kind;
  r.parameter = rs.parameter;
  r.probe = rs.probe;
  r.seed = cfg.get_u64("seed", 0);
  r.stream_base = rs.stream_base;
  r.config_hash = cfg.hash();
  r.metrics = std::move(m.values);
  return r;
}

ReportRow row_E1(const ScenarioConfig& cfg, const RowSpec& rs, std::size_t index,
                 const RunOptions& run) {
  const ModelSpec spec = model_from_config(cfg);
  if (!is_quadratic(spec) || spec.running != RunningCost::kFull) {
    config_error("E1 needs a convex model: quadratic f and g with the full running cost");
  }
  Metrics m(scenario_columns("E1"));
  const auto field = field_for(cfg, spec, run, rs.parameter);
  auto opts = ensemble_options(cfg, run, rs.stream_base);
  opts.keep_paths = true;
  if (rs.kind == "noiseless") {
    opts.noise = false;
    opts.deterministic_initial = true;
    opts.paths = 1;
  }
  const auto e = simulate_ensemble(spec, field, opts);
  const auto ref = oracle_flow(spec, e.grid);
  double sup = 0.0;
  const std::size_t n = e.grid.size();
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t p = 0; p < e.paths; ++p) {
      acc += std::abs(e.m[(p * n + k) * e.dim] - ref[k]);
    }
    sup = std::max(sup, acc / static_cast<double>(e.paths));
  }
  m.set("sup_error", sup);
  moment_statistics(m, e.terminal_component(0));
  m.set("exit_fraction", e.exit_fraction);
  const auto cost = summarize_cost(e);
  m.set("cost_mean", cost.mean);
  m.set("cost_se", cost.standard_error);
  const auto set = enumerate_stationary(spec, 0.0, spec.nu0);
  m.set("oc_cost", set.min_cost);
  return finish(rs, index, cfg, std::move(m));
}

ReportRow row_symmetric(const std::string& scenario, const ScenarioConfig& cfg,
                        const RowSpec& rs, std::size_t index, const RunOptions& run) {
  ModelSpec spec = model_from_config(cfg);
  Metrics m(scenario_columns(scenario));
  const auto field = field_for(cfg, spec, run, rs.parameter);
  const auto e = simulate_ensemble(spec, field, ensemble_options(cfg, run, rs.stream_base));
  const auto x = e.terminal_component(0);
  sign_statistics(m, x);
  moment_statistics(m, x);
  const auto law = minimizer_law(spec, spec.nu0);
  m.set("w1_target", wasserstein1_1d(x, law));
  m.set("target_atom", law.atoms.back());
  m.set("exit_fraction", e.exit_fraction);
  return finish(rs, index, cfg, std::move(m));
}

ReportRow row_E3_stationary(const ScenarioConfig& cfg, const RowSpec& rs,
                            std::size_t index) {
  const ModelSpec spec = model_from_config(cfg);
  Metrics m(scenario_columns("E3"));
  const auto set = enumerate_stationary(spec, 0.0, spec.nu0);
  const auto j = static_cast<std::size_t>(rs.probe);
  if (j >= set.solutions.size()) {
    throw Error(ErrorKind::kNoStationaryPoint, "stationary point index out of range");
  }
  const auto& s = set.solutions[j];
  const double delta = parse_entry(cfg.get("model")).args.at(0);
  const auto curves = delarue_riccati(spec.b(0, 0), s.grid, delta);
  const double mt = s.m.back()(0);
  const double sign = std::abs(mt) < 1e-6 ? 0.0 : (mt > 0.0 ? 1.0 : -1.0);
  double err = 0.0;
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    err = std::max(err, std::abs(s.m[k](0) - sign * curves.upper_trajectory(k)));
  }
  m.set("eta0", s.eta0(0));
  m.set("m_T", mt);
  m.set("cost", s.cost);
  m.set("minimizer", s.classification == Classification::kMinimizer ? 1.0 : 0.0);
  m.set("trajectory_error", err);
  return finish(rs, index, cfg, std::move(m));
}

ReportRow row_E4(const ScenarioConfig& cfg, const RowSpec& rs, std::size_t index,
                 const RunOptions& run) {
  const ModelSpec spec = model_from_config(cfg);
  if (spec.dim != 2) config_error("E4 needs a two-dimensional model");
  Metrics m(scenario_columns("E4"));
  const auto field = field_for(cfg, spec, run, rs.parameter);
  auto opts = ensemble_options(cfg, run, rs.stream_base);
  const auto e = simulate_ensemble(spec, field, opts);
  std::vector<double> angle(e.paths);
  std::vector<double> radius(e.paths);
  for (std::size_t p = 0; p < e.paths; ++p) {
    const double x = e.terminal[2 * p];
    const double y = e.terminal[2 * p + 1];
    double th = std::atan2(y, x);
    if (th < 0.0) th += 2.0 * M_PI;
    angle[p] = th;
    radius[p] = std::hypot(x, y);
  }
  m.set("exit_fraction", e.exit_fraction);
  m.set("median_radius", median(radius));
  m.set("mean_radius", mean_variance(radius).mean);
  const auto sm = minimize_static_U(spec, 0.0, spec.nu0);
  m.set("target_radius", sm.minimizers.front().norm() * spec.T);
  if (rs.kind == "ensemble") {
    const auto k = circular_uniformity(angle);
    m.set("kuiper_V", k.statistic);
    m.set("kuiper_p", k.p_value);
    return finish(rs, index, cfg, std::move(m));
  }
  // Rotation sanity: quarter-turn equivariance of the field on nodes and of
  // the ensemble under rotated Brownian inputs.
  const auto& g = field.space();
  bool exact = g.is_square();
  const std::size_t n = g.axis(0).nodes;
  for (std::size_t k = 0; exact && k < field.time().size(); ++k) {
    for (std::size_t i = 0; exact && i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double a0 = field.node_value(k, i, j, 0);
        const double a1 = field.node_value(k, i, j, 1);
        if (field.node_value(k, n - 1 - j, i, 0) != -a1 ||
            field.node_value(k, n - 1 - j, i, 1) != a0) {
          exact = false;
          break;
        }
      }
    }
  }
  Mat rot(2, 2);
  rot << 0.0, -1.0, 1.0, 0.0;
  opts.input_rotation = rot;
  const auto r = simulate_ensemble(spec, field, opts);
  double dev = 0.0;
  for (std::size_t p = 0; p < e.paths; ++p) {
    const double x = e.terminal[2 * p];
    const double y = e.terminal[2 * p + 1];
    dev = std::max(dev, std::hypot(r.terminal[2 * p] + y, r.terminal[2 * p + 1] - x));
  }
  m.set("rotation_deviation", dev);
  m.set("field_equivariant", exact ? 1.0 : 0.0);
  return finish(rs, index, cfg, std::move(m));
}

ReportRow row_E5(const ScenarioConfig& cfg, const RowSpec& rs, std::size_t index,
                 const RunOptions& run) {
  ModelSpec spec = model_from_config(cfg);
  spec.nu0 = probe_point(spec, rs.probe);
  Metrics m(scenario_columns("E5"));
  const auto tg = time_grid(cfg, spec);
  const auto field = solve_field_eps(spec, rs.parameter, grid_from_config(cfg, spec), tg,
                                     solver_options(cfg, run));
  const auto e = simulate_ensemble(spec, field, ensemble_options(cfg, run, rs.stream_base));
  const auto x = e.terminal_component(0);
  sign_statistics(m, x);
  moment_statistics(m, x);
  m.set("w1_target", wasserstein1_1d(x, minimizer_law(spec, spec.nu0)));
  m.set("exit_fraction", e.exit_fraction);
  if (is_quadratic(spec)) {
    const auto [mean, var] = gaussian_oracle(spec, INFINITY, rs.parameter, tg);
    m.set("oracle_mean", mean);
    m.set("oracle_var", var);
  }
  return finish(rs, index, cfg, std::move(m));
}

ReportRow row_E6(const ScenarioConfig& cfg, const RowSpec& rs, std::size_t index,
                 const RunOptions& run) {
  const ModelSpec spec = model_from_config(cfg);
  Metrics m(scenario_columns("E6"));
  const Vec nu = probe_point(spec, rs.probe);
  const auto field = field_for(cfg, spec, run, rs.parameter);
  const Vec u = field(0.0, nu);
  m.set("u_field", u(0));
  const auto probe = differentiability_probe(spec, 0.0, nu);
  m.set("left_slope", probe.axes[0].left);
  m.set("right_slope", probe.axes[0].right);
  m.set("differentiable", probe.differentiable ? 1.0 : 0.0);
  if (probe.differentiable) {
    const double grad = value_gradient_fd(spec, 0.0, nu)(0);
    m.set("grad_fd", grad);
    m.set("gap", std::abs(u(0) - grad));
  }
  return finish(rs, index, cfg, std::move(m));
}

std::uint64_t stream_block(std::size_t i) { return static_cast<std::uint64_t>(i) << 32; }

ScenarioReport run_checked(const std::string& expected, const ScenarioConfig& cfg,
                           const RunOptions& opts) {
  if (cfg.get("scenario") != expected) {
    config_error("config scenario is '" + cfg.get("scenario") + "', expected " + expected);
  }
  return run_scenario(cfg, opts);
}

}  // namespace

ScenarioConfig effective_config(const ScenarioConfig& cfg) { return with_defaults(cfg); }

std::vector<std::string> scenario_columns(const std::string& scenario) {
  if (scenario == "E1") {
    return {"sup_error", "mean_mT", "se_mT", "var_mT", "exit_fraction",
            "cost_mean", "cost_se", "oc_cost"};
  }
  if (scenario == "E2") {
    return {"positive_fraction", "band_low", "band_high", "w1_target",
            "target_atom", "mean_mT", "var_mT", "exit_fraction"};
  }
  if (scenario == "E3") {
    return {"positive_fraction", "band_low", "band_high", "w1_target",
            "target_atom", "mean_mT", "var_mT", "exit_fraction",
            "eta0", "m_T", "cost", "minimizer", "trajectory_error"};
  }
  if (scenario == "E4") {
    return {"kuiper_V", "kuiper_p", "median_radius", "mean_radius", "target_radius",
            "exit_fraction", "rotation_deviation", "field_equivariant"};
  }
  if (scenario == "E5") {
    return {"positive_fraction", "band_low", "band_high", "w1_target", "mean_mT",
            "var_mT", "se_mT", "exit_fraction", "oracle_mean", "oracle_var"};
  }
  if (scenario == "E6") {
    return {"u_field", "grad_fd", "gap", "left_slope", "right_slope", "differentiable"};
  }
  config_error("unknown scenario '" + scenario + "'");
}

std::vector<RowSpec> scenario_rows(const ScenarioConfig& raw) {
  const ScenarioConfig cfg = with_defaults(raw);
  const std::string s = cfg.get("scenario");
  std::vector<RowSpec> rows;
  auto add = [&rows](std::string kind, double parameter, double probe) {
    rows.push_back({std::move(kind), parameter, probe, stream_block(rows.size())});
  };
  const double nu = model_from_config(cfg).nu0(0);
  if (s == "E1") {
    for (double n : increasing_list(cfg, "run.N")) add("ensemble", n, nu);
    if (cfg.get_bool("run.noiseless", true)) add("noiseless", INFINITY, nu);
  } else if (s == "E2") {
    for (double n : increasing_list(cfg, "run.N")) add("ensemble", n, nu);
  } else if (s == "E3") {
    const ModelSpec spec = model_from_config(cfg);
    const auto set = enumerate_stationary(spec, 0.0, spec.nu0);
    for (std::size_t j = 0; j < set.solutions.size(); ++j) {
      add("stationary", INFINITY, static_cast<double>(j));
    }
    for (double n : increasing_list(cfg, "run.N")) add("ensemble", n, nu);
  } else if (s == "E4") {
    const auto ns = increasing_list(cfg, "run.N");
    for (double n : ns) add("ensemble", n, nu);
    if (cfg.get_bool("run.rotation_check", true)) add("rotation", ns.front(), nu);
  } else if (s == "E5") {
    const auto eps = eps_list(cfg);
    for (double p : cfg.get_list("run.probes", {nu})) {
      for (double e : eps) add("ensemble", e, p);
    }
  } else if (s == "E6") {
    const auto ns = increasing_list(cfg, "run.N");
    for (double p : cfg.get_list("run.probes", {nu})) {
      for (double n : ns) add("gap", n, p);
    }
  }
  return rows;
}

ReportRow run_row(const ScenarioConfig& raw, const RowSpec& rs, std::size_t index,
                  const RunOptions& opts) {
  const ScenarioConfig cfg = with_defaults(raw);
  const std::string s = cfg.get("scenario");
  if (s == "E1") return row_E1(cfg, rs, index, opts);
  if (s == "E2") return row_symmetric("E2", cfg, rs, index, opts);
  if (s == "E3") {
    if (rs.kind == "stationary") return row_E3_stationary(cfg, rs, index);
    return row_symmetric("E3", cfg, rs, index, opts);
  }
  if (s == "E4") return row_E4(cfg, rs, index, opts);
  if (s == "E5") return row_E5(cfg, rs, index, opts);
  return row_E6(cfg, rs, index, opts);
}

double ScenarioReport::metric(const ReportRow& row, const std::string& column) const {
  const auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end()) return kNaN;
  return row.metrics[static_cast<std::size_t>(it - columns.begin())];
}

bool ScenarioReport::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(),
                     [](const Verdict& v) { return v.pass; });
}

// ---------------------------------------------------------------- verdicts

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

std::vector<const ReportRow*> rows_of(const ScenarioReport& r, const std::string& kind,
                                      std::optional<double> probe = std::nullopt) {
  std::vector<const ReportRow*> out;
  for (const auto& row : r.rows) {
    if (row.kind != kind) continue;
    if (probe && row.probe != *probe) continue;
    out.push_back(&row);
  }
  return out;
}

void sign_band_verdicts(const ScenarioReport& r, std::vector<Verdict>& out,
                        const std::vector<const ReportRow*>& rows,
                        const std::string& label) {
  for (const auto* row : rows) {
    const double f = r.metric(*row, "positive_fraction");
    const bool ok = f >= r.metric(*row, "band_low") && f <= r.metric(*row, "band_high");
    out.push_back({"sign band " + label + "=" + fmt(row->parameter), ok, true,
                   "P(m_T > 0) = " + fmt(f) + " in [" + fmt(r.metric(*row, "band_low")) +
                       ", " + fmt(r.metric(*row, "band_high")) + "]"});
  }
}

void decreasing_verdict(const ScenarioReport& r, std::vector<Verdict>& out,
                        const std::vector<const ReportRow*>& rows,
                        const std::string& column, const std::string& name,
                        bool statistical) {
  bool ok = rows.size() >= 2;
  std::string detail = column + ":";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double v = r.metric(*rows[i], column);
    detail += " " + fmt(v);
    if (i > 0 && !(v < r.metric(*rows[i - 1], column))) ok = false;
  }
  out.push_back({name, ok, statistical, detail});
}

}  // namespace

std::vector<Verdict> scenario_verdicts(const ScenarioConfig& raw,
                                       const ScenarioReport& r) {
  const ScenarioConfig cfg = with_defaults(raw);
  const std::string s = cfg.get("scenario");
  std::vector<Verdict> out;
  if (s == "E1") {
    const auto rows = rows_of(r, "ensemble");
    decreasing_verdict(r, out, rows, "sup_error", "sup_t E|m^N - m_hat| decreasing in N",
                       true);
    const double tol = cfg.get_double("verdict.max_error", 0.1);
    const double last = r.metric(*rows.back(), "sup_error");
    out.push_back({"sup error at largest N below threshold", last < tol, true,
                   fmt(last) + " < " + fmt(tol)});
    for (const auto* row : rows_of(r, "noiseless")) {
      const double e = r.metric(*row, "sup_error");
      const double t = cfg.get_double("verdict.noiseless_error", 2e-2);
      out.push_back({"noiseless flow error", e < t, false, fmt(e) + " < " + fmt(t)});
    }
    if (rows.front()->probe == 0.0) {
      for (const auto* row : rows) {
        const double mean = r.metric(*row, "mean_mT");
        const double se = r.metric(*row, "se_mT");
        out.push_back({"E[m_T] = 0 within 3 SE at N=" + fmt(row->parameter),
                       std::abs(mean) <= 3.0 * se, true, fmt(mean) + " vs " + fmt(3 * se)});
      }
    }
  } else if (s == "E2" || s == "E3") {
    const auto rows = rows_of(r, "ensemble");
    sign_band_verdicts(r, out, rows, "N");
    if (s == "E2") {
      const double first = r.metric(*rows.front(), "w1_target");
      const double last = r.metric(*rows.back(), "w1_target");
      std::string detail = "w1_target:";
      for (const auto* row : rows) detail += " " + fmt(r.metric(*row, "w1_target"));
      out.push_back({"W1 to the minimizer law smaller at largest N than at smallest N",
                     rows.size() >= 2 && last < first, true, detail});
    } else {
      const auto st = rows_of(r, "stationary");
      double min_cost = INFINITY;
      for (const auto* row : st) min_cost = std::min(min_cost, r.metric(*row, "cost"));
      const double tol = cfg.get_double("verdict.trajectory_error", 1e-3);
      bool center = false;
      for (const auto* row : st) {
        const bool minimizer = r.metric(*row, "minimizer") == 1.0;
        const double mt = r.metric(*row, "m_T");
        if (minimizer) {
          const double err = r.metric(*row, "trajectory_error");
          out.push_back({"closed-form trajectory m_T=" + fmt(mt), err < tol, false,
                         fmt(err) + " < " + fmt(tol)});
        } else if (std::abs(mt) < 1e-6) {
          const double c = r.metric(*row, "cost");
          center = true;
          out.push_back({"(0,0) stationary-only with larger cost", c > min_cost, false,
                         fmt(c) + " > " + fmt(min_cost)});
        }
      }
      if (!center) out.push_back({"(0,0) stationary point found", false, false, "missing"});
    }
  } else if (s == "E4") {
    const auto rows = rows_of(r, "ensemble");
    const double alpha = cfg.get_double("verdict.kuiper_level", 0.01);
    for (const auto* row : rows) {
      const double p = r.metric(*row, "kuiper_p");
      out.push_back({"Kuiper uniform angle N=" + fmt(row->parameter), p > alpha, true,
                     "p = " + fmt(p) + " > " + fmt(alpha)});
    }
    const double band = cfg.get_double("verdict.median_band", 0.1);
    const auto* last = rows.back();
    const double med = r.metric(*last, "median_radius");
    const double target = r.metric(*last, "target_radius");
    out.push_back({"median |m_T| near a_hat T at N=" + fmt(last->parameter),
                   std::abs(med - target) <= band, true,
                   fmt(med) + " in " + fmt(target) + " +- " + fmt(band)});
    for (const auto* row : rows_of(r, "rotation")) {
      const double dev = r.metric(*row, "rotation_deviation");
      const double tol = cfg.get_double("verdict.rotation_tolerance", 1e-9);
      out.push_back({"quarter-turn field equivariance (bitwise)",
                     r.metric(*row, "field_equivariant") == 1.0, false, ""});
      out.push_back({"quarter-turn ensemble equivariance", dev < tol, false,
                     fmt(dev) + " < " + fmt(tol)});
    }
  } else if (s == "E5") {
    const auto probes = cfg.get_list("run.probes", {0.0});
    for (double p : probes) {
      const auto rows = rows_of(r, "ensemble", p);
      if (rows.empty()) continue;
      const bool quadratic = !std::isnan(r.metric(*rows.front(), "oracle_mean"));
      if (quadratic) {
        const auto m = static_cast<double>(cfg.get_size("run.M", 2000));
        for (const auto* row : rows) {
          const double mean = r.metric(*row, "mean_mT");
          const double om = r.metric(*row, "oracle_mean");
          const double se = r.metric(*row, "se_mT");
          const double var = r.metric(*row, "var_mT");
          const double ov = r.metric(*row, "oracle_var");
          const double vse = ov * std::sqrt(2.0 / (m - 1.0));
          out.push_back({"Gaussian oracle eps=" + fmt(row->parameter) + " nu0=" + fmt(p),
                         std::abs(mean - om) <= 3.0 * se && std::abs(var - ov) <= 3.0 * vse,
                         true,
                         "mean " + fmt(mean) + " vs " + fmt(om) + ", var " + fmt(var) +
                             " vs " + fmt(ov)});
        }
      } else if (p == 0.0) {
        sign_band_verdicts(r, out, rows, "eps");
      } else {
        decreasing_verdict(r, out, rows, "var_mT",
                           "Var(m_T) decreasing as eps decreases at nu0=" + fmt(p), true);
      }
    }
  } else if (s == "E6") {
    const ModelSpec spec = model_from_config(cfg);
    const bool quadratic = is_quadratic(spec);
    const double tol = cfg.get_double("verdict.gap", quadratic ? 1e-2 : 5e-2);
    for (double p : cfg.get_list("run.probes", {0.0})) {
      const auto rows = rows_of(r, "gap", p);
      if (rows.empty()) continue;
      const bool smooth = r.metric(*rows.front(), "differentiable") == 1.0;
      if (smooth) {
        if (quadratic) {
          for (const auto* row : rows) {
            const double g = r.metric(*row, "gap");
            out.push_back({"gap below tolerance N=" + fmt(row->parameter), g < tol, false,
                           fmt(g) + " < " + fmt(tol)});
          }
        } else {
          decreasing_verdict(r, out, rows, "gap", "gap decreasing in N at nu0=" + fmt(p),
                             false);
          const double g = r.metric(*rows.back(), "gap");
          out.push_back({"gap at largest N below tolerance at nu0=" + fmt(p), g < tol, false,
                         fmt(g) + " < " + fmt(tol)});
        }
      }
      if (p == 0.0 && spec.is_even()) {
        bool zero = true;
        for (const auto* row : rows) zero = zero && r.metric(*row, "u_field") == 0.0;
        out.push_back({"u^N(0,0) = 0 exactly", zero, false, ""});
      }
    }
  }
  return out;
}

ScenarioReport run_scenario(const ScenarioConfig& raw, const RunOptions& opts) {
  const ScenarioConfig cfg = with_defaults(raw);
  ScenarioReport report;
  report.scenario = cfg.get("scenario");
  report.config_hash = cfg.hash();
  report.seed = cfg.get_u64("seed", 0);
  report.columns = scenario_columns(report.scenario);
  const auto specs = scenario_rows(cfg);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    report.rows.push_back(run_row(cfg, specs[i], i, opts));
  }
  report.verdicts = scenario_verdicts(cfg, report);
  for (const auto& row : report.rows) {
    const double ex = report.metric(row, "exit_fraction");
    if (ex > 0.01) {
      report.notes.push_back("row " + std::to_string(row.index) + ": exit fraction " +
                             fmt(ex) + " above 1%, enlarge grid.L");
    }
    if (report.scenario == "E6" && report.metric(row, "differentiable") == 0.0) {
      report.notes.push_back(
          "row " + std::to_string(row.index) + ": nu0=" + fmt(row.probe) +
          " is a kink of v(0, .); u^N = " + fmt(report.metric(row, "u_field")) +
          " sits between the one-sided slopes " + fmt(report.metric(row, "left_slope")) +
          " and " + fmt(report.metric(row, "right_slope")) + ", convergence verdict skipped");
    }
  }
  return report;
}

ScenarioReport run_E1_unique(const ScenarioConfig& c, const RunOptions& o) {
  return run_checked("E1", c, o);
}
ScenarioReport run_E2_symmetric(const ScenarioConfig& c, const RunOptions& o) {
  return run_checked("E2", c, o);
}
ScenarioReport run_E3_delarue(const ScenarioConfig& c, const RunOptions& o) {
  return run_checked("E3", c, o);
}
ScenarioReport run_E4_sphere(const ScenarioConfig& c, const RunOptions& o) {
  return run_checked("E4", c, o);
}
ScenarioReport run_E5_common_noise(const ScenarioConfig& c, const RunOptions& o) {
  return run_checked("E5", c, o);
}
ScenarioReport run_E6_field_convergence(const ScenarioConfig& c, const RunOptions& o) {
  return run_checked("E6", c, o);
}

// ---------------------------------------------------------------- output

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

void write_report_csv(const ScenarioReport& r, std::ostream& os) {
  os << "scenario,row,kind,parameter,probe,seed,stream_base,config_hash";
  for (const auto& c : r.columns) os << ',' << c;
  os << '\n';
  for (const auto& row : r.rows) {
    os << r.scenario << ',' << row.index << ',' << row.kind << ','
       << format_double(row.parameter) << ',' << format_double(row.probe) << ','
       << row.seed << ',' << row.stream_base << ',' << row.config_hash;
    for (double v : row.metrics) os << ',' << format_double(v);
    os << '\n';
  }
}

void write_verdicts_csv(const ScenarioReport& r, std::ostream& os) {
  os << "scenario,verdict,pass,statistical,detail\n";
  for (const auto& v : r.verdicts) {
    os << r.scenario << ",\"" << v.name << "\"," << (v.pass ? "pass" : "fail") << ','
       << (v.statistical ? "yes" : "no") << ",\"" << v.detail << "\"\n";
  }
}

void write_report_svg(const ScenarioReport& r, std::ostream& os) {
  static const std::map<std::string, std::string> headline = {
      {"E1", "sup_error"}, {"E2", "w1_target"}, {"E3", "positive_fraction"},
      {"E4", "kuiper_p"},  {"E5", "var_mT"},    {"E6", "gap"}};
  const std::string col = headline.at(r.scenario);
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : r.rows) {
    const double y = r.metric(row, col);
    if (std::isfinite(row.parameter) && std::isfinite(y) && row.parameter > 0.0) {
      pts.emplace_back(std::log10(row.parameter), y);
    }
  }
  const double w = 480;
  const double h = 320;
  const double pad = 50;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << pad << "\" y=\"20\" font-size=\"14\">" << r.scenario << ": " << col
     << " vs log10(parameter)</text>\n";
  if (!pts.empty()) {
    double x0 = pts[0].first, x1 = x0, y0 = pts[0].second, y1 = y0;
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double x) { return pad + (x - x0) / (x1 - x0) * (w - 2 * pad); };
    auto py = [&](double y) { return h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad); };
    os << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad
       << "\" y2=\"" << h - pad << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\""
       << h - pad << "\" stroke=\"black\"/>\n";
    os << "<text x=\"5\" y=\"" << pad << "\" font-size=\"10\">" << fmt(y1) << "</text>\n";
    os << "<text x=\"5\" y=\"" << h - pad << "\" font-size=\"10\">" << fmt(y0) << "</text>\n";
    for (const auto& [x, y] : pts) {
      os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y)
         << "\" r=\"3\" fill=\"steelblue\"/>\n";
    }
  }
  os << "</svg>\n";
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

bool same(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

ReplayResult replay_row(const std::string& report_csv, std::size_t row,
                        const RunOptions& opts) {
  std::ifstream is(report_csv);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + report_csv);
  const auto cfg_path = std::filesystem::path(report_csv).parent_path() / "config.cfg";
  const ScenarioConfig cfg = with_defaults(ScenarioConfig::load(cfg_path.string()));
  std::string line;
  std::getline(is, line);
  const auto header = split_csv(trim(line));
  const auto columns = scenario_columns(cfg.get("scenario"));
  if (header.size() != 8 + columns.size()) {
    throw Error(ErrorKind::kIo, "report columns do not match the scenario schema");
  }
  std::vector<std::string> fields;
  for (std::size_t i = 0; std::getline(is, line); ++i) {
    if (i == row) {
      fields = split_csv(trim(line));
      break;
    }
  }
  if (fields.size() != header.size()) {
    throw Error(ErrorKind::kIo, "row " + std::to_string(row) + " not found in " + report_csv);
  }
  ReplayResult res;
  ReportRow& rec = res.recorded;
  rec.index = row;
  rec.kind = fields[2];
  rec.parameter = parse_number(fields[3], "parameter");
  rec.probe = parse_number(fields[4], "probe");
  rec.seed = std::stoull(fields[5]);
  rec.stream_base = std::stoull(fields[6]);
  rec.config_hash = std::stoull(fields[7]);
  for (std::size_t i = 8; i < fields.size(); ++i) {
    rec.metrics.push_back(parse_number(fields[i], header[i]));
  }
  if (rec.config_hash != cfg.hash()) {
    throw Error(ErrorKind::kConfig, "config hash mismatch: config.cfg was edited");
  }
  if (rec.seed != cfg.get_u64("seed", 0)) {
    throw Error(ErrorKind::kConfig, "row seed differs from the config seed");
  }
  const RowSpec spec{rec.kind, rec.parameter, rec.probe, rec.stream_base};
  res.recomputed = run_row(cfg, spec, row, opts);
  res.identical = res.recomputed.metrics.size() == rec.metrics.size() &&
                  std::equal(rec.metrics.begin(), rec.metrics.end(),
                             res.recomputed.metrics.begin(), same);
  return res;
}

}  // namespace mfsel
