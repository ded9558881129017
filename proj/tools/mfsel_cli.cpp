// Command line front end: scenario runs, deterministic control queries,
// field solves and report replay.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mfsel/control.hpp"
#include "mfsel/error.hpp"
#include "mfsel/experiment.hpp"
#include "mfsel/field.hpp"

namespace fs = std::filesystem;
using namespace mfsel;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerdict = 2;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::size_t threads = 1;
};

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("config", c.config, "Scenario config file");
  if (config_required) opt->required();
  app->add_option("--set", c.sets, "Override a config entry, key=value (repeatable)");
  app->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
}

ScenarioConfig load(const Common& c) {
  ScenarioConfig cfg = c.config.empty() ? ScenarioConfig{} : ScenarioConfig::load(c.config);
  for (const auto& s : c.sets) cfg.set_assignment(s);
  return cfg;
}

Vec point(const ModelSpec& spec, const std::vector<double>& nu) {
  if (nu.empty()) return spec.nu0;
  if (nu.size() != spec.dim) throw Error(ErrorKind::kConfig, "--nu0 needs d entries");
  return Eigen::Map<const Vec>(nu.data(), static_cast<Eigen::Index>(nu.size()));
}

int cmd_run(const Common& c, std::optional<std::uint64_t> seed, std::string out_dir,
            bool plots) {
  ScenarioConfig cfg = load(c);
  if (seed) cfg.set("seed", std::to_string(*seed));
  if (!out_dir.empty()) cfg.set("output.dir", out_dir);
  cfg = effective_config(cfg);
  const std::string dir = cfg.get("output.dir", "out/" + cfg.get("scenario"));
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "config.cfg");
    os << cfg.canonical();
  }
  RunOptions run;
  run.threads = c.threads;
  const auto report = run_scenario(cfg, run);
  {
    std::ofstream os(fs::path(dir) / "report.csv");
    write_report_csv(report, os);
  }
  {
    std::ofstream os(fs::path(dir) / "verdicts.csv");
    write_verdicts_csv(report, os);
  }
  if (plots) {
    std::ofstream os(fs::path(dir) / "report.svg");
    write_report_svg(report, os);
  }
  std::cout << "scenario " << report.scenario << " config_hash " << report.config_hash
            << " seed " << report.seed << " rows " << report.rows.size() << " -> " << dir
            << "\n";
  for (const auto& n : report.notes) std::cout << "note: " << n << "\n";
  bool stat_fail = false;
  bool det_fail = false;
  for (const auto& v : report.verdicts) {
    std::cout << (v.pass ? "PASS " : "FAIL ") << v.name;
    if (!v.detail.empty()) std::cout << " (" << v.detail << ")";
    std::cout << "\n";
    if (!v.pass) (v.statistical ? stat_fail : det_fail) = true;
  }
  if (det_fail) return kExitError;
  return stat_fail ? kExitVerdict : kExitOk;
}

int cmd_oc_enumerate(const Common& c, double t0, const std::vector<double>& nu) {
  const ModelSpec spec = model_from_config(load(c));
  const Vec nu0 = point(spec, nu);
  const auto set = enumerate_stationary(spec, t0, nu0);
  std::cout.precision(12);
  std::cout << "index,classification,cost";
  for (std::size_t i = 0; i < spec.dim; ++i) std::cout << ",eta0_" << i + 1;
  for (std::size_t i = 0; i < spec.dim; ++i) std::cout << ",mT_" << i + 1;
  std::cout << ",terminal_residual\n";
  for (std::size_t j = 0; j < set.solutions.size(); ++j) {
    const auto& s = set.solutions[j];
    std::cout << j << ',' << to_string(s.classification) << ',' << s.cost;
    for (Eigen::Index i = 0; i < s.eta0.size(); ++i) std::cout << ',' << s.eta0(i);
    for (Eigen::Index i = 0; i < s.eta0.size(); ++i) std::cout << ',' << s.m.back()(i);
    std::cout << ',' << s.terminal_residual << "\n";
  }
  return kExitOk;
}

int cmd_oc_value(const Common& c, double t0, const std::vector<double>& nu,
                 bool cross_check, bool probe) {
  const ModelSpec spec = model_from_config(load(c));
  const Vec nu0 = point(spec, nu);
  const auto v = value_function(spec, t0, nu0, cross_check);
  std::cout.precision(12);
  std::cout << "value " << v.value << "\n";
  if (v.cross_checked) {
    std::cout << "descent_value " << v.descent_value << " consistent "
              << (v.consistent ? "yes" : "no") << "\n";
  }
  if (!v.warning.empty()) std::cout << "warning: " << v.warning << "\n";
  if (probe) {
    const auto p = differentiability_probe(spec, t0, nu0);
    for (std::size_t i = 0; i < p.axes.size(); ++i) {
      std::cout << "axis " << i + 1 << " left " << p.axes[i].left << " right "
                << p.axes[i].right << " gap " << p.axes[i].gap << " threshold "
                << p.axes[i].threshold << "\n";
    }
    std::cout << "differentiable " << (p.differentiable ? "yes" : "no") << " (" << p.note
              << ")\n";
  }
  return kExitOk;
}

int cmd_field_solve(const Common& c, std::optional<double> n_players,
                    std::optional<double> eps, const std::string& out,
                    const std::string& csv) {
  const ScenarioConfig cfg = load(c);
  const ModelSpec spec = model_from_config(cfg);
  if (n_players.has_value() == eps.has_value()) {
    throw Error(ErrorKind::kConfig, "give exactly one of --N and --eps");
  }
  const SpaceGrid grid = grid_from_config(cfg, spec);
  const TimeGrid tg(0.0, spec.T, cfg.get_size("time.steps", spec.dim == 2 ? 200 : 1000));
  FieldSolverOptions opts;
  opts.threads = c.threads;
  FieldDiagnostics diag;
  const auto field = n_players ? solve_field_N(spec, *n_players, grid, tg, opts, &diag)
                               : solve_field_eps(spec, *eps, grid, tg, opts, &diag);
  std::cout << "substeps " << diag.substeps << " diffusion_ratio " << diag.diffusion_ratio
            << " transport_ratio " << diag.transport_ratio << "\n";
  if (!out.empty()) save_field(field, out);
  if (!csv.empty()) {
    std::ofstream os(csv);
    write_field_slice_csv(field, os, std::max<std::size_t>(1, tg.steps() / 20));
  }
  return kExitOk;
}

int cmd_field_export(const std::string& in, const std::string& csv, std::size_t stride) {
  const auto field = load_field(in);
  if (csv.empty() || csv == "-") {
    write_field_slice_csv(field, std::cout, stride);
  } else {
    std::ofstream os(csv);
    write_field_slice_csv(field, os, stride);
  }
  return kExitOk;
}

int cmd_replay(const std::string& target, std::optional<std::size_t> row_opt,
               std::size_t threads) {
  std::string path = target;
  std::size_t row = row_opt.value_or(0);
  if (!row_opt) {
    const auto colon = target.rfind(':');
    if (colon == std::string::npos) {
      throw Error(ErrorKind::kConfig, "replay needs <report.csv>:<row> or --row");
    }
    path = target.substr(0, colon);
    row = std::stoul(target.substr(colon + 1));
  }
  RunOptions run;
  run.threads = threads;
  const auto r = replay_row(path, row, run);
  std::cout << "row " << row << " kind " << r.recorded.kind << " parameter "
            << format_double(r.recorded.parameter) << " seed " << r.recorded.seed
            << " stream_base " << r.recorded.stream_base << ": "
            << (r.identical ? "identical" : "DIFFERENT") << "\n";
  return r.identical ? kExitOk : kExitVerdict;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selection experiments for potential mean field games"};
  app.require_subcommand(1);

  Common run_c;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool plots = false;
  auto* run = app.add_subcommand("run", "Run a scenario config (E1 to E6)");
  add_common(run, run_c, true);
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--out-dir", out_dir, "Output directory");
  run->add_flag("--plots", plots, "Also write an SVG plot");

  Common oc_c;
  double t0 = 0.0;
  std::vector<double> nu;
  auto* oce = app.add_subcommand("oc-enumerate", "Stationary points of the control problem");
  add_common(oce, oc_c, false);
  oce->add_option("--t0", t0, "Initial time");
  oce->add_option("--nu0", nu, "Initial point")->delimiter(',');

  bool no_cross = false;
  bool probe = false;
  auto* ocv = app.add_subcommand("oc-value", "Value function of the control problem");
  add_common(ocv, oc_c, false);
  ocv->add_option("--t0", t0, "Initial time");
  ocv->add_option("--nu0", nu, "Initial point")->delimiter(',');
  ocv->add_flag("--no-cross-check", no_cross, "Skip the gradient-descent cross-check");
  ocv->add_flag("--probe", probe, "Run the differentiability probe");

  auto* field = app.add_subcommand("field", "Decoupling field tools");
  field->require_subcommand(1);
  Common fs_c;
  std::optional<double> n_players;
  std::optional<double> eps;
  std::string field_out;
  std::string field_csv;
  auto* solve = field->add_subcommand("solve", "Solve u^N or u^eps");
  add_common(solve, fs_c, false);
  solve->add_option("--N", n_players, "Number of players");
  solve->add_option("--eps", eps, "Common noise intensity");
  solve->add_option("--out", field_out, "Binary field file");
  solve->add_option("--csv", field_csv, "CSV slice");
  std::string export_in;
  std::string export_csv;
  std::size_t stride = 1;
  auto* exp = field->add_subcommand("export", "CSV slice of a binary field");
  exp->add_option("field", export_in, "Binary field file")->required();
  exp->add_option("--csv", export_csv, "Output CSV (default stdout)");
  exp->add_option("--stride", stride, "Time stride")->check(CLI::PositiveNumber);

  std::string replay_target;
  std::optional<std::size_t> replay_row_index;
  std::size_t replay_threads = 1;
  auto* rep = app.add_subcommand("replay", "Re-run one report row and compare");
  rep->add_option("report", replay_target, "report.csv:row")->required();
  rep->add_option("--row", replay_row_index, "Row index");
  rep->add_option("--threads", replay_threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*run) return cmd_run(run_c, seed, out_dir, plots);
    if (*oce) return cmd_oc_enumerate(oc_c, t0, nu);
    if (*ocv) return cmd_oc_value(oc_c, t0, nu, !no_cross, probe);
    if (*solve) return cmd_field_solve(fs_c, n_players, eps, field_out, field_csv);
    if (*exp) return cmd_field_export(export_in, export_csv, stride);
    if (*rep) return cmd_replay(replay_target, replay_row_index, replay_threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
