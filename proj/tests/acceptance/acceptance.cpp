// Acceptance run: one line per criterion, tolerances pinned below.
// Scenario criteria use the shipped configs under configs/.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mfsel/control.hpp"
#include "mfsel/experiment.hpp"
#include "mfsel/field.hpp"
#include "mfsel/ode.hpp"

#include "acceptance_paths.hpp"

using namespace mfsel;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

ScenarioConfig shipped(const std::string& file) {
  auto cfg = ScenarioConfig::load(std::string(MFSEL_SOURCE_DIR) + "/configs/" + file);
  return effective_config(cfg);
}

std::vector<const ReportRow*> rows(const ScenarioReport& r, const std::string& kind,
                                   double probe = NAN) {
  std::vector<const ReportRow*> out;
  for (const auto& row : r.rows) {
    if (row.kind == kind && (std::isnan(probe) || row.probe == probe)) out.push_back(&row);
  }
  return out;
}

const ReportRow* at(const std::vector<const ReportRow*>& rs, double parameter) {
  for (const auto* r : rs) {
    if (r->parameter == parameter) return r;
  }
  throw std::runtime_error("no row with parameter " + num(parameter));
}

// 1. Riccati oracle agreement.
constexpr double kC1RelError = 1e-2;
constexpr double kC1Ratio = 2.0;

double c1_error(double dx, std::size_t substeps) {
  const auto spec = make_model("quadratic", make_quadratic(1, 1.0), RunningCost::kFull);
  const double L = 3.0;
  const auto nodes = static_cast<std::size_t>(std::llround(2.0 * L / dx)) + 1;
  const auto grid = SpaceGrid::symmetric(1, L, nodes);
  const TimeGrid tg(0.0, 1.0, 1000);
  FieldSolverOptions opts;
  opts.substeps = substeps;
  const auto u = solve_field_N(spec, 10.0, grid, tg, opts);
  const auto o = riccati_field_oracle(spec, 10.0, tg);
  double err = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k < tg.size(); ++k) {
    for (std::size_t i = 0; i < nodes; ++i) {
      const double m = grid.coord(0, i);
      if (std::abs(m) > 2.0) continue;  // interior
      const double exact = o.at_node(k, Vec::Constant(1, m))(0);
      err = std::max(err, std::abs(u.node_value(k, i, 0, 0) - exact));
      scale = std::max(scale, std::abs(exact));
    }
  }
  return err / scale;
}

Outcome criterion1() {
  // Stored steps fixed at 1000; internal substeps refine dt with dx.
  const double coarse = c1_error(0.02, 2);
  const double fine = c1_error(0.01, 4);
  const double ratio = coarse / fine;
  return {coarse < kC1RelError && ratio >= kC1Ratio,
          "rel err " + num(coarse) + " < " + num(kC1RelError) + " at dx=0.02, ratio " +
              num(ratio) + " >= " + num(kC1Ratio)};
}

// 2. Symmetric selection.
constexpr double kSignBand = 0.034;

Outcome criterion2() {
  const auto r = run_scenario(shipped("e2_symmetric.cfg"));
  const auto rs = rows(r, "ensemble");
  const double f = r.metric(*at(rs, 200.0), "positive_fraction");
  const double w25 = r.metric(*at(rs, 25.0), "w1_target");
  const double w400 = r.metric(*at(rs, 400.0), "w1_target");
  return {std::abs(f - 0.5) <= kSignBand && w400 < w25,
          "P(m_T>0) " + num(f) + " in 0.5+-" + num(kSignBand) + " at N=200, W1 " +
              num(w400) + " (N=400) < " + num(w25) + " (N=25)"};
}

// 3. Delarue example.
constexpr double kC3Trajectory = 1e-3;

Outcome criterion3() {
  const double delta = 0.1;
  const auto spec = make_model("delarue", make_delarue_terminal(0.0, 1.0, delta, -1.0),
                               RunningCost::kFull);
  const auto set = enumerate_stationary(spec, 0.0, Vec::Zero(1));
  double worst = 0.0;
  bool center = false;
  bool center_ok = false;
  std::size_t branches = 0;
  for (const auto& s : set.solutions) {
    const double mt = s.m.back()(0);
    if (std::abs(mt) < 1e-6) {
      center = true;
      center_ok = s.classification == Classification::kStationaryOnly && s.cost > set.min_cost;
      continue;
    }
    const auto curves = delarue_riccati(0.0, s.grid, delta);
    const double sign = mt > 0 ? 1.0 : -1.0;
    for (std::size_t k = 0; k < s.grid.size(); ++k) {
      worst = std::max(worst, std::abs(s.m[k](0) - sign * curves.upper_trajectory(k)));
    }
    if (s.classification == Classification::kMinimizer) ++branches;
  }
  return {worst < kC3Trajectory && branches == 2 && center && center_ok,
          "max |m - m^+-| " + num(worst) + " < " + num(kC3Trajectory) + ", minimizers " +
              std::to_string(branches) + ", centre " +
              (center ? (center_ok ? "stationary-only, costlier" : "misclassified")
                      : "missing")};
}

// 4. Constant-control reduction.
constexpr double kC4Flat = 1e-8;
constexpr double kC4Match = 1e-6;

Outcome criterion4() {
  struct Case {
    ModelSpec spec;
    Vec nu0;
  };
  std::vector<Case> cases;
  for (double kappa : {3.0, 4.0}) {
    for (double nu : {0.0, 0.3, -0.7}) {
      cases.push_back({make_model("logcosh", make_logcosh_terminal(kappa),
                                  RunningCost::kControlOnly),
                       Vec::Constant(1, nu)});
    }
  }
  cases.push_back({make_model("quadratic", make_quadratic(1, 1.0), RunningCost::kControlOnly),
                   Vec::Constant(1, 0.8)});
  Vec off(2);
  off << 0.3, -0.2;
  cases.push_back({make_model("radial", make_radial_terminal(logcosh_profile(4.0), 2),
                              RunningCost::kControlOnly),
                   off});
  double drift = 0.0;
  double gap = 0.0;
  std::size_t solutions = 0;
  for (const auto& c : cases) {
    const auto set = enumerate_stationary(c.spec, 0.0, c.nu0);
    for (const auto& s : set.solutions) {
      for (const auto& e : s.eta) drift = std::max(drift, (e - s.eta.front()).norm());
      ++solutions;
    }
    const auto sm = minimize_static_U(c.spec, 0.0, c.nu0);
    gap = std::max(gap, std::abs(sm.value - set.min_cost));
  }
  return {drift < kC4Flat && gap < kC4Match,
          std::to_string(cases.size()) + " models, " + std::to_string(solutions) +
              " solutions: max |eta_t - eta_0| " + num(drift) + " < " + num(kC4Flat) +
              ", |min U - min shooting| " + num(gap) + " < " + num(kC4Match)};
}

// 5. Multi-dimensional selection.
constexpr double kKuiperLevel = 0.01;
constexpr double kRadiusBand = 0.1;

Outcome criterion5() {
  const auto r = run_scenario(shipped("e4_sphere.cfg"));
  const auto rs = rows(r, "ensemble");
  const double p = r.metric(*at(rs, 200.0), "kuiper_p");
  const double med = r.metric(*at(rs, 400.0), "median_radius");
  const double target = logcosh_positive_root(4.0);
  return {p > kKuiperLevel && std::abs(med - target) <= kRadiusBand,
          "Kuiper p " + num(p) + " > " + num(kKuiperLevel) + " at N=200, median |m_T| " +
              num(med) + " in " + num(target) + "+-" + num(kRadiusBand) + " at N=400"};
}

// 6. Vanishing common noise.
Outcome criterion6() {
  const auto r = run_scenario(shipped("e5_common_noise.cfg"));
  bool ok = true;
  std::string detail = "P(m_T>0):";
  const auto sym = rows(r, "ensemble", 0.0);
  for (const auto* row : sym) {
    const double f = r.metric(*row, "positive_fraction");
    ok = ok && std::abs(f - 0.5) <= kSignBand;
    detail += " " + num(f);
  }
  detail += " in 0.5+-" + num(kSignBand) + "; Var(m_T) at nu0=0.5:";
  const auto off = rows(r, "ensemble", 0.5);
  for (std::size_t i = 0; i < off.size(); ++i) {
    const double v = r.metric(*off[i], "var_mT");
    if (i > 0) ok = ok && v < r.metric(*off[i - 1], "var_mT");
    detail += " " + num(v);
  }
  ok = ok && sym.size() == 4 && off.size() == 4;
  return {ok, detail + " strictly decreasing"};
}

// 7. Field convergence.
constexpr double kGap = 5e-2;

Outcome criterion7() {
  const auto r = run_scenario(shipped("e6_field.cfg"));
  const auto off = rows(r, "gap", 0.5);
  bool ok = off.size() == 3;
  std::string detail = "gap:";
  for (std::size_t i = 0; i < off.size(); ++i) {
    const double g = r.metric(*off[i], "gap");
    if (i > 0) ok = ok && g < r.metric(*off[i - 1], "gap");
    detail += " " + num(g);
  }
  const double last = r.metric(*off.back(), "gap");
  ok = ok && last < kGap;
  bool zero = true;
  for (const auto* row : rows(r, "gap", 0.0)) zero = zero && r.metric(*row, "u_field") == 0.0;
  return {ok && zero, detail + " decreasing, " + num(last) + " < " + num(kGap) +
                          "; u^N(0,0) " + (zero ? "= 0 exactly" : "nonzero")};
}

// 8. Invariant suites.
Outcome criterion8() {
  std::istringstream list(MFSEL_UNIT_TESTS);
  std::string bin;
  bool ok = true;
  std::string detail;
  while (std::getline(list, bin, ';')) {
    const std::string cmd = "\"" + bin + "\" --minimal > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    const auto slash = bin.find_last_of('/');
    detail += (detail.empty() ? "" : ", ") + bin.substr(slash + 1) + (rc == 0 ? " ok" : " FAILED");
    ok = ok && rc == 0;
  }
  return {ok, detail};
}

struct Criterion {
  int id;
  std::string name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> all = {
      {1, "Riccati oracle agreement", 30.0, criterion1},
      {2, "symmetric selection", 300.0, criterion2},
      {3, "Delarue example", 10.0, criterion3},
      {4, "constant-control reduction", 120.0, criterion4},
      {5, "multi-dimensional selection", 900.0, criterion5},
      {6, "vanishing common noise", 600.0, criterion6},
      {7, "field convergence", 600.0, criterion7},
      {8, "invariant suites", 120.0, criterion8},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = s < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("criterion %d %-28s %s  %s; %.1f s < %.0f s\n", c.id, c.name.c_str(),
                pass ? "PASS" : "FAIL", o.detail.c_str(), s, c.limit_s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
