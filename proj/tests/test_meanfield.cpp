#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mfsel/ensemble.hpp"
#include "mfsel/error.hpp"
#include "mfsel/field.hpp"
#include "mfsel/stats.hpp"
#include "support.hpp"

using namespace mfsel;
using mfsel::testing::Gen;

namespace {

ModelSpec quadratic_model(double c, double drift = 0.0) {
  return make_model("quadratic", make_quadratic(1, c), RunningCost::kFull, 1.0, 1.0, drift);
}

ModelSpec logcosh_model() {
  return make_model("logcosh", make_logcosh_terminal(4.0), RunningCost::kControlOnly);
}

double oracle_error(const DecouplingField& u, const RiccatiFieldOracle& o) {
  double err = 0.0;
  const auto& x = u.space().coords(0);
  for (std::size_t k = 0; k < u.time().size(); ++k) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double exact = o.at_node(k, Vec::Constant(1, x[i]))(0);
      err = std::max(err, std::abs(u.node_value(k, i, 0, 0) - exact));
    }
  }
  return err;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::kIo;
}

}  // namespace

TEST_SUITE("field") {
  TEST_CASE("quadratic fields match the Riccati oracle") {
    const auto grid = SpaceGrid::symmetric(1, 4.0, 201);
    const TimeGrid tg(0.0, 1.0, 500);
    for (double drift : {0.0, 0.4}) {
      for (double n : {5.0, 100.0, static_cast<double>(INFINITY)}) {
        CAPTURE(drift);
        CAPTURE(n);
        auto spec = quadratic_model(1.0, drift);
        spec.f = make_quadratic(1, 0.5, Vec::Constant(1, 0.2));
        const auto u = solve_field_N(spec, n, grid, tg);
        const auto o = riccati_field_oracle(spec, n, tg);
        // Linear fields are exact in space; RK2 leaves an O(dt^2) error.
        CHECK(oracle_error(u, o) < 1e-5);
      }
    }
  }

  TEST_CASE("common-noise field of a quadratic model has no reminders") {
    const auto spec = quadratic_model(1.0);
    const auto grid = SpaceGrid::symmetric(1, 4.0, 201);
    const TimeGrid tg(0.0, 1.0, 500);
    const auto u = solve_field_eps(spec, 0.5, grid, tg);
    CHECK(u.kind() == FieldKind::kCommonNoise);
    CHECK(oracle_error(u, riccati_field_oracle(spec, INFINITY, tg)) < 1e-5);
  }

  TEST_CASE("oracle refuses non-quadratic data") {
    CHECK(kind_of([] { riccati_field_oracle(logcosh_model(), 10.0, TimeGrid(0, 1, 10)); }) ==
          ErrorKind::kInvalidOracle);
  }

  TEST_CASE("even data give an exactly odd field") {
    const auto spec = logcosh_model();
    const auto grid = SpaceGrid::symmetric(1, 3.0, 301);
    const TimeGrid tg(0.0, 1.0, 400);
    for (double n : {10.0, 400.0}) {
      const auto u = solve_field_N(spec, n, grid, tg);
      const std::size_t nx = grid.axis(0).nodes;
      for (std::size_t k = 0; k < tg.size(); ++k) {
        CHECK(u.node_value(k, nx / 2, 0, 0) == 0.0);
        for (std::size_t i = 0; i < nx; ++i) {
          if (u.node_value(k, i, 0, 0) != -u.node_value(k, nx - 1 - i, 0, 0)) {
            FAIL("odd symmetry broken at level " << k << " node " << i);
          }
        }
      }
    }
  }

  TEST_CASE("radial data give a quarter-turn equivariant field") {
    const auto spec = make_model("radial", make_radial_terminal(logcosh_profile(4.0), 2),
                                 RunningCost::kControlOnly);
    const auto grid = SpaceGrid::symmetric(2, 3.0, 41);
    const TimeGrid tg(0.0, 1.0, 40);
    for (auto transport : {Transport::kIsotropic, Transport::kAxisUpwind}) {
      FieldSolverOptions opts;
      opts.transport = transport;
      const auto u = solve_field_N(spec, 50.0, grid, tg, opts);
      const std::size_t n = 41;
      bool ok = true;
      for (std::size_t k = 0; k < tg.size(); k += 10) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            // R(x, y) = (-y, x) maps node (i, j) to (n-1-j, i).
            ok = ok && u.node_value(k, n - 1 - j, i, 0) == -u.node_value(k, i, j, 1);
            ok = ok && u.node_value(k, n - 1 - j, i, 1) == u.node_value(k, i, j, 0);
          }
        }
      }
      CHECK(ok);
    }
  }

  TEST_CASE("stability bounds") {
    const auto grid = SpaceGrid::symmetric(1, 1.0, 21);  // dx = 0.1
    // D dt / dx^2 <= safety / 4 and speed dt / dx <= safety / 2.
    CHECK(required_substeps(grid, 0.5, 0.0, 0.01, 1.0) == 2);
    CHECK(required_substeps(grid, 0.0, 10.0, 0.01, 1.0) == 2);
    CHECK(required_substeps(grid, 0.0, 0.0, 0.01, 1.0) == 1);
    const auto sq = SpaceGrid::symmetric(2, 1.0, 21);
    CHECK(required_substeps(sq, 0.5, 0.0, 0.01, 1.0) == 4);

    FieldSolverOptions opts;
    opts.substeps = 1;
    const auto fine = SpaceGrid::symmetric(1, 3.0, 601);
    CHECK(kind_of([&] { solve_field_N(logcosh_model(), 2.0, fine, TimeGrid(0, 1, 20), opts); }) ==
          ErrorKind::kCflViolation);
    FieldDiagnostics diag;
    solve_field_N(logcosh_model(), 2.0, fine, TimeGrid(0, 1, 20), {}, &diag);
    CHECK(diag.substeps > 1);
    CHECK(diag.diffusion_ratio <= 0.25);
    CHECK(diag.transport_ratio <= 0.5);
  }

  TEST_CASE("default half width") {
    CHECK(kind_of([] { default_half_width(quadratic_model(1.0)); }) == ErrorKind::kConfig);
    // 2 (0 + 1 (4 + 0 + 1)) e^0 = 10 for the log-cosh example.
    CHECK(default_half_width(logcosh_model()) == doctest::Approx(10.0));
  }

  TEST_CASE("interpolation is exact on linear fields and clamps outside") {
    const auto spec = quadratic_model(0.0);
    const auto grid = SpaceGrid::symmetric(1, 2.0, 41);
    const auto u = solve_field_N(spec, INFINITY, grid, TimeGrid(0.0, 1.0, 200));
    const auto o = riccati_field_oracle(spec, INFINITY, TimeGrid(0.0, 1.0, 200));
    Gen gen(41);
    for (int rep = 0; rep < 50; ++rep) {
      const double t = gen.uniform(0.0, 1.0);
      const Vec m = gen.vec(1, -2.0, 2.0);
      CHECK(u(t, m)(0) == doctest::Approx(o(t, m)(0)).epsilon(1e-6));
    }
    CHECK(u(0.5, Vec::Constant(1, 7.0))(0) == u(0.5, Vec::Constant(1, 2.0))(0));
  }

  TEST_CASE("binary files round trip bitwise") {
    const auto spec = make_model("radial", make_radial_terminal(logcosh_profile(4.0), 2),
                                 RunningCost::kControlOnly);
    const auto u = solve_field_N(spec, 30.0, SpaceGrid::symmetric(2, 2.0, 21),
                                 TimeGrid(0.0, 1.0, 10));
    std::stringstream ss;
    write_field_binary(u, ss);
    const auto v = read_field_binary(ss);
    CHECK(v.values() == u.values());
    CHECK(v.parameter() == 30.0);
    CHECK(v.kind() == FieldKind::kNPlayer);
    CHECK(v.model_name() == "radial");
    CHECK(v.space().axis(1).nodes == 21);
    CHECK(v.time().steps() == 10);

    std::string bytes = ss.str();
    std::stringstream bad(bytes.replace(0, 8, "NOTAFILE"));
    CHECK(kind_of([&] { read_field_binary(bad); }) == ErrorKind::kIo);
    std::stringstream cut(ss.str().substr(0, ss.str().size() / 2));
    CHECK(kind_of([&] { read_field_binary(cut); }) == ErrorKind::kIo);
  }
}

TEST_SUITE("ensemble") {
  TEST_CASE("results do not depend on the thread count") {
    const auto spec = logcosh_model();
    const auto u = solve_field_N(spec, 50.0, SpaceGrid::symmetric(1, 3.0, 301),
                                 TimeGrid(0.0, 1.0, 200));
    EnsembleOptions opts;
    opts.paths = 300;
    opts.seed = 99;
    opts.threads = 1;
    const auto a = simulate_ensemble(spec, u, opts);
    opts.threads = 4;
    const auto b = simulate_ensemble(spec, u, opts);
    CHECK(a.terminal == b.terminal);
    CHECK(a.cost == b.cost);
    opts.seed = 100;
    CHECK(simulate_ensemble(spec, u, opts).terminal != a.terminal);
    // A shifted stream base reproduces the tail of a larger run.
    opts.seed = 99;
    opts.stream_base = 100;
    opts.paths = 200;
    const auto c = simulate_ensemble(spec, u, opts);
    CHECK(std::equal(c.terminal.begin(), c.terminal.end(), a.terminal.begin() + 100));
  }

  TEST_CASE("uncontrolled paths have the Gaussian law") {
    // eta = 0, b = 0: m_T = m_0 + B_T / sqrt(N), m_0 = nu0 + mean of N
    // standard normals, so m_T ~ N(nu0, 2 / N) up to the 6 sd truncation.
    auto spec = quadratic_model(0.0);
    spec.nu0 = Vec::Constant(1, 0.3);
    const double n = 4.0;
    const auto u = solve_field_N(spec, n, SpaceGrid::symmetric(1, 8.0, 161),
                                 TimeGrid(0.0, 1.0, 50));
    EnsembleOptions opts;
    opts.paths = 20000;
    opts.seed = 7;
    opts.zero_control = true;
    const auto e = simulate_ensemble(spec, u, opts);
    const auto mv = mean_variance(e.terminal_component());
    const double var = 2.0 / n;
    CHECK(std::abs(mv.mean - 0.3) < 4.0 * std::sqrt(var / 20000.0));
    // sd of the sample variance: var sqrt(2 / M).
    CHECK(std::abs(mv.variance - var) < 4.0 * var * std::sqrt(2.0 / 20000.0));
    for (double x : e.eta0) CHECK(x == 0.0);

    opts.deterministic_initial = true;
    const auto d = simulate_ensemble(spec, u, opts);
    for (double x : d.initial) CHECK(x == 0.3);
    CHECK(mean_variance(d.terminal_component()).variance ==
          doctest::Approx(1.0 / n).epsilon(0.06));
  }

  TEST_CASE("noiseless transport follows the Riccati flow") {
    auto spec = quadratic_model(1.0, 0.2);
    spec.nu0 = Vec::Constant(1, 1.2);
    const TimeGrid tg(0.0, 1.0, 1000);
    const auto u = solve_field_N(spec, INFINITY, SpaceGrid::symmetric(1, 4.0, 401), tg);
    EnsembleOptions opts;
    opts.paths = 2;
    opts.noise = false;
    opts.keep_paths = true;
    const auto e = simulate_ensemble(spec, u, opts);
    // m' = (b - P) m - r by RK4 on the oracle.
    const auto o = riccati_field_oracle(spec, INFINITY, tg);
    const auto flow = integrate_ode(
        [&](double t, const Vec& m) -> Vec { return spec.b * m - o(t, m); }, spec.nu0, tg,
        Direction::kForward);
    double err = 0.0;
    for (std::size_t k = 0; k < tg.size(); ++k) {
      err = std::max(err, std::abs(e.m[k] - flow[k](0)));
    }
    // Euler at dt = 1e-3 on a contracting linear flow.
    CHECK(err < 2e-3);
    CHECK(e.terminal[0] == e.terminal[1]);
    CHECK(e.exits == 0);
  }

  TEST_CASE("exits are clamped, counted and flagged") {
    auto spec = quadratic_model(0.0);
    const auto u = solve_field_N(spec, 1.0, SpaceGrid::symmetric(1, 0.5, 21),
                                 TimeGrid(0.0, 1.0, 50));
    EnsembleOptions opts;
    opts.paths = 500;
    opts.seed = 3;
    opts.zero_control = true;
    const auto e = simulate_ensemble(spec, u, opts);
    CHECK(e.exits > 0);
    CHECK(e.exit_fraction == doctest::Approx(static_cast<double>(e.exits) / 500.0));
    CHECK_FALSE(e.warning.empty());
    for (double x : e.terminal) CHECK(std::abs(x) <= 0.5);
  }

  TEST_CASE("rotated inputs rotate the paths") {
    const auto spec = make_model("radial", make_radial_terminal(logcosh_profile(4.0), 2),
                                 RunningCost::kControlOnly);
    const auto u = solve_field_N(spec, 100.0, SpaceGrid::symmetric(2, 3.0, 41),
                                 TimeGrid(0.0, 1.0, 40));
    EnsembleOptions opts;
    opts.paths = 50;
    opts.seed = 5;
    opts.substeps = 2;
    const auto a = simulate_ensemble(spec, u, opts);
    Mat r(2, 2);
    r << 0.0, -1.0, 1.0, 0.0;
    opts.input_rotation = r;
    const auto b = simulate_ensemble(spec, u, opts);
    double dev = 0.0;
    for (std::size_t p = 0; p < 50; ++p) {
      dev = std::max(dev, std::abs(b.terminal[2 * p] + a.terminal[2 * p + 1]));
      dev = std::max(dev, std::abs(b.terminal[2 * p + 1] - a.terminal[2 * p]));
    }
    CHECK(dev < 1e-9);
  }

  TEST_CASE("cost estimates") {
    // eta = 0, f = g = 0, full running cost, m_t = nu0 + B_t / sqrt(N):
    // E[sum_k dt 1/2 m_k^2 + 1/2 m_T^2] with a left sum on n steps.
    auto spec = quadratic_model(0.0);
    spec.nu0 = Vec::Constant(1, 0.5);
    const double n = 2.0;
    const std::size_t steps = 20;
    const auto u = solve_field_N(spec, n, SpaceGrid::symmetric(1, 8.0, 161),
                                 TimeGrid(0.0, 1.0, steps));
    EnsembleOptions opts;
    opts.paths = 20000;
    opts.seed = 11;
    opts.zero_control = true;
    opts.deterministic_initial = true;
    const auto est = eval_cost_OCN(spec, u, opts);
    const double s2 = 1.0 / n;
    const double left = 0.5 * 0.25 + 0.5 * s2 * (steps - 1.0) / (2.0 * steps);
    const double exact = left + 0.5 * (0.25 + s2);
    CHECK(std::abs(est.mean - exact) < 4.0 * est.standard_error);
    const auto same = summarize_cost(simulate_ensemble(spec, u, opts));
    CHECK(same.mean == est.mean);
    CHECK(same.per_path == est.per_path);
  }

  TEST_CASE("ensemble CSV layouts") {
    const auto spec = logcosh_model();
    const auto u = solve_field_N(spec, 10.0, SpaceGrid::symmetric(1, 3.0, 61),
                                 TimeGrid(0.0, 1.0, 10));
    EnsembleOptions opts;
    opts.paths = 3;
    std::ostringstream ends;
    write_ensemble_csv(simulate_ensemble(spec, u, opts), ends);
    CHECK(ends.str().rfind("path,m0,mT,eta0,cost\n", 0) == 0);
    opts.keep_paths = true;
    std::ostringstream full;
    write_ensemble_csv(simulate_ensemble(spec, u, opts), full);
    CHECK(full.str().rfind("path,t,m,eta\n", 0) == 0);
    std::size_t lines = 0;
    for (char ch : full.str()) lines += ch == '\n' ? 1 : 0;
    CHECK(lines == 1 + 3 * 11);
  }
}
