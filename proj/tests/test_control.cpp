#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfsel/control.hpp"
#include "mfsel/error.hpp"
#include "mfsel/ode.hpp"
#include "support.hpp"

using namespace mfsel;
using mfsel::testing::fd_gradient;
using mfsel::testing::Gen;

namespace {

ModelSpec quadratic_model(double c, std::size_t dim = 1, double drift = 0.0) {
  return make_model("quadratic", make_quadratic(dim, c), RunningCost::kFull, 1.0, 1.0,
                    drift);
}

ModelSpec logcosh_model(double kappa) {
  return make_model("logcosh", make_logcosh_terminal(kappa), RunningCost::kControlOnly);
}

// 1/2 a^2 T + 1/2 (aT)^2 - kappa log cosh(aT) at nu0 = 0, T = 1.
double logcosh_cost(double kappa, double a) {
  return a * a - kappa * std::log(std::cosh(a));
}

}  // namespace

TEST_SUITE("control") {
  TEST_CASE("zero terminal coupling: value 1/2 |nu0|^2") {
    // P' = P^2 - 1 with P(T) = 1 keeps P = 1, so eta = m = nu0 e^{-t}.
    const auto spec = quadratic_model(0.0);
    Gen gen(31);
    for (int rep = 0; rep < 10; ++rep) {
      const Vec nu0 = gen.vec(1, -2.0, 2.0);
      CAPTURE(nu0(0));
      const auto s = shoot(spec, 0.0, nu0, Vec::Zero(1));
      CHECK(s.eta0(0) == doctest::Approx(nu0(0)).epsilon(1e-8));
      CHECK(s.m.back()(0) == doctest::Approx(nu0(0) * std::exp(-1.0)).epsilon(1e-8));
      CHECK(s.cost == doctest::Approx(0.5 * nu0(0) * nu0(0)).epsilon(1e-8));
      for (std::size_t k = 0; k < s.grid.size(); ++k) CHECK(s.beta[k] == -s.eta[k]);
    }
  }

  TEST_CASE("quadratic value equals 1/2 nu0' P_0 nu0") {
    const auto spec = quadratic_model(1.0);
    const double p0 = 1.0 / std::tanh(1.0 + std::atanh(0.5));
    Gen gen(32);
    for (int rep = 0; rep < 8; ++rep) {
      const Vec nu0 = gen.vec(1, -3.0, 3.0);
      CAPTURE(nu0(0));
      const auto set = enumerate_stationary(spec, 0.0, nu0);
      REQUIRE(set.solutions.size() == 1);
      CHECK(set.minimizer_count == 1);
      CHECK(set.solutions[0].eta0(0) == doctest::Approx(p0 * nu0(0)).epsilon(1e-8));
      CHECK(set.min_cost == doctest::Approx(0.5 * p0 * nu0(0) * nu0(0)).epsilon(1e-7));
    }
  }

  TEST_CASE("two-dimensional quadratic with drift against the matrix Riccati") {
    const auto spec = quadratic_model(0.5, 2, 0.3);
    const TimeGrid g(0.0, 1.0, 2000);
    const auto p = riccati_backward(spec.b, Mat::Identity(2, 2), 1.5 * Mat::Identity(2, 2), g);
    Vec nu0(2);
    nu0 << 0.8, -0.4;
    const auto v = value_function(spec, 0.0, nu0, true);
    CHECK(v.value == doctest::Approx(0.5 * nu0.dot(p.front() * nu0)).epsilon(1e-6));
    CHECK(v.cross_checked);
    CHECK(v.consistent);
  }

  TEST_CASE("late start uses the remaining horizon") {
    const auto spec = quadratic_model(1.0);
    const double t0 = 0.4;
    const double p = 1.0 / std::tanh(1.0 - t0 + std::atanh(0.5));
    const Vec nu0 = Vec::Constant(1, 1.3);
    const auto v = value_function(spec, t0, nu0, false);
    CHECK(v.value == doctest::Approx(0.5 * p * 1.69).epsilon(1e-7));
  }

  TEST_CASE("log-cosh: three stationary points, two tied minimizers") {
    const double kappa = 4.0;
    const auto spec = logcosh_model(kappa);
    const double a = logcosh_positive_root(kappa);
    const auto set = enumerate_stationary(spec, 0.0, Vec::Zero(1));
    REQUIRE(set.solutions.size() == 3);
    CHECK(set.minimizer_count == 2);
    CHECK(set.min_cost == doctest::Approx(logcosh_cost(kappa, a)).epsilon(1e-8));
    int plus = 0;
    int minus = 0;
    for (const auto& s : set.solutions) {
      const double mt = s.m.back()(0);
      if (s.classification == Classification::kMinimizer) {
        CHECK(std::abs(mt) == doctest::Approx(a).epsilon(1e-8));
        (mt > 0 ? plus : minus) += 1;
        // Constant optimal control: eta is flat in time.
        CHECK(std::abs(s.eta.front()(0) - s.eta.back()(0)) < 1e-8);
      } else {
        CHECK(std::abs(mt) < 1e-8);
        CHECK(s.cost == doctest::Approx(0.0).epsilon(1e-10));
      }
    }
    CHECK(plus == 1);
    CHECK(minus == 1);
  }

  TEST_CASE("log-cosh: static U reproduces the shooting minimum") {
    const double kappa = 4.0;
    const auto spec = logcosh_model(kappa);
    const double a = logcosh_positive_root(kappa);
    CHECK(static_U(spec, 0.0, Vec::Zero(1), Vec::Constant(1, a)) ==
          doctest::Approx(logcosh_cost(kappa, a)).epsilon(1e-12));
    for (double nu : {0.0, 0.3, -0.7}) {
      CAPTURE(nu);
      const Vec nu0 = Vec::Constant(1, nu);
      const auto sm = minimize_static_U(spec, 0.0, nu0);
      const auto set = enumerate_stationary(spec, 0.0, nu0);
      CHECK(sm.value == doctest::Approx(set.min_cost).epsilon(1e-8));
      CHECK(sm.minimizers.size() == set.minimizer_count);
    }
  }

  TEST_CASE("radial log-cosh: minimizers fill a circle of radius a") {
    const double kappa = 4.0;
    const auto spec =
        make_model("radial", make_radial_terminal(logcosh_profile(kappa), 2),
                   RunningCost::kControlOnly);
    const auto sm = minimize_static_U(spec, 0.0, Vec::Zero(2));
    CHECK(sm.on_sphere);
    CHECK(sm.sphere_radius == doctest::Approx(logcosh_positive_root(kappa)).epsilon(1e-7));
    CHECK(sm.value == doctest::Approx(logcosh_cost(kappa, sm.sphere_radius)).epsilon(1e-10));
  }

  TEST_CASE("static U refuses models outside its reduction") {
    CHECK_THROWS_AS(static_U(quadratic_model(1.0), 0.0, Vec::Zero(1), Vec::Zero(1)), Error);
    auto drifted = logcosh_model(4.0);
    drifted.b = Mat::Constant(1, 1, 0.2);
    try {
      minimize_static_U(drifted, 0.0, Vec::Zero(1));
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kInvalidReduction);
    }
  }

  TEST_CASE("Delarue example: stationary trajectories follow w_t int w^-2") {
    const double delta = 0.1;
    const auto spec = make_model("delarue", make_delarue_terminal(0.0, 1.0, delta, -1.0),
                                 RunningCost::kFull);
    const auto set = enumerate_stationary(spec, 0.0, Vec::Zero(1));
    REQUIRE(set.solutions.size() == 3);
    CHECK(set.minimizer_count == 2);
    for (const auto& s : set.solutions) {
      const auto curves = delarue_riccati(0.0, s.grid, delta);
      const double mt = s.m.back()(0);
      const double sign = std::abs(mt) < 1e-6 ? 0.0 : (mt > 0 ? 1.0 : -1.0);
      double err = 0.0;
      for (std::size_t k = 0; k < s.grid.size(); ++k) {
        err = std::max(err, std::abs(s.m[k](0) - sign * curves.upper_trajectory(k)));
      }
      CAPTURE(mt);
      CHECK(err < 1e-5);
    }
    // The centre path costs more than either branch.
    CHECK(set.solutions.back().cost > set.min_cost);
  }

  TEST_CASE("gradient of the value is eta at t0 off the kink") {
    const auto spec = logcosh_model(4.0);
    const Vec nu0 = Vec::Constant(1, 0.5);
    const auto set = enumerate_stationary(spec, 0.0, nu0);
    const Vec grad = value_gradient_fd(spec, 0.0, nu0);
    CHECK(grad(0) == doctest::Approx(set.solutions.front().eta0(0)).epsilon(1e-5));
  }

  TEST_CASE("differentiability probe separates kink and smooth points") {
    const auto spec = logcosh_model(4.0);
    const auto kink = differentiability_probe(spec, 0.0, Vec::Zero(1));
    CHECK_FALSE(kink.differentiable);
    // One-sided quotients are -a and +a (eta0 = -+a on the two branches).
    const double a = logcosh_positive_root(4.0);
    CHECK(kink.axes[0].gap == doctest::Approx(2.0 * a).epsilon(1e-2));
    const auto smooth = differentiability_probe(spec, 0.0, Vec::Constant(1, 0.5));
    CHECK(smooth.differentiable);
    CHECK(smooth.axes[0].gap < smooth.axes[0].threshold);
  }

  TEST_CASE("discrete control gradient matches finite differences") {
    const auto spec = quadratic_model(0.7, 2, -0.2);
    Gen gen(33);
    Vec nu0(2);
    nu0 << 0.5, -1.0;
    std::vector<Vec> u(20);
    for (auto& x : u) x = gen.vec(2, -1.0, 1.0);
    std::vector<Vec> grad;
    discrete_control_cost(spec, 0.0, nu0, u, &grad);
    for (int rep = 0; rep < 6; ++rep) {
      const std::size_t cell = gen.index(u.size());
      const std::size_t comp = gen.index(2);
      CAPTURE(cell);
      const double h = 1e-6;
      auto up = u;
      auto dn = u;
      up[cell](static_cast<Eigen::Index>(comp)) += h;
      dn[cell](static_cast<Eigen::Index>(comp)) -= h;
      const double fd = (discrete_control_cost(spec, 0.0, nu0, up) -
                         discrete_control_cost(spec, 0.0, nu0, dn)) /
                        (2.0 * h);
      // L2 gradient: the partial derivative divided by the cell width.
      const double dt = 1.0 / static_cast<double>(u.size());
      CHECK(grad[cell](static_cast<Eigen::Index>(comp)) * dt ==
            doctest::Approx(fd).epsilon(1e-5));
    }
  }

  TEST_CASE("oc_cost integrates exactly on polynomials") {
    // m = t, beta = 1 on [0, 1]: 1/2 + 1/6 running, 1/2 terminal.
    const auto spec = quadratic_model(0.0);
    const TimeGrid g(0.0, 1.0, 10);
    std::vector<Vec> m(g.size());
    std::vector<Vec> beta(g.size(), Vec::Ones(1));
    for (std::size_t k = 0; k < g.size(); ++k) m[k] = Vec::Constant(1, g.at(k));
    CHECK(oc_cost(spec, g, m, beta) == doctest::Approx(0.5 + 1.0 / 6.0 + 0.5).epsilon(1e-14));
  }

  TEST_CASE("descent cross-check agrees with shooting") {
    const auto spec = logcosh_model(3.0);
    const Vec nu0 = Vec::Constant(1, 0.2);
    const auto v = value_function(spec, 0.0, nu0, true);
    CHECK(v.cross_checked);
    CHECK(v.consistent);
    CHECK(v.descent_value == doctest::Approx(v.value).epsilon(1e-4));
  }
}
