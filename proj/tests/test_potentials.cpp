#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mfsel/error.hpp"
#include "mfsel/model.hpp"
#include "mfsel/potential.hpp"
#include "support.hpp"

using namespace mfsel;
using mfsel::testing::fd_gradient;
using mfsel::testing::fd_jacobian;
using mfsel::testing::Gen;

namespace {

std::vector<PotentialPtr> catalogue() {
  Vec k2(2);
  k2 << 0.3, -0.2;
  return {
      make_zero(1),
      make_quadratic(1, 1.5, Vec::Constant(1, 0.4)),
      make_quadratic(2, -0.5, k2),
      make_logcosh_terminal(4.0),
      make_logcosh_terminal(2.5),
      make_delarue_coupling(0.4, 0.05),
      make_delarue_coupling(1.0, 0.3),
      make_radial_terminal(logcosh_profile(4.0), 2),
      make_radial_terminal(logcosh_profile(3.0), 1),
  };
}

// Avoid the exact kinks and the radial origin where FD stencils straddle
// a non-smooth point.
Vec sample_point(Gen& gen, std::size_t d) {
  Vec m = gen.vec(d, -3.0, 3.0);
  if (m.norm() < 1e-2) m(0) += 0.1;
  return m;
}

// Biweight-mollified ramp derivative by midpoint quadrature (independent
// of the closed forms).
double mollified_slope(double m, double r, double rho) {
  const int n = 20000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s = -rho + (i + 0.5) * 2.0 * rho / n;
    const double u = s / rho;
    const double k = 15.0 / (16.0 * rho) * (1.0 - u * u) * (1.0 - u * u);
    const double x = m - s;
    acc += k * -std::clamp(x / r, -1.0, 1.0);
  }
  return acc * 2.0 * rho / n;
}

}  // namespace

TEST_SUITE("potentials") {
  TEST_CASE("gradients and Hessians agree with finite differences") {
    Gen gen(11);
    for (const auto& p : catalogue()) {
      CAPTURE(p->name());
      for (int rep = 0; rep < 40; ++rep) {
        const Vec m = sample_point(gen, p->dim());
        CAPTURE(m.transpose());
        const Vec g = p->gradient(m);
        const Vec gfd = fd_gradient([&](const Vec& x) { return p->value(x); }, m);
        CHECK((g - gfd).lpNorm<Eigen::Infinity>() < 1e-6 * (1.0 + g.norm()));
        const Mat h = p->hessian(m);
        const Mat hfd = fd_jacobian([&](const Vec& x) { return p->gradient(x); }, m);
        CHECK((h - hfd).lpNorm<Eigen::Infinity>() < 1e-5 * (1.0 + h.norm()));
        CHECK((h - h.transpose()).norm() == 0.0);
      }
    }
  }

  TEST_CASE("declared bounds hold on samples") {
    Gen gen(12);
    for (const auto& p : catalogue()) {
      CAPTURE(p->name());
      const auto b = p->bounds();
      for (int rep = 0; rep < 400; ++rep) {
        const Vec m = gen.vec(p->dim(), -6.0, 6.0);
        const Mat h = p->hessian(m);
        CHECK(p->gradient(m).norm() <= b.grad_sup * (1 + 1e-12));
        CHECK(h.operatorNorm() <= b.hess_sup * (1 + 1e-12));
        CHECK((h * m).norm() <= b.hess_m_sup * (1 + 1e-12));
      }
    }
  }

  TEST_CASE("even potentials are even, odd gradients are exact") {
    Gen gen(13);
    for (const auto& p : catalogue()) {
      if (!p->is_even()) continue;
      CAPTURE(p->name());
      for (int rep = 0; rep < 50; ++rep) {
        const Vec m = gen.vec(p->dim(), -4.0, 4.0);
        CHECK(p->value(-m) == p->value(m));
        CHECK(p->gradient(-m) == -p->gradient(m));
      }
      CHECK(p->gradient(Vec::Zero(static_cast<Eigen::Index>(p->dim()))).norm() == 0.0);
    }
  }

  TEST_CASE("reminder identity: grad R_p = hess p (m + grad p)") {
    Gen gen(14);
    for (const auto& p : catalogue()) {
      CAPTURE(p->name());
      for (int rep = 0; rep < 30; ++rep) {
        const Vec m = sample_point(gen, p->dim());
        const Vec lhs = fd_gradient([&](const Vec& x) { return reminder(*p, x); }, m);
        const Vec rhs = p->hessian(m) * (m + p->gradient(m));
        CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-5 * (1.0 + rhs.norm()));
      }
    }
  }

  TEST_CASE("quadratic closed forms") {
    const auto q = make_quadratic(1, 2.0, Vec::Constant(1, 0.5));
    const Vec m = Vec::Constant(1, 1.5);
    CHECK(q->value(m) == doctest::Approx(0.5 * 2.0 * 2.25 + 0.75));
    CHECK(q->gradient(m)(0) == doctest::Approx(3.5));
    // R_p = 1/2 (c m + k)^2 + m (c m + k) - (c/2 m^2 + k m) = 1/2 (cm+k)^2 + c/2 m^2
    CHECK(reminder(*q, m) == doctest::Approx(0.5 * 3.5 * 3.5 + 2.25));
    const auto qf = q->quadratic_form();
    REQUIRE(qf.has_value());
    CHECK(qf->curvature == 2.0);
  }

  TEST_CASE("log-cosh terminal") {
    const auto g = make_logcosh_terminal(4.0);
    CHECK(g->value(Vec::Constant(1, 800.0)) ==
          doctest::Approx(-4.0 * (800.0 - std::log(2.0))));
    CHECK(g->gradient(Vec::Constant(1, 1.0))(0) == doctest::Approx(-4.0 * std::tanh(1.0)));
    CHECK_THROWS_AS(make_logcosh_terminal(2.0), Error);
    CHECK_THROWS_AS(make_logcosh_terminal(1.0), Error);
  }

  TEST_CASE("positive root of 2a = kappa tanh a") {
    for (double kappa : {2.5, 3.0, 4.0, 10.0}) {
      CAPTURE(kappa);
      // Bisection oracle on [1e-3, kappa].
      double lo = 1e-3;
      double hi = kappa;
      for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (2.0 * mid - kappa * std::tanh(mid) < 0.0 ? lo : hi) = mid;
      }
      CHECK(logcosh_positive_root(kappa) == doctest::Approx(lo).epsilon(1e-12));
    }
    CHECK(logcosh_positive_root(4.0) == doctest::Approx(1.9150080).epsilon(1e-6));
  }

  TEST_CASE("Delarue coupling: kinked and mollified slopes") {
    const double r = 0.4;
    const auto kinked = make_delarue_coupling(r, 0.0);
    CHECK(kinked->gradient(Vec::Constant(1, 0.2))(0) == doctest::Approx(-0.5));
    CHECK(kinked->gradient(Vec::Constant(1, 0.9))(0) == -1.0);
    CHECK(kinked->gradient(Vec::Constant(1, -0.9))(0) == 1.0);
    CHECK_THROWS_AS(kinked->hessian(Vec::Constant(1, r)), Error);
    CHECK_THROWS_AS(make_delarue_coupling(r, r), Error);

    const double rho = 0.1;
    const auto smooth = make_delarue_coupling(r, rho);
    for (double m : {-0.7, -0.45, -0.35, -0.1, 0.0, 0.12, 0.31, 0.38, 0.42, 0.55, 1.2}) {
      CAPTURE(m);
      CHECK(smooth->gradient(Vec::Constant(1, m))(0) ==
            doctest::Approx(mollified_slope(m, r, rho)).epsilon(1e-7));
    }
    // Away from the kinks the mollifier changes nothing.
    CHECK(smooth->gradient(Vec::Constant(1, 0.2))(0) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(smooth->gradient(Vec::Constant(1, 0.6))(0) == -1.0);
  }

  TEST_CASE("Delarue terminal uses r_delta") {
    const auto g = make_delarue_terminal(0.0, 1.0, 0.1, -1.0);
    const double r = (1.0 - std::exp(-1.8)) / 2.0;
    CHECK(g->gradient(Vec::Constant(1, 0.5 * r))(0) == doctest::Approx(-0.5).epsilon(1e-6));
  }

  TEST_CASE("radial potential") {
    const auto g = make_radial_terminal(logcosh_profile(4.0), 2);
    Vec m(2);
    m << 0.6, -0.8;
    CHECK(g->value(m) == doctest::Approx(-4.0 * std::log(std::cosh(1.0))));
    CHECK((g->gradient(m) + 4.0 * std::tanh(1.0) * m).norm() < 1e-14);
    // Quarter-turn equivariance of the gradient is exact.
    Vec rm(2);
    rm << -m(1), m(0);
    const Vec ga = g->gradient(m);
    const Vec gb = g->gradient(rm);
    CHECK(gb(0) == -ga(1));
    CHECK(gb(1) == ga(0));
    // Hessian is continuous through the origin: limit g~''(0) I.
    const Mat h0 = g->hessian(Vec::Zero(2));
    Vec tiny(2);
    tiny << 1e-5, 2e-5;
    CHECK((h0 + 4.0 * Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK((g->hessian(tiny) - h0).norm() < 1e-8);
    CHECK(g->is_radial());
    RadialProfile bad = logcosh_profile(4.0);
    bad.d1 = [](double) { return 1.0; };
    CHECK_THROWS_AS(make_radial_terminal(bad, 2), Error);
  }
}

TEST_SUITE("model") {
  TEST_CASE("N-player cost gradients are exact derivatives") {
    Gen gen(21);
    auto spec = make_model("q", make_logcosh_terminal(4.0), RunningCost::kFull);
    spec.f = make_quadratic(1, 0.7, Vec::Constant(1, 0.1));
    for (double n : {1.0, 10.0, 250.0, static_cast<double>(INFINITY)}) {
      CAPTURE(n);
      for (int rep = 0; rep < 30; ++rep) {
        const Vec m = sample_point(gen, 1);
        const Vec gf = fd_gradient([&](const Vec& x) { return cost_FN(spec, n, x); }, m);
        const Vec gg = fd_gradient([&](const Vec& x) { return cost_GN(spec, n, x); }, m);
        CHECK((grad_FN(spec, n, m) - gf).norm() < 1e-5 * (1.0 + gf.norm()));
        CHECK((grad_GN(spec, n, m) - gg).norm() < 1e-5 * (1.0 + gg.norm()));
      }
    }
  }

  TEST_CASE("control-only running cost") {
    const auto spec = make_model("lc", make_logcosh_terminal(4.0), RunningCost::kControlOnly);
    const Vec m = Vec::Constant(1, 0.8);
    CHECK(cost_FN(spec, 10.0, m) == 0.0);
    CHECK(grad_FN(spec, 10.0, m).norm() == 0.0);
    CHECK(terminal_gradient(spec, m)(0) == doctest::Approx(0.8 - 4.0 * std::tanh(0.8)));
    auto bad = spec;
    bad.f = make_quadratic(1, 1.0);
    CHECK_THROWS_AS(bad.validate(), Error);
  }

  TEST_CASE("model validation") {
    auto spec = make_model("q", make_quadratic(1, 1.0), RunningCost::kFull);
    CHECK_NOTHROW(spec.validate_stochastic());
    spec.sigma = 0.0;
    CHECK_NOTHROW(spec.validate());
    CHECK_THROWS_AS(spec.validate_stochastic(), Error);
    spec.sigma = 1.0;
    spec.T = -1.0;
    CHECK_THROWS_AS(spec.validate(), Error);
    spec.T = 1.0;
    spec.nu0 = Vec::Zero(2);
    CHECK_THROWS_AS(spec.validate(), Error);
    CHECK_THROWS_AS(cost_FN(make_model("q", make_quadratic(1, 1.0), RunningCost::kFull), 0.5,
                            Vec::Zero(1)),
                    Error);
  }
}
