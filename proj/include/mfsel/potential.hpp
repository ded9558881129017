#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "mfsel/ode.hpp"

namespace mfsel {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Declared sup-norms and Lipschitz constants of grad p, hess p and
/// (hess p) m. Infinite entries mean "not bounded" (quadratic growth).
struct PotentialBounds {
  double grad_sup = 0.0;
  double hess_sup = 0.0;
  double hess_m_sup = 0.0;
  double grad_lip = 0.0;
  double hess_lip = 0.0;
  double hess_m_lip = 0.0;
};

/// Coefficients of p(m) = c/2 |m|^2 + kappa . m, exposed by potentials for
/// which the closed-form Riccati field applies.
struct QuadraticForm {
  double curvature = 0.0;
  Vec linear;
};

class Potential {
 public:
  virtual ~Potential() = default;

  virtual std::size_t dim() const = 0;
  virtual double value(const Vec& m) const = 0;
  virtual Vec gradient(const Vec& m) const = 0;
  virtual Mat hessian(const Vec& m) const = 0;
  virtual PotentialBounds bounds() const = 0;
  virtual std::string name() const = 0;
  virtual bool is_even() const { return false; }
  virtual bool is_zero() const { return false; }
  /// p(m) depends on |m| only (in one dimension: p is even).
  virtual bool is_radial() const { return dim() == 1 && is_even(); }
  virtual std::optional<QuadraticForm> quadratic_form() const {
    return std::nullopt;
  }
};

using PotentialPtr = std::shared_ptr<const Potential>;

/// 1/2 |grad p(m)|^2 + m . grad p(m) - p(m)
double reminder(const Potential& p, const Vec& m);

PotentialPtr make_zero(std::size_t dim);

/// c/2 |m|^2 + kappa . m
PotentialPtr make_quadratic(std::size_t dim, double c, Vec kappa = {});

/// -kappa log cosh(m) in one dimension; requires kappa > 2.
PotentialPtr make_logcosh_terminal(double kappa);

/// Concave even potential whose derivative is the piecewise-linear
/// coupling -m/r on |m| <= r and -sign(m) outside, convolved with a
/// biweight bump of half-width rho (rho = 0 keeps the kinks).
PotentialPtr make_delarue_coupling(double r, double rho);

/// Same, with r = r_delta computed from the Riccati weight of the example
/// for drift b on [0, T]. A negative rho selects the default r_delta / 50.
PotentialPtr make_delarue_terminal(double b, double T, double delta, double rho);

/// Profile g~ of a radial potential g(m) = g~(|m|).
struct RadialProfile {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  double d1_sup = kUnbounded;
  double d2_sup = kUnbounded;
  double d3_sup = kUnbounded;
  double r_d2_sup = kUnbounded;  ///< sup r |g~''(r)|
  double r_d3_sup = kUnbounded;  ///< sup r |g~'''(r)|
};

RadialProfile logcosh_profile(double kappa);

PotentialPtr make_radial_terminal(RadialProfile profile, std::size_t dim);

/// Root a > 0 of 2a = kappa tanh(a) (the positive constant optimal control
/// of the log-cosh example on a unit horizon), by Newton from a safe start.
double logcosh_positive_root(double kappa);

}  // namespace mfsel
