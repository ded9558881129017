#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include "mfsel/ode.hpp"

namespace mfsel::testing {

/// Seeded generator for property tests; the seed is printed on failure by
/// the callers through doctest CAPTURE.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  Vec vec(std::size_t d, double lo, double hi) {
    Vec v(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

/// Central difference gradient of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-5) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec e = Vec::Zero(x.size());
    e(i) = h;
    g(i) = (f(x + e) - f(x - e)) / (2.0 * h);
  }
  return g;
}

/// Central difference Jacobian of a vector function.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x,
                       double h = 1e-5) {
  Mat j(x.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec e = Vec::Zero(x.size());
    e(i) = h;
    j.col(i) = (f(x + e) - f(x - e)) / (2.0 * h);
  }
  return j;
}

}  // namespace mfsel::testing
