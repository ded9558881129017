#include "mfsel/potential.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "mfsel/error.hpp"

namespace mfsel {

double reminder(const Potential& p, const Vec& m) {
  const Vec g = p.gradient(m);
  return 0.5 * g.squaredNorm() + m.dot(g) - p.value(m);
}

namespace {

class ZeroPotential final : public Potential {
 public:
  explicit ZeroPotential(std::size_t dim) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  double value(const Vec&) const override { return 0.0; }
  Vec gradient(const Vec&) const override { return Vec::Zero(dim_); }
  Mat hessian(const Vec&) const override { return Mat::Zero(dim_, dim_); }
  PotentialBounds bounds() const override { return {}; }
  std::string name() const override { return "zero"; }
  bool is_even() const override { return true; }
  bool is_zero() const override { return true; }
  bool is_radial() const override { return true; }
  std::optional<QuadraticForm> quadratic_form() const override {
    return QuadraticForm{0.0, Vec::Zero(dim_)};
  }

 private:
  std::size_t dim_;
};

class QuadraticPotential final : public Potential {
 public:
  QuadraticPotential(std::size_t dim, double c, Vec kappa)
      : dim_(dim), c_(c), kappa_(std::move(kappa)) {}
  std::size_t dim() const override { return dim_; }
  double value(const Vec& m) const override {
    return 0.5 * c_ * m.squaredNorm() + kappa_.dot(m);
  }
  Vec gradient(const Vec& m) const override { return c_ * m + kappa_; }
  Mat hessian(const Vec&) const override {
    return c_ * Mat::Identity(dim_, dim_);
  }
  PotentialBounds bounds() const override {
    const double ac = std::abs(c_);
    const bool flat = c_ == 0.0;
    return PotentialBounds{flat ? kappa_.norm() : kUnbounded, ac,
                           flat ? 0.0 : kUnbounded, ac, 0.0, ac};
  }
  std::string name() const override {
    std::ostringstream os;
    os << "quadratic(" << c_;
    if (kappa_.norm() != 0.0) os << "," << kappa_(0);
    os << ")";
    return os.str();
  }
  bool is_even() const override { return kappa_.norm() == 0.0; }
  bool is_radial() const override { return is_even(); }
  bool is_zero() const override { return c_ == 0.0 && kappa_.norm() == 0.0; }
  std::optional<QuadraticForm> quadratic_form() const override {
    return QuadraticForm{c_, kappa_};
  }

 private:
  std::size_t dim_;
  double c_;
  Vec kappa_;
};

// log cosh x without overflow; even to the last bit.
double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double odd_tanh(double x) { return std::copysign(std::tanh(std::abs(x)), x); }

double sech2(double x) {
  const double t = std::tanh(std::abs(x));
  return 1.0 - t * t;
}

// sup of x sech^2 x, attained where x tanh x = 1/2.
constexpr double kMaxXSech2 = 0.44770;
// sup of |2 sech^2 x tanh x| = 4 / (3 sqrt 3).
constexpr double kMaxSech2Tanh2 = 0.76981;
// sup of |2 x sech^2 x tanh x|.
constexpr double kMaxXSech2Tanh2 = 0.63979;

class LogCoshPotential final : public Potential {
 public:
  explicit LogCoshPotential(double kappa) : kappa_(kappa) {}
  std::size_t dim() const override { return 1; }
  double value(const Vec& m) const override { return -kappa_ * log_cosh(m(0)); }
  Vec gradient(const Vec& m) const override {
    return Vec::Constant(1, -kappa_ * odd_tanh(m(0)));
  }
  Mat hessian(const Vec& m) const override {
    return Mat::Constant(1, 1, -kappa_ * sech2(m(0)));
  }
  PotentialBounds bounds() const override {
    return PotentialBounds{kappa_,
                           kappa_,
                           kappa_ * kMaxXSech2 * 1.0001,
                           kappa_,
                           kappa_ * kMaxSech2Tanh2 * 1.0001,
                           kappa_ * 1.0001};
  }
  std::string name() const override {
    std::ostringstream os;
    os << "logcosh(" << kappa_ << ")";
    return os.str();
  }
  bool is_even() const override { return true; }

 private:
  double kappa_;
};

// Biweight kernel K(s) = 15/(16 rho) (1 - (s/rho)^2)^2 on |s| < rho and its
// iterated integrals: cdf(y) = P[S <= y], ramp(y) = E[(y - S)_+],
// half_sq(y) = E[(y - S)_+^2] / 2.
struct Biweight {
  double rho;

  double density(double y) const {
    const double u = y / rho;
    if (u <= -1.0 || u >= 1.0) return 0.0;
    const double q = 1.0 - u * u;
    return 15.0 / (16.0 * rho) * q * q;
  }
  double cdf(double y) const {
    const double u = y / rho;
    if (u <= -1.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double u3 = u * u * u;
    return 0.5 + 15.0 / 16.0 * (u - 2.0 * u3 / 3.0 + u3 * u * u / 5.0);
  }
  double ramp(double y) const {
    const double u = y / rho;
    if (u <= -1.0) return 0.0;
    if (u >= 1.0) return y;
    const double u2 = u * u;
    const double u4 = u2 * u2;
    return rho * (0.5 * (u + 1.0) +
                  15.0 / 16.0 * (u2 / 2.0 - u4 / 6.0 + u4 * u2 / 30.0 - 11.0 / 30.0));
  }
  double half_sq(double y) const {
    const double u = y / rho;
    if (u <= -1.0) return 0.0;
    if (u >= 1.0) return 0.5 * (y * y + rho * rho / 7.0);
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double u5 = u3 * u2;
    const double u7 = u5 * u2;
    return rho * rho *
           (0.25 * (u + 1.0) * (u + 1.0) +
            15.0 / 16.0 *
                (u3 / 6.0 - u5 / 30.0 + u7 / 210.0 - 11.0 * u / 30.0 - 8.0 / 35.0));
  }
};

class DelaruePotential final : public Potential {
 public:
  DelaruePotential(double r, double rho) : r_(r), rho_(rho), kernel_{rho} {}
  std::size_t dim() const override { return 1; }

  double value(const Vec& m) const override {
    const double a = std::abs(m(0));
    if (rho_ == 0.0) {
      const double h = a <= r_ ? 0.5 * a * a : r_ * a - 0.5 * r_ * r_;
      return -h / r_;
    }
    const double smooth = 0.5 * (a * a + rho_ * rho_ / 7.0);
    return -(smooth - kernel_.half_sq(a - r_) - kernel_.half_sq(-a - r_)) / r_;
  }

  Vec gradient(const Vec& m) const override {
    const double x = m(0);
    const double a = std::abs(x);
    double mag = 0.0;
    if (rho_ == 0.0) {
      mag = a <= r_ ? a / r_ : 1.0;
    } else {
      mag = (a - kernel_.ramp(a - r_) + kernel_.ramp(-a - r_)) / r_;
    }
    return Vec::Constant(1, -std::copysign(mag, x));
  }

  Mat hessian(const Vec& m) const override {
    const double a = std::abs(m(0));
    if (rho_ == 0.0) {
      if (a == r_) {
        throw Error(ErrorKind::kKinkQuery,
                    "hessian of the unmollified coupling at the kink |m| = r");
      }
      return Mat::Constant(1, 1, a < r_ ? -1.0 / r_ : 0.0);
    }
    const double inside = 1.0 - kernel_.cdf(a - r_) - kernel_.cdf(-a - r_);
    return Mat::Constant(1, 1, -inside / r_);
  }

  PotentialBounds bounds() const override {
    const double third = rho_ > 0.0 ? 15.0 / (16.0 * rho_) / r_ : kUnbounded;
    return PotentialBounds{1.0,
                           1.0 / r_,
                           (r_ + rho_) / r_,
                           1.0 / r_,
                           third,
                           1.0 / r_ + (r_ + rho_) * third};
  }

  std::string name() const override {
    std::ostringstream os;
    os << "delarue(r=" << r_ << ",rho=" << rho_ << ")";
    return os.str();
  }
  bool is_even() const override { return true; }

  double r() const { return r_; }

 private:
  double r_;
  double rho_;
  Biweight kernel_;
};

class RadialPotential final : public Potential {
 public:
  RadialPotential(RadialProfile p, std::size_t dim) : p_(std::move(p)), dim_(dim) {}
  std::size_t dim() const override { return dim_; }

  double value(const Vec& m) const override { return p_.value(radius(m)); }

  Vec gradient(const Vec& m) const override {
    const double r = radius(m);
    if (r == 0.0) return Vec::Zero(dim_);
    return (p_.d1(r) / r) * m;
  }

  Mat hessian(const Vec& m) const override {
    const double r = radius(m);
    const Mat eye = Mat::Identity(dim_, dim_);
    if (r < 1e-8) return p_.d2(r) * eye;
    const Vec n = m / r;
    const Mat nn = n * n.transpose();
    const double tangential = p_.d1(r) / r;
    return p_.d2(r) * nn + tangential * (eye - nn);
  }

  PotentialBounds bounds() const override {
    return PotentialBounds{p_.d1_sup,
                           p_.d2_sup,
                           p_.r_d2_sup,
                           p_.d2_sup,
                           4.0 * p_.d3_sup,
                           p_.d2_sup + p_.r_d3_sup};
  }

  std::string name() const override {
    std::ostringstream os;
    os << "radial_" << p_.name << "_d" << dim_;
    return os.str();
  }
  bool is_even() const override { return true; }
  bool is_radial() const override { return true; }

 private:
  static double radius(const Vec& m) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) s += m(i) * m(i);
    return std::sqrt(s);
  }

  RadialProfile p_;
  std::size_t dim_;
};

}  // namespace

PotentialPtr make_zero(std::size_t dim) {
  return std::make_shared<ZeroPotential>(dim);
}

PotentialPtr make_quadratic(std::size_t dim, double c, Vec kappa) {
  if (kappa.size() == 0) kappa = Vec::Zero(static_cast<Eigen::Index>(dim));
  if (static_cast<std::size_t>(kappa.size()) != dim) {
    throw Error(ErrorKind::kInvalidParameter, "linear coefficient has wrong dimension");
  }
  return std::make_shared<QuadraticPotential>(dim, c, std::move(kappa));
}

PotentialPtr make_logcosh_terminal(double kappa) {
  if (!(kappa > 2.0)) {
    throw Error(ErrorKind::kInvalidParameter,
                "log-cosh needs kappa > 2 for two minimizers, got " +
                    std::to_string(kappa));
  }
  return std::make_shared<LogCoshPotential>(kappa);
}

PotentialPtr make_delarue_coupling(double r, double rho) {
  if (!(r > 0.0) || !(rho >= 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "delarue coupling needs r > 0, rho >= 0");
  }
  if (rho >= r) {
    throw Error(ErrorKind::kInvalidParameter,
                "mollification width must be smaller than r");
  }
  return std::make_shared<DelaruePotential>(r, rho);
}

PotentialPtr make_delarue_terminal(double b, double T, double delta, double rho) {
  const auto grid = TimeGrid::with_density(0.0, T, 10000.0);
  const double r = delarue_riccati(b, grid, delta).r_delta;
  return make_delarue_coupling(r, rho < 0.0 ? r / 50.0 : rho);
}

RadialProfile logcosh_profile(double kappa) {
  if (!(kappa > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "log-cosh profile needs kappa > 0");
  }
  RadialProfile p;
  std::ostringstream os;
  os << "logcosh(" << kappa << ")";
  p.name = os.str();
  p.value = [kappa](double r) { return -kappa * log_cosh(r); };
  p.d1 = [kappa](double r) { return -kappa * odd_tanh(r); };
  p.d2 = [kappa](double r) { return -kappa * sech2(r); };
  p.d1_sup = kappa;
  p.d2_sup = kappa;
  p.d3_sup = kappa * kMaxSech2Tanh2 * 1.0001;
  p.r_d2_sup = kappa * kMaxXSech2 * 1.0001;
  p.r_d3_sup = kappa * kMaxXSech2Tanh2 * 1.0001;
  return p;
}

PotentialPtr make_radial_terminal(RadialProfile profile, std::size_t dim) {
  if (!profile.value || !profile.d1 || !profile.d2) {
    throw Error(ErrorKind::kInvalidParameter, "radial profile is incomplete");
  }
  if (dim < 1 || dim > 2) {
    throw Error(ErrorKind::kInvalidParameter, "radial potentials support d = 1 or 2");
  }
  if (std::abs(profile.d1(0.0)) > 1e-12) {
    throw Error(ErrorKind::kInvalidParameter,
                "radial profile needs g~'(0) = 0 for a continuous gradient");
  }
  return std::make_shared<RadialPotential>(std::move(profile), dim);
}

double logcosh_positive_root(double kappa) {
  if (!(kappa > 2.0)) {
    throw Error(ErrorKind::kInvalidParameter, "no positive root for kappa <= 2");
  }
  // h(a) = 2a - kappa tanh a is convex on a > 0; Newton from the right of
  // the root converges monotonically.
  double a = kappa / 2.0 + 1.0;
  for (int it = 0; it < 100; ++it) {
    const double h = 2.0 * a - kappa * std::tanh(a);
    const double dh = 2.0 - kappa * sech2(a);
    const double step = h / dh;
    a -= step;
    if (std::abs(step) < 1e-15 * a) break;
  }
  return a;
}

}  // namespace mfsel
