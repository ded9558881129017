#include "mfsel/model.hpp"

#include <cmath>

#include "mfsel/error.hpp"

namespace mfsel {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::kInvalidParameter, what);
}

double inverse(double n_players) {
  require(n_players >= 1.0, "number of players must be >= 1");
  return std::isinf(n_players) ? 0.0 : 1.0 / n_players;
}

}  // namespace

void ModelSpec::validate() const {
  require(dim == 1 || dim == 2, "model dimension must be 1 or 2");
  const auto d = static_cast<Eigen::Index>(dim);
  require(b.rows() == d && b.cols() == d, "drift matrix must be d x d");
  require(b.allFinite(), "drift matrix must be finite");
  require(f != nullptr && g != nullptr, "model needs both potentials");
  require(f->dim() == dim && g->dim() == dim, "potential dimension mismatch");
  require(nu0.size() == d && nu0.allFinite(), "nu0 must be a finite d-vector");
  require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be >= 0");
  require(std::isfinite(T) && T > 0.0, "horizon T must be > 0");
  require(xi.stddev >= 0.0 && xi.truncation > 0.0, "invalid initial law");
  require(running == RunningCost::kFull || f->is_zero(),
          "control-only running cost requires f = 0");
}

void ModelSpec::validate_stochastic() const {
  validate();
  require(sigma > 0.0, "stochastic solves require sigma > 0");
}

ModelSpec make_model(std::string name, PotentialPtr g, RunningCost running,
                     double sigma, double T, double drift) {
  ModelSpec s;
  s.name = std::move(name);
  s.dim = g->dim();
  const auto d = static_cast<Eigen::Index>(s.dim);
  s.b = drift * Mat::Identity(d, d);
  s.sigma = sigma;
  s.T = T;
  s.running = running;
  s.f = make_zero(s.dim);
  s.g = std::move(g);
  s.nu0 = Vec::Zero(d);
  s.validate();
  return s;
}

double running_cost(const ModelSpec& spec, const Vec& m) {
  if (spec.running == RunningCost::kControlOnly) return 0.0;
  return 0.5 * m.squaredNorm() + spec.f->value(m);
}

Vec running_gradient(const ModelSpec& spec, const Vec& m) {
  if (spec.running == RunningCost::kControlOnly) return Vec::Zero(m.size());
  return m + spec.f->gradient(m);
}

double terminal_cost(const ModelSpec& spec, const Vec& m) {
  return 0.5 * m.squaredNorm() + spec.g->value(m);
}

Vec terminal_gradient(const ModelSpec& spec, const Vec& m) {
  return m + spec.g->gradient(m);
}

double cost_FN(const ModelSpec& spec, double n_players, const Vec& m) {
  const double inv = inverse(n_players);
  if (spec.running == RunningCost::kControlOnly) return 0.0;
  return 0.5 * m.squaredNorm() + spec.f->value(m) + inv * reminder(*spec.f, m);
}

Vec grad_FN(const ModelSpec& spec, double n_players, const Vec& m) {
  const double inv = inverse(n_players);
  if (spec.running == RunningCost::kControlOnly) return Vec::Zero(m.size());
  const Vec base = m + spec.f->gradient(m);
  if (inv == 0.0 || spec.f->is_zero()) return base;
  return base + inv * (spec.f->hessian(m) * base);
}

double cost_GN(const ModelSpec& spec, double n_players, const Vec& m) {
  const double inv = inverse(n_players);
  return 0.5 * m.squaredNorm() + spec.g->value(m) + inv * reminder(*spec.g, m);
}

Vec grad_GN(const ModelSpec& spec, double n_players, const Vec& m) {
  const double inv = inverse(n_players);
  const Vec base = m + spec.g->gradient(m);
  if (inv == 0.0 || spec.g->is_zero()) return base;
  return base + inv * (spec.g->hessian(m) * base);
}

}  // namespace mfsel
