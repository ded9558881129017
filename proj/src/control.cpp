#include "mfsel/control.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include <boost/math/tools/minima.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "mfsel/error.hpp"
#include "mfsel/parallel.hpp"
#include "mfsel/rng.hpp"

namespace mfsel {

std::string_view to_string(Classification c) {
  return c == Classification::kMinimizer ? "minimizer" : "stationary-only";
}

namespace {

struct PontryaginPath {
  std::vector<Vec> m;
  std::vector<Vec> eta;
};

PontryaginPath integrate_pontryagin(const ModelSpec& spec, const TimeGrid& grid,
                                    const Vec& nu0, const Vec& eta0) {
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const Mat bt = spec.b.transpose();
  VectorField rhs = [&](double, const Vec& x) -> Vec {
    const auto m = x.head(d);
    const auto eta = x.tail(d);
    Vec out(2 * d);
    out.head(d) = spec.b * m - eta;
    out.tail(d) = -(bt * eta + running_gradient(spec, m));
    return out;
  };
  Vec x0(2 * d);
  x0 << nu0, eta0;
  const auto states = integrate_ode(rhs, x0, grid, Direction::kForward);
  PontryaginPath p;
  p.m.reserve(states.size());
  p.eta.reserve(states.size());
  for (const auto& x : states) {
    p.m.emplace_back(x.head(d));
    p.eta.emplace_back(x.tail(d));
  }
  return p;
}

Vec terminal_mismatch(const ModelSpec& spec, const PontryaginPath& p) {
  return p.eta.back() - terminal_gradient(spec, p.m.back());
}

Vec residual_of(const ModelSpec& spec, const TimeGrid& grid, const Vec& nu0,
                const Vec& eta0) {
  try {
    return terminal_mismatch(spec, integrate_pontryagin(spec, grid, nu0, eta0));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kIntegrationDiverged) throw;
    return Vec::Constant(eta0.size(), INFINITY);
  }
}

double finite_or_inf(double x) { return std::isfinite(x) ? x : INFINITY; }

double bound_or(double value, double fallback) {
  return std::isfinite(value) ? value : fallback;
}

}  // namespace

double oc_cost(const ModelSpec& spec, const TimeGrid& grid,
               const std::vector<Vec>& m, const std::vector<Vec>& beta) {
  const std::size_t n = grid.size();
  std::vector<double> integrand(n);
  for (std::size_t k = 0; k < n; ++k) {
    integrand[k] = 0.5 * beta[k].squaredNorm() + running_cost(spec, m[k]);
  }
  const double h = grid.dt();
  double integral = 0.0;
  const std::size_t steps = grid.steps();
  if (steps % 2 == 0) {
    for (std::size_t k = 0; k + 2 < n; k += 2) {
      integral += h / 3.0 * (integrand[k] + 4.0 * integrand[k + 1] + integrand[k + 2]);
    }
  } else {
    for (std::size_t k = 0; k + 1 < n; ++k) {
      integral += 0.5 * h * (integrand[k] + integrand[k + 1]);
    }
  }
  return integral + terminal_cost(spec, m.back());
}

OCSolution shoot(const ModelSpec& spec, double t0, const Vec& nu0,
                 const Vec& eta0_guess, const ShootingOptions& opts) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.dim);
  if (nu0.size() != d || eta0_guess.size() != d) {
    throw Error(ErrorKind::kInvalidInput, "shooting data has wrong dimension");
  }
  const TimeGrid grid = TimeGrid::with_density(t0, spec.T, opts.steps_per_unit);

  Vec eta0 = eta0_guess;
  Vec r = residual_of(spec, grid, nu0, eta0);
  double rn = finite_or_inf(r.norm());
  int it = 0;
  for (; it < opts.max_iterations && rn >= opts.tolerance; ++it) {
    Mat jac(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      Vec probe = eta0;
      probe(k) += opts.fd_step;
      jac.col(k) = (residual_of(spec, grid, nu0, probe) - r) / opts.fd_step;
    }
    if (!jac.allFinite()) break;
    Eigen::ColPivHouseholderQR<Mat> qr(jac);
    if (qr.rank() < d) break;
    const Vec step = qr.solve(-r);
    double lambda = 1.0;
    bool accepted = false;
    while (lambda > 1e-8) {
      const Vec trial = eta0 + lambda * step;
      const Vec rt = residual_of(spec, grid, nu0, trial);
      const double rtn = finite_or_inf(rt.norm());
      if (rtn < (1.0 - 1e-4 * lambda) * rn) {
        eta0 = trial;
        r = rt;
        rn = rtn;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;
  }
  if (!(rn < opts.tolerance)) {
    throw Error(ErrorKind::kNoConvergence,
                "shooting stalled with residual " + std::to_string(rn) +
                    " after " + std::to_string(it) + " iterations");
  }

  auto path = integrate_pontryagin(spec, grid, nu0, eta0);
  OCSolution sol{grid, std::move(path.m), std::move(path.eta), {}, eta0, 0.0,
                 Classification::kStationaryOnly, 0.0};
  sol.beta.reserve(sol.eta.size());
  for (const auto& e : sol.eta) sol.beta.emplace_back(-e);
  sol.terminal_residual = (sol.eta.back() - terminal_gradient(spec, sol.m.back())).norm();
  sol.cost = oc_cost(spec, grid, sol.m, sol.beta);
  return sol;
}

double control_scale(const ModelSpec& spec, const Vec& nu0) {
  const double nu = nu0.norm();
  const auto gb = spec.g->bounds();
  const double g_sup = bound_or(gb.grad_sup, (1.0 + gb.grad_lip) * (nu + 1.0) +
                                                 spec.g->gradient(Vec::Zero(nu0.size())).norm());
  double f_sup = 0.0;
  if (spec.running == RunningCost::kFull) {
    const auto fb = spec.f->bounds();
    f_sup = bound_or(fb.grad_sup, (1.0 + fb.grad_lip) * (nu + 1.0));
  }
  const double b_norm = spec.b.norm();
  return (nu + g_sup + spec.T * (1.0 + f_sup)) * std::exp(b_norm * spec.T);
}

std::vector<Vec> default_start_grid(const ModelSpec& spec, const Vec& nu0,
                                    std::size_t lattice_points) {
  if (lattice_points < 1) {
    throw Error(ErrorKind::kInvalidParameter, "start lattice needs at least one point");
  }
  const double w = control_scale(spec, nu0);
  std::vector<double> axis(lattice_points, 0.0);
  if (lattice_points > 1) {
    for (std::size_t i = 0; i < lattice_points; ++i) {
      axis[i] = -w + 2.0 * w * static_cast<double>(i) /
                         static_cast<double>(lattice_points - 1);
    }
    if (lattice_points % 2 == 1) axis[lattice_points / 2] = 0.0;
  }
  std::vector<Vec> starts;
  if (spec.dim == 1) {
    for (double a : axis) starts.push_back(Vec::Constant(1, a));
  } else {
    for (double a : axis) {
      for (double c : axis) {
        Vec v(2);
        v << a, c;
        starts.push_back(v);
      }
    }
  }
  return starts;
}

StationarySet enumerate_stationary(const ModelSpec& spec, double t0,
                                   const Vec& nu0,
                                   const std::vector<Vec>& starts,
                                   const ShootingOptions& opts) {
  if (starts.empty()) {
    throw Error(ErrorKind::kInvalidInput, "start grid is empty");
  }
  std::vector<std::optional<OCSolution>> found(starts.size());
  parallel_for(starts.size(), 1, [&](std::size_t i) {
    try {
      found[i] = shoot(spec, t0, nu0, starts[i], opts);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNoConvergence) throw;
    }
  });

  StationarySet set;
  for (auto& s : found) {
    if (!s) continue;
    const bool dup = std::any_of(
        set.solutions.begin(), set.solutions.end(), [&](const OCSolution& o) {
          return (o.eta0 - s->eta0).norm() < opts.dedup_tolerance;
        });
    if (!dup) set.solutions.push_back(std::move(*s));
  }
  if (set.solutions.empty()) {
    throw Error(ErrorKind::kNoStationaryPoint,
                "no start converged to a stationary point");
  }
  std::stable_sort(set.solutions.begin(), set.solutions.end(),
                   [](const OCSolution& a, const OCSolution& b) { return a.cost < b.cost; });
  set.min_cost = set.solutions.front().cost;
  const double tie = opts.tie_tolerance * std::max(1.0, std::abs(set.min_cost));
  for (auto& s : set.solutions) {
    if (s.cost - set.min_cost <= tie) {
      s.classification = Classification::kMinimizer;
      ++set.minimizer_count;
    } else {
      s.classification = Classification::kStationaryOnly;
    }
  }
  return set;
}

StationarySet enumerate_stationary(const ModelSpec& spec, double t0,
                                   const Vec& nu0, const ShootingOptions& opts) {
  return enumerate_stationary(spec, t0, nu0,
                              default_start_grid(spec, nu0, opts.lattice_points), opts);
}

namespace {

struct Propagator {
  Mat step;     // exp(b h)
  Mat forcing;  // int_0^h exp(b s) ds
};

Propagator make_propagator(const Mat& b, double h) {
  const Eigen::Index d = b.rows();
  Mat aug = Mat::Zero(2 * d, 2 * d);
  aug.topLeftCorner(d, d) = b * h;
  aug.topRightCorner(d, d) = Mat::Identity(d, d) * h;
  const Mat e = aug.exp();
  return Propagator{e.topLeftCorner(d, d), e.topRightCorner(d, d)};
}

}  // namespace

double discrete_control_cost(const ModelSpec& spec, double t0, const Vec& nu0,
                             const std::vector<Vec>& control,
                             std::vector<Vec>* l2_gradient) {
  const std::size_t k_steps = control.size();
  if (k_steps == 0) throw Error(ErrorKind::kInvalidInput, "empty control");
  const double h = (spec.T - t0) / static_cast<double>(k_steps);
  const Propagator prop = make_propagator(spec.b, h);

  std::vector<Vec> m(k_steps + 1);
  m[0] = nu0;
  for (std::size_t k = 0; k < k_steps; ++k) {
    m[k + 1] = prop.step * m[k] + prop.forcing * control[k];
  }
  auto weight = [&](std::size_t k) {
    return (k == 0 || k == k_steps) ? 0.5 : 1.0;
  };
  double cost = 0.0;
  for (std::size_t k = 0; k < k_steps; ++k) cost += 0.5 * h * control[k].squaredNorm();
  for (std::size_t k = 0; k <= k_steps; ++k) cost += h * weight(k) * running_cost(spec, m[k]);
  cost += terminal_cost(spec, m[k_steps]);

  if (l2_gradient != nullptr) {
    l2_gradient->assign(k_steps, Vec());
    Vec lambda = terminal_gradient(spec, m[k_steps]) +
                 h * weight(k_steps) * running_gradient(spec, m[k_steps]);
    const Mat step_t = prop.step.transpose();
    const Mat forcing_t = prop.forcing.transpose();
    for (std::size_t k = k_steps; k-- > 0;) {
      (*l2_gradient)[k] = control[k] + forcing_t * lambda / h;
      lambda = step_t * lambda + h * weight(k) * running_gradient(spec, m[k]);
    }
  }
  return cost;
}

DescentResult descend_control(const ModelSpec& spec, double t0, const Vec& nu0,
                              const DescentOptions& opts) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const double scale = control_scale(spec, nu0);
  const double bound = 4.0 * scale + 1.0;
  const double h = (spec.T - t0) / static_cast<double>(opts.steps);

  auto project = [&](std::vector<Vec>& c) {
    for (auto& v : c) {
      const double n = v.norm();
      if (n > bound) v *= bound / n;
    }
  };
  auto l2_norm = [&](const std::vector<Vec>& g) {
    double s = 0.0;
    for (const auto& v : g) s += v.squaredNorm();
    return std::sqrt(h * s);
  };

  GaussianSource src(RngStream{opts.seed, 0});
  DescentResult best;
  best.value = INFINITY;
  for (std::size_t s = 0; s < opts.starts; ++s) {
    Vec level(d);
    for (Eigen::Index i = 0; i < d; ++i) level(i) = scale * std::tanh(src.next());
    std::vector<Vec> control(opts.steps);
    for (auto& v : control) {
      v = level;
      for (Eigen::Index i = 0; i < d; ++i) v(i) += 0.1 * src.next();
    }
    project(control);

    std::vector<Vec> grad;
    double cost = discrete_control_cost(spec, t0, nu0, control, &grad);
    double step = 1.0;
    double gnorm = l2_norm(grad);
    for (int it = 0; it < opts.max_iterations && gnorm > opts.gradient_tolerance; ++it) {
      bool improved = false;
      while (step > 1e-12) {
        std::vector<Vec> trial(control.size());
        for (std::size_t k = 0; k < control.size(); ++k) trial[k] = control[k] - step * grad[k];
        project(trial);
        std::vector<Vec> trial_grad;
        const double trial_cost = discrete_control_cost(spec, t0, nu0, trial, &trial_grad);
        double decrease = 0.0;
        for (std::size_t k = 0; k < control.size(); ++k) {
          decrease += h * grad[k].dot(control[k] - trial[k]);
        }
        if (trial_cost <= cost - 1e-4 * decrease) {
          control = std::move(trial);
          grad = std::move(trial_grad);
          cost = trial_cost;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;
      gnorm = l2_norm(grad);
      step = std::min(step * 2.0, 4.0);
    }
    best.start_values.push_back(cost);
    if (cost < best.value) {
      best.value = cost;
      best.control = control;
      best.gradient_norm = gnorm;
    }
  }
  return best;
}

ValueResult value_function(const ModelSpec& spec, double t0, const Vec& nu0,
                           bool cross_check, const ShootingOptions& opts) {
  ValueResult r;
  if (t0 >= spec.T) {
    r.value = terminal_cost(spec, nu0);
    r.descent_value = r.value;
    return r;
  }
  r.value = enumerate_stationary(spec, t0, nu0, opts).min_cost;
  if (cross_check) {
    r.cross_checked = true;
    r.descent_value = descend_control(spec, t0, nu0).value;
    const double tol = 1e-4 * std::max(1.0, std::abs(r.value));
    r.consistent = std::abs(r.descent_value - r.value) <= tol;
    if (!r.consistent) {
      r.warning = "inconsistent value: shooting " + std::to_string(r.value) +
                  " vs descent " + std::to_string(r.descent_value);
    }
  }
  return r;
}

DifferentiabilityProbe differentiability_probe(const ModelSpec& spec, double t0,
                                               const Vec& nu0, double h,
                                               const ShootingOptions& opts) {
  DifferentiabilityProbe probe;
  probe.note = "kink threshold is a heuristic: 10 h (1 + local curvature)";
  auto v = [&](const Vec& x) { return value_function(spec, t0, x, false, opts).value; };
  const double v0 = v(nu0);
  for (std::size_t k = 0; k < spec.dim; ++k) {
    Vec e = Vec::Zero(nu0.size());
    e(static_cast<Eigen::Index>(k)) = 1.0;
    auto at = [&](double s) { return v(nu0 + s * h * e); };
    AxisQuotients q;
    q.right = (at(1.0) - v0) / h;
    q.left = (v0 - at(-1.0)) / h;
    q.gap = std::abs(q.right - q.left);
    const double curv_right = (at(6.0) - 2.0 * at(5.0) + at(4.0)) / (h * h);
    const double curv_left = (at(-6.0) - 2.0 * at(-5.0) + at(-4.0)) / (h * h);
    q.threshold = 10.0 * h * (1.0 + std::max(std::abs(curv_left), std::abs(curv_right)));
    if (q.gap > q.threshold) probe.differentiable = false;
    probe.axes.push_back(q);
  }
  return probe;
}

Vec value_gradient_fd(const ModelSpec& spec, double t0, const Vec& nu0, double h,
                      const ShootingOptions& opts) {
  Vec grad(nu0.size());
  for (Eigen::Index k = 0; k < nu0.size(); ++k) {
    Vec e = Vec::Zero(nu0.size());
    e(k) = h;
    const double vp = value_function(spec, t0, nu0 + e, false, opts).value;
    const double vm = value_function(spec, t0, nu0 - e, false, opts).value;
    grad(k) = (vp - vm) / (2.0 * h);
  }
  return grad;
}

double static_U(const ModelSpec& spec, double t0, const Vec& nu0, const Vec& a) {
  if (spec.has_drift() || spec.running != RunningCost::kControlOnly) {
    throw Error(ErrorKind::kInvalidReduction,
                "static reduction needs b = 0 and a control-only running cost");
  }
  const double s = spec.T - t0;
  return 0.5 * s * a.squaredNorm() + terminal_cost(spec, nu0 + s * a);
}

StaticMinimum minimize_static_U(const ModelSpec& spec, double t0, const Vec& nu0,
                                double tie_tolerance) {
  const auto d = static_cast<Eigen::Index>(spec.dim);
  static_U(spec, t0, nu0, Vec::Zero(d));  // validates the reduction
  StaticMinimum out;
  const double s = spec.T - t0;
  if (s <= 0.0) {
    out.minimizers.push_back(Vec::Zero(d));
    out.value = terminal_cost(spec, nu0);
    return out;
  }
  Vec dir = Vec::Zero(d);
  if (d == 1) {
    dir(0) = 1.0;
  } else {
    if (!spec.g->is_radial()) {
      throw Error(ErrorKind::kInvalidReduction,
                  "multi-dimensional static reduction needs a radial g");
    }
    if (nu0.norm() > 0.0) {
      dir = nu0 / nu0.norm();
    } else {
      dir(0) = 1.0;
    }
  }
  auto phi = [&](double t) { return static_U(spec, t0, nu0, t * dir); };

  const double w = 2.0 * control_scale(spec, nu0);
  constexpr std::size_t kScan = 4001;
  std::vector<double> ts(kScan);
  std::vector<double> vals(kScan);
  for (std::size_t i = 0; i < kScan; ++i) {
    ts[i] = -w + 2.0 * w * static_cast<double>(i) / static_cast<double>(kScan - 1);
    vals[i] = phi(ts[i]);
  }
  std::vector<std::pair<double, double>> minima;
  for (std::size_t i = 1; i + 1 < kScan; ++i) {
    if (vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1]) {
      auto [t, v] = boost::math::tools::brent_find_minima(phi, ts[i - 1], ts[i + 1], 50);
      // Newton polish on phi' with central differences.
      for (int it = 0; it < 4; ++it) {
        const double e = 1e-5;
        const double d1 = (phi(t + e) - phi(t - e)) / (2.0 * e);
        const double d2 = (phi(t + e) - 2.0 * phi(t) + phi(t - e)) / (e * e);
        if (!(d2 > 0.0)) break;
        const double cand = t - d1 / d2;
        const double vc = phi(cand);
        if (vc > v) break;
        t = cand;
        v = vc;
      }
      minima.emplace_back(t, v);
    }
  }
  if (minima.empty()) {
    throw Error(ErrorKind::kNoStationaryPoint, "static scan found no local minimum");
  }
  double best = INFINITY;
  for (const auto& mv : minima) best = std::min(best, mv.second);
  const double tie = tie_tolerance * std::max(1.0, std::abs(best));
  std::vector<double> picked;
  for (const auto& [t, v] : minima) {
    if (v - best > tie) continue;
    const bool dup = std::any_of(picked.begin(), picked.end(),
                                 [&](double p) { return std::abs(p - t) < 1e-6; });
    if (!dup) picked.push_back(t);
  }
  std::sort(picked.begin(), picked.end());
  out.value = best;
  for (double t : picked) out.minimizers.push_back(t * dir);
  if (d > 1 && nu0.norm() == 0.0 && !picked.empty() && std::abs(picked.back()) > 1e-8) {
    out.on_sphere = true;
    out.sphere_radius = std::abs(picked.back());
  }
  return out;
}

}  // namespace mfsel
