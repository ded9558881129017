#include "mfsel/ensemble.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "mfsel/error.hpp"
#include "mfsel/parallel.hpp"
#include "mfsel/rng.hpp"
#include "mfsel/stats.hpp"

namespace mfsel {

std::vector<double> PathEnsemble::terminal_component(std::size_t c) const {
  std::vector<double> out(paths);
  for (std::size_t p = 0; p < paths; ++p) out[p] = terminal[p * dim + c];
  return out;
}

namespace {

// Standard normal vector in `z`, rejected outside the ball of radius `cut`.
void truncated_normal(GaussianSource& src, std::size_t d, double cut, double* z) {
  for (;;) {
    double r2 = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      z[c] = src.next();
      r2 += z[c] * z[c];
    }
    if (r2 <= cut * cut) return;
  }
}

void rotate(const std::optional<Mat>& rot, std::size_t d, double* z) {
  if (!rot) return;
  double tmp[2] = {z[0], d == 2 ? z[1] : 0.0};
  for (std::size_t r = 0; r < d; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      s += (*rot)(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * tmp[c];
    }
    z[r] = s;
  }
}

}  // namespace

PathEnsemble simulate_ensemble(const ModelSpec& spec, const DecouplingField& field,
                               const EnsembleOptions& opts) {
  spec.validate();
  const std::size_t d = spec.dim;
  if (field.dim() != d) {
    throw Error(ErrorKind::kInvalidInput, "field dimension differs from the model");
  }
  if (opts.paths == 0 || opts.substeps == 0) {
    throw Error(ErrorKind::kInvalidParameter, "paths and substeps must be >= 1");
  }
  if (opts.input_rotation) {
    const Mat& r = *opts.input_rotation;
    if (r.rows() != static_cast<Eigen::Index>(d) || r.cols() != r.rows() ||
        !(r.transpose() * r).isApprox(Mat::Identity(r.rows(), r.cols()), 1e-12)) {
      throw Error(ErrorKind::kInvalidParameter, "input rotation must be orthogonal");
    }
  }
  const bool n_player = field.kind() == FieldKind::kNPlayer;
  const double n = n_player ? field.parameter() : INFINITY;
  const double noise_scale =
      n_player ? spec.sigma / std::sqrt(field.parameter()) : field.parameter();
  const std::size_t draws =
      n_player && !opts.deterministic_initial && std::isfinite(field.parameter())
          ? static_cast<std::size_t>(std::llround(field.parameter()))
          : 0;

  const TimeGrid grid(field.time().t0(), field.time().T(),
                      field.time().steps() * opts.substeps);
  const std::size_t steps = grid.steps();
  const double dt = grid.dt();
  const double sqdt = std::sqrt(dt);

  PathEnsemble e{grid, d, opts.paths, opts.seed, opts.stream_base, {}, {}, {}, {}, {}, {}, 0, 0.0, {}};
  e.initial.assign(opts.paths * d, 0.0);
  e.terminal.assign(opts.paths * d, 0.0);
  e.eta0.assign(opts.paths * d, 0.0);
  e.cost.assign(opts.paths, 0.0);
  if (opts.keep_paths) {
    e.m.assign(opts.paths * (steps + 1) * d, 0.0);
    e.eta.assign(opts.paths * (steps + 1) * d, 0.0);
  }
  std::vector<unsigned char> exited(opts.paths, 0);
  const auto& box = field.space().axes();

  parallel_for(opts.paths, opts.threads, [&](std::size_t p) {
    GaussianSource src(RngStream{opts.seed, opts.stream_base + p});
    Vec m = spec.nu0;
    double z[2];
    if (draws > 0) {
      double acc[2] = {0.0, 0.0};
      for (std::size_t j = 0; j < draws; ++j) {
        truncated_normal(src, d, spec.xi.truncation, z);
        for (std::size_t c = 0; c < d; ++c) acc[c] += z[c];
      }
      for (std::size_t c = 0; c < d; ++c) acc[c] /= static_cast<double>(draws);
      rotate(opts.input_rotation, d, acc);
      for (std::size_t c = 0; c < d; ++c) {
        m(static_cast<Eigen::Index>(c)) += spec.xi.stddev * acc[c];
      }
    }
    Vec eta = Vec::Zero(static_cast<Eigen::Index>(d));
    Vec drift(static_cast<Eigen::Index>(d));
    double cost = 0.0;
    bool out = false;
    for (std::size_t c = 0; c < d; ++c) e.initial[p * d + c] = m(static_cast<Eigen::Index>(c));
    for (std::size_t k = 0;; ++k) {
      const double t = grid.at(k);
      if (!opts.zero_control) field.interpolate(t, m.data(), eta.data());
      if (k == 0) {
        for (std::size_t c = 0; c < d; ++c) e.eta0[p * d + c] = eta(static_cast<Eigen::Index>(c));
      }
      if (opts.keep_paths) {
        const std::size_t at = (p * (steps + 1) + k) * d;
        for (std::size_t c = 0; c < d; ++c) {
          e.m[at + c] = m(static_cast<Eigen::Index>(c));
          e.eta[at + c] = eta(static_cast<Eigen::Index>(c));
        }
      }
      if (k == steps) break;
      cost += dt * (0.5 * eta.squaredNorm() + cost_FN(spec, n, m));
      drift.noalias() = spec.b * m;
      drift -= eta;
      m += dt * drift;
      if (opts.noise) {
        for (std::size_t c = 0; c < d; ++c) z[c] = src.next();
        rotate(opts.input_rotation, d, z);
        for (std::size_t c = 0; c < d; ++c) {
          m(static_cast<Eigen::Index>(c)) += noise_scale * sqdt * z[c];
        }
      }
      for (std::size_t c = 0; c < d; ++c) {
        double& x = m(static_cast<Eigen::Index>(c));
        if (!std::isfinite(x)) {
          throw Error(ErrorKind::kIntegrationDiverged, "non-finite path state");
        }
        if (x < box[c].lower) {
          x = box[c].lower;
          out = true;
        } else if (x > box[c].upper) {
          x = box[c].upper;
          out = true;
        }
      }
    }
    cost += cost_GN(spec, n, m);
    for (std::size_t c = 0; c < d; ++c) e.terminal[p * d + c] = m(static_cast<Eigen::Index>(c));
    e.cost[p] = cost;
    exited[p] = out ? 1 : 0;
  });

  for (auto x : exited) e.exits += x;
  e.exit_fraction = static_cast<double>(e.exits) / static_cast<double>(e.paths);
  if (e.exit_fraction > opts.exit_warning) {
    std::ostringstream os;
    os << e.exits << " of " << e.paths
       << " paths left the field domain and were clamped; enlarge the domain";
    e.warning = os.str();
  }
  return e;
}

CostEstimate summarize_cost(const PathEnsemble& ensemble) {
  CostEstimate c;
  c.per_path = ensemble.cost;
  const auto mv = mean_variance(c.per_path);
  c.mean = mv.mean;
  c.standard_error =
      c.per_path.size() > 1 ? std::sqrt(mv.variance / static_cast<double>(c.per_path.size()))
                            : 0.0;
  return c;
}

CostEstimate eval_cost_OCN(const ModelSpec& spec, const DecouplingField& field,
                           const EnsembleOptions& opts) {
  return summarize_cost(simulate_ensemble(spec, field, opts));
}

void write_ensemble_csv(const PathEnsemble& e, std::ostream& os,
                        std::size_t time_stride) {
  time_stride = std::max<std::size_t>(1, time_stride);
  os.precision(17);
  const bool two = e.dim == 2;
  if (!e.m.empty()) {
    os << (two ? "path,t,m1,m2,eta1,eta2\n" : "path,t,m,eta\n");
    const std::size_t steps = e.grid.steps();
    for (std::size_t p = 0; p < e.paths; ++p) {
      for (std::size_t k = 0; k <= steps; ++k) {
        if (k % time_stride != 0 && k != steps) continue;
        const std::size_t at = (p * (steps + 1) + k) * e.dim;
        os << p << ',' << e.grid.at(k);
        for (std::size_t c = 0; c < e.dim; ++c) os << ',' << e.m[at + c];
        for (std::size_t c = 0; c < e.dim; ++c) os << ',' << e.eta[at + c];
        os << '\n';
      }
    }
    return;
  }
  os << (two ? "path,m0_1,m0_2,mT_1,mT_2,eta0_1,eta0_2,cost\n"
             : "path,m0,mT,eta0,cost\n");
  for (std::size_t p = 0; p < e.paths; ++p) {
    os << p;
    for (std::size_t c = 0; c < e.dim; ++c) os << ',' << e.initial[p * e.dim + c];
    for (std::size_t c = 0; c < e.dim; ++c) os << ',' << e.terminal[p * e.dim + c];
    for (std::size_t c = 0; c < e.dim; ++c) os << ',' << e.eta0[p * e.dim + c];
    os << ',' << e.cost[p] << '\n';
  }
}

}  // namespace mfsel
